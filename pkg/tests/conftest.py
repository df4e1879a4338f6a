import math

import pytest

from nlslog import profile as pr


@pytest.fixture(scope="session")
def wave_pi():
    """Theta_0 on the default L = pi grid (h = 1e-3)."""
    return pr.assemble_standing_wave(0.0, math.pi)


@pytest.fixture(scope="session")
def wave_coarse():
    """Theta_0 on a coarse L = pi grid, for tests that only need O(h^2) structure."""
    return pr.assemble_standing_wave(0.0, math.pi, pr.standing_wave_domain(math.pi, 4e-3))
