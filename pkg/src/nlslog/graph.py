"""Tadpole graph geometry, sampled functions, quadrature and vertex traces.

The ring edge is parametrised by [-L, L] with both ends glued to the vertex
x = L; the half-line [L, inf) is truncated to [L, L + R].
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class GraphDomain:
    L: float
    R: float
    n_ring: int
    n_tail: int

    def __post_init__(self):
        if not (self.L > 0 and self.R > 0):
            raise ValueError(f"need L > 0 and R > 0, got L={self.L}, R={self.R}")
        if self.n_ring < 8 or self.n_ring % 2:
            raise ValueError(f"n_ring must be even and >= 8, got {self.n_ring}")
        if self.n_tail < 8:
            raise ValueError(f"n_tail must be >= 8, got {self.n_tail}")

    @classmethod
    def from_spacing(cls, L: float, R: float, h: float) -> "GraphDomain":
        """Grid with spacing at most h on both edges."""
        n_ring = 2 * max(4, math.ceil(L / h - 1e-9))
        n_tail = max(8, math.ceil(R / h - 1e-9))
        return cls(float(L), float(R), n_ring, n_tail)

    @property
    def h_ring(self) -> float:
        return 2.0 * self.L / self.n_ring

    @property
    def h_tail(self) -> float:
        return self.R / self.n_tail

    @property
    def h(self) -> float:
        return max(self.h_ring, self.h_tail)

    @cached_property
    def x_ring(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_ring + 1)

    @cached_property
    def x_tail(self) -> np.ndarray:
        return np.linspace(self.L, self.L + self.R, self.n_tail + 1)

    @cached_property
    def w_ring(self) -> np.ndarray:
        return _trapezoid_weights(self.n_ring, self.h_ring)

    @cached_property
    def w_tail(self) -> np.ndarray:
        return _trapezoid_weights(self.n_tail, self.h_tail)

    # Unknown layout used by the assembled operators: index 0 is the vertex,
    # then the ring interior nodes, then the tail interior nodes.  The far end
    # of the tail is eliminated by the Dirichlet condition (index -1).
    @property
    def n_nodes(self) -> int:
        return self.n_ring + self.n_tail - 1

    @cached_property
    def ring_index(self) -> np.ndarray:
        idx = np.arange(self.n_ring + 1)
        idx[-1] = 0
        return idx

    @cached_property
    def tail_index(self) -> np.ndarray:
        idx = np.arange(self.n_tail + 1) + self.n_ring - 1
        idx[0] = 0
        idx[-1] = -1
        return idx

    def to_nodes(self, u: "GraphFunction") -> np.ndarray:
        """Node vector of u; the vertex value is read from the ring's right end."""
        check_same_grid(u, self)
        return np.concatenate(([u.ring[-1]], u.ring[1:-1], u.tail[1:-1]))

    def from_nodes(self, v: np.ndarray) -> "GraphFunction":
        v = np.asarray(v)
        if v.shape != (self.n_nodes,):
            raise DimensionError(f"expected {self.n_nodes} node values, got {v.shape}")
        ring = v[self.ring_index]
        tail = np.where(self.tail_index >= 0, v[self.tail_index], 0)
        return GraphFunction(ring, tail.astype(v.dtype))

    @cached_property
    def node_mass(self) -> np.ndarray:
        """Lumped mass (trapezoid weights) on the node layout."""
        m = np.concatenate(([0.0], self.w_ring[1:-1], self.w_tail[1:-1]))
        m[0] = self.w_ring[0] + self.w_ring[-1] + self.w_tail[0]
        return m


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class GraphFunction:
    ring: np.ndarray
    tail: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ring", np.asarray(self.ring))
        object.__setattr__(self, "tail", np.asarray(self.tail))

    @property
    def kind(self) -> str:
        if np.iscomplexobj(self.ring) or np.iscomplexobj(self.tail):
            return "complex"
        return "real"

    @classmethod
    def from_callables(cls, d: GraphDomain, ring, tail) -> "GraphFunction":
        return cls(np.asarray(ring(d.x_ring)), np.asarray(tail(d.x_tail)))

    @classmethod
    def zeros(cls, d: GraphDomain, dtype=float) -> "GraphFunction":
        return cls(np.zeros(d.n_ring + 1, dtype), np.zeros(d.n_tail + 1, dtype))

    def scale(self, alpha) -> "GraphFunction":
        return GraphFunction(alpha * self.ring, alpha * self.tail)

    def __add__(self, other: "GraphFunction") -> "GraphFunction":
        return GraphFunction(self.ring + other.ring, self.tail + other.tail)

    def __sub__(self, other: "GraphFunction") -> "GraphFunction":
        return GraphFunction(self.ring - other.ring, self.tail - other.tail)

    def to_csv(self, d: GraphDomain) -> str:
        check_same_grid(self, d)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_id", "x", "re", "im"])
        for name, xs, vals in (("ring", d.x_ring, self.ring), ("tail", d.x_tail, self.tail)):
            for x, v in zip(xs, vals):
                w.writerow([name, fmt(x), fmt(np.real(v)), fmt(np.imag(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GraphFunction":
        edges = {"ring": [], "tail": []}
        for row in csv.DictReader(io.StringIO(text)):
            edges[row["edge_id"]].append(complex(float(row["re"]), float(row["im"])))
        ring, tail = np.array(edges["ring"]), np.array(edges["tail"])
        if not (ring.imag.any() or tail.imag.any()):
            ring, tail = ring.real, tail.real
        return cls(ring, tail)


def fmt(x) -> str:
    """Fixed 17-significant-digit float formatting used for every output file."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class VertexCondition:
    kind: str = "neumann-kirchhoff"
    Z: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neumann-kirchhoff", "delta"):
            raise ValueError(f"unknown vertex condition {self.kind!r}")
        if self.kind == "neumann-kirchhoff" and self.Z != 0:
            raise ValueError("Neumann-Kirchhoff condition requires Z = 0")

    @classmethod
    def delta(cls, Z: float) -> "VertexCondition":
        return cls("delta", float(Z))


NEUMANN_KIRCHHOFF = VertexCondition()


def check_same_grid(u: GraphFunction, d: GraphDomain) -> None:
    if u.ring.shape != (d.n_ring + 1,) or u.tail.shape != (d.n_tail + 1,):
        raise DimensionError(
            f"samples {u.ring.shape}/{u.tail.shape} do not fit grid "
            f"({d.n_ring + 1},)/({d.n_tail + 1},)"
        )


def inner_product(u: GraphFunction, v: GraphFunction, d: GraphDomain):
    """Trapezoid approximation of the L2 inner product, linear in u."""
    check_same_grid(u, d)
    check_same_grid(v, d)
    val = np.sum(d.w_ring * u.ring * np.conj(v.ring)) + np.sum(d.w_tail * u.tail * np.conj(v.tail))
    if np.iscomplexobj(val):
        return complex(val)
    return float(val)


def derivatives(u: GraphFunction, d: GraphDomain) -> GraphFunction:
    """Centred differences inside each edge, one-sided 3-point stencils at the ends."""
    check_same_grid(u, d)
    return GraphFunction(
        np.gradient(u.ring, d.h_ring, edge_order=2),
        np.gradient(u.tail, d.h_tail, edge_order=2),
    )


@dataclass(frozen=True)
class Norms:
    l2: float
    h1_seminorm: float
    weighted_x: float


def norms(u: GraphFunction, d: GraphDomain) -> Norms:
    du = derivatives(u, d)
    l2 = _real(inner_product(u, u, d))
    h1 = _real(inner_product(du, du, d))
    wx = float(np.sum(d.w_tail * d.x_tail**2 * np.abs(u.tail) ** 2))
    return Norms(math.sqrt(max(l2, 0.0)), math.sqrt(max(h1, 0.0)), math.sqrt(wx))


def _real(z) -> float:
    return float(np.real(z))


def end_slopes(f: np.ndarray, h: float) -> tuple:
    """Second-order one-sided derivatives at the left and right ends of an edge."""
    left = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    right = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return left, right


@dataclass(frozen=True)
class VertexResiduals:
    continuity_ring: complex
    continuity_vertex: complex
    flux: complex

    def max_abs(self) -> float:
        return max(abs(self.continuity_ring), abs(self.continuity_vertex), abs(self.flux))


def vertex_residuals(u: GraphFunction, vc: VertexCondition, d: GraphDomain) -> VertexResiduals:
    check_same_grid(u, d)
    ring_left, ring_right = end_slopes(u.ring, d.h_ring)
    tail_left, _ = end_slopes(u.tail, d.h_tail)
    flux = ring_right - ring_left - tail_left - vc.Z * u.tail[0]
    return VertexResiduals(u.ring[0] - u.ring[-1], u.ring[-1] - u.tail[0], flux)


def random_smooth_field(d: GraphDomain, rng: np.random.Generator, shift: float = 1.0,
                        modes: int = 4, complex_valued: bool = True) -> GraphFunction:
    """Smooth random function, continuous at the vertex, Gaussian-decaying tail.

    Ring: trigonometric polynomial of period 2L with coefficients ~ 1/(1+k^2).
    Tail: (u(L) + g1 t + g2 t^2) exp(-(t^2 + 2 shift t)/2), t = x - L.
    """
    def draw(size):
        z = rng.standard_normal(size)
        if complex_valued:
            z = z + 1j * rng.standard_normal(size)
        return z

    k = np.arange(modes + 1)
    amp = 1.0 / (1.0 + k**2)
    cos_c, sin_c = draw(modes + 1) * amp, draw(modes + 1) * amp
    arg = np.pi * np.outer(d.x_ring, k) / d.L
    ring = np.cos(arg) @ cos_c + np.sin(arg) @ sin_c
    ring[-1] = ring[0]
    g = draw(2)
    t = d.x_tail - d.L
    tail = (ring[-1] + g[0] * t + 0.5 * g[1] * t * t) * np.exp(-0.5 * t * (t + 2.0 * shift))
    return GraphFunction(ring, tail)
