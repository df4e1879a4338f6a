"""Linearised operators around a standing wave and the vertex Laplacian.

Every operator is discretised through its quadratic form
``B(u, u) = int |u'|^2 + int V |u|^2 - Z |u(L)|^2`` with piecewise linear
elements and a lumped (trapezoid) mass matrix.  Continuity at the vertex comes
from sharing one unknown; the Kirchhoff / delta flux condition is natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cholesky_banded
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import eigsh

from . import phase_plane as pp
from .errors import DomainError
from .graph import NEUMANN_KIRCHHOFF, GraphDomain, GraphFunction, VertexCondition, inner_product
from .profile import StandingWave

MAX_K = 20
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class OperatorMatrix:
    kind: str
    vc: VertexCondition
    stiffness: sp.csr_matrix
    mass_diag: np.ndarray
    potential: np.ndarray  # node values of V (vertex value from the ring end)
    meta: dict
    domain: GraphDomain | None = None
    layout: str = "graph"  # graph | ring | tail
    h: float = 0.0

    @property
    def n(self) -> int:
        return self.mass_diag.size

    def expand(self, vec: np.ndarray):
        """Node vector back to edge samples (GraphFunction on the full graph)."""
        if self.layout == "graph":
            return self.domain.from_nodes(vec)
        if self.layout == "ring":
            return np.append(vec, vec[0])
        return np.append(vec, 0.0)

    def form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        v = u if v is None else v
        return float(np.real(np.vdot(v, self.stiffness @ u)))


def _chain_triplets(idx: np.ndarray, h: float, V: np.ndarray):
    """Element contributions of one edge chain; nodes with index -1 are eliminated."""
    a, b = idx[:-1], idx[1:]
    inv_h = 1.0 / h
    rows = np.concatenate((a, b, a, b, a, b))
    cols = np.concatenate((a, b, b, a, a, b))
    vals = np.concatenate((
        np.full(a.size, inv_h), np.full(a.size, inv_h),
        np.full(a.size, -inv_h), np.full(a.size, -inv_h),
        0.5 * h * V[:-1], 0.5 * h * V[1:],
    ))
    keep = (rows >= 0) & (cols >= 0)
    mass_rows = np.concatenate((a, b))
    mass_vals = np.full(mass_rows.size, 0.5 * h)
    mkeep = mass_rows >= 0
    return rows[keep], cols[keep], vals[keep], mass_rows[mkeep], mass_vals[mkeep]


def _build(chains, n: int):
    rows, cols, vals, mr, mv = (np.concatenate(z) for z in zip(*chains))
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    K = (K + K.T) * 0.5  # bitwise symmetric regardless of summation order
    K.sort_indices()
    M = np.bincount(mr, weights=mv, minlength=n)
    return K.tocsr(), M


def wave_potentials(kind: str, wave: StandingWave) -> tuple[np.ndarray, np.ndarray]:
    """Ring and tail potentials of L1 / L2, built from the stored ring samples."""
    lg = wave.log_square()
    t = wave.domain.x_tail - wave.L + wave.a
    if kind == "L1":
        return (wave.c - 2.0) - lg.ring, t * t - 3.0
    if kind == "L2":
        return wave.c - lg.ring, t * t - 1.0
    raise ValueError(f"no wave potential for operator kind {kind!r}")


def assemble(kind: str, vc: VertexCondition = NEUMANN_KIRCHHOFF, wave: StandingWave | None = None,
             d: GraphDomain | None = None) -> OperatorMatrix:
    if kind not in ("L1", "L2", "laplacian"):
        raise ValueError(f"unknown operator kind {kind!r}")
    if kind != "laplacian":
        if wave is None:
            raise ValueError(f"operator {kind} needs a standing wave")
        d = wave.domain if d is None else d
        if d != wave.domain:
            raise ValueError("wave is sampled on a different domain")
        V_ring, V_tail = wave_potentials(kind, wave)
        meta = {"c": wave.c, "L": d.L, "R": d.R, "n_ring": d.n_ring, "n_tail": d.n_tail, "a": wave.a}
    else:
        if d is None:
            raise ValueError("laplacian needs a domain")
        V_ring, V_tail = np.zeros(d.n_ring + 1), np.zeros(d.n_tail + 1)
        meta = {"L": d.L, "R": d.R, "n_ring": d.n_ring, "n_tail": d.n_tail}
    meta["Z"] = vc.Z
    K, M = _build(
        [_chain_triplets(d.ring_index, d.h_ring, V_ring), _chain_triplets(d.tail_index, d.h_tail, V_tail)],
        d.n_nodes,
    )
    if vc.Z != 0:
        K = K - sp.csr_matrix(([vc.Z], ([0], [0])), shape=K.shape)
    pot = d.to_nodes(GraphFunction(V_ring, V_tail))
    return OperatorMatrix(kind, vc, K, M, pot, meta, d, "graph", d.h)


def assemble_ring_periodic(V_ring: np.ndarray, h: float, kind: str = "ring") -> OperatorMatrix:
    """Ring edge alone with periodic ends f(-L) = f(L), f'(-L) = f'(L)."""
    n = V_ring.size - 1
    idx = np.arange(n + 1)
    idx[-1] = 0
    K, M = _build([_chain_triplets(idx, h, V_ring)], n)
    return OperatorMatrix(kind, NEUMANN_KIRCHHOFF, K, M, V_ring[:-1].copy(), {"n": n}, None, "ring", h)


def assemble_tail_neumann(V_tail: np.ndarray, h: float, kind: str = "tail") -> OperatorMatrix:
    """Truncated half-line with a Neumann end at the vertex and Dirichlet far end."""
    n = V_tail.size - 1
    idx = np.arange(n + 1)
    idx[-1] = -1
    K, M = _build([_chain_triplets(idx, h, V_tail)], n)
    return OperatorMatrix(kind, NEUMANN_KIRCHHOFF, K, M, V_tail[:-1].copy(), {"n": n}, None, "tail", h)


def oscillator_operator(R: float = 12.0, h: float = 1e-3) -> OperatorMatrix:
    """-d^2/dt^2 + t^2 - 3 on [0, R] with a Neumann end at t = 0 (a = 0 tail)."""
    n = math.ceil(R / h - 1e-9)
    t = np.linspace(0.0, R, n + 1)
    return assemble_tail_neumann(t * t - 3.0, R / n, kind="oscillator")


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: list
    morse_index: int
    nullity: int
    tol_null: float
    residuals: np.ndarray
    vectors: np.ndarray = field(repr=False, default=None)  # node vectors, columns
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "morse_index": self.morse_index,
            "nullity": self.nullity,
            "tol_null": self.tol_null,
            "max_residual": float(np.max(self.residuals)),
            "diagnostics": self.diagnostics,
        }


def default_tol_null(op: OperatorMatrix) -> float:
    scale = float(np.max(np.abs(op.potential))) if op.potential.size else 0.0
    return max(1e-8, 50.0 * op.h**2 * scale)


def _banded_lower(S: sp.spmatrix) -> np.ndarray:
    C = S.tocoo()
    low = C.row >= C.col
    bw = int(np.max(C.row[low] - C.col[low]))
    ab = np.zeros((bw + 1, S.shape[0]))
    ab[C.row[low] - C.col[low], C.col[low]] = C.data[low]
    return ab


def eigen_lowest(op: OperatorMatrix, k: int = 6, tol_null: float | None = None) -> SpectrumReport:
    """k lowest eigenpairs of K v = lambda M v.

    The pencil is reduced to S = M^{-1/2} K M^{-1/2}; eigenpairs nearest to a
    shift placed below the spectrum are the lowest ones and come from
    shift-invert Lanczos.  A banded Cholesky factorisation of S - shift
    certifies that the shift really lies below the spectrum.
    """
    if not (1 <= k <= MAX_K):
        raise ValueError(f"k must lie in [1, {MAX_K}], got {k}")
    k = min(k, op.n - 2)
    D = 1.0 / np.sqrt(op.mass_diag)
    S = (sp.diags(D) @ op.stiffness @ sp.diags(D)).tocsr()
    S = ((S + S.T) * 0.5).tocsr()
    shift = float(np.min(op.potential)) - op.vc.Z**2 - 1.0
    perm = reverse_cuthill_mckee(S, symmetric_mode=True)
    shifted = (S - shift * sp.identity(op.n, format="csr"))[perm][:, perm]
    try:
        cholesky_banded(_banded_lower(shifted), lower=True)
    except LinAlgError as exc:  # pragma: no cover - would indicate a bad potential bound
        raise ArithmeticError(f"shift {shift} is not below the spectrum") from exc
    vals, vecs = eigsh(S, k=k, sigma=shift, which="LM", tol=0.0)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    vecs = D[:, None] * vecs  # M-orthonormal generalised eigenvectors
    for j in range(k):
        col = vecs[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, j] = -col
    # Normwise backward error ||(K - lam M) v|| / ((||K|| + |lam| ||M||) ||v||).
    # Relative to ||K v|| alone it would be meaningless for lam ~ 0.
    Kv = op.stiffness @ vecs
    res = np.linalg.norm(Kv - op.mass_diag[:, None] * vecs * vals, axis=0)
    k_norm = float(abs(op.stiffness).sum(axis=1).max())
    scale = (k_norm + np.abs(vals) * op.mass_diag.max()) * np.linalg.norm(vecs, axis=0)
    tol = default_tol_null(op) if tol_null is None else float(tol_null)
    return SpectrumReport(
        eigenvalues=vals,
        eigenvectors=[op.expand(vecs[:, j]) for j in range(k)],
        morse_index=int(np.sum(vals < -tol)),
        nullity=int(np.sum(np.abs(vals) <= tol)),
        tol_null=tol,
        residuals=res / scale,
        vectors=vecs,
    )


def transcendental_rho(Z: float, L: float, tol: float = 1e-12) -> float:
    """Positive root of rho (2 tanh(rho L) + 1) = Z."""
    if not Z > 0:
        raise DomainError(f"the delta Laplacian has no negative eigenvalue for Z = {Z} <= 0")

    def g(r):
        return r * (2.0 * math.tanh(r * L) + 1.0) - Z

    rho = pp.bisect(g, 0.0, Z)
    if abs(g(rho)) > tol * max(1.0, Z):
        raise ArithmeticError(f"rho residual {g(rho):.3e} above tolerance")
    return rho


def laplacian_eigenfunction(Z: float, L: float, d: GraphDomain) -> GraphFunction:
    """Continuous eigenfunction for -rho^2: cosh(rho x) on the ring, matched exponential tail."""
    rho = transcendental_rho(Z, L)
    return GraphFunction(
        np.cosh(rho * d.x_ring),
        math.cosh(rho * L) * np.exp(-rho * (d.x_tail - L)),
    )


def cosine(u: GraphFunction, v: GraphFunction, d: GraphDomain) -> float:
    uv = abs(inner_product(u, v, d))
    return uv / math.sqrt(abs(inner_product(u, u, d)) * abs(inner_product(v, v, d)))


def _sign_definite(f: GraphFunction, floor: float) -> dict:
    """min*max > 0 on each edge, ignoring samples below ``floor`` in magnitude."""
    out = {}
    for name, vals in (("ring", f.ring), ("tail", f.tail[:-1])):
        sel = vals[np.abs(vals) > floor]
        out[name] = bool(sel.size and sel.min() * sel.max() > 0)
    return out


SIGN_FLOOR = 1e-10  # relative to the sup norm; tail samples below it are roundoff


def analyze_L1(wave: StandingWave, d: GraphDomain | None = None, k: int = 4) -> SpectrumReport:
    d = wave.domain if d is None else d
    op = assemble("L1", NEUMANN_KIRCHHOFF, wave, d)
    rep = eigen_lowest(op, k)
    ground = rep.eigenvectors[0]
    sup = max(np.max(np.abs(ground.ring)), np.max(np.abs(ground.tail)))
    signs = _sign_definite(ground, SIGN_FLOOR * sup)
    theta = d.to_nodes(wave.function())
    rayleigh = op.form(theta) / float(theta @ (op.mass_diag * theta))
    even = float(np.max(np.abs(ground.ring - ground.ring[::-1])) / np.max(np.abs(ground.ring)))
    lam = rep.eigenvalues
    rep.diagnostics = {
        "morse_index_is_one": rep.morse_index == 1,
        "nullity_is_zero": rep.nullity == 0,
        "gap": float(lam[1]),
        "ground_sign_definite": all(signs.values()),
        "ground_sign_by_edge": signs,
        "ground_ring_evenness": even,
        "ground_ring_even": even <= 1e-6,
        "rayleigh_quotient": rayleigh,
        "ground_below_rayleigh": bool(lam[0] <= rayleigh),
    }
    return rep


def analyze_L2(wave: StandingWave, d: GraphDomain | None = None, k: int = 4) -> SpectrumReport:
    d = wave.domain if d is None else d
    op = assemble("L2", NEUMANN_KIRCHHOFF, wave, d)
    rep = eigen_lowest(op, k)
    theta = wave.function()
    tnodes = d.to_nodes(theta)
    lam = rep.eigenvalues
    rep.diagnostics = {
        "lambda_min": float(lam[0]),
        "kernel_within_tol": bool(abs(lam[0]) <= rep.tol_null),
        "kernel_cosine": cosine(rep.eigenvectors[0], theta, d),
        "second_eigenvalue": float(lam[1]),
        "second_positive": bool(lam[1] > rep.tol_null),
        "no_negative": bool(np.all(lam >= -rep.tol_null)),
        "theta_residual": float(
            np.linalg.norm((op.stiffness @ tnodes) / np.sqrt(op.mass_diag))
            / math.sqrt(float(tnodes @ (op.mass_diag * tnodes)))
        ),
    }
    return rep


def factorized_form(v: np.ndarray, wave: StandingWave) -> float:
    """Discrete int phi^2 ((v/phi)')^2 over both edges, v given on the node layout.

    Uses the geometric mean phi_j phi_{j+1} on each element, independent of the
    potential-based assembly.
    """
    d = wave.domain
    f = d.from_nodes(v)
    theta = wave.function()
    total = 0.0
    for vals, phi, h in ((f.ring, theta.ring, d.h_ring), (f.tail, theta.tail, d.h_tail)):
        w = vals / phi
        total += float(np.sum(phi[:-1] * phi[1:] * np.diff(w) ** 2) / h)
    return total


def split_compare(wave: StandingWave, d: GraphDomain | None = None, k: int = 6,
                  rel_threshold: float = 1e-6, tol: float | None = None) -> dict:
    """Compare the L1 graph spectrum with the periodic-ring and Neumann-tail subproblems."""
    d = wave.domain if d is None else d
    V_ring, V_tail = wave_potentials("L1", wave)
    full = eigen_lowest(assemble("L1", NEUMANN_KIRCHHOFF, wave, d), k)
    ring = eigen_lowest(assemble_ring_periodic(V_ring, d.h_ring, "L1-ring-periodic"), k)
    tail = eigen_lowest(assemble_tail_neumann(V_tail, d.h_tail, "L1-tail-neumann"), k)
    tol = full.tol_null if tol is None else tol
    pairs = []
    for lam, g in zip(full.eigenvalues, full.eigenvectors):
        if lam > full.tol_null:
            continue
        g_norm = math.sqrt(float(np.sum(d.w_tail * g.tail**2)))
        trace = abs(g.tail[0])
        exempt = trace <= rel_threshold * max(g_norm, np.finfo(float).tiny)
        d_ring = float(np.min(np.abs(ring.eigenvalues - lam)))
        d_tail = float(np.min(np.abs(tail.eigenvalues - lam)))
        pairs.append({
            "eigenvalue": float(lam),
            "vertex_trace": float(trace),
            "exempt": bool(exempt),
            "distance_ring": d_ring,
            "distance_tail": d_tail,
            "matched": bool(exempt or (d_ring <= tol and d_tail <= tol)),
        })
    return {
        "full": [float(x) for x in full.eigenvalues],
        "ring_periodic": [float(x) for x in ring.eigenvalues],
        "tail_neumann": [float(x) for x in tail.eigenvalues],
        "tolerance": tol,
        "pairs": pairs,
        "all_matched": all(p["matched"] for p in pairs),
        "alpha": alpha(wave.a, 0.0),
    }


def alpha(a: float, Z: float) -> float:
    """(1 - a^2)/a + Z, logged for information alongside the split comparison."""
    return (1.0 - a * a) / a + Z
