"""Numeric solutions via Birkhoff factorization in the loop group.

Loops live on an annulus around the unit circle and are handled through
their Fourier coefficients.  Given a loop ``g``, a diagonal twist ``delta(l)``
and flow values ``t``, the conjugated loop

    A(t) = delta(l) gamma(t) g gamma(t)^{-1} delta(-l)

is factorized as ``u_minus^{-1} p_plus`` with ``u_minus`` unipotent lower and
``p_plus`` upper with invertible constant term.  Dressing the frame by the
two factors yields a solution of the combined hierarchy:

    U_alpha = u_minus E_alpha u_minus^{-1},
    W_beta  = p_plus E_beta z^{-1} p_plus^{-1},

which finite-difference verification checks against the Lax and
zero-curvature residual evaluators.

All Fourier work happens on the unit-circle grid; the annulus radius is
metadata used only for tail-decay diagnostics (the coefficients themselves
are radius independent).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    AliasingDetected,
    BigCellViolation,
    FlowSupportViolation,
    IndexOutOfRange,
)
from .hierarchy import (
    CommutativeFrame,
    Deformation,
    HierarchyKind,
    cutoff,
    lax_residual,
    zc_residual,
)
from .linearize import ExponentVector, FlowRecord
from .loops import LoopSeries

__all__ = [
    "SolverParams",
    "AnnulusLoop",
    "WaveMatrixPair",
    "HierarchySolution",
    "VerifyReport",
    "random_loop",
    "gamma_eval",
    "delta_twist",
    "birkhoff_factorize",
    "build_wave_pair",
    "extract_solution",
    "fd_verify",
    "reduce_subhierarchy",
]


@dataclass(frozen=True)
class SolverParams:
    """Truncation depths and tolerances of the numeric pipeline.

    N bounds the loop Fourier content, M the depth of the unipotent factor,
    and the grid must hold their interactions with margin; the defaults keep
    the block-Toeplitz system well posed for desk-scale loops.
    """

    N: int = 16
    M: int = 12
    grid: int = 128
    fact_tol: float = 1e-10
    cond_max: float = 1e10
    tail_tol: float = 1e-8

    def __post_init__(self):
        if self.grid < 4 * self.N or self.grid & (self.grid - 1):
            raise ValueError("grid must be a power of two with grid >= 4N")

    def to_obj(self):
        return {
            "N": self.N,
            "M": self.M,
            "grid": self.grid,
            "fact_tol": self.fact_tol,
            "cond_max": self.cond_max,
            "tail_tol": self.tail_tol,
        }


class AnnulusLoop:
    """A matrix loop given by Fourier coefficients ``l_k``, |k| <= N.

    The annulus radius ``r`` only feeds the tail-decay diagnostic; the
    identity loop has ``l_0 = Id`` and nothing else.
    """

    __slots__ = ("n", "N", "coeffs", "r")

    def __init__(self, n: int, coeffs: np.ndarray, r: float = 0.5):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[1:] != (n, n) or coeffs.shape[0] % 2 != 1:
            raise ValueError("coeffs must have shape (2N+1, n, n)")
        if not 0 < r < 1:
            raise ValueError("annulus radius must satisfy 0 < r < 1")
        self.n = n
        self.N = coeffs.shape[0] // 2
        self.coeffs = coeffs
        self.r = r

    @classmethod
    def identity(cls, n: int, N: int = 0, r: float = 0.5) -> "AnnulusLoop":
        c = np.zeros((2 * N + 1, n, n), dtype=complex)
        c[N] = np.eye(n)
        return cls(n, c, r)

    @classmethod
    def from_coeff_dict(cls, n: int, d, r: float = 0.5) -> "AnnulusLoop":
        keys = [int(k) for k in d]
        N = max((abs(k) for k in keys), default=0)
        c = np.zeros((2 * N + 1, n, n), dtype=complex)
        for k, m in d.items():
            c[int(k) + N] = np.asarray(m, dtype=complex)
        return cls(n, c, r)

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self.N:
            return np.zeros((self.n, self.n), dtype=complex)
        return self.coeffs[k + self.N]

    def pad(self, N: int) -> "AnnulusLoop":
        if N <= self.N:
            return self
        c = np.zeros((2 * N + 1, self.n, self.n), dtype=complex)
        c[N - self.N : N + self.N + 1] = self.coeffs
        return AnnulusLoop(self.n, c, self.r)

    def norm_max(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def tail_ratio(self) -> float:
        """Boundary-to-peak coefficient ratio: the finite-truncation proxy
        for decay on the annulus."""
        peak = self.norm_max()
        if peak == 0.0:
            return 0.0
        edge = max(np.max(np.abs(self.coeffs[0])), np.max(np.abs(self.coeffs[-1])))
        return float(edge / peak)

    def grid_values(self, G: int) -> np.ndarray:
        """Pointwise values on the G-point unit-circle grid."""
        if G < 2 * self.N + 2:
            raise ValueError("grid too small for the stored frequencies")
        c = np.zeros((G, self.n, self.n), dtype=complex)
        for k in range(-self.N, self.N + 1):
            c[k % G] += self.coeffs[k + self.N]
        return np.fft.ifft(c, axis=0) * G

    @classmethod
    def from_grid(cls, values: np.ndarray, N: int, r: float = 0.5) -> "AnnulusLoop":
        G, n, _ = values.shape
        bins = np.fft.fft(values, axis=0) / G
        c = np.zeros((2 * N + 1, n, n), dtype=complex)
        for k in range(-N, N + 1):
            c[k + N] = bins[k % G]
        return cls(n, c, r)

    def to_series(self, direction: str, window=None) -> LoopSeries:
        """View as a total LoopSeries (every power outside [-N, N] is zero)."""
        coeffs = {}
        for k in range(-self.N, self.N + 1):
            m = self.coeffs[k + self.N]
            if np.any(m != 0):
                coeffs[k] = tuple(tuple(complex(x) for x in row) for row in m)
        if window is None:
            window = (-self.N, self.N)
        return LoopSeries(self.n, coeffs, window, direction)

    def to_obj(self):
        out = {}
        for k in range(-self.N, self.N + 1):
            m = self.coeffs[k + self.N]
            if np.any(m != 0):
                out[str(k)] = [[[float(x.real), float(x.imag)] for x in row] for row in m]
        return out

    @classmethod
    def from_obj(cls, n: int, obj, r: float = 0.5) -> "AnnulusLoop":
        return cls.from_coeff_dict(
            n, {k: [[complex(e[0], e[1]) for e in row] for row in m] for k, m in obj.items()}, r
        )


def random_loop(n: int, N: int, eps: float, seed: int, rho: float = 0.15, r: float = 0.5) -> "AnnulusLoop":
    """A seeded loop ``exp(eps * X)`` with X analytic on a wide annulus.

    X gets complex Gaussian Fourier coefficients damped by ``rho**|k|`` so
    the unipotent factor decays fast enough for depth-M truncation."""
    rng = np.random.default_rng(seed)
    kmax = min(N // 2, 6)
    x = np.zeros((2 * kmax + 1, n, n), dtype=complex)
    for k in range(-kmax, kmax + 1):
        x[k + kmax] = (rho ** abs(k)) * (
            rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        )
    G = max(64, 4 * N)
    vals = AnnulusLoop(n, x, r).grid_values(G)
    g_vals = np.stack([expm(eps * vals[j]) for j in range(G)])
    return AnnulusLoop.from_grid(g_vals, N, r)


# ---------------------------------------------------------------------------
# Flow exponentials and twists
# ---------------------------------------------------------------------------

def _flow_grid_values(flows: FlowRecord, frame: CommutativeFrame, G: int, sign: float = 1.0):
    """Pointwise gamma(t)^{sign} = exp(sign * sum t_ma E_a z^m) on the grid."""
    n = frame.n
    basis = [np.array(m, dtype=complex) for m in frame.complex_basis()]
    z = np.exp(2j * np.pi * np.arange(G) / G)
    h = np.zeros((G, n, n), dtype=complex)
    for (m, alpha), v in flows.items():
        if not 1 <= alpha <= frame.r:
            raise IndexOutOfRange(f"frame index {alpha} not in [1..{frame.r}]")
        h += np.einsum("g,ij->gij", v * z**m, basis[alpha - 1])
    h *= sign
    if not np.any(h):
        return np.broadcast_to(np.eye(n, dtype=complex), (G, n, n)).copy()
    return np.stack([expm(h[j]) for j in range(G)])


def gamma_eval(
    flows: FlowRecord,
    frame: CommutativeFrame,
    N: int,
    grid_size: int,
    tail_tol: float = 1e-8,
) -> AnnulusLoop:
    """Fourier coefficients of the commuting flow exponential gamma(t).

    Evaluates pointwise on the unit circle, matrix-exponentiates, and
    transforms back.  The frame is traceless, so the result has unit
    determinant up to roundoff.  Raises :class:`AliasingDetected` when the
    boundary coefficients carry more than ``tail_tol`` of the peak mass.
    """
    if grid_size < 4 * N or grid_size & (grid_size - 1):
        raise ValueError("grid_size must be a power of two with grid_size >= 4N")
    flows = flows if isinstance(flows, FlowRecord) else FlowRecord(flows)
    for m, _ in flows.support():
        if abs(m) > N // 2:
            raise IndexOutOfRange(f"flow degree {m} exceeds N/2 = {N // 2}")
    vals = _flow_grid_values(flows, frame, grid_size)
    loop = AnnulusLoop.from_grid(vals, N)
    if loop.tail_ratio() > tail_tol:
        raise AliasingDetected(
            f"boundary Fourier mass {loop.tail_ratio():.2e} exceeds {tail_tol:.2e}"
        )
    return loop


def delta_twist(l: ExponentVector, loop: AnnulusLoop) -> AnnulusLoop:
    """Conjugation by the diagonal twist: entry (i, j) of frequency k moves
    to frequency ``k + l_i - l_j``.  The frequency range grows as needed."""
    l = l if isinstance(l, ExponentVector) else ExponentVector(l)
    if len(l) != loop.n:
        raise ValueError("exponent vector length differs from loop size")
    spread = max(l.l) - min(l.l)
    N2 = loop.N + spread
    out = np.zeros((2 * N2 + 1, loop.n, loop.n), dtype=complex)
    for k in range(-loop.N, loop.N + 1):
        m = loop.coeffs[k + loop.N]
        for i in range(loop.n):
            for j in range(loop.n):
                if m[i, j] != 0:
                    out[k + l.l[i] - l.l[j] + N2, i, j] += m[i, j]
    return AnnulusLoop(loop.n, out, loop.r)


def _twist_grid(values: np.ndarray, l: ExponentVector) -> np.ndarray:
    """Pointwise delta(l) X delta(-l) on the grid: entrywise phases."""
    G = values.shape[0]
    z = np.exp(2j * np.pi * np.arange(G) / G)
    shifts = np.array(l.l)[:, None] - np.array(l.l)[None, :]
    phase = z[:, None, None] ** shifts[None, :, :]
    return values * phase


# ---------------------------------------------------------------------------
# Birkhoff factorization
# ---------------------------------------------------------------------------

def birkhoff_factorize(
    loop: AnnulusLoop, M: int, fact_tol: float = 1e-10, cond_max: float = 1e10
):
    """Split ``loop = u_minus^{-1} p_plus``.

    ``u_minus = Id + sum_{k=1..M} a_k z^{-k}`` is found by nulling the
    frequencies -M..-1 of ``u_minus loop`` through the block-Toeplitz system
    ``sum_k a_k l_{j+k} = -l_j``; ``p_plus`` is the nonnegative part of the
    product.  Raises :class:`BigCellViolation` when the system is singular
    beyond ``cond_max``, when the residual negative-frequency mass exceeds
    ``fact_tol``, or when the constant term of ``p_plus`` is not safely
    invertible -- all three mean the loop sits outside the big cell at
    working precision (callers may retry with perturbed flows; the solvable
    set is open).
    """
    n, scale = loop.n, max(loop.norm_max(), 1.0)
    big = np.zeros((M * n, M * n), dtype=complex)
    rhs = np.zeros((n, M * n), dtype=complex)
    for c in range(M):  # column block c encodes the equation at j = -(c+1)
        j = -(c + 1)
        rhs[:, c * n : (c + 1) * n] = -loop.coeff(j)
        for k in range(1, M + 1):
            big[(k - 1) * n : k * n, c * n : (c + 1) * n] = loop.coeff(j + k)
    svals = np.linalg.svd(big, compute_uv=False)
    if svals[0] == 0.0 or svals[-1] == 0.0 or svals[0] / svals[-1] > cond_max:
        raise BigCellViolation(
            "block-Toeplitz system is singular at working precision "
            f"(condition {np.inf if svals[-1] == 0 else svals[0] / svals[-1]:.2e})"
        )
    sol = np.linalg.solve(big.T, rhs.T).T  # X big = rhs
    u_coeffs = np.zeros((2 * M + 1, n, n), dtype=complex)
    u_coeffs[M] = np.eye(n)
    for k in range(1, M + 1):
        u_coeffs[M - k] = sol[:, (k - 1) * n : k * n]
    u_minus = AnnulusLoop(n, u_coeffs, loop.r)

    # full product u_minus * loop; negative bins beyond -M measure leakage
    NP = loop.N + M
    prod = np.zeros((2 * NP + 1, n, n), dtype=complex)
    for k in range(-M, 1):
        a = u_minus.coeff(k)
        if not np.any(a):
            continue
        for j in range(-loop.N, loop.N + 1):
            prod[k + j + NP] += a @ loop.coeff(j)
    neg_mass = float(np.max(np.abs(prod[:NP]))) if NP else 0.0
    if neg_mass > fact_tol * scale:
        raise BigCellViolation(
            f"negative-frequency residual {neg_mass:.2e} exceeds tolerance; "
            f"depth M={M} cannot represent the unipotent factor"
        )
    p_coeffs = prod[NP:]
    p0 = p_coeffs[0]
    psv = np.linalg.svd(p0, compute_uv=False)
    if psv[-1] == 0.0 or psv[0] / psv[-1] > cond_max:
        raise BigCellViolation("constant term of the plus factor is singular")
    pad = np.zeros((2 * NP + 1, n, n), dtype=complex)
    pad[NP:] = p_coeffs
    p_plus = AnnulusLoop(n, pad, loop.r)
    return u_minus, p_plus


# ---------------------------------------------------------------------------
# Wave matrices and solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveMatrixPair:
    """The factorization data behind a pair of wave matrices.

    ``psi = u_minus delta(l) gamma(t)`` and ``phi = p_plus delta(l) gamma(t)``
    satisfy ``psi = phi g^{-1}``; the pair determines the hierarchy solution.
    """

    u_minus: AnnulusLoop
    p_plus: AnnulusLoop
    l: ExponentVector
    flows: FlowRecord
    g: AnnulusLoop
    frame: CommutativeFrame
    params: SolverParams
    diagnostics: dict = field(default_factory=dict)


def build_wave_pair(
    g: AnnulusLoop,
    l,
    flows,
    frame: CommutativeFrame,
    params: SolverParams | None = None,
) -> WaveMatrixPair:
    """Factorize ``delta(l) gamma(t) g gamma(t)^{-1} delta(-l)`` and keep the
    two factors with their provenance.

    The conjugation is evaluated pointwise on the grid as
    ``Id + Gamma (g - Id) Gamma^{-1}`` (twisted entrywise), which is exact
    for the identity loop and numerically tighter than multiplying three
    exponentials.  :class:`BigCellViolation` propagates from the
    factorization.
    """
    params = params or SolverParams()
    l = l if isinstance(l, ExponentVector) else ExponentVector(l)
    flows = flows if isinstance(flows, FlowRecord) else FlowRecord(flows)
    for m, _ in flows.support():
        if abs(m) > params.N // 2:
            raise IndexOutOfRange(f"flow degree {m} exceeds N/2 = {params.N // 2}")
    G = params.grid
    eye = np.eye(g.n, dtype=complex)
    # subtract Id in coefficient space so the identity loop stays exact
    g_m_id = AnnulusLoop(g.n, g.coeffs.copy(), g.r)
    g_m_id.coeffs[g_m_id.N] = g_m_id.coeffs[g_m_id.N] - eye
    dev = g_m_id.grid_values(G)
    gam = _flow_grid_values(flows, frame, G)
    gam_inv = _flow_grid_values(flows, frame, G, sign=-1.0)
    av = _twist_grid(gam @ dev @ gam_inv, l) + eye
    nhat = G // 2 - 1
    aloop = AnnulusLoop.from_grid(av, nhat, g.r)
    if aloop.tail_ratio() > params.tail_tol:
        raise AliasingDetected(
            f"conjugated loop boundary mass {aloop.tail_ratio():.2e} exceeds "
            f"{params.tail_tol:.2e}; raise N or the grid"
        )
    u_minus, p_plus = birkhoff_factorize(
        aloop, params.M, fact_tol=params.fact_tol, cond_max=params.cond_max
    )
    # diagnostics on a doubled grid (p_plus carries frequencies up to N+M)
    G2 = 2 * G
    uv = u_minus.grid_values(G2)
    pv = p_plus.grid_values(G2)
    dg = _twist_grid_left(_flow_grid_values(flows, frame, G2), l)
    gv2 = g.grid_values(G2)
    psi = uv @ dg
    phi = pv @ dg
    rel = float(np.max(np.abs(psi - phi @ np.linalg.inv(gv2))))
    recon = float(np.max(np.abs(uv @ aloop.grid_values(G2) - pv)))
    diagnostics = {
        "relation_residual": rel,
        "reconstruction_residual": recon,
        "tail_ratio": aloop.tail_ratio(),
    }
    return WaveMatrixPair(u_minus, p_plus, l, flows, g, frame, params, diagnostics)


def _twist_grid_left(values: np.ndarray, l: ExponentVector) -> np.ndarray:
    """Pointwise delta(l) X on the grid (row phases only)."""
    G = values.shape[0]
    z = np.exp(2j * np.pi * np.arange(G) / G)
    phase = z[:, None, None] ** np.array(l.l)[None, :, None]
    return values * phase


@dataclass(frozen=True)
class HierarchySolution:
    """Extracted deformed generators with provenance.

    ``u_series`` is the z-graded family (U, or V for a strict reduction),
    ``w_series`` the z^{-1}-graded one; either may be absent after a
    sub-hierarchy reduction."""

    kind: HierarchyKind
    frame: CommutativeFrame
    u_series: tuple | None
    w_series: tuple | None
    window: tuple
    provenance: dict

    def as_deformation(self, tol: float = 1e-8) -> Deformation:
        if self.kind is HierarchyKind.COMBINED:
            return Deformation(
                self.kind, self.frame, self.u_series, self.w_series, tol=tol
            )
        if self.kind is HierarchyKind.STANDARD:
            return Deformation(self.kind, self.frame, self.u_series, tol=tol)
        return Deformation(self.kind, self.frame, self.u_series, tol=tol)

    def to_obj(self):
        return {
            "kind": self.kind.value,
            "window": list(self.window),
            "u_series": [s.to_obj() for s in self.u_series] if self.u_series else None,
            "w_series": [s.to_obj() for s in self.w_series] if self.w_series else None,
            "provenance": self.provenance,
        }


def extract_solution(
    w: WaveMatrixPair, frame: CommutativeFrame | None = None, depth: int | None = None
) -> HierarchySolution:
    """Dress the frame by the factorization factors.

    ``U_alpha = u_minus E_alpha u_minus^{-1}`` truncated to ``[-depth, 0]``
    and ``W_beta = p_plus E_beta z^{-1} p_plus^{-1}`` truncated to
    ``[-1, depth-1]``.  The result is invariant (to factorization tolerance)
    under shifting every entry of l by the same integer, since the central
    twist cancels in the conjugated loop.
    """
    frame = frame or w.frame
    depth = depth or w.params.M
    M = w.params.M
    n = frame.n
    u = w.u_minus.to_series("z", (-2 * M, 0))
    # the plus factor is only needed to conjugation depth
    p_full = w.p_plus.to_series("zinv", (0, w.p_plus.N))
    p = p_full.truncated(0, 2 * M) if p_full.hi > 2 * M else p_full
    u_inv = u.invert()
    p_inv = p.invert()
    u_series, w_series = [], []
    for alpha in range(1, frame.r + 1):
        e0 = frame.generator_series(alpha, 0, "z", numeric=True)
        ew = frame.generator_series(alpha, -1, "zinv", numeric=True)
        ue = u.mul(_pad_total(e0, u.lo - u.hi, 0)).mul(u_inv)
        u_series.append(ue.truncated(-depth, 0))
        we = p.mul(_pad_total(ew, -1, p.hi - 1)).mul(p_inv)
        w_series.append(we.truncated(-1, depth - 1))
    provenance = {
        "l": list(w.l),
        "flows": w.flows.to_obj(),
        "params": w.params.to_obj(),
        "diagnostics": w.diagnostics,
    }
    return HierarchySolution(
        HierarchyKind.COMBINED,
        frame,
        tuple(u_series),
        tuple(w_series),
        (-depth, depth - 1),
        provenance,
    )


def _pad_total(series: LoopSeries, lo: int, hi: int) -> LoopSeries:
    return series.widened(lo=min(lo, series.lo), hi=max(hi, series.hi))


def reduce_subhierarchy(w: WaveMatrixPair, target) -> HierarchySolution:
    """Restrict a wave pair to one of the two sub-hierarchies.

    Plain target: requires vanishing negative flows; keeps the U family.
    Strict target: requires vanishing nonnegative flows; returns the V
    family obtained from W by the power reindexing z -> 1/z.
    """
    target = HierarchyKind(target) if not isinstance(target, HierarchyKind) else target
    sol = extract_solution(w)
    if target is HierarchyKind.STANDARD:
        bad = [(m, a) for (m, a), v in w.flows.items() if m < 0 and v != 0]
        if bad:
            raise FlowSupportViolation(f"nonzero negative flows {bad}")
        return HierarchySolution(
            HierarchyKind.STANDARD,
            sol.frame,
            sol.u_series,
            None,
            sol.window,
            dict(sol.provenance, reduced="standard"),
        )
    if target is HierarchyKind.STRICT:
        bad = [(m, a) for (m, a), v in w.flows.items() if m >= 0 and v != 0]
        if bad:
            raise FlowSupportViolation(f"nonzero nonnegative flows {bad}")
        v_series = tuple(s.reindexed() for s in sol.w_series)
        return HierarchySolution(
            HierarchyKind.STRICT,
            sol.frame,
            v_series,
            None,
            sol.window,
            dict(sol.provenance, reduced="strict"),
        )
    raise ValueError(f"cannot reduce to {target!r}")


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------

@dataclass
class VerifyReport:
    """Residual norms per requested check; inconclusive entries mark flows
    whose perturbed points left the big cell."""

    residuals: dict
    inconclusive: list
    params: dict

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_obj(self):
        return {
            "residuals": self.residuals,
            "inconclusive": self.inconclusive,
            "params": self.params,
        }


def _check_key(check) -> str:
    kind = check[0]
    if kind == "lax" and len(check) == 3:
        return f"lax:{check[1]},{check[2]}"
    if kind == "zc" and len(check) == 5:
        return f"zc:{check[1]},{check[2]}:{check[3]},{check[4]}"
    raise ValueError(f"unknown check {check!r} (use ('lax', m, a) or ('zc', m1, a1, m2, a2))")


def fd_verify(
    g: AnnulusLoop,
    l,
    frame: CommutativeFrame,
    flows,
    checks,
    h: float = 1e-4,
    params: SolverParams | None = None,
    richardson: bool = True,
) -> VerifyReport:
    """Verify Lax / zero-curvature residuals by central differences.

    Each check re-solves the factorization at perturbed flow values and
    compares the finite-difference derivative against the bracket produced
    by the hierarchy engine.  One Richardson step (h and h/2) removes the
    leading h^2 truncation term.  A perturbed point outside the big cell
    marks the check inconclusive rather than failed.
    """
    params = params or SolverParams()
    flows = flows if isinstance(flows, FlowRecord) else FlowRecord(flows)
    l = l if isinstance(l, ExponentVector) else ExponentVector(l)
    cache: dict = {}

    def solve_at(fl: FlowRecord) -> HierarchySolution:
        key = tuple(sorted((k, complex(v)) for k, v in fl.items()))
        if key not in cache:
            cache[key] = extract_solution(
                build_wave_pair(g, l, fl, frame, params), frame
            )
        return cache[key]

    base = solve_at(flows)
    d = base.as_deformation()

    def fd_series(pick, m: int, alpha: int):
        """Richardson-extrapolated central difference of pick(solution)."""

        def central(step: float):
            fp = flows.with_value(m, alpha, flows.get((m, alpha), 0.0) + step)
            fm = flows.with_value(m, alpha, flows.get((m, alpha), 0.0) - step)
            return (pick(solve_at(fp)) - pick(solve_at(fm))).smul(1.0 / (2 * step))

        d1 = central(h)
        if not richardson:
            return d1
        d2 = central(h / 2)
        return d2.smul(4.0 / 3.0) - d1.smul(1.0 / 3.0)

    residuals: dict = {}
    inconclusive: list = []
    for check in checks:
        key = _check_key(check)
        try:
            if check[0] == "lax":
                _, m, alpha = check
                worst = 0.0
                for idx in range(1, frame.r + 1):
                    for family in ("u", "w"):
                        pick = (
                            (lambda s, i=idx: s.u_series[i - 1])
                            if family == "u"
                            else (lambda s, i=idx: s.w_series[i - 1])
                        )
                        deriv = fd_series(pick, m, alpha)
                        res = lax_residual(d, m, alpha, idx, deriv, family=family)
                        worst = max(worst, res.max_abs())
                residuals[key] = worst
            elif check[0] == "zc":
                _, m1, a1, m2, a2 = check
                d1c2 = fd_series(
                    lambda s: cutoff(s.as_deformation(), m2, a2), m1, a1
                )
                d2c1 = fd_series(
                    lambda s: cutoff(s.as_deformation(), m1, a1), m2, a2
                )
                res = zc_residual(d, m1, a1, m2, a2, d1c2, d2c1)
                residuals[key] = res.max_abs()
            else:
                raise ValueError(f"unknown check kind {check[0]!r}")
        except BigCellViolation:
            inconclusive.append(key)
    return VerifyReport(residuals, inconclusive, params.to_obj())


def provenance_hash(obj) -> str:
    """Deterministic hash of a canonical-JSON view of solver inputs."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
