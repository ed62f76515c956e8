"""Linear propagator, energy uniformity, Gabor-matrix decay, symbol extraction.

The generator is M(t) = a^w + i b^w with real symbols a (diffusion, bounded
below) and b (drift).  Time stepping is the exponential midpoint rule:
u <- exp(-dt M(t_mid)) u with a dense scaling-and-squaring exponential; for
time-independent symbols one exponential serves every step, so the only
error is spatial.  A spectral guard refuses generators whose Hermitian part
dips below -(C0 + slack + margin), the discrete blow-up criterion.

The structural claims under test here: the propagator's wave-packet matrix
<S(t) pi(z) g, pi(w) g> decays off-diagonally at every polynomial order; the
weighted energy estimates hold uniformly over phase-space shifts of the
symbols; the propagator possesses a bounded Weyl symbol recoverable from its
kernel; analytic-type coefficients propagate factorial-weighted energies
with an N-independent constant.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ._util import parallel_map
from .grid import Grid, GridFunction, dft, l2_norm, numerically_supported, sobolev_q_norm
from .symbols import (
    SampledSymbol,
    Symbol,
    phase_samples,
    seminorm_estimate,
    shift_symbol,
    time_continuity_modulus,
)
from .tfa import PhaseLattice, PhasePoint, PhaseSpaceField, stft
from .weyl import OperatorMatrix, weyl_quantize, weyl_symbol

__all__ = [
    "EvolutionProblem",
    "Trajectory",
    "DecayReport",
    "HypothesisReport",
    "UniformityTable",
    "StabilityGuardError",
    "DecayFitError",
    "check_hypotheses",
    "solve_linear",
    "propagator_matrix",
    "energy_uniformity",
    "gabor_matrix",
    "gabor_matrix_operator",
    "decay_fit",
    "extract_symbol",
    "analytic_energy",
    "analytic_stability",
]


class StabilityGuardError(RuntimeError):
    """Generator spectrum violates the lower-bound hypothesis by a margin."""


class DecayFitError(ValueError):
    """Too few usable bins for a decay fit."""


@dataclass
class EvolutionProblem:
    """Evolution u_t + a^w u + i b^w u = 0 on [0, T].

    lower_bound_c0 is the assumed constant of the diffusion lower bound
    a >= -C0 (a hypothesis, so configured rather than estimated); the
    spectral guard trips when the Hermitian part of the generator dips below
    -(C0 + guard_slack + guard_margin).
    """

    a: Symbol
    b: Symbol
    grid: Grid
    T: float
    dt: float = 0.01
    lower_bound_c0: float = 1.0
    guard: bool = True
    guard_slack: float = 5.0
    guard_margin: float = 1.0

    def __post_init__(self):
        if not (0 < self.dt <= self.T):
            raise ValueError("need 0 < dt <= T")

    @property
    def time_dependent(self) -> bool:
        return self.a.time_dependent or self.b.time_dependent

    def shifted(self, z: PhasePoint) -> "EvolutionProblem":
        return EvolutionProblem(
            shift_symbol(self.a, z), shift_symbol(self.b, z), self.grid,
            self.T, self.dt, self.lower_bound_c0, self.guard,
            self.guard_slack, self.guard_margin,
        )


@dataclass
class Trajectory:
    times: List[float]
    states: List[GridFunction]

    def __post_init__(self):
        if len(self.times) != len(self.states) or not self.times:
            raise ValueError("times and states must align and be nonempty")

    @property
    def final(self) -> GridFunction:
        return self.states[-1]


@dataclass
class HypothesisReport:
    """Empirical standing of the structural hypotheses on the symbols."""

    diffusion_order2_sup: float
    drift_order1_sup: float
    diffusion_min: float
    time_modulus: float
    warnings: List[str]

    @property
    def clean(self) -> bool:
        return not self.warnings


def check_hypotheses(
    prob: EvolutionProblem,
    t_samples: Sequence[float] = None,
    max_order: int = 3,
    seminorm_bound: float = 100.0,
) -> HypothesisReport:
    """Sample the symbol hypotheses: bounded derivative sups from the
    critical orders, the diffusion lower bound, and time continuity."""
    if t_samples is None:
        t_samples = np.linspace(0.0, prob.T, 5) if prob.time_dependent else (0.0,)
    rep_a = seminorm_estimate(prob.a, prob.grid, t_samples, max_order)
    rep_b = seminorm_estimate(prob.b, prob.grid, t_samples, max_order)
    a2 = rep_a.max_entry(min_total=2)
    b1 = rep_b.max_entry(min_total=1)
    tmod = 0.0
    if prob.time_dependent:
        tgrid = np.linspace(0.0, prob.T, 9)
        tmod = max(
            time_continuity_modulus(prob.a, prob.grid, tgrid),
            time_continuity_modulus(prob.b, prob.grid, tgrid),
        )
    msgs = []
    if a2 > seminorm_bound:
        msgs.append(f"diffusion derivative sups from order 2 reach {a2:.3g}")
    if b1 > seminorm_bound:
        msgs.append(f"drift derivative sups from order 1 reach {b1:.3g}")
    if rep_a.lower_bound < -prob.lower_bound_c0:
        msgs.append(
            f"diffusion dips to {rep_a.lower_bound:.3g} below the assumed -C0"
        )
    for m in msgs:
        warnings.warn(m, UserWarning, stacklevel=2)
    return HypothesisReport(a2, b1, rep_a.lower_bound, tmod, msgs)


# ---------------------------------------------------------------------------
# time stepping


def _generator(prob: EvolutionProblem, t: float) -> np.ndarray:
    A = weyl_quantize(prob.a, prob.grid, t).entries
    B = weyl_quantize(prob.b, prob.grid, t).entries
    return A + 1j * B


def _bulk_indices(grid: Grid) -> np.ndarray:
    """Samples in the quarter box |x| <= L/4.

    Any index pair inside has minimal torus separation <= L/2, so no entry
    of the restricted form carries a seam midpoint: the restriction measures
    the line-faithful quadratic form on well-supported data.
    """
    x = grid.x_mesh().reshape(-1, grid.d)
    return np.nonzero(np.all(np.abs(x) <= grid.L / 4, axis=1))[0]


def _guard_check(prob: EvolutionProblem, M: np.ndarray) -> None:
    if not prob.guard:
        return
    # restrict the Hermitian form to numerically supported data: symbols that
    # are legitimate on the line but jump across the periodic seam (tanh-type
    # profiles) excite seam modes at the -1/h^2 scale, which the support
    # convention deliberately never populates
    H = 0.5 * (M + M.conj().T)
    bulk = _bulk_indices(prob.grid)
    Hb = H[np.ix_(bulk, bulk)]
    lam_min = float(scipy.linalg.eigvalsh(Hb, subset_by_index=[0, 0])[0])
    floor = -(prob.lower_bound_c0 + prob.guard_slack + prob.guard_margin)
    if lam_min < floor:
        raise StabilityGuardError(
            f"generator Hermitian part reaches {lam_min:.4g} on supported "
            f"data, below the guard floor {floor:.4g}; the lower-bound "
            f"hypothesis fails"
        )


def _step_grid(sigma: float, t: float, dt: float) -> List[Tuple[float, float]]:
    """(t_start, step) pairs covering [sigma, t] with a final partial step."""
    steps = []
    cur = sigma
    while t - cur > 1e-12:
        step = min(dt, t - cur)
        steps.append((cur, step))
        cur += step
    return steps


def _step_exponentials(prob: EvolutionProblem, sigma: float, t: float,
                       dt: float = None):
    """Yield (time_after_step, exp(-step*M)) along the step grid; caches the
    exponential for time-independent symbols and repeated step sizes."""
    cache: Dict[float, np.ndarray] = {}
    M_static = None
    for t0, step in _step_grid(sigma, t, dt if dt is not None else prob.dt):
        if prob.time_dependent:
            M = _generator(prob, t0 + step / 2.0)
            _guard_check(prob, M)
            P = scipy.linalg.expm(-step * M)
        else:
            if M_static is None:
                M_static = _generator(prob, 0.0)
                _guard_check(prob, M_static)
            if step not in cache:
                cache[step] = scipy.linalg.expm(-step * M_static)
            P = cache[step]
        yield t0 + step, P


def solve_linear(
    prob: EvolutionProblem,
    u0: GridFunction,
    sigma: float = 0.0,
    t: float = None,
    check_support: bool = True,
) -> Trajectory:
    """Exponential-midpoint evolution of u0 from time sigma to t.

    Returns the trajectory at all step times; t defaults to prob.T.
    """
    if t is None:
        t = prob.T
    if not sigma <= t <= prob.T + 1e-12:
        raise ValueError("need sigma <= t <= T")
    if check_support:
        numerically_supported(u0)
    times = [sigma]
    states = [u0.copy()]
    vec = u0.values.reshape(-1)
    for t_next, P in _step_exponentials(prob, sigma, t):
        vec = P @ vec
        times.append(t_next)
        states.append(GridFunction(prob.grid, vec.reshape(prob.grid.shape)))
    return Trajectory(times, states)


def propagator_matrix(prob: EvolutionProblem, sigma: float, t: float) -> OperatorMatrix:
    """Dense propagator from time sigma to t (product of step exponentials);
    applying it to data matches solve_linear to rounding."""
    if not sigma <= t:
        raise ValueError("need sigma <= t")
    S = np.eye(prob.grid.size, dtype=np.complex128)
    for _, P in _step_exponentials(prob, sigma, t):
        S = P @ S
    return OperatorMatrix(prob.grid, S)


# ---------------------------------------------------------------------------
# uniformity of the energy estimates over phase-space shifts


@dataclass
class UniformityTable:
    """Per-shift worst energy amplification C(z) in the weighted Sobolev norm."""

    k: int
    entries: List[Tuple[PhasePoint, float]]

    def ratio(self) -> float:
        vals = [c for _, c in self.entries]
        return max(vals) / min(vals)


def energy_uniformity(
    prob: EvolutionProblem,
    k: int,
    g: GridFunction,
    z_set: Sequence[PhasePoint],
    t: float = None,
    threads: int = None,
) -> UniformityTable:
    """Solve the z-shifted problems with datum g and record
    C(z) = max_t ||u(t)||_{Q^{2k}} / ||g||_{Q^{2k}}.

    The claim under test: C(z) admits a z-independent bound for conforming
    symbols (ratio near 1), and fails to for second-order drifts.
    """
    if t is None:
        t = prob.T
    numerically_supported(g)
    base = sobolev_q_norm(g, k)

    def one(z: PhasePoint) -> float:
        traj = solve_linear(prob.shifted(z), g, 0.0, t, check_support=False)
        return max(sobolev_q_norm(u, k) for u in traj.states) / base

    vals = parallel_map(one, z_set, threads)
    return UniformityTable(k, list(zip(list(z_set), vals)))


# ---------------------------------------------------------------------------
# Gabor matrices and decay fits


@dataclass
class DecayReport:
    """Binned off-diagonal magnitudes with a fitted polynomial decay order:
    log max = c - N log(1 + r) over usable bins."""

    bins: np.ndarray
    max_abs: np.ndarray
    fitted_N: float
    residual: float
    r_centers: np.ndarray
    used: np.ndarray


def gabor_matrix_operator(
    op: OperatorMatrix, g: GridFunction, lattice: PhaseLattice, threads: int = None
) -> PhaseSpaceField:
    """Wave-packet matrix <A pi(z) g, pi(w) g> over all lattice pairs.

    Each shifted window is propagated once (one dense matvec) and analyzed
    with one STFT; rows are indexed by z, columns by w in lattice order.
    """
    grid = op.grid
    nrm = l2_norm(g)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("window must be L2-normalized")
    from .tfa import phase_shift

    pts = lattice.points()
    shifted = np.stack([phase_shift(g, z).values.reshape(-1) for z in pts], axis=1)
    propagated = op.entries @ shifted  # (N, P)

    def row(idx: int) -> np.ndarray:
        v = GridFunction(grid, propagated[:, idx].reshape(grid.shape))
        return stft(v, g, lattice).flat()

    rows = parallel_map(row, range(len(pts)), threads)
    return PhaseSpaceField(lattice, np.stack(rows, axis=0), kind="matrix")


def gabor_matrix(
    prob: EvolutionProblem, t: float, g: GridFunction, lattice: PhaseLattice,
    sigma: float = 0.0, threads: int = None,
) -> PhaseSpaceField:
    return gabor_matrix_operator(propagator_matrix(prob, sigma, t), g, lattice, threads)


def decay_fit(
    field: PhaseSpaceField,
    bin_width: float = 1.0,
    floor: float = 1e-12,
    r_min: float = None,
    r_max: float = None,
    direction: Sequence[float] = None,
    direction_tol: float = 0.35,
) -> DecayReport:
    """Fit the off-diagonal decay order of a wave-packet matrix.

    Pairs are binned by the phase-space distance |w - z|; per-bin maxima
    (the claim is a sup bound) are fitted to log max = c - N log(1+r) over
    bins with max > floor, optionally restricted to [r_min, r_max] or to
    offsets within angle arccos-ish direction_tol of a fixed direction.
    """
    if field.kind != "matrix":
        raise ValueError("decay_fit needs a matrix-type field")
    pts = field.lattice.points_array()
    offsets = pts[None, :, :] - pts[:, None, :]
    r = np.sqrt(np.sum(offsets**2, axis=-1)).reshape(-1)
    mag = np.abs(field.values).reshape(-1)
    if direction is not None:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
        proj = (offsets @ u).reshape(-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.where(r > 0, proj / r, 0.0)
        keep = cosang >= np.cos(direction_tol)
        r, mag = r[keep], mag[keep]
    edges = np.arange(0.0, r.max() + bin_width, bin_width)
    idx = np.clip(np.digitize(r, edges) - 1, 0, len(edges) - 2)
    max_abs = np.zeros(len(edges) - 1)
    np.maximum.at(max_abs, idx, mag)
    centers = 0.5 * (edges[:-1] + edges[1:])
    used = max_abs > floor
    if r_min is not None:
        used &= centers >= r_min
    if r_max is not None:
        used &= centers <= r_max
    if used.sum() < 3:
        raise DecayFitError(f"only {int(used.sum())} usable bins")
    x = np.log1p(centers[used])
    y = np.log(max_abs[used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayReport(
        bins=edges,
        max_abs=max_abs,
        fitted_N=float(-slope),
        residual=float(np.sqrt(np.mean(resid**2))),
        r_centers=centers,
        used=used,
    )


def extract_symbol(op: OperatorMatrix) -> SampledSymbol:
    """Weyl symbol of a propagator (or any dense operator) from its kernel."""
    return weyl_symbol(op)


# ---------------------------------------------------------------------------
# factorial-weighted (analytic-type) energies


def _multi_indices_d(d: int, max_total: int):
    for total in range(max_total + 1):
        for combo in itertools.product(range(total + 1), repeat=d):
            if sum(combo) == total:
                yield combo


def analytic_energy(u: GridFunction, eps: float, N: int) -> float:
    """sum_{|alpha| <= N} eps^{2|alpha|} / alpha!^2 * ||d^alpha u||_L2^2.

    Finiteness uniform in N (for small eps) characterizes the analytic
    class; derivatives are spectral.
    """
    if not (0 < eps <= 1):
        raise ValueError("need 0 < eps <= 1")
    if N > 12:
        raise ValueError("N must be <= 12")
    g = u.grid
    F = dft(u)
    XI = g.xi_mesh()
    w = g.dxi**g.d / (2 * np.pi) ** g.d  # Parseval weight for the L2 norm
    total = 0.0
    for alpha in _multi_indices_d(g.d, N):
        mult = np.ones(g.shape)
        for ax, a in enumerate(alpha):
            if a:
                mult = mult * XI[..., ax] ** (2 * a)
        norm_sq = w * float(np.sum(mult * np.abs(F.values) ** 2))
        fact = math.prod(math.factorial(a) for a in alpha)
        total += eps ** (2 * sum(alpha)) / fact**2 * norm_sq
    return total


def analytic_stability(
    prob: EvolutionProblem,
    u0: GridFunction,
    eps: float,
    N_range: Sequence[int],
    t: float = None,
) -> Dict[int, float]:
    """Worst factorial-energy amplification per order N along the evolution.

    The claim under test: for analytic-type coefficients the ratios admit a
    bound independent of N.
    """
    traj = solve_linear(prob, u0, 0.0, t)
    out: Dict[int, float] = {}
    for N in N_range:
        base = math.sqrt(analytic_energy(u0, eps, N))
        worst = max(math.sqrt(analytic_energy(u, eps, N)) for u in traj.states)
        out[int(N)] = worst / base
    return out
