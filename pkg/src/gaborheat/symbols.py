"""Time-dependent phase-space symbols and their empirical class membership.

A Symbol wraps an evaluator (t, x, xi) -> values, with x and xi arrays
carrying a trailing component axis of length d.  Class membership
(uniformly bounded derivatives from a given order, analytic-type factorial
bounds, weighted decay) is estimated by central finite differences at the
grid spacing, with sups taken over the interior phase-space sample set:
boundary samples fall out of the shrinking difference stencils.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .grid import Grid

__all__ = [
    "Symbol",
    "SampledSymbol",
    "SymbolClassReport",
    "AnalyticBoundReport",
    "GammaSeminormReport",
    "named_symbol",
    "NAMED_SYMBOLS",
    "shift_symbol",
    "phase_samples",
    "seminorm_estimate",
    "analytic_bound_check",
    "gamma_seminorm",
    "time_continuity_modulus",
]


@dataclass
class Symbol:
    """Scalar phase-space symbol given by a pure evaluator.

    fn(t, x, xi): x and xi have shape (..., d) and broadcast; the result has
    the broadcast shape without the component axis.  Evaluators must be pure
    and reentrant (reports reduce over samples in parallel-friendly chunks).
    """

    fn: Callable
    name: str = ""
    time_dependent: bool = False
    declared_class: Optional[str] = None

    def __call__(self, t: float, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, x, xi), dtype=np.complex128)


@dataclass
class SampledSymbol:
    """Symbol known by its values on the phase-space sample grid.

    values has shape x_shape + xi_shape ((n, n) in d=1, x index first).
    xi_axis may differ from the grid's (extracted propagator symbols live on
    the grid's frequency axis; keep it explicit for CSV output).
    """

    grid: Grid
    values: np.ndarray
    name: str = ""
    xi_axis: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape * 2:
            raise ValueError(
                f"sampled symbol shape {self.values.shape} incompatible with grid"
            )
        if self.xi_axis is None:
            self.xi_axis = self.grid.xi_axis()


# ---------------------------------------------------------------------------
# built-in symbols (CLI-selectable)


def _heat(d):
    return lambda t, x, xi: np.sum(xi**2, axis=-1)


def _drift(d, direction=0):
    return lambda t, x, xi: xi[..., direction]


def _degenerate_diffusion(d):
    # sigma(x) = (1 + tanh x)/2 >= 0, vanishing as x -> -inf
    return lambda t, x, xi: (1.0 + np.tanh(x[..., 0])) / 2.0 * np.sum(xi**2, axis=-1)


def _potential_well(d):
    # analytic, bounded derivatives of every order
    return lambda t, x, xi: np.sum(np.sin(x) ** 2, axis=-1)


def _schrodinger_b(d):
    return lambda t, x, xi: np.sum(xi**2, axis=-1)


def _chirp_b(d):
    return lambda t, x, xi: np.sum(x**2, axis=-1)


def _quadratic_potential(d):
    return lambda t, x, xi: np.sum(x**2, axis=-1)


def _zero(d):
    return lambda t, x, xi: np.zeros(np.broadcast_shapes(x.shape, xi.shape)[:-1])


NAMED_SYMBOLS = {
    "heat": (_heat, "S^(2), elliptic diffusion |xi|^2"),
    "drift": (_drift, "S^(1), first-order drift xi.e"),
    "degenerate_diffusion": (_degenerate_diffusion, "S^(2), sigma(x) xi^2 with vanishing sigma"),
    "potential_well": (_potential_well, "analytic bounded potential sin^2 x"),
    "schrodinger_b": (_schrodinger_b, "second-order drift |xi|^2 (uniformity counterexample)"),
    "chirp_b": (_chirp_b, "second-order drift |x|^2 (norm-growth counterexample)"),
    "quadratic_potential": (_quadratic_potential, "confining potential |x|^2"),
    "zero": (_zero, "zero symbol"),
}


def named_symbol(name: str, d: int = 1, **params) -> Symbol:
    """Look up a built-in symbol by name."""
    if name not in NAMED_SYMBOLS:
        raise KeyError(f"unknown symbol {name!r}; choices: {sorted(NAMED_SYMBOLS)}")
    factory, _ = NAMED_SYMBOLS[name]
    return Symbol(factory(d, **params), name=name, time_dependent=False)


def shift_symbol(sym: Symbol, z) -> Symbol:
    """Phase-space shift of the symbol: sym_z(t, x, xi) = sym(t, x+x0, xi+xi0)."""
    from .tfa import PhasePoint

    if not isinstance(z, PhasePoint):
        z = PhasePoint.of(*z)
    x0, xi0 = z.as_arrays()

    def shifted(t, x, xi):
        return sym.fn(t, x + x0, xi + xi0)

    label = f"{sym.name}@z" if sym.name else "shifted"
    return Symbol(shifted, name=label, time_dependent=sym.time_dependent,
                  declared_class=sym.declared_class)


def phase_samples(sym, t: float, grid: Grid) -> np.ndarray:
    """Symbol values on the full phase-space sample set, shape x_shape + xi_shape."""
    if isinstance(sym, SampledSymbol):
        return sym.values
    X, XI = grid.phase_mesh()
    vals = np.asarray(sym(t, X, XI))
    # symbols ignoring x or xi come back with collapsed axes
    return np.broadcast_to(vals, grid.shape * 2)


# ---------------------------------------------------------------------------
# finite-difference machinery


_FD_CACHE: Dict[int, np.ndarray] = {}


def _fd_weights(order: int) -> np.ndarray:
    """Second-order central-difference weights for d^order at unit step.

    Offsets -p..p with p = ceil(order/2); weights solve the moment system
    sum_j w_j j^k = order! * delta_{k,order}.
    """
    if order == 0:
        return np.array([1.0])
    if order not in _FD_CACHE:
        p = (order + 1) // 2
        offsets = np.arange(-p, p + 1, dtype=float)
        V = np.vander(offsets, increasing=True).T  # V[k, j] = offsets[j]^k
        rhs = np.zeros(2 * p + 1)
        rhs[order] = math.factorial(order)
        _FD_CACHE[order] = np.linalg.solve(V, rhs)
    return _FD_CACHE[order]


def _apply_stencil(A: np.ndarray, axis: int, order: int, step: float) -> np.ndarray:
    if order == 0:
        return A
    w = _fd_weights(order)
    p = (order + 1) // 2
    inner = A.shape[axis] - 2 * p
    if inner <= 0:
        return np.empty(A.shape[:axis] + (0,) + A.shape[axis + 1 :], dtype=A.dtype)
    out = None
    for j, wj in enumerate(w):
        sl = [slice(None)] * A.ndim
        sl[axis] = slice(j, j + inner)
        term = wj * A[tuple(sl)]
        out = term if out is None else out + term
    return out / step**order


def _multi_indices(d: int, max_total: int):
    for total in range(max_total + 1):
        for combo in itertools.product(range(total + 1), repeat=d):
            if sum(combo) == total:
                yield combo


def _derivative_field(field: np.ndarray, grid: Grid, alpha, beta,
                      xi_step: float = None) -> np.ndarray:
    """Central-difference derivative: alpha along xi axes, beta along x axes."""
    d = grid.d
    out = field
    step_xi = grid.dxi if xi_step is None else xi_step
    for ax in range(d):
        out = _apply_stencil(out, ax, beta[ax], grid.h)
    for ax in range(d):
        out = _apply_stencil(out, d + ax, alpha[ax], step_xi)
    return out


def _index_pairs(d: int, max_order: int):
    for alpha in _multi_indices(d, max_order):
        for beta in _multi_indices(d, max_order - sum(alpha)):
            yield alpha, beta


def _as_tuple(idx, d: int) -> tuple:
    if np.isscalar(idx):
        if d != 1:
            raise ValueError("scalar multi-index only valid in d=1")
        return (int(idx),)
    return tuple(int(i) for i in idx)


@dataclass
class SymbolClassReport:
    """Per-(alpha, beta) derivative sups plus the empirical lower bound of Re."""

    entries: Dict[Tuple[tuple, tuple], float]
    lower_bound: float
    max_order: int
    d: int

    def entry(self, alpha, beta) -> float:
        return self.entries[(_as_tuple(alpha, self.d), _as_tuple(beta, self.d))]

    def max_entry(self, min_total: int = 0, max_total: int = None) -> float:
        hi = self.max_order if max_total is None else max_total
        vals = [
            v
            for (a, b), v in self.entries.items()
            if min_total <= sum(a) + sum(b) <= hi
        ]
        return max(vals) if vals else 0.0

    def order_sup(self, total: int) -> float:
        return self.max_entry(total, total)


def seminorm_estimate(sym, grid: Grid, t_samples=(0.0,), max_order: int = 4) -> SymbolClassReport:
    """Estimate sup |d^alpha_xi d^beta_x sym| for all |alpha|+|beta| <= max_order.

    Central differences at the grid spacings; sups run over all supplied
    times and over the interior sample set (stencils shrink inward, so
    boundary rows drop out automatically).  Also records min Re(sym) over
    the order-0 samples, the empirical lower-bound constant.
    """
    if max_order > 6:
        raise ValueError("max_order must be <= 6")
    entries: Dict[Tuple[tuple, tuple], float] = {}
    lower = np.inf
    xi_step = None
    if isinstance(sym, SampledSymbol):
        ax = np.asarray(sym.xi_axis)
        if len(ax) > 1:
            xi_step = float(ax[1] - ax[0])
    for t in t_samples:
        F = phase_samples(sym, t, grid)
        lower = min(lower, float(np.min(F.real)))
        for alpha, beta in _index_pairs(grid.d, max_order):
            D = _derivative_field(F, grid, alpha, beta, xi_step=xi_step)
            val = float(np.max(np.abs(D))) if D.size else 0.0
            key = (alpha, beta)
            entries[key] = max(entries.get(key, 0.0), val)
    return SymbolClassReport(entries, lower, max_order, grid.d)


@dataclass
class AnalyticBoundReport:
    """Worst ratio of derivative sups to the factorial-analytic bound."""

    ratios: Dict[Tuple[tuple, tuple], float]
    worst: float
    passed: bool
    C: float


def analytic_bound_check(
    sym,
    grid: Grid,
    C: float,
    c_alpha=1.0,
    min_order: int = 1,
    max_order: int = 4,
    t_samples=(0.0,),
) -> AnalyticBoundReport:
    """Check |d^alpha_xi d^beta_x sym| <= C_alpha C^{|beta|+1} beta! on samples.

    c_alpha is a constant or a mapping from alpha (tuple or scalar for d=1)
    to C_alpha.  Ratios <= 1 over the requested total orders mean the bound
    holds on the sample set.
    """
    if max_order > 6:
        raise ValueError("max_order must be <= 6")
    report = seminorm_estimate(sym, grid, t_samples, max_order)
    ratios = {}
    worst = 0.0
    for (alpha, beta), sup in report.entries.items():
        total = sum(alpha) + sum(beta)
        if total < min_order or total > max_order:
            continue
        if isinstance(c_alpha, dict):
            ca = c_alpha.get(alpha, c_alpha.get(sum(alpha), 1.0))
        else:
            ca = float(c_alpha)
        denom = ca * C ** (sum(beta) + 1) * math.prod(math.factorial(b) for b in beta)
        ratios[(alpha, beta)] = sup / denom
        worst = max(worst, sup / denom)
    return AnalyticBoundReport(ratios, worst, worst <= 1.0, C)


@dataclass
class GammaSeminormReport:
    """Weighted derivative sups sup |d^a d^b sym| (1+|x|+|xi|)^{|a|+|b|-m}."""

    entries: Dict[Tuple[tuple, tuple], float]
    m: float

    def max_entry(self) -> float:
        return max(self.entries.values()) if self.entries else 0.0


def gamma_seminorm(sym, grid: Grid, m: float, max_order: int = 2,
                   t_samples=(0.0,)) -> GammaSeminormReport:
    """Polynomial-weighted seminorms of the global symbol class of order m."""
    if max_order > 4:
        raise ValueError("max_order must be <= 4")
    d = grid.d
    x_axis = grid.x_axis()
    xi_axis = grid.xi_axis()
    entries: Dict[Tuple[tuple, tuple], float] = {}
    for t in t_samples:
        F = phase_samples(sym, t, grid)
        for alpha, beta in _index_pairs(d, max_order):
            D = _derivative_field(F, grid, alpha, beta)
            if D.size == 0:
                continue
            # axis values surviving the shrunk stencils (p = ceil(order/2))
            pb = [(beta[ax] + 1) // 2 for ax in range(d)]
            pa = [(alpha[ax] + 1) // 2 for ax in range(d)]
            xs = [x_axis[pb[ax] : grid.n - pb[ax]] for ax in range(d)]
            xis = [xi_axis[pa[ax] : grid.n - pa[ax]] for ax in range(d)]
            mesh = np.meshgrid(*xs, *xis, indexing="ij")
            xnorm = np.sqrt(sum(mesh[ax] ** 2 for ax in range(d)))
            xinorm = np.sqrt(sum(mesh[d + ax] ** 2 for ax in range(d)))
            w = (1.0 + xnorm + xinorm) ** (sum(alpha) + sum(beta) - m)
            key = (alpha, beta)
            val = float(np.max(np.abs(D) * w))
            entries[key] = max(entries.get(key, 0.0), val)
    return GammaSeminormReport(entries, m)


def time_continuity_modulus(sym: Symbol, grid: Grid, t_grid) -> float:
    """Max pointwise jump of the symbol between consecutive sample times."""
    t_grid = np.asarray(t_grid, dtype=float)
    worst = 0.0
    prev = phase_samples(sym, float(t_grid[0]), grid)
    for t in t_grid[1:]:
        cur = phase_samples(sym, float(t), grid)
        worst = max(worst, float(np.max(np.abs(cur - prev))))
        prev = cur
    return worst
