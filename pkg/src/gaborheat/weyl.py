"""Weyl quantization to dense operators and quadratic-form lower bounds.

The quantization of a symbol p(x, xi) acts as

    (p^w f)(x) = (2 pi)^{-d} iint e^{i(x-y) xi} p((x+y)/2, xi) f(y) dy dxi,

discretized with rectangle-rule weights h^d (2 pi/L)^d (2 pi)^{-d} = n^{-d}.
Entries depend on the pair (j, l) through the anti-diagonal midpoint
(x_j + x_l)/2 (on the half-step refinement, evaluated exactly through the
symbol callable) and the offset j - l, so each anti-diagonal is one inverse
DFT of the symbol in xi.  Real symbols give exactly Hermitian matrices up
to rounding; the deviation is recorded and symmetrized away.

The quadratic-form tester measures the worst lower-bound constant
-Re<W L u, W u> / ||W u||^2 over a frozen battery of states and both weights
W = (1-Lap)^k, (1+|x|^2)^k, the discrete counterpart of the sharp-Garding
uniformity that drives the energy estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .grid import (
    Grid,
    GridFunction,
    WeightOperatorSpec,
    gaussian,
    hermite_gaussian,
    l2_inner,
    l2_norm,
    random_bandlimited,
    weight_apply,
)
from .symbols import SampledSymbol, Symbol

__all__ = [
    "OperatorMatrix",
    "weyl_quantize",
    "weyl_quantize_sampled",
    "weyl_symbol",
    "garding_constant",
    "default_form_battery",
]


@dataclass
class OperatorMatrix:
    """Dense operator on flattened grid samples (n^d x n^d)."""

    grid: Grid
    entries: np.ndarray
    hermitian_deviation: Optional[float] = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        N = self.grid.size
        if self.entries.shape != (N, N):
            raise ValueError(f"entries must be {N}x{N}")

    def apply(self, f: GridFunction) -> GridFunction:
        out = self.entries @ f.values.reshape(-1)
        return GridFunction(self.grid, out.reshape(self.grid.shape))

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries @ other.entries)


def _midpoint_axis(grid: Grid) -> np.ndarray:
    """The half-step circle -L/2 + c*h/2, c = 0..2n-1, carrying all torus
    midpoints (x_j + x_l)/2 of sample pairs."""
    return -grid.L / 2 + (grid.h / 2) * np.arange(2 * grid.n)


def _symbol_on_middle_grid(sym, t: float, grid: Grid) -> np.ndarray:
    """Symbol values on (half-step circle)^d x (frequency grid)^d."""
    mids = _midpoint_axis(grid)
    xi = grid.xi_axis()
    d = grid.d
    axes = np.meshgrid(*([mids] * d + [xi] * d), indexing="ij")
    X = np.stack(axes[:d], axis=-1)
    XI = np.stack(axes[d:], axis=-1)
    return np.asarray(sym(t, X, XI))


def _assemble_from_offset_combs(G: np.ndarray, grid: Grid) -> np.ndarray:
    """Assemble the dense matrix from per-midpoint offset combs.

    G[c_1..c_d, rho_1..rho_d] is the inverse frequency DFT of the symbol at
    half-step midpoint index c per axis.  Entry (j, l) takes the comb at the
    torus midpoint (2l + nu) mod 2n with nu = j - l the signed minimal offset,
    so conjugation by periodic shifts is exact relabeling.
    """
    n, d = grid.n, grid.d
    nus = np.arange(-n // 2, n // 2)
    ls = np.arange(n)
    if d == 1:
        NU, Lx = np.meshgrid(nus, ls, indexing="ij")
        base = (2 * Lx + NU) % (2 * n)
        # the Nyquist offset class nu = -n/2 has two antipodal torus
        # midpoints; average them to keep real symbols exactly Hermitian
        alt = np.where(NU == -n // 2, (base + n) % (2 * n), base)
        A = np.empty((n, n), dtype=np.complex128)
        A[(Lx + NU) % n, Lx] = 0.5 * (G[base, NU % n] + G[alt, NU % n])
        return A
    NU1, NU2, L1, L2 = np.meshgrid(nus, nus, ls, ls, indexing="ij")
    base1 = (2 * L1 + NU1) % (2 * n)
    base2 = (2 * L2 + NU2) % (2 * n)
    alt1 = np.where(NU1 == -n // 2, (base1 + n) % (2 * n), base1)
    alt2 = np.where(NU2 == -n // 2, (base2 + n) % (2 * n), base2)
    A = np.empty((n * n, n * n), dtype=np.complex128)
    rows = ((L1 + NU1) % n) * n + (L2 + NU2) % n
    cols = L1 * n + L2
    r1, r2 = NU1 % n, NU2 % n
    A[rows, cols] = 0.25 * (
        G[base1, base2, r1, r2]
        + G[alt1, base2, r1, r2]
        + G[base1, alt2, r1, r2]
        + G[alt1, alt2, r1, r2]
    )
    return A


def weyl_quantize(sym: Symbol, grid: Grid, t: float = 0.0,
                  symmetrize: str = "auto") -> OperatorMatrix:
    """Quantize a symbol evaluator at time t to a dense matrix.

    symmetrize: 'auto' hermitizes when the sampled symbol is real (deviation
    recorded), 'never' keeps the raw matrix, 'always' forces hermitization.
    """
    vals = _symbol_on_middle_grid(sym, t, grid)
    is_real = float(np.max(np.abs(vals.imag))) < 1e-12 * max(1.0, np.max(np.abs(vals)))
    d = grid.d
    # per midpoint: inverse DFT of the symbol over the xi axes
    G = np.fft.ifftn(np.fft.ifftshift(vals, axes=tuple(range(d, 2 * d))),
                     axes=tuple(range(d, 2 * d)))
    A = _assemble_from_offset_combs(G, grid)
    deviation = None
    if is_real or symmetrize == "always":
        nrm = np.linalg.norm(A)
        deviation = float(np.linalg.norm(A - A.conj().T) / nrm) if nrm > 0 else 0.0
        if symmetrize != "never":
            A = 0.5 * (A + A.conj().T)
    return OperatorMatrix(grid, A, hermitian_deviation=deviation)


def _half_step_shift(values: np.ndarray, axis: int, direction: float) -> np.ndarray:
    """Spectral shift of periodic samples by direction*h/2 along an axis."""
    n = values.shape[axis]
    k = np.fft.fftfreq(n) * n
    phase = np.exp(2j * np.pi * k * (direction * 0.5) / n)
    shape = [1] * values.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(values, axis=axis) * phase.reshape(shape), axis=axis)


def weyl_quantize_sampled(values: np.ndarray, grid: Grid) -> OperatorMatrix:
    """Quantize a symbol known on the phase-space sample grid (d=1).

    Midpoint columns (odd anti-diagonals) are filled by exact spectral
    interpolation in x, so this is the inverse of weyl_symbol on its range.
    """
    if grid.d != 1:
        raise NotImplementedError("sampled quantization implemented for d=1")
    n = grid.n
    vals = np.asarray(values, dtype=np.complex128)
    if vals.shape != (n, n):
        raise ValueError("values must be (n, n), x index first")
    half = _half_step_shift(vals, axis=0, direction=+1.0)  # at x_m + h/2
    mid_vals = np.empty((2 * n, n), dtype=np.complex128)
    mid_vals[0::2] = vals
    mid_vals[1::2] = half
    G = np.fft.ifft(np.fft.ifftshift(mid_vals, axes=1), axis=1)
    return OperatorMatrix(grid, _assemble_from_offset_combs(G, grid))


def weyl_symbol(op: OperatorMatrix) -> SampledSymbol:
    """Inverse Weyl transform of a dense operator (d=1).

    p(x, xi) = int e^{-i y xi} K(x + y/2, x - y/2) dy with kernel
    K = entries / h, the offset y running over both parity classes of the
    periodic kernel: odd offsets live on half-step midpoints and are brought
    back to the sample grid by an exact spectral half-step shift.  Exact for
    multipliers and translations; exact on band-limited symbols.
    """
    grid = op.grid
    if grid.d != 1:
        raise NotImplementedError("symbol extraction implemented for d=1")
    n = grid.n
    A = op.entries
    m = np.arange(n)[:, None]
    # one torus cover of kernel offsets y = nu*h, nu in [-n/2, n/2)
    rho = np.arange(-n // 4, n // 4)[None, :]
    even = A[(m + rho) % n, (m - rho) % n]          # offset 2*rho, midpoint x_m
    odd = A[(m + rho + 1) % n, (m - rho) % n]       # offset 2*rho+1, midpoint x_m + h/2
    odd = _half_step_shift(odd, axis=0, direction=-1.0)
    slices = np.zeros((n, n), dtype=np.complex128)  # indexed by nu mod n
    nu_even = (2 * rho[0]) % n
    nu_odd = (2 * rho[0] + 1) % n
    slices[:, nu_even] = even
    slices[:, nu_odd] = odd
    p = np.fft.fftshift(np.fft.fft(slices, axis=1), axes=1)
    return SampledSymbol(grid, p, name="extracted")


# ---------------------------------------------------------------------------
# quadratic-form lower bounds


def default_form_battery(grid: Grid, seed: int = 2023) -> List[GridFunction]:
    """Frozen 12-member battery: Gaussians at 3 widths x 2 centers, 2 modulated
    Gaussians, 2 Hermite functions, 2 random band-limited functions."""
    rng = np.random.default_rng(seed)
    battery = []
    for width in (0.5, 1.0, 2.0):
        for center in (0.0, grid.L / 8):
            battery.append(gaussian(grid, center=center, width=width))
    for xi0 in (2.0, 5.0):
        battery.append(gaussian(grid, modulation=xi0))
    for k in (1, 2):
        battery.append(hermite_gaussian(grid, k))
    for _ in range(2):
        battery.append(random_bandlimited(grid, rng, max_freq=5.0, envelope_width=grid.L / 10))
    return battery


def garding_constant(
    a_sym: Symbol,
    b_sym: Symbol,
    grid: Grid,
    k: int,
    t: float = 0.0,
    battery: Optional[List[GridFunction]] = None,
    return_details: bool = False,
):
    """Worst lower-bound constant of the generator over the battery.

    C_est = max over battery members u and weights W in {(1-Lap)^k, (1+|x|^2)^k}
    of -Re<W L u, W u> / ||W u||^2 with L = a^w + i b^w.  The uniform-bound
    claim under test is that C_est stays bounded by a constant depending only
    on k, the lower bound of a, and finitely many symbol seminorms; the value
    is reported for regression against frozen baselines.
    """
    if battery is None:
        battery = default_form_battery(grid)
    if not battery:
        raise ValueError("battery must be nonempty")
    A = weyl_quantize(a_sym, grid, t).entries
    B = weyl_quantize(b_sym, grid, t).entries
    Lmat = A + 1j * B
    details = []
    worst = -np.inf
    for idx, u in enumerate(battery):
        nu = l2_norm(u)
        if nu < 1e-14:
            raise ValueError(f"battery member {idx} has zero norm")
        Lu = GridFunction(grid, (Lmat @ u.values.reshape(-1)).reshape(grid.shape))
        for side in ("frequency", "space"):
            spec = WeightOperatorSpec(k, side)
            wu = weight_apply(u, spec)
            wLu = weight_apply(Lu, spec)
            denom = l2_norm(wu) ** 2
            val = -l2_inner(wLu, wu).real / denom
            details.append((idx, side, val))
            worst = max(worst, val)
    if return_details:
        return worst, details
    return worst
