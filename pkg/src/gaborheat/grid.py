"""Periodic sampled functions, discrete Fourier transform and weighted norms.

The computational domain is the box [-L/2, L/2)^d sampled at n points per
axis (n a power of two).  The Fourier transform follows the convention

    f^(xi) = integral e^{-i x xi} f(x) dx,

approximated by the rectangle rule h^d * DFT on the symmetric frequency
grid xi_k = 2*pi*k/L, k = -n/2 .. n/2-1 (Nyquist row on the negative
side, so real symbols later quantize to Hermitian matrices).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "WeightOperatorSpec",
    "SupportWarning",
    "dft",
    "idft",
    "spectral_derivative",
    "weight_apply",
    "sobolev_q_norm",
    "l2_norm",
    "l2_inner",
    "lp_norm",
    "numerically_supported",
    "gaussian",
    "hermite_gaussian",
    "constant",
    "random_bandlimited",
]


class SupportWarning(UserWarning):
    """A function is not numerically supported away from the box boundary."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)^d.

    d : dimension (1 or 2)
    L : box side length
    n : samples per axis, a power of two >= 8
    """

    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if not self.L > 0:
            raise ValueError("box length must be positive")
        if self.n < 8 or not _is_power_of_two(self.n):
            raise ValueError("n must be a power of two >= 8")

    @property
    def h(self) -> float:
        """Sample spacing L/n."""
        return self.L / self.n

    @property
    def dxi(self) -> float:
        """Frequency spacing 2*pi/L."""
        return 2.0 * np.pi / self.L

    @property
    def xi_max(self) -> float:
        """Largest represented |frequency|, pi*n/L."""
        return np.pi * self.n / self.L

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    def x_axis(self) -> np.ndarray:
        """Samples -L/2 + j*h, j = 0..n-1, along one axis."""
        return -self.L / 2 + self.h * np.arange(self.n)

    def xi_axis(self) -> np.ndarray:
        """Symmetric frequency samples 2*pi*k/L, k = -n/2..n/2-1."""
        return self.dxi * np.arange(-self.n // 2, self.n // 2)

    def x_mesh(self) -> np.ndarray:
        """Spatial mesh with a trailing component axis, shape (n,)*d + (d,)."""
        axes = np.meshgrid(*([self.x_axis()] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def xi_mesh(self) -> np.ndarray:
        axes = np.meshgrid(*([self.xi_axis()] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def phase_mesh(self):
        """(X, XI) broadcastable over the full phase-space sample set.

        X has shape (n,)*d + (1,)*d + (d,), XI has shape (1,)*d + (n,)*d + (d,);
        together they enumerate all (x_j, xi_k) pairs.
        """
        X = self.x_mesh().reshape(self.shape + (1,) * self.d + (self.d,))
        XI = self.xi_mesh().reshape((1,) * self.d + self.shape + (self.d,))
        return X, XI

    def _phase_factors(self) -> np.ndarray:
        """(-1)^k factors (per axis, outer product) linking FFT to the symmetric grid."""
        k = np.arange(-self.n // 2, self.n // 2)
        s = np.where(k % 2 == 0, 1.0, -1.0)
        out = s
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, s)
        return out


@dataclass
class GridFunction:
    """Complex samples of a function on a Grid (shape (n,)*d)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            if self.values.size == self.grid.size:
                self.values = self.values.reshape(self.grid.shape)
            else:
                raise ValueError(
                    f"values shape {self.values.shape} incompatible with grid {self.grid.shape}"
                )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, np.conj(self.values))


@dataclass(frozen=True)
class WeightOperatorSpec:
    """Weight operator (1-Laplacian)^k (side='frequency') or (1+|x|^2)^k (side='space')."""

    k: int
    side: str = "frequency"

    def __post_init__(self):
        if abs(self.k) > 8:
            raise ValueError("weight order |k| must be <= 8")
        if self.side not in ("frequency", "space"):
            raise ValueError("side must be 'frequency' or 'space'")


# ---------------------------------------------------------------------------
# transforms


def dft(f: GridFunction) -> GridFunction:
    """Forward transform: rectangle-rule samples of f^ on the symmetric grid.

    Exact inverse of idft to machine precision.
    """
    g = f.grid
    F = np.fft.fftshift(np.fft.fftn(f.values))
    F = F * (g.h**g.d) * g._phase_factors()
    return GridFunction(g, F)


def idft(F: GridFunction) -> GridFunction:
    """Inverse of dft (exact round trip)."""
    g = F.grid
    vals = np.fft.ifftn(np.fft.ifftshift(F.values * g._phase_factors() / (g.h**g.d)))
    return GridFunction(g, vals)


def _as_multi_index(alpha, d: int) -> tuple:
    if np.isscalar(alpha):
        alpha = (int(alpha),) * 1 if d == 1 else (int(alpha),) * d
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha} for dimension {d}")
    return alpha


def spectral_derivative(f: GridFunction, alpha) -> GridFunction:
    """d^alpha f via the multiplier (i*xi)^alpha; |alpha| <= 16."""
    g = f.grid
    alpha = _as_multi_index(alpha, g.d)
    if sum(alpha) > 16:
        raise ValueError("derivative order |alpha| must be <= 16")
    F = dft(f)
    XI = g.xi_mesh()
    mult = np.ones(g.shape, dtype=np.complex128)
    for ax, a in enumerate(alpha):
        if a:
            mult = mult * (1j * XI[..., ax]) ** a
    return idft(GridFunction(g, F.values * mult))


def weight_apply(f: GridFunction, spec: WeightOperatorSpec) -> GridFunction:
    """Apply (1-Laplacian)^k (frequency side) or (1+|x|^2)^k (space side)."""
    g = f.grid
    if spec.side == "frequency":
        F = dft(f)
        m = (1.0 + np.sum(g.xi_mesh() ** 2, axis=-1)) ** spec.k
        return idft(GridFunction(g, F.values * m))
    m = (1.0 + np.sum(g.x_mesh() ** 2, axis=-1)) ** spec.k
    return GridFunction(g, f.values * m)


# ---------------------------------------------------------------------------
# norms


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(f.grid.h**f.grid.d * np.sum(np.abs(f.values) ** 2)))


def l2_inner(f: GridFunction, g: GridFunction) -> complex:
    """Discrete L^2 pairing, anti-linear in the second argument."""
    return complex(f.grid.h**f.grid.d * np.sum(f.values * np.conj(g.values)))


def lp_norm(f: GridFunction, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError("p must lie in [1, inf]")
    return float((f.grid.h**f.grid.d * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def sobolev_q_norm(f: GridFunction, k: int) -> float:
    """Weighted Sobolev norm (|| (1-Lap)^k f ||^2 + || (1+|x|^2)^k f ||^2)^(1/2).

    Combines H^{2k} regularity of f and of f^ (the latter as the weighted
    space term, by Parseval).  Normalization: k = 0 returns sqrt(2)*||f||_L2
    exactly; this fixed Parseval constant is asserted in the test suite.
    """
    if k < 0:
        raise ValueError("negative k (duality) is out of scope")
    wf = weight_apply(f, WeightOperatorSpec(k, "frequency"))
    wx = weight_apply(f, WeightOperatorSpec(k, "space"))
    return float(np.sqrt(l2_norm(wf) ** 2 + l2_norm(wx) ** 2))


# ---------------------------------------------------------------------------
# support checking


def numerically_supported(f: GridFunction, tol: float = 1e-12, warn: bool = True) -> bool:
    """True when |f| < tol within distance L/8 of the box boundary.

    The periodic box stands in for the real line; this check controls the
    aliasing the truncation would otherwise hide.  Violations warn.
    """
    g = f.grid
    margin = g.L / 8.0
    x = np.abs(g.x_mesh())  # (n,)*d + (d,)
    near = np.any(x >= g.L / 2.0 - margin, axis=-1)
    ok = bool(np.all(np.abs(f.values)[near] < tol))
    if not ok and warn:
        worst = float(np.max(np.abs(f.values)[near]))
        warnings.warn(
            f"function not numerically supported: |f| reaches {worst:.3e} near the boundary",
            SupportWarning,
            stacklevel=2,
        )
    return ok


# ---------------------------------------------------------------------------
# standard test functions


def constant(grid: Grid, value: complex = 1.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.shape, value, dtype=np.complex128))


def gaussian(
    grid: Grid,
    center=0.0,
    width: float = 1.0,
    modulation=0.0,
    normalize: bool = False,
) -> GridFunction:
    """exp(-|x-c|^2/(2 w^2)) * exp(i xi0.x), optionally L^2-normalized."""
    x = grid.x_mesh()
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    xi0 = np.broadcast_to(np.asarray(modulation, dtype=float), (grid.d,))
    r2 = np.sum((x - c) ** 2, axis=-1)
    vals = np.exp(-r2 / (2.0 * width**2)) * np.exp(1j * np.sum(x * xi0, axis=-1))
    f = GridFunction(grid, vals)
    if normalize:
        f = f * (1.0 / l2_norm(f))
    return f


def hermite_gaussian(grid: Grid, k: int = 1) -> GridFunction:
    """He_k(x) exp(-x^2/2) along the first axis (probabilists' Hermite)."""
    x = grid.x_mesh()[..., 0]
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    he = np.polynomial.hermite_e.hermeval(x, coeffs)
    envelope = np.exp(-np.sum(grid.x_mesh() ** 2, axis=-1) / 2.0)
    return GridFunction(grid, he * envelope)


def random_bandlimited(
    grid: Grid, rng: np.random.Generator, max_freq: float = 5.0, envelope_width=None
) -> GridFunction:
    """Random spectrum supported in |xi| <= max_freq, times a wide Gaussian envelope.

    The envelope (default width L/8) keeps the sample numerically supported.
    """
    XI = grid.xi_mesh()
    mask = np.sum(XI**2, axis=-1) <= max_freq**2
    spec = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * mask
    f = idft(GridFunction(grid, spec))
    w = envelope_width if envelope_width is not None else grid.L / 8.0
    env = np.exp(-np.sum(grid.x_mesh() ** 2, axis=-1) / (2.0 * w**2))
    return GridFunction(grid, f.values * env)
