"""Phase-space shifts, short-time Fourier transform and modulation norms.

The phase-space shift of z = (x, xi) acts as pi(z) f = M_xi T_x f with
T_x f(y) = f(y-x) (periodic) and M_xi f(y) = e^{i xi y} f(y); it is unitary
on the discrete L^2.  The STFT of f with window g is V_g f(z) = <f, pi(z) g>,
anti-linear in the window slot.

Modulation norms are computed two ways: from a uniform frequency
decomposition (box definition) and from lattice samples of the STFT; the
two are equivalent with a constant frozen by the regression suite.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridFunction, dft, idft, l2_norm

__all__ = [
    "PhasePoint",
    "PhaseLattice",
    "PhaseSpaceField",
    "ModulationNormSpec",
    "InvalidWindowError",
    "PhaseSnapWarning",
    "phase_shift",
    "phase_shift_matrix",
    "stft",
    "stft_point",
    "default_window",
    "cubic_bump",
    "modulation_norm_boxes",
    "modulation_norm_stft",
]


class InvalidWindowError(ValueError):
    """The STFT window is zero (or numerically zero)."""


class PhaseSnapWarning(UserWarning):
    """A phase-space coordinate was rounded onto the computational lattice."""


@dataclass(frozen=True)
class PhasePoint:
    """Point z = (x, xi) in phase space; x, xi are length-d vectors."""

    x: tuple
    xi: tuple

    @classmethod
    def of(cls, x, xi) -> "PhasePoint":
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        xia = np.atleast_1d(np.asarray(xi, dtype=float))
        if xa.shape != xia.shape:
            raise ValueError("x and xi must have the same dimension")
        return cls(tuple(xa.tolist()), tuple(xia.tolist()))

    @property
    def d(self) -> int:
        return len(self.x)

    def as_arrays(self):
        return np.asarray(self.x, dtype=float), np.asarray(self.xi, dtype=float)

    def norm(self) -> float:
        xa, xia = self.as_arrays()
        return float(np.sqrt(np.sum(xa**2) + np.sum(xia**2)))


def _snap(value: float, step: float, label: str, tol: float = 1e-9) -> int:
    k = int(round(value / step))
    if abs(value - k * step) > tol:
        warnings.warn(
            f"{label} component {value:g} snapped to {k * step:g} (step {step:g})",
            PhaseSnapWarning,
            stacklevel=3,
        )
    return k


@dataclass(frozen=True)
class PhaseLattice:
    """Separable lattice (i*alpha, j*beta) with |i| <= nx, |j| <= nxi per axis.

    alpha is a positive multiple of the sample spacing h and beta of the
    frequency spacing 2*pi/L, so every lattice point is realizable exactly;
    the requested (pre-snap) steps are retained for reporting.
    """

    grid: Grid
    alpha: float
    beta: float
    nx: int
    nxi: int
    alpha_requested: float = None
    beta_requested: float = None

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("lattice steps must be positive")
        if self.alpha * self.beta > 2 * np.pi + 1e-12:
            raise ValueError("lattice density alpha*beta must be <= 2*pi")
        if self.nx < 0 or self.nxi < 0:
            raise ValueError("lattice extents must be nonnegative")
        if self.alpha * self.nx >= self.grid.L / 2 + 1e-12:
            raise ValueError("spatial lattice extent exceeds the box")
        if self.beta * self.nxi >= self.grid.xi_max + 1e-12:
            raise ValueError("frequency lattice extent exceeds the grid range")

    @classmethod
    def build(
        cls,
        grid: Grid,
        alpha: float = 0.5,
        beta: float = 0.5,
        x_radius: float = None,
        xi_radius: float = None,
    ) -> "PhaseLattice":
        """Snap steps to grid-commensurate values and size extents to the radii.

        Defaults cover the full box and frequency range (norm evaluation);
        pass radii to restrict (Gabor matrices, shift sets).
        """
        a_steps = max(1, int(round(alpha / grid.h)))
        b_steps = max(1, int(round(beta / grid.dxi)))
        a = a_steps * grid.h
        b = b_steps * grid.dxi
        if x_radius is None:
            x_radius = grid.L / 2
        if xi_radius is None:
            xi_radius = grid.xi_max
        nx = min(int((grid.L / 2 - grid.h / 2) / a), int(x_radius / a + 1e-12))
        nxi = min(int((grid.xi_max - grid.dxi / 2) / b), int(xi_radius / b + 1e-12))
        return cls(grid, a, b, nx, nxi, alpha_requested=alpha, beta_requested=beta)

    @property
    def x_step_samples(self) -> int:
        return int(round(self.alpha / self.grid.h))

    @property
    def xi_step_bins(self) -> int:
        return int(round(self.beta / self.grid.dxi))

    def x_values(self) -> np.ndarray:
        return self.alpha * np.arange(-self.nx, self.nx + 1)

    def xi_values(self) -> np.ndarray:
        return self.beta * np.arange(-self.nxi, self.nxi + 1)

    @property
    def x_count(self) -> int:
        return (2 * self.nx + 1) ** self.grid.d

    @property
    def xi_count(self) -> int:
        return (2 * self.nxi + 1) ** self.grid.d

    @property
    def size(self) -> int:
        return self.x_count * self.xi_count

    def x_tuples(self):
        """All spatial lattice vectors, row-major over axes."""
        vals = self.x_values()
        return list(itertools.product(vals, repeat=self.grid.d))

    def xi_tuples(self):
        vals = self.xi_values()
        return list(itertools.product(vals, repeat=self.grid.d))

    def points(self):
        """Flattened phase points, x-major then xi, matching field flattening."""
        return [
            PhasePoint.of(x, xi) for x in self.x_tuples() for xi in self.xi_tuples()
        ]

    def points_array(self) -> np.ndarray:
        """(size, 2d) array of [x, xi] coordinates in flattened order."""
        xs = np.array(self.x_tuples(), dtype=float)
        xis = np.array(self.xi_tuples(), dtype=float)
        out = np.empty((self.size, 2 * self.grid.d))
        idx = 0
        for x in xs:
            for xi in xis:
                out[idx, : self.grid.d] = x
                out[idx, self.grid.d :] = xi
                idx += 1
        return out


@dataclass
class PhaseSpaceField:
    """Values indexed by lattice points (kind='field', shape (x_count, xi_count))
    or by pairs of lattice points (kind='matrix', shape (size, size))."""

    lattice: PhaseLattice
    values: np.ndarray
    kind: str = "field"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        lat = self.lattice
        if self.kind == "field":
            expected = (lat.x_count, lat.xi_count)
        elif self.kind == "matrix":
            expected = (lat.size, lat.size)
        else:
            raise ValueError("kind must be 'field' or 'matrix'")
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape}, expected {expected}")

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1) if self.kind == "field" else self.values


# ---------------------------------------------------------------------------
# phase shifts


def _shift_steps(grid: Grid, z: PhasePoint):
    x, xi = z.as_arrays()
    steps = tuple(_snap(xc, grid.h, "spatial shift") for xc in x)
    return steps, xi


def phase_shift(f: GridFunction, z: PhasePoint) -> GridFunction:
    """pi(z) f = e^{i xi y} f(y - x), x rounded to the sample grid (warned)."""
    g = f.grid
    steps, xi = _shift_steps(g, z)
    vals = np.roll(f.values, steps, axis=tuple(range(g.d)))
    phase = np.exp(1j * np.sum(g.x_mesh() * xi, axis=-1))
    return GridFunction(g, phase * vals)


def phase_shift_matrix(grid: Grid, z: PhasePoint) -> np.ndarray:
    """Dense matrix of pi(z) acting on flattened samples."""
    steps, xi = _shift_steps(grid, z)
    eye = np.eye(grid.n)
    mats = [np.roll(eye, s, axis=0) for s in steps]
    M = mats[0]
    for m in mats[1:]:
        M = np.kron(M, m)
    phase = np.exp(1j * np.sum(grid.x_mesh() * xi, axis=-1)).reshape(-1)
    return phase[:, None] * M


# ---------------------------------------------------------------------------
# STFT


def default_window(grid: Grid) -> GridFunction:
    """L^2-normalized Gaussian e^{-|y|^2/2}."""
    from .grid import gaussian

    return gaussian(grid, normalize=True)


def _check_window(g: GridFunction):
    if l2_norm(g) < 1e-14:
        raise InvalidWindowError("window must be nonzero")


def stft(f: GridFunction, g: GridFunction, lattice: PhaseLattice) -> PhaseSpaceField:
    """V_g f(z) = <f, pi(z) g> on the lattice.

    One DFT per spatial shift: V(x_i, .) is the grid transform of
    f * conj(T_{x_i} g), read off at the lattice frequency bins.
    """
    _check_window(g)
    gr = f.grid
    step = lattice.x_step_samples
    bstep = lattice.xi_step_bins
    centre = gr.n // 2
    xi_idx = centre + bstep * np.arange(-lattice.nxi, lattice.nxi + 1)
    xi_sel = list(itertools.product(xi_idx, repeat=gr.d))

    out = np.empty((lattice.x_count, lattice.xi_count), dtype=np.complex128)
    x_shift_indices = list(
        itertools.product(range(-lattice.nx, lattice.nx + 1), repeat=gr.d)
    )
    for row, ishift in enumerate(x_shift_indices):
        shifts = tuple(step * i for i in ishift)
        win = np.conj(np.roll(g.values, shifts, axis=tuple(range(gr.d))))
        W = dft(GridFunction(gr, f.values * win)).values
        out[row, :] = np.array([W[sel] for sel in xi_sel])
    return PhaseSpaceField(lattice, out, kind="field")


def stft_point(f: GridFunction, g: GridFunction, z: PhasePoint) -> complex:
    """V_g f(z) at a single phase point (x snapped; xi arbitrary)."""
    _check_window(g)
    gr = f.grid
    steps, xi = _shift_steps(gr, z)
    win = np.conj(np.roll(g.values, steps, axis=tuple(range(gr.d))))
    phase = np.exp(-1j * np.sum(gr.x_mesh() * xi, axis=-1))
    return complex(gr.h**gr.d * np.sum(f.values * win * phase))


# ---------------------------------------------------------------------------
# modulation norms


@dataclass(frozen=True)
class ModulationNormSpec:
    """Mixed-norm exponents: inner L^p (space), outer l^q/L^q (frequency), weight s."""

    p: float = 2.0
    q: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("p, q must lie in [1, inf]")
        if self.s < 0:
            raise ValueError("weight exponent s must be >= 0")


def cubic_bump(u: np.ndarray) -> np.ndarray:
    """Piecewise-cubic bump on [-1, 1] whose integer translates sum to 1 exactly."""
    a = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(a)
    inside = a < 1.0
    t = a[inside]
    out[inside] = 1.0 - (3.0 * t**2 - 2.0 * t**3)
    return out


def _sequence_norm(values: np.ndarray, q: float, weights: np.ndarray = None) -> float:
    v = np.asarray(values, dtype=float)
    if weights is not None:
        v = v * weights
    if q == np.inf:
        return float(np.max(v)) if v.size else 0.0
    return float(np.sum(v**q) ** (1.0 / q))


def modulation_norm_boxes(f: GridFunction, spec: ModulationNormSpec) -> float:
    """(sum_k <k>^{sq} ||Box_k f||_p^q)^{1/q} with smoothed unit-cube cutoffs.

    Box_k is the Fourier multiplier by the product cubic bump centred at the
    integer vector k; the bumps form an exact partition of unity, so
    sum_k Box_k f = f.  Sums/sup replace integrals when p or q is infinite.
    """
    from .grid import lp_norm

    g = f.grid
    F = dft(f)
    xi = g.xi_axis()
    kmin = int(np.floor(xi[0])) - 1
    kmax = int(np.ceil(xi[-1])) + 1
    ks = np.arange(kmin, kmax + 1)
    # per-axis bump factors evaluated once: (n_k, n)
    factors = cubic_bump(xi[None, :] - ks[:, None])
    nonzero = np.nonzero(np.any(factors > 0, axis=1))[0]

    piece_norms = []
    weights = []
    for kidx in itertools.product(nonzero, repeat=g.d):
        mult = np.ones(g.shape)
        for ax, ki in enumerate(kidx):
            shape = [1] * g.d
            shape[ax] = g.n
            mult = mult * factors[ki].reshape(shape)
        if not np.any(mult > 0):
            continue
        piece = idft(GridFunction(g, F.values * mult))
        piece_norms.append(lp_norm(piece, spec.p))
        kvec = ks[list(kidx)]
        weights.append((1.0 + np.sum(kvec.astype(float) ** 2)) ** (spec.s / 2.0))
    return _sequence_norm(np.array(piece_norms), spec.q, np.array(weights))


def modulation_norm_stft(
    f: GridFunction,
    spec: ModulationNormSpec,
    g: GridFunction = None,
    lattice: PhaseLattice = None,
) -> float:
    """Mixed norm of <xi>^s V_g f over the lattice.

    Inner L^p in x with Riemann weight alpha^d, outer L^q in xi with weight
    beta^d; max replaces the sum when an exponent is infinite.  Window
    defaults to the normalized Gaussian, lattice to full phase-space cover.
    """
    gr = f.grid
    if g is None:
        g = default_window(gr)
    if lattice is None:
        lattice = PhaseLattice.build(gr)
    V = np.abs(stft(f, g, lattice).values)  # (x_count, xi_count)
    d = gr.d
    if spec.p == np.inf:
        inner = np.max(V, axis=0)
    else:
        inner = (lattice.alpha**d * np.sum(V**spec.p, axis=0)) ** (1.0 / spec.p)
    xi_pts = np.array(lattice.xi_tuples(), dtype=float)
    w = (1.0 + np.sum(xi_pts**2, axis=1)) ** (spec.s / 2.0)
    if spec.q == np.inf:
        return float(np.max(w * inner))
    return float((lattice.beta**d * np.sum((w * inner) ** spec.q)) ** (1.0 / spec.q))
