"""Global wave-front estimation from conic STFT decay, and the related
non-characteristic symbol test.

A direction on the phase-space circle belongs to the estimate when |V_g f|
fails to decay super-polynomially along its cone: the fitted exponent of
log |V| against log(1 + r) stays below a threshold (default 4, frozen with
the radial range [r_min, L/4] as desk-scale regression constants).  The
empty estimate characterizes rapid decay with all derivatives; the
propagator-containment check asserts that evolving never enlarges the
estimate beyond one angular cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .grid import Grid, GridFunction
from .symbols import phase_samples
from .tfa import PhasePoint, default_window, stft_point

__all__ = [
    "Cone",
    "WavefrontEstimate",
    "noncharacteristic_test",
    "estimate_wavefront",
    "pseudolocality_check",
]


@dataclass(frozen=True)
class Cone:
    """Conic neighborhood of z0: directions within eps of z0/|z0|, radii > 1/eps."""

    z0: PhasePoint
    eps: float

    def __post_init__(self):
        if self.z0.norm() <= 0:
            raise ValueError("cone apex direction must be nonzero")
        if not (0 < self.eps < 1):
            raise ValueError("need 0 < eps < 1")


def noncharacteristic_test(
    sym,
    grid: Grid,
    m: float,
    z0: PhasePoint,
    eps: float,
    c: float = 0.01,
    t: float = 0.0,
) -> Tuple[bool, float]:
    """Check |sym| >= c (1+|x|+|xi|)^m on the cone's phase-space samples.

    Returns (ok, margin) with margin the minimal ratio |sym|/(1+|x|+|xi|)^m
    over the sampled cone; ok means margin >= c.
    """
    cone = Cone(z0, eps)
    if grid.d != 1:
        raise NotImplementedError("wavefront analysis implemented for d=1")
    x0, xi0 = z0.as_arrays()
    u0 = np.array([x0[0], xi0[0]])
    u0 = u0 / np.linalg.norm(u0)
    X, XI = np.meshgrid(grid.x_axis(), grid.xi_axis(), indexing="ij")
    R = np.sqrt(X**2 + XI**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        DX = np.where(R > 0, X / R, 0.0)
        DXI = np.where(R > 0, XI / R, 0.0)
    in_cone = (
        (R > 1.0 / cone.eps)
        & (np.sqrt((DX - u0[0]) ** 2 + (DXI - u0[1]) ** 2) < cone.eps)
    )
    if not np.any(in_cone):
        raise ValueError("cone misses the sampled box: 1/eps exceeds its radius")
    vals = np.abs(phase_samples(sym, t, grid))
    weight = (1.0 + np.abs(X) + np.abs(XI)) ** m
    margin = float(np.min(vals[in_cone] / weight[in_cone]))
    return margin >= c, margin


@dataclass
class WavefrontEstimate:
    """Per-direction fitted radial decay exponents and membership flags."""

    angles: np.ndarray
    exponents: np.ndarray
    members: np.ndarray
    threshold: float
    r_min: float
    r_max: float

    def member_angles(self) -> np.ndarray:
        return self.angles[self.members]

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.members))


def estimate_wavefront(
    f: GridFunction,
    g: GridFunction = None,
    angular_n: int = 16,
    threshold: float = 4.0,
    r_min: float = 2.0,
    r_max: float = None,
    n_radii: int = 10,
) -> WavefrontEstimate:
    """Flag directions whose conic STFT decay exponent stays below threshold.

    Per direction theta, |V_g f| is maximized over a small angular cone of
    aperture 2/angular_n at each radius in [r_min, r_max] (default L/4; box
    truncation corrupts larger radii) and the decay exponent is the slope of
    -log |V| against log(1 + r).
    """
    grid = f.grid
    if grid.d != 1:
        raise NotImplementedError("wavefront analysis implemented for d=1")
    if angular_n < 16:
        raise ValueError("angular_n must be >= 16")
    if g is None:
        g = default_window(grid)
    if r_max is None:
        r_max = grid.L / 4
    radii = np.linspace(r_min, r_max, n_radii)
    if len(radii) < 3:
        raise ValueError("degenerate fit: fewer than 3 radii")
    eps = 2.0 / angular_n
    angles = 2 * np.pi * np.arange(angular_n) / angular_n
    exponents = np.empty(angular_n)
    floor = 1e-300
    for i, th in enumerate(angles):
        mags = []
        for r in radii:
            best = 0.0
            for dth in (-eps / 2, 0.0, eps / 2):
                # probe points snap x to the sample grid by construction
                x_probe = grid.h * round(r * np.cos(th + dth) / grid.h)
                z = PhasePoint.of(x_probe, r * np.sin(th + dth))
                best = max(best, abs(stft_point(f, g, z)))
            mags.append(max(best, floor))
        x = np.log1p(radii)
        y = np.log(np.array(mags))
        slope = np.polyfit(x, y, 1)[0]
        exponents[i] = -slope
    members = exponents < threshold
    return WavefrontEstimate(angles, exponents, members, threshold, r_min, float(r_max))


def _within_one_cell(est_after: WavefrontEstimate, est_before: WavefrontEstimate) -> Tuple[bool, List[float]]:
    n = len(est_before.angles)
    offenders = []
    before = np.nonzero(est_before.members)[0]
    for idx in np.nonzero(est_after.members)[0]:
        if len(before) == 0:
            offenders.append(float(est_after.angles[idx]))
            continue
        ring = np.minimum((before - idx) % n, (idx - before) % n)
        if ring.min() > 1:
            offenders.append(float(est_after.angles[idx]))
    return len(offenders) == 0, offenders


def pseudolocality_check(
    op,
    f: GridFunction,
    g: GridFunction = None,
    angular_n: int = 16,
    threshold: float = 4.0,
    r_min: float = 2.0,
) -> Tuple[bool, WavefrontEstimate, WavefrontEstimate]:
    """Check the containment: the evolved estimate lies within one angular
    cell of the original (the propagator never enlarges the wave front).

    op is an OperatorMatrix (e.g. a propagator_matrix output).
    """
    est_f = estimate_wavefront(f, g, angular_n, threshold, r_min)
    evolved = op.apply(f)
    est_sf = estimate_wavefront(evolved, g, angular_n, threshold, r_min)
    ok, _ = _within_one_cell(est_sf, est_f)
    return ok, est_f, est_sf
