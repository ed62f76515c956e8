"""Acceptance suite: one test per acceptance criterion, at the stated
tolerances, printing one PASS/FAIL line each (run with -s to stream them).

Desk scale throughout: d=1, L=40, n=512 unless a criterion says otherwise.
"""

import numpy as np
import pytest
import sympy as sp

from gaborheat.grid import (
    Grid,
    GridFunction,
    constant,
    gaussian,
    l2_norm,
    spectral_derivative,
)
from gaborheat.propagator import (
    EvolutionProblem,
    analytic_energy,
    analytic_stability,
    decay_fit,
    energy_uniformity,
    extract_symbol,
    gabor_matrix,
    gabor_matrix_operator,
    propagator_matrix,
    solve_linear,
)
from gaborheat.semilinear import (
    Nonlinearity,
    contro1_check,
    contro2_check,
    lipschitz_check,
    picard_solve,
)
from gaborheat.symbols import Symbol, named_symbol, seminorm_estimate
from gaborheat.tfa import (
    ModulationNormSpec,
    PhaseLattice,
    PhasePoint,
    modulation_norm_boxes,
    modulation_norm_stft,
    stft,
)
from gaborheat.wavefront import estimate_wavefront, pseudolocality_check
from gaborheat.weyl import OperatorMatrix, garding_constant, weyl_quantize

from test_tfa import EQUIVALENCE_CONSTANT, norm_battery

ZERO = named_symbol("zero")
FIT_ANNULUS = dict(r_min=2.0, r_max=6.0)


def check(name: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    assert ok, f"{name}{suffix}"


@pytest.fixture(scope="module")
def grid():
    return Grid(1, 40.0, 512)


@pytest.fixture(scope="module")
def window(grid):
    return gaussian(grid, normalize=True)


@pytest.fixture(scope="module")
def heat(grid):
    return EvolutionProblem(named_symbol("heat"), ZERO, grid, T=0.5, dt=0.01)


@pytest.fixture(scope="module")
def heat_propagator_01(heat):
    return propagator_matrix(heat, 0.0, 0.1)


@pytest.fixture(scope="module")
def decay_lattice(grid):
    return PhaseLattice.build(grid, x_radius=6.0, xi_radius=6.0)


def test_quantization_oracles(grid):
    one = Symbol(lambda t, x, xi: np.ones(np.broadcast_shapes(x.shape, xi.shape)[:-1]))
    ident_err = np.max(np.abs(weyl_quantize(one, grid).entries - np.eye(grid.n)))
    check("quantize: constant symbol gives the identity (1e-10)", ident_err < 1e-10,
          f"err={ident_err:.2e}")

    op = weyl_quantize(named_symbol("drift"), grid)
    rng = np.random.default_rng(11)
    x = grid.x_mesh()[..., 0]
    f = GridFunction(grid, rng.standard_normal(grid.shape) * np.exp(-(x**2) / 16))
    lhs = op.apply(f).values
    rhs = -1j * spectral_derivative(f, 1).values
    d_err = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
    check("quantize: frequency symbol matches the spectral derivative (1e-8)",
          d_err < 1e-8, f"err={d_err:.2e}")

    dev = weyl_quantize(named_symbol("degenerate_diffusion"), grid).hermitian_deviation
    check("quantize: real symbols give Hermitian matrices (1e-10)", dev < 1e-10,
          f"deviation={dev:.2e}")


def test_gaussian_stft_law(grid):
    g = gaussian(grid)
    lat = PhaseLattice.build(grid, x_radius=6.0, xi_radius=6.0)
    V = stft(g, g, lat)
    pts = lat.points_array()
    exact = np.sqrt(np.pi) * np.exp(-np.sum(pts**2, axis=1) / 4.0)
    err = np.max(np.abs(np.abs(V.flat()) - exact))
    check("STFT: Gaussian autocorrelation law sqrt(pi) e^{-|z|^2/4} (1e-6)",
          err < 1e-6, f"err={err:.2e}")


def test_norm_equivalence(grid):
    battery = norm_battery(grid)
    C = EQUIVALENCE_CONSTANT
    worst_lo, worst_hi = np.inf, 0.0
    for spec in (ModulationNormSpec(2, 2, 0.0), ModulationNormSpec(np.inf, 1, 0.0)):
        for f in battery:
            r = modulation_norm_stft(f, spec) / modulation_norm_boxes(f, spec)
            worst_lo, worst_hi = min(worst_lo, r), max(worst_hi, r)
    check(f"norms: boxes vs STFT within the frozen constant C={C}",
          worst_lo >= 1 / C and worst_hi <= C,
          f"ratios in [{worst_lo:.2f}, {worst_hi:.2f}]")

    spec22 = ModulationNormSpec(2, 2, 0.0)
    ratios = [modulation_norm_boxes(f, spec22) / l2_norm(f) for f in battery]
    check("norms: (2,2) box norm vs L2 ratio inside [1/2, 2]",
          min(ratios) >= 0.5 and max(ratios) <= 2.0,
          f"ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")


def test_garding_lower_bounds(grid):
    c_heat = garding_constant(named_symbol("heat"), ZERO, grid, k=0)
    check("energy form: heat diffusion nonnegative (C_est <= 1e-8)",
          c_heat <= 1e-8, f"C_est={c_heat:.2e}")
    c_drift = garding_constant(ZERO, named_symbol("drift"), grid, k=0)
    check("energy form: pure drift skew (C_est <= 1e-8)",
          abs(c_drift) <= 1e-8, f"C_est={c_drift:.2e}")

    a = named_symbol("degenerate_diffusion")
    b = named_symbol("drift")
    stable = True
    detail = []
    for k in (0, 1):
        v_coarse = garding_constant(a, b, Grid(1, 40.0, 256), k=k)
        v_fine = garding_constant(a, b, Grid(1, 40.0, 512), k=k)
        ok = np.isfinite(v_fine) and abs(v_fine - v_coarse) <= 0.1 * max(abs(v_fine), 1e-3)
        stable &= ok
        detail.append(f"k={k}: {v_coarse:.3e}->{v_fine:.3e}")
    check("energy form: degenerate+drift finite and refinement-stable (10%)",
          stable, "; ".join(detail))


def test_linear_solver_oracles(grid, heat):
    u0 = gaussian(grid)
    traj = solve_linear(heat, u0, 0.0, 0.5)
    x = grid.x_mesh()[..., 0]
    exact = 2.0**-0.5 * np.exp(-(x**2) / 4.0)
    e1 = np.max(np.abs(traj.final.values - exact))
    check("solver: heat evolution of a Gaussian (sup 1e-5)", e1 < 1e-5, f"err={e1:.2e}")

    drift = EvolutionProblem(ZERO, named_symbol("drift"), grid, T=0.5, dt=0.01)
    traj2 = solve_linear(drift, u0, 0.0, 0.5)
    e2 = np.max(np.abs(traj2.final.values - np.exp(-((x - 0.5) ** 2) / 2)))
    check("solver: drift is exact translation (1e-6)", e2 < 1e-6, f"err={e2:.2e}")

    S1 = propagator_matrix(heat, 0.0, 0.2).entries
    S2 = propagator_matrix(heat, 0.2, 0.5).entries
    S3 = propagator_matrix(heat, 0.0, 0.5).entries
    e3 = np.max(np.abs(S2 @ S1 - S3))
    check("solver: semigroup composition (1e-8)", e3 < 1e-8, f"err={e3:.2e}")


def test_gabor_matrix_decay(grid, window, decay_lattice):
    problems = {
        "heat": EvolutionProblem(named_symbol("heat"), ZERO, grid, T=0.5, dt=0.01),
        "degenerate": EvolutionProblem(
            named_symbol("degenerate_diffusion"), ZERO, grid, T=0.5, dt=0.01
        ),
        "degenerate+drift": EvolutionProblem(
            named_symbol("degenerate_diffusion"), named_symbol("drift"), grid,
            T=0.5, dt=0.01,
        ),
    }
    for name, prob in problems.items():
        rep = decay_fit(gabor_matrix(prob, 0.1, window, decay_lattice), **FIT_ANNULUS)
        check(
            f"wave-packet decay: {name} fitted_N >= 4, residual <= 0.5",
            rep.fitted_N >= 4.0 and rep.residual <= 0.5,
            f"N={rep.fitted_N:.2f}, residual={rep.residual:.3f}",
        )

    x = grid.x_axis()
    chirp = OperatorMatrix(grid, np.diag(np.exp(-1j * x**2)))
    lat = PhaseLattice.build(grid, x_radius=10.0, xi_radius=10.0)
    field = gabor_matrix_operator(chirp, window, lat)
    rep = decay_fit(field, direction=(0.0, 1.0), **FIT_ANNULUS)
    check("wave-packet decay: chirp multiplier fails directionally (N < 2)",
          rep.fitted_N < 2.0, f"N={rep.fitted_N:.2f}")


def test_energy_uniformity(grid, window):
    zs = [PhasePoint.of(0.0, v) for v in (0.0, 4.0, 8.0)]
    zs += [PhasePoint.of(v, 0.0) for v in (-8.0, 8.0)]
    L = grid.L

    def per_sigma(t, x, xi):
        return (1 + np.cos(2 * np.pi * (x[..., 0] - 10.0) / L)) / 2 * np.sum(xi**2, -1)

    conforming = {
        "heat+drift": EvolutionProblem(
            named_symbol("heat"), named_symbol("drift"), grid, T=0.5, dt=0.01
        ),
        "periodic degenerate+drift": EvolutionProblem(
            Symbol(per_sigma), named_symbol("drift"), grid, T=0.5, dt=0.01
        ),
    }
    for name, prob in conforming.items():
        ratio = energy_uniformity(prob, 1, window, zs).ratio()
        check(f"uniformity in z: {name} ratio <= 2", ratio <= 2.0, f"ratio={ratio:.3f}")

    disp = EvolutionProblem(ZERO, named_symbol("schrodinger_b"), grid, T=0.5, dt=0.01)
    zs_disp = [PhasePoint.of(0.0, v) for v in (0.0, 2.0, 4.0, 6.0, 8.0)]
    ratio = energy_uniformity(disp, 1, window, zs_disp).ratio()
    check("uniformity in z: second-order drift contrast exceeds 3",
          ratio > 3.0, f"ratio={ratio:.2f}")


def test_symbol_extraction(grid, heat, heat_propagator_01):
    p = extract_symbol(heat_propagator_01)
    exact = np.exp(-0.1 * grid.xi_axis() ** 2)[None, :]
    e1 = np.max(np.abs(p.values - exact))
    check("propagator symbol: heat multiplier e^{-t xi^2} (1e-5)",
          e1 < 1e-5, f"err={e1:.2e}")

    drift = EvolutionProblem(ZERO, named_symbol("drift"), grid, T=0.5, dt=0.01)
    t = 32 * grid.h
    p2 = extract_symbol(propagator_matrix(drift, 0.0, t))
    e2 = np.max(np.abs(np.abs(p2.values) - 1.0))
    check("propagator symbol: translation has modulus one (1e-5)",
          e2 < 1e-5, f"err={e2:.2e}")

    tops = []
    for tt in (0.05, 0.1, 0.2, 0.4):
        S = propagator_matrix(heat, 0.0, tt)
        rep = seminorm_estimate(extract_symbol(S), grid, max_order=2)
        tops.append(rep.max_entry(0, 2))
    spread = max(tops) / min(tops)
    check("propagator symbol: order-2 seminorm reports uniform over t (factor 2)",
          spread <= 2.0, f"spread={spread:.4f}")


def test_picard_solver(grid, heat):
    free = EvolutionProblem(ZERO, ZERO, grid, T=0.5, dt=0.01)
    c0 = 0.25
    with pytest.warns(UserWarning):
        traj, diag = picard_solve(free, Nonlinearity.power(2), constant(grid, c0), tol=1e-10)
    e1 = np.max(np.abs(traj.final.values - c0 / (1 - 0.5 * c0)))
    check("picard: flat data match the scalar blowup ODE (1e-5)",
          diag.converged and e1 < 1e-5, f"err={e1:.2e}")

    u0 = 0.1 * gaussian(grid)
    traj2, diag2 = picard_solve(heat, Nonlinearity.power(2), u0, tol=1e-10)
    import scipy.linalg

    from gaborheat.propagator import _generator

    M = _generator(heat, 0.0)
    delta = heat.dt / 16
    half = scipy.linalg.expm(-delta / 2 * M)
    v = u0.values.copy()
    for _ in range(round(0.5 / delta)):
        v = half @ v
        k1 = v**2
        k2 = (v + delta * k1) ** 2
        v = half @ (v + delta / 2 * (k1 + k2))
    e2 = l2_norm(GridFunction(grid, v) - traj2.final)
    check("picard: heat + square nonlinearity matches fine splitting (1e-4 L2)",
          e2 < 1e-4, f"err={e2:.2e}")

    gaps = diag2.iterate_gaps
    geometric = all(b < 0.9 * a for a, b in zip(gaps, gaps[1:]))
    check("picard: iterate gaps contract geometrically (ratio < 0.9)", geometric,
          f"gaps={['%.1e' % g for g in gaps[:5]]}")

    ratios = []
    for w in (0.8, 1.0, 1.3, 1.7, 2.2):
        ua = 0.1 * gaussian(grid, width=w)
        ratios.append(
            lipschitz_check(heat, Nonlinearity.power(2), ua, 1.001 * ua, tol=1e-9)
        )
    check("picard: Lipschitz ratios bounded by the frozen constant 1.1",
          max(ratios) <= 1.1, f"max ratio={max(ratios):.4f}")


def test_counterexamples(grid):
    sups = contro1_check(grid, [1.0])
    check("counterexample: confining potential deviation reaches 1 (1e-6)",
          abs(sups[0] - 1.0) < 1e-6, f"sup={sups[0]:.12f}")

    tab = contro2_check(np.inf, 1.0, [20.0, 40.0, 80.0])
    growth = tab[-1][1] / tab[0][1]
    check("counterexample: chirp multiplier (inf,1)-norm grows >= 2x (L=20..80)",
          growth >= 2.0, f"growth={growth:.2f}")

    tab22 = contro2_check(2.0, 2.0, [20.0, 40.0, 80.0])
    dev = max(abs(r - 1.0) for _, r in tab22)
    check("counterexample: chirp multiplier (2,2)-norm stays at 1 (1e-6)",
          dev < 1e-6, f"max deviation={dev:.2e}")


def test_analytic_energy_criteria(grid, window, heat):
    import math

    u = gaussian(grid)
    eps, N = 0.5, 6
    xs = sp.symbols("x", real=True)
    expected = 0.0
    for a in range(N + 1):
        da = sp.diff(sp.exp(-(xs**2) / 2), xs, a)
        expected += eps ** (2 * a) / math.factorial(a) ** 2 * float(
            sp.integrate(da**2, (xs, -sp.oo, sp.oo))
        )
    got = analytic_energy(u, eps, N)
    check("analytic energy: symbolic Gaussian-derivative oracle (1e-6)",
          abs(got - expected) < 1e-6, f"err={abs(got - expected):.2e}")

    prob = EvolutionProblem(named_symbol("potential_well"), ZERO, grid, T=0.5, dt=0.01)
    ratios = analytic_stability(prob, window, 0.25, range(1, 9))
    vals = list(ratios.values())
    spread = max(vals) / min(vals)
    check("analytic energy: stability ratios uniform over N=1..8 (factor 2, eps=1/4)",
          spread <= 2.0, f"spread={spread:.4f}")


def test_wavefront_criteria(grid, heat):
    est = estimate_wavefront(gaussian(grid))
    check("wave front: Gaussian estimate empty", est.empty,
          f"min exponent={est.exponents.min():.1f}")

    est_c = estimate_wavefront(constant(grid))
    n = len(est_c.angles)
    members_c = set(np.nonzero(est_c.members)[0])
    ok_c = (
        {0, n // 2} <= members_c
        and n // 4 not in members_c
        and 3 * n // 4 not in members_c
    )
    check("wave front: constant concentrates on the spatial axis", ok_c,
          f"members={sorted(members_c)}")

    vals = np.zeros(grid.shape, dtype=complex)
    vals[grid.n // 2] = 1.0 / grid.h
    est_d = estimate_wavefront(GridFunction(grid, vals))
    members_d = set(np.nonzero(est_d.members)[0])
    ok_d = (
        {n // 4, 3 * n // 4} <= members_d
        and 0 not in members_d
        and n // 2 not in members_d
    )
    check("wave front: delta concentrates on the frequency axis", ok_d,
          f"members={sorted(members_d)}")

    drift = EvolutionProblem(ZERO, named_symbol("drift"), grid, T=0.5, dt=0.01)
    ST = propagator_matrix(drift, 0.0, 0.5)
    SH = propagator_matrix(heat, 0.0, 0.2)
    test_set = {
        "bump": gaussian(grid, width=0.2),
        "constant": constant(grid),
        "gaussian": gaussian(grid),
    }
    all_ok = True
    details = []
    for name, f in test_set.items():
        for op_name, op in (("translation", ST), ("heat", SH)):
            ok, _, _ = pseudolocality_check(op, f)
            all_ok &= ok
            details.append(f"{op_name}/{name}:{'ok' if ok else 'FAIL'}")
    check("wave front: propagators never enlarge the estimate (one-cell rule)",
          all_ok, ", ".join(details))
