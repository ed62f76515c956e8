import numpy as np
import pytest
import sympy as sp

from gaborheat.grid import Grid, GridFunction, gaussian, l2_norm, sobolev_q_norm
from gaborheat.propagator import (
    DecayFitError,
    EvolutionProblem,
    StabilityGuardError,
    Trajectory,
    analytic_energy,
    analytic_stability,
    check_hypotheses,
    decay_fit,
    energy_uniformity,
    extract_symbol,
    gabor_matrix,
    gabor_matrix_operator,
    propagator_matrix,
    solve_linear,
)
from gaborheat.symbols import Symbol, named_symbol, seminorm_estimate
from gaborheat.tfa import PhaseLattice, PhasePoint, phase_shift_matrix
from gaborheat.weyl import OperatorMatrix

ZERO = named_symbol("zero")


@pytest.fixture(scope="module")
def heat_problem(grid1d):
    return EvolutionProblem(named_symbol("heat"), ZERO, grid1d, T=0.5, dt=0.01)


@pytest.fixture(scope="module")
def drift_problem(grid1d):
    return EvolutionProblem(ZERO, named_symbol("drift"), grid1d, T=0.5, dt=0.01)


@pytest.fixture(scope="module")
def window(grid1d):
    return gaussian(grid1d, normalize=True)


@pytest.fixture(scope="module")
def decay_lattice(grid1d):
    return PhaseLattice.build(grid1d, x_radius=6.0, xi_radius=6.0)


# fit annulus frozen for desk-scale decay regression: small radii are
# dominated by the O(1) diagonal, large ones by the numerical floor, and
# the super-polynomial decay makes the full-range log-log fit meaningless
FIT_ANNULUS = dict(r_min=2.0, r_max=6.0)


def test_problem_validation(grid1d):
    with pytest.raises(ValueError):
        EvolutionProblem(ZERO, ZERO, grid1d, T=0.5, dt=0.6)


def test_solve_heat_gaussian_closed_form(heat_problem, grid1d):
    u0 = gaussian(grid1d)
    traj = solve_linear(heat_problem, u0, 0.0, 0.5)
    x = grid1d.x_mesh()[..., 0]
    exact = (1 + 2 * 0.5) ** -0.5 * np.exp(-(x**2) / (2 * (1 + 2 * 0.5)))
    assert np.max(np.abs(traj.final.values - exact)) < 1e-5
    assert traj.times[0] == 0.0
    assert np.array_equal(traj.states[0].values, u0.values)


def test_solve_translation(drift_problem, grid1d):
    # spectral translation is exact for band-limited data at any t
    u0 = gaussian(grid1d)
    t = 0.5
    traj = solve_linear(drift_problem, u0, 0.0, t)
    x = grid1d.x_mesh()[..., 0]
    exact = np.exp(-((x - t) ** 2) / 2)
    assert np.max(np.abs(traj.final.values - exact)) < 1e-6


def test_solve_trivial_interval(heat_problem, grid1d):
    u0 = gaussian(grid1d)
    traj = solve_linear(heat_problem, u0, 0.2, 0.2)
    assert len(traj.states) == 1
    assert np.array_equal(traj.final.values, u0.values)


def test_propagator_matrix_matches_solver(heat_problem, grid1d):
    u0 = gaussian(grid1d, width=1.5)
    S = propagator_matrix(heat_problem, 0.0, 0.3)
    traj = solve_linear(heat_problem, u0, 0.0, 0.3)
    direct = S.apply(u0)
    assert np.max(np.abs(direct.values - traj.final.values)) < 1e-10


def test_propagator_identity_at_zero(heat_problem, grid1d):
    S = propagator_matrix(heat_problem, 0.1, 0.1)
    assert np.max(np.abs(S.entries - np.eye(grid1d.n))) == 0.0


def test_heat_propagator_symmetric_contraction(heat_problem):
    S = propagator_matrix(heat_problem, 0.0, 0.1).entries
    assert np.max(np.abs(S - S.conj().T)) < 1e-8
    assert np.max(np.abs(S.imag)) < 1e-10
    eigs = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    # spectrum e^{-t xi^2} lies in (0, 1]; the smallest values sit at e^{-161},
    # below roundoff, so allow the eigensolver's floor
    assert eigs.min() >= -1e-12
    assert eigs.max() <= 1.0 + 1e-8


def test_semigroup_composition(heat_problem):
    S1 = propagator_matrix(heat_problem, 0.0, 0.2).entries
    S2 = propagator_matrix(heat_problem, 0.2, 0.5).entries
    S3 = propagator_matrix(heat_problem, 0.0, 0.5).entries
    assert np.max(np.abs(S2 @ S1 - S3)) < 1e-8


def test_conjugation_identity_frequency_shift(heat_problem, grid1d):
    # propagator of the shifted problem = conjugated propagator; frequency
    # shifts on the grid, and the parabolic decay kills the aliased band
    z = PhasePoint.of(0.0, 16 * grid1d.dxi)
    P = phase_shift_matrix(grid1d, z)
    S = propagator_matrix(heat_problem, 0.0, 0.3).entries
    conj = P.conj().T @ S @ P
    S_shift = propagator_matrix(heat_problem.shifted(z), 0.0, 0.3).entries
    assert np.linalg.norm(conj - S_shift) < 1e-6 * np.linalg.norm(S)


def test_conjugation_identity_space_shift(grid1d):
    # x-shifts need a box-compatible (L-periodic) diffusion profile
    L = grid1d.L

    def fn(t, x, xi):
        return (1 + np.cos(2 * np.pi * (x[..., 0] - 10.0) / L)) / 2 * np.sum(xi**2, -1)

    prob = EvolutionProblem(Symbol(fn), ZERO, grid1d, T=0.5, dt=0.01)
    z = PhasePoint.of(64 * grid1d.h, 0.0)
    P = phase_shift_matrix(grid1d, z)
    S = propagator_matrix(prob, 0.0, 0.2).entries
    conj = P.conj().T @ S @ P
    S_shift = propagator_matrix(prob.shifted(z), 0.0, 0.2).entries
    assert np.linalg.norm(conj - S_shift) < 1e-6 * np.linalg.norm(S)


def test_stability_guard_catches_backward_heat(grid1d, window):
    bad = EvolutionProblem(
        Symbol(lambda t, x, xi: -np.sum(xi**2, -1)), ZERO, grid1d, T=0.1, dt=0.01
    )
    with pytest.raises(StabilityGuardError):
        solve_linear(bad, window, 0.0, 0.1)


def test_guard_permits_seam_jumping_diffusion(grid1d, window):
    # sigma = (1+tanh x)/2 jumps across the periodic seam, creating seam
    # modes at the -1/h^2 scale that supported data never populate; the
    # bulk-restricted guard must not fire
    prob = EvolutionProblem(
        named_symbol("degenerate_diffusion"), named_symbol("drift"), grid1d,
        T=0.5, dt=0.01,
    )
    traj = solve_linear(prob, window, 0.0, 0.05)
    assert np.all(np.isfinite(traj.final.values))


def test_hypothesis_report(grid1d):
    prob = EvolutionProblem(named_symbol("heat"), named_symbol("drift"), grid1d, T=0.5)
    rep = check_hypotheses(prob)
    assert rep.clean
    assert rep.diffusion_min >= 0.0
    bad = EvolutionProblem(
        Symbol(lambda t, x, xi: np.sum(xi**2, -1) - 50.0), ZERO, grid1d, T=0.5
    )
    with pytest.warns(UserWarning):
        rep2 = check_hypotheses(bad)
    assert not rep2.clean


# ---------------------------------------------------------------------------
# energy-estimate uniformity over shifts


def test_uniformity_heat_contraction(heat_problem, grid1d, window):
    zs = [PhasePoint.of(0.0, xi0) for xi0 in (0.0, 2.0, 4.0, 8.0)]
    tab = energy_uniformity(heat_problem, 0, window, zs)
    for _, c in tab.entries:
        assert c <= 1.0 + 1e-6
    assert tab.ratio() <= 1.0 + 1e-6


def test_uniformity_singleton(heat_problem, window):
    tab = energy_uniformity(heat_problem, 1, window, [PhasePoint.of(0.0, 0.0)])
    assert len(tab.entries) == 1
    assert tab.ratio() == 1.0


def test_uniformity_conforming_vs_second_order_drift(grid1d, window):
    # conforming problems stay within the frozen factor 2; the second-order
    # drift (free-particle dispersion) grows with the frequency shift.
    # Long-horizon evolutions need box-compatible diffusion profiles (the
    # tanh profile's seam instability is injected continuously by the
    # spectral kernel's nonlocal tail), so the degenerate representative
    # uses an L-periodic profile vanishing at the seam.
    zs = [PhasePoint.of(0.0, xi0) for xi0 in (0.0, 4.0, 8.0)]
    zs += [PhasePoint.of(x0, 0.0) for x0 in (-8.0, 8.0)]
    L = grid1d.L

    def per_sigma(t, x, xi):
        return (1 + np.cos(2 * np.pi * (x[..., 0] - 10.0) / L)) / 2 * np.sum(xi**2, -1)

    conforming = [
        EvolutionProblem(named_symbol("heat"), named_symbol("drift"), grid1d, T=0.5, dt=0.01),
        EvolutionProblem(Symbol(per_sigma), named_symbol("drift"), grid1d, T=0.5, dt=0.01),
    ]
    for prob in conforming:
        tab = energy_uniformity(prob, 1, window, zs)
        assert tab.ratio() <= 2.0
    disp = EvolutionProblem(ZERO, named_symbol("schrodinger_b"), grid1d, T=0.5, dt=0.01)
    zs_disp = [PhasePoint.of(0.0, xi0) for xi0 in (0.0, 2.0, 4.0, 6.0, 8.0)]
    tab2 = energy_uniformity(disp, 1, window, zs_disp)
    assert tab2.ratio() > 3.0


# ---------------------------------------------------------------------------
# wave-packet matrices and decay


def test_gabor_matrix_identity_matches_window_autocorrelation(grid1d, window, decay_lattice):
    ident = OperatorMatrix(grid1d, np.eye(grid1d.n, dtype=complex))
    field = gabor_matrix_operator(ident, window, decay_lattice)
    pts = decay_lattice.points_array()
    offsets = pts[None, :, :] - pts[:, None, :]
    r2 = np.sum(offsets**2, axis=-1)
    exact = np.exp(-r2 / 4.0)  # |V_g g|(w - z) for the normalized window
    assert np.max(np.abs(np.abs(field.values) - exact)) < 1e-5


def test_gabor_requires_normalized_window(grid1d, decay_lattice):
    ident = OperatorMatrix(grid1d, np.eye(grid1d.n, dtype=complex))
    with pytest.raises(ValueError):
        gabor_matrix_operator(ident, gaussian(grid1d), decay_lattice)


def test_decay_identity_superpolynomial(grid1d, window, decay_lattice):
    ident = OperatorMatrix(grid1d, np.eye(grid1d.n, dtype=complex))
    rep = decay_fit(gabor_matrix_operator(ident, window, decay_lattice))
    assert rep.fitted_N >= 8.0


def test_decay_heat_and_degenerate(grid1d, window, decay_lattice):
    cases = [
        EvolutionProblem(named_symbol("heat"), ZERO, grid1d, T=0.5, dt=0.01),
        EvolutionProblem(named_symbol("degenerate_diffusion"), ZERO, grid1d, T=0.5, dt=0.01),
        EvolutionProblem(
            named_symbol("degenerate_diffusion"), named_symbol("drift"), grid1d,
            T=0.5, dt=0.01,
        ),
    ]
    for prob in cases:
        field = gabor_matrix(prob, 0.1, window, decay_lattice)
        rep = decay_fit(field, **FIT_ANNULUS)
        assert rep.fitted_N >= 4.0
        assert rep.residual <= 0.5


def test_heat_gabor_row_sums_bounded(grid1d, window, decay_lattice, heat_problem):
    field = gabor_matrix(heat_problem, 0.1, window, decay_lattice)
    rows = np.abs(field.values).sum(axis=1)
    # frozen desk-scale regression: oversampled lattice, ~28 points per cell
    assert rows.max() <= 60.0


def test_chirp_multiplier_directional_failure(grid1d, window):
    # e^{-i t x^2} shears phase space along (0, -2tx): no decay along the
    # frequency-offset directions, in contrast with the parabolic cases
    x = grid1d.x_axis()
    chirp = OperatorMatrix(grid1d, np.diag(np.exp(-1j * 1.0 * x**2)))
    lat = PhaseLattice.build(grid1d, x_radius=10.0, xi_radius=10.0)
    field = gabor_matrix_operator(chirp, window, lat)
    for direction in ((0.0, 1.0), (0.0, -1.0)):
        rep = decay_fit(field, direction=direction, **FIT_ANNULUS)
        assert rep.fitted_N < 2.0


def test_degenerate_drift_far_entries(grid1d, window):
    # On the line the prediction is superpolynomial decay; on the periodic
    # box the tanh profile jumps across the seam and the spectral kernel's
    # 1/y^2 tail re-emits at the ~3e-4 level (measured box-artifact floor).
    # A box-compatible band-limited profile reaches the 1e-5 level.
    lat = PhaseLattice.build(grid1d, x_radius=10.0, xi_radius=10.0)
    prob = EvolutionProblem(
        named_symbol("degenerate_diffusion"), named_symbol("drift"), grid1d,
        T=0.5, dt=0.01,
    )
    field = gabor_matrix(prob, 0.1, window, lat)
    pts = lat.points_array()
    offsets = pts[None, :, :] - pts[:, None, :]
    r = np.sqrt(np.sum(offsets**2, axis=-1))
    assert np.abs(field.values)[r > 10.0].max() < 1e-3

    L = grid1d.L

    def fn(t, x, xi):
        s = (1.0 + np.cos(2 * np.pi * (x[..., 0] - 10.0) / L)) / 2.0
        return s * np.sum(xi**2, axis=-1)

    prob2 = EvolutionProblem(Symbol(fn), named_symbol("drift"), grid1d, T=0.5, dt=0.01)
    field2 = gabor_matrix(prob2, 0.1, window, lat)
    assert np.abs(field2.values)[r > 10.0].max() < 1e-5


def test_decay_composition_monotone_in_frequency_direction(
    grid1d, window, decay_lattice, heat_problem
):
    # smoothing never worsens the frequency-offset decay; the isotropic
    # bin-max is dominated by the spatial sheet, which widens with t
    S = propagator_matrix(heat_problem, 0.0, 0.1)
    f1 = gabor_matrix_operator(S, window, decay_lattice)
    f2 = gabor_matrix_operator(S @ S, window, decay_lattice)
    n1 = decay_fit(f1, direction=(0.0, 1.0), **FIT_ANNULUS).fitted_N
    n2 = decay_fit(f2, direction=(0.0, 1.0), **FIT_ANNULUS).fitted_N
    assert n2 >= n1 - 1e-6


def test_decay_fit_rejects_empty_field(grid1d, decay_lattice):
    from gaborheat.tfa import PhaseSpaceField

    zero_field = PhaseSpaceField(
        decay_lattice,
        np.zeros((decay_lattice.size, decay_lattice.size), dtype=complex),
        kind="matrix",
    )
    with pytest.raises(DecayFitError):
        decay_fit(zero_field)
    with pytest.raises(ValueError):
        decay_fit(PhaseSpaceField(decay_lattice, np.zeros((decay_lattice.x_count, decay_lattice.xi_count)), kind="field"))


# ---------------------------------------------------------------------------
# propagator symbols


def test_extract_heat_symbol(heat_problem, grid1d):
    S = propagator_matrix(heat_problem, 0.0, 0.1)
    p = extract_symbol(S)
    exact = np.exp(-0.1 * grid1d.xi_axis() ** 2)[None, :]
    assert np.max(np.abs(p.values - exact)) < 1e-5


def test_extract_translation_symbol(drift_problem, grid1d):
    t = 32 * grid1d.h  # 2.5
    S = propagator_matrix(drift_problem, 0.0, t)
    p = extract_symbol(S)
    xi = grid1d.xi_axis()
    assert np.max(np.abs(np.abs(p.values) - 1.0)) < 1e-5
    assert np.max(np.abs(p.values - np.exp(-1j * t * xi)[None, :])) < 1e-5


def test_extracted_symbol_seminorms_uniform_in_time(heat_problem, grid1d):
    # the propagator symbol family stays in a bounded set: the order-<=2
    # seminorm report varies by less than a factor 2 over t
    tops = []
    for t in (0.05, 0.1, 0.2, 0.4):
        S = propagator_matrix(heat_problem, 0.0, t)
        rep = seminorm_estimate(extract_symbol(S), grid1d, max_order=2)
        tops.append(rep.max_entry(0, 2))
    assert max(tops) / min(tops) <= 2.0


def test_extracted_symbol_pointwise_time_continuity(heat_problem, grid1d):
    # weak-* continuity is not falsifiable on a fixed grid; pointwise
    # continuity of the extracted symbols stands in for it
    p1 = extract_symbol(propagator_matrix(heat_problem, 0.0, 0.1)).values
    p2 = extract_symbol(propagator_matrix(heat_problem, 0.0, 0.11)).values
    assert np.max(np.abs(p2 - p1)) < 0.05


# ---------------------------------------------------------------------------
# factorial-weighted energies


def test_analytic_energy_order_zero(grid1d, window):
    assert analytic_energy(window, 0.5, 0) == pytest.approx(l2_norm(window) ** 2, rel=1e-12)


def test_analytic_energy_monotone_in_order(grid1d, random_function):
    vals = [analytic_energy(random_function, 0.5, N) for N in range(5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_analytic_energy_hermite_oracle(grid1d):
    # term-by-term against closed-form L2 norms of Gaussian derivatives,
    # computed symbolically
    import math

    u = gaussian(grid1d)
    eps, N = 0.5, 6
    x = sp.symbols("x", real=True)
    expected = 0.0
    for a in range(N + 1):
        da = sp.diff(sp.exp(-(x**2) / 2), x, a)
        norm_sq = float(sp.integrate(da**2, (x, -sp.oo, sp.oo)))
        expected += eps ** (2 * a) / math.factorial(a) ** 2 * norm_sq
    assert analytic_energy(u, eps, N) == pytest.approx(expected, abs=1e-6)


def test_analytic_stability_heat_multiplier(heat_problem, window):
    ratios = analytic_stability(heat_problem, window, 0.25, [0, 2, 4])
    for v in ratios.values():
        assert v <= 1.0 + 1e-6


def test_analytic_stability_potential_well(grid1d, window):
    # bounded analytic potential: damping keeps every order at ratio 1
    prob = EvolutionProblem(named_symbol("potential_well"), ZERO, grid1d, T=0.5, dt=0.01)
    ratios = analytic_stability(prob, window, 0.25, range(1, 9))
    vals = list(ratios.values())
    assert max(vals) / min(vals) <= 2.0
    assert ratios[0 + 1] == pytest.approx(1.0, abs=1e-9)


def test_analytic_stability_sine_diffusion_regression(grid1d, window):
    # analytic degenerate diffusion sin^2(x) xi^2 genuinely mixes orders;
    # frozen desk-scale values (eps = 1/4, T = 0.5)
    def fn(t, x, xi):
        return np.sin(x[..., 0]) ** 2 * np.sum(xi**2, axis=-1)

    prob = EvolutionProblem(Symbol(fn), ZERO, grid1d, T=0.5, dt=0.01)
    ratios = analytic_stability(prob, window, 0.25, range(1, 9))
    assert ratios[1] == pytest.approx(1.0, abs=1e-6)
    assert ratios[8] == pytest.approx(3.057, abs=0.1)


def test_analytic_energy_validation(grid1d, window):
    with pytest.raises(ValueError):
        analytic_energy(window, 0.0, 2)
    with pytest.raises(ValueError):
        analytic_energy(window, 0.5, 13)


def test_adaptive_refinement_time_dependent(grid1d):
    # time-dependent coefficients: halving dt must converge the final state
    def fn(t, x, xi):
        return (1.0 + 0.5 * np.sin(2 * np.pi * t)) * np.sum(xi**2, axis=-1)

    u0 = gaussian(grid1d)
    finals = []
    for dt in (0.05, 0.025, 0.0125):
        prob = EvolutionProblem(Symbol(fn, time_dependent=True), ZERO, grid1d, T=0.2, dt=dt)
        finals.append(solve_linear(prob, u0, 0.0, 0.2).final)
    e1 = l2_norm(finals[1] - finals[0])
    e2 = l2_norm(finals[2] - finals[1])
    assert e2 < e1 / 3.0  # second-order midpoint rule
