"""Command-line driver: one subcommand per pipeline, JSON config in, CSV
artifacts plus a run manifest out.

Exit codes: 0 success, 2 configuration error (nothing written), 3 numerical
nonconvergence, 4 hypothesis-check failure (stability guard).  The output
directory comes from --out, overridden by the GABORHEAT_OUT environment
variable; identical config and seed produce byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._util import set_default_threads
from .expressions import ExpressionError, compile_field_expression, compile_symbol_expression
from .grid import Grid, GridFunction, constant, gaussian, hermite_gaussian, l2_norm
from .propagator import (
    EvolutionProblem,
    StabilityGuardError,
    analytic_energy,
    check_hypotheses,
    decay_fit,
    energy_uniformity,
    extract_symbol,
    gabor_matrix,
    propagator_matrix,
    solve_linear,
)
from .semilinear import (
    Nonlinearity,
    PicardNonconvergenceError,
    contro1_check,
    contro2_check,
    lipschitz_check,
    picard_solve,
)
from .symbols import NAMED_SYMBOLS, named_symbol, seminorm_estimate
from .tfa import InvalidWindowError, ModulationNormSpec, PhaseLattice, PhasePoint
from .tfa import modulation_norm_boxes, modulation_norm_stft, stft
from .wavefront import estimate_wavefront, pseudolocality_check
from .weyl import garding_constant, weyl_quantize
from . import io as gio

SUBCOMMANDS = [
    "stft",
    "modnorm",
    "quantize",
    "garding",
    "propagate",
    "gabor-decay",
    "energy-uniformity",
    "symbol-extract",
    "analytic-energy",
    "picard",
    "lipschitz",
    "contro1",
    "contro2",
    "wavefront",
    "pseudolocality",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_HYPOTHESIS = 4


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    with importlib.resources.files("gaborheat").joinpath("config_schema.json").open() as fh:
        return json.load(fh)


def _validate_config(cfg: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match the schema: {exc.message}") from exc


# ---------------------------------------------------------------------------
# config interpretation


def _exponent(v):
    return np.inf if v == "inf" else float(v)


def build_grid(cfg: dict) -> Grid:
    c = cfg.get("grid", {})
    return Grid(int(c.get("d", 1)), float(c.get("L", 40.0)), int(c.get("n", 512)))


def build_symbol(spec, d: int):
    if spec is None:
        return named_symbol("zero", d)
    if isinstance(spec, str):
        if spec in NAMED_SYMBOLS:
            return named_symbol(spec, d)
        raise ConfigError(f"unknown named symbol {spec!r}")
    return compile_symbol_expression(spec["expr"], d, spec.get("time_dependent"))


def build_problem(cfg: dict, grid: Grid) -> EvolutionProblem:
    sym = cfg.get("symbols", {})
    tcfg = cfg.get("time", {})
    gcfg = cfg.get("guard", {})
    return EvolutionProblem(
        a=build_symbol(sym.get("a", "heat"), grid.d),
        b=build_symbol(sym.get("b", "zero"), grid.d),
        grid=grid,
        T=float(tcfg.get("T", 0.5)),
        dt=float(tcfg.get("dt", 0.01)),
        lower_bound_c0=float(gcfg.get("c0", 1.0)),
        guard=bool(gcfg.get("enabled", True)),
        guard_slack=float(gcfg.get("slack", 5.0)),
        guard_margin=float(gcfg.get("margin", 1.0)),
    )


def build_norm(cfg: dict) -> ModulationNormSpec:
    n = cfg.get("norm", {})
    return ModulationNormSpec(
        _exponent(n.get("p", 2.0)), _exponent(n.get("q", 1.0)), float(n.get("s", 0.0))
    )


def build_function(spec: dict, grid: Grid) -> GridFunction:
    spec = spec or {}
    kind = spec.get("kind", "gaussian")
    scale = spec.get("scale", 1.0)
    if kind == "gaussian":
        f = gaussian(
            grid,
            center=spec.get("center", 0.0),
            width=spec.get("width", 1.0),
            modulation=spec.get("modulation", 0.0),
            normalize=spec.get("normalize", False),
        )
    elif kind == "constant":
        f = constant(grid, spec.get("value", 1.0))
    elif kind == "delta":
        vals = np.zeros(grid.shape, dtype=complex)
        vals[(grid.n // 2,) * grid.d] = 1.0 / grid.h**grid.d
        f = GridFunction(grid, vals)
    elif kind == "hermite":
        f = hermite_gaussian(grid, spec.get("order", 1))
    elif kind == "expr":
        if "expr" not in spec:
            raise ConfigError("expr function needs an 'expr' key")
        f = compile_field_expression(spec["expr"], grid)
    else:
        raise ConfigError(f"unknown function kind {kind!r}")
    return scale * f if scale != 1.0 else f


def build_window(params: dict, grid: Grid) -> GridFunction:
    spec = params.get("window")
    if spec is None:
        from .tfa import default_window

        return default_window(grid)
    w = build_function(spec, grid)
    n = l2_norm(w)
    if n < 1e-14:
        raise ConfigError("window is numerically zero")
    return w * (1.0 / n)


def build_lattice(params: dict, grid: Grid, default_radius=None) -> PhaseLattice:
    c = params.get("lattice", {})
    x_radius = c.get("x_radius", default_radius)
    xi_radius = c.get("xi_radius", default_radius)
    return PhaseLattice.build(
        grid,
        alpha=c.get("alpha", 0.5),
        beta=c.get("beta", 0.5),
        x_radius=x_radius,
        xi_radius=xi_radius,
    )


def build_nonlinearity(cfg: dict, grid: Grid) -> Nonlinearity:
    c = cfg.get("nonlinearity")
    if c is None:
        return Nonlinearity.zero()
    coeffs = {
        (int(j), int(k)): complex(re, im) for j, k, re, im in c.get("coeffs", [])
    }
    g_expr = c.get("g")
    g = compile_field_expression(g_expr, grid) if g_expr else None
    return Nonlinearity(coeffs, g=g)


# ---------------------------------------------------------------------------
# subcommand implementations: each returns (scalars, outputs)


def _run_stft(cfg, grid, params, outdir):
    f = build_function(params.get("function"), grid)
    g = build_window(params, grid)
    lattice = build_lattice(params, grid)
    field = stft(f, g, lattice)
    path = outdir / "stft.csv"
    gio.write_phase_field_csv(field, path)
    return {"max_abs": float(np.max(np.abs(field.values)))}, [path]


def _run_modnorm(cfg, grid, params, outdir):
    f = build_function(params.get("function"), grid)
    spec = build_norm(cfg)
    boxes = modulation_norm_boxes(f, spec)
    stft_norm = modulation_norm_stft(f, spec, g=build_window(params, grid))
    path = outdir / "modnorm.csv"
    with open(path, "w", newline="") as fh:
        fh.write("definition,value\n")
        fh.write(f"boxes,{boxes:.17g}\n")
        fh.write(f"stft,{stft_norm:.17g}\n")
    ratio = stft_norm / boxes if boxes > 0 else float("nan")
    return {"boxes": boxes, "stft": stft_norm, "ratio": ratio}, [path]


def _run_quantize(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    which = params.get("symbol", "a")
    sym = prob.a if which == "a" else prob.b
    op = weyl_quantize(sym, grid, t=params.get("t", 0.0))
    path = outdir / "operator.wopm"
    gio.write_operator_wopm(op, path)
    dev = op.hermitian_deviation
    return {
        "hermitian_deviation": dev if dev is not None else -1.0,
        "frobenius_norm": float(np.linalg.norm(op.entries)),
    }, [path]


def _run_garding(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    k = int(params.get("k", 0))
    c_est, details = garding_constant(
        prob.a, prob.b, grid, k, t=params.get("t", 0.0), return_details=True
    )
    path = outdir / "garding.csv"
    with open(path, "w", newline="") as fh:
        fh.write("member,side,value\n")
        for idx, side, val in details:
            fh.write(f"{idx},{side},{val:.17g}\n")
    return {"c_est": c_est, "k": k}, [path]


def _run_propagate(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    u0 = build_function(params.get("function"), grid)
    rep = check_hypotheses(prob)
    sigma = float(params.get("sigma", 0.0))
    t = float(params.get("t", prob.T))
    traj = solve_linear(prob, u0, sigma, t)
    outputs = []
    if params.get("layout", "long") == "long":
        path = outdir / "trajectory.csv"
        gio.write_trajectory_csv(traj, path)
        outputs.append(path)
    else:
        outputs.extend(gio.write_trajectory_slices(traj, outdir))
    return {
        "final_l2": l2_norm(traj.final),
        "steps": len(traj.times) - 1,
        "hypothesis_warnings": rep.warnings,
    }, outputs


def _run_gabor_decay(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    g = build_window(params, grid)
    lattice = build_lattice(params, grid, default_radius=6.0)
    t = float(params.get("t", 0.1))
    field = gabor_matrix(prob, t, g, lattice)
    fit = params.get("fit", {})
    report = decay_fit(
        field,
        bin_width=fit.get("bin_width", 1.0),
        floor=fit.get("floor", 1e-12),
        r_min=fit.get("r_min", 2.0),
        r_max=fit.get("r_max", 6.0),
        direction=fit.get("direction"),
        direction_tol=fit.get("direction_tol", 0.35),
    )
    outputs = []
    decay_path = outdir / "decay.csv"
    gio.write_decay_csv(report, decay_path)
    outputs.append(decay_path)
    if params.get("write_matrix", False):
        mat_path = outdir / "gabor_matrix.csv"
        gio.write_phase_field_csv(field, mat_path)
        outputs.append(mat_path)
    return {"fitted_N": report.fitted_N, "residual": report.residual, "t": t}, outputs


def _run_energy_uniformity(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    g = build_window(params, grid)
    k = int(params.get("k", 1))
    zconf = params.get("z_set", {})
    zs = [PhasePoint.of(x0, 0.0) for x0 in zconf.get("x_values", [])]
    zs += [PhasePoint.of(0.0, xi0) for xi0 in zconf.get("xi_values", [])]
    if not zs:
        zs = [PhasePoint.of(0.0, v) for v in (0.0, 2.0, 4.0, 6.0, 8.0)]
    table = energy_uniformity(prob, k, g, zs, t=params.get("t"))
    path = outdir / "uniformity.csv"
    gio.write_uniformity_csv(table, path)
    return {"ratio": table.ratio(), "k": k}, [path]


def _run_symbol_extract(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    t = float(params.get("t", 0.1))
    S = propagator_matrix(prob, float(params.get("sigma", 0.0)), t)
    sym = extract_symbol(S)
    rep = seminorm_estimate(sym, grid, max_order=2)
    path = outdir / "symbol.csv"
    gio.write_sampled_symbol_csv(sym, path)
    return {
        "t": t,
        "seminorm_max_order2": rep.max_entry(0, 2),
        "sup_abs": float(np.max(np.abs(sym.values))),
    }, [path]


def _run_analytic_energy(cfg, grid, params, outdir):
    f = build_function(params.get("function"), grid)
    eps = float(params.get("eps", 0.25))
    n_range = params.get("N_range") or list(range(int(params.get("N", 6)) + 1))
    path = outdir / "analytic_energy.csv"
    values = {}
    with open(path, "w", newline="") as fh:
        fh.write("N,value\n")
        for N in n_range:
            values[int(N)] = analytic_energy(f, eps, int(N))
            fh.write(f"{int(N)},{values[int(N)]:.17g}\n")
    return {"eps": eps, "max_value": max(values.values())}, [path]


def _run_picard(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    nl = build_nonlinearity(cfg, grid)
    u0 = build_function(params.get("function"), grid)
    spec = build_norm(cfg)
    tol_cfg = cfg.get("tolerances", {})
    traj, diag = picard_solve(
        prob,
        nl,
        u0,
        p=spec.p,
        s=spec.s,
        tol=float(tol_cfg.get("tol", 1e-8)),
        max_iter=int(tol_cfg.get("max_iter", 30)),
        t=params.get("t"),
    )
    outputs = []
    if params.get("layout", "long") == "long":
        tpath = outdir / "trajectory.csv"
        gio.write_trajectory_csv(traj, tpath)
        outputs.append(tpath)
    else:
        outputs.extend(gio.write_trajectory_slices(traj, outdir))
    gpath = outdir / "picard_gaps.csv"
    with open(gpath, "w", newline="") as fh:
        fh.write("iteration,gap\n")
        for i, gap in enumerate(diag.iterate_gaps):
            fh.write(f"{i},{gap:.17g}\n")
    outputs.append(gpath)
    return {
        "converged": diag.converged,
        "T0_used": diag.T0_used,
        "iterations": diag.iterations,
        "halvings": diag.halvings,
        "final_gap": diag.iterate_gaps[-1] if diag.iterate_gaps else 0.0,
    }, outputs


def _run_lipschitz(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    nl = build_nonlinearity(cfg, grid)
    u0 = build_function(params.get("function"), grid)
    if "v0" in params:
        v0 = build_function(params["v0"], grid)
    else:
        v0 = (1.0 + float(params.get("perturbation", 1e-3))) * u0
    spec = build_norm(cfg)
    tol_cfg = cfg.get("tolerances", {})
    ratio = lipschitz_check(
        prob, nl, u0, v0, p=spec.p, s=spec.s, tol=float(tol_cfg.get("tol", 1e-8)),
        t=params.get("t"),
    )
    path = outdir / "lipschitz.csv"
    with open(path, "w", newline="") as fh:
        fh.write("ratio\n")
        fh.write(f"{ratio:.17g}\n")
    return {"ratio": ratio}, [path]


def _run_contro1(cfg, grid, params, outdir):
    t_list = params.get("t_list", [0.0, 0.25, 0.5, 1.0])
    sups = contro1_check(grid, t_list)
    path = outdir / "contro1.csv"
    with open(path, "w", newline="") as fh:
        fh.write("t,sup\n")
        for t, s in zip(t_list, sups):
            fh.write(f"{t:.17g},{s:.17g}\n")
    return {"sup_final": sups[-1]}, [path]


def _run_contro2(cfg, grid, params, outdir):
    spec = build_norm(cfg)
    box_sizes = params.get("box_sizes", [20.0, 40.0, 80.0])
    table = contro2_check(spec.p, spec.q, box_sizes)
    path = outdir / "contro2.csv"
    with open(path, "w", newline="") as fh:
        fh.write("L,ratio\n")
        for L, r in table:
            fh.write(f"{L:.17g},{r:.17g}\n")
    growth = table[-1][1] / table[0][1]
    return {"growth": growth, "first_ratio": table[0][1], "last_ratio": table[-1][1]}, [path]


def _run_wavefront(cfg, grid, params, outdir):
    f = build_function(params.get("function"), grid)
    est = estimate_wavefront(
        f,
        g=build_window(params, grid),
        angular_n=int(params.get("angular_n", 16)),
        threshold=float(params.get("threshold", 4.0)),
        r_min=float(params.get("r_min", 2.0)),
    )
    path = outdir / "wavefront.csv"
    gio.write_wavefront_csv(est, path)
    return {"n_members": int(est.members.sum()), "empty": est.empty}, [path]


def _run_pseudolocality(cfg, grid, params, outdir):
    prob = build_problem(cfg, grid)
    f = build_function(params.get("function"), grid)
    t = float(params.get("t", 0.2))
    S = propagator_matrix(prob, 0.0, t)
    ok, before, after = pseudolocality_check(
        S,
        f,
        g=build_window(params, grid),
        angular_n=int(params.get("angular_n", 16)),
        threshold=float(params.get("threshold", 4.0)),
        r_min=float(params.get("r_min", 2.0)),
    )
    p1 = outdir / "wavefront_before.csv"
    p2 = outdir / "wavefront_after.csv"
    gio.write_wavefront_csv(before, p1)
    gio.write_wavefront_csv(after, p2)
    return {
        "passed": bool(ok),
        "members_before": int(before.members.sum()),
        "members_after": int(after.members.sum()),
    }, [p1, p2]


RUNNERS = {
    "stft": _run_stft,
    "modnorm": _run_modnorm,
    "quantize": _run_quantize,
    "garding": _run_garding,
    "propagate": _run_propagate,
    "gabor-decay": _run_gabor_decay,
    "energy-uniformity": _run_energy_uniformity,
    "symbol-extract": _run_symbol_extract,
    "analytic-energy": _run_analytic_energy,
    "picard": _run_picard,
    "lipschitz": _run_lipschitz,
    "contro1": _run_contro1,
    "contro2": _run_contro2,
    "wavefront": _run_wavefront,
    "pseudolocality": _run_pseudolocality,
}


def _json_safe(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def run(subcommand: str, config: dict, outdir, seed: int = 0, threads: int = None) -> dict:
    """Execute one pipeline; returns the manifest payload.

    Raises ConfigError / PicardNonconvergenceError / StabilityGuardError,
    which main() maps to exit codes 2 / 3 / 4.
    """
    _validate_config(config)
    if subcommand not in RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    grid = build_grid(config)  # may raise ValueError -> config error
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    np.random.seed(seed)  # legacy global, in case user expressions sample
    if threads:
        set_default_threads(threads)
    start = time.perf_counter()
    scalars, outputs = RUNNERS[subcommand](config, grid, config.get("params", {}), outdir)
    wall = time.perf_counter() - start
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": seed,
        "threads": threads,
        "wall_time_s": wall,
        "config": config,
        "scalars": _json_safe(scalars),
        "outputs": [str(p) for p in outputs],
    }
    gio.write_manifest(outdir / "manifest.json", manifest)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaborheat",
        description="Wave-packet analysis pipelines for degenerate parabolic evolutions",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS + ["schema"])
    parser.add_argument("--config", type=str, default=None, help="JSON config path")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker-thread cap")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if args.subcommand == "schema":
        json.dump(load_schema(), sys.stdout, indent=2)
        print()
        return EXIT_OK

    outdir = os.environ.get("GABORHEAT_OUT", args.out)
    try:
        if args.config is None:
            config = {}
        else:
            with open(args.config) as fh:
                config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        manifest = run(args.subcommand, config, outdir, seed=args.seed, threads=args.threads)
    except (ConfigError, ExpressionError, InvalidWindowError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PicardNonconvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except StabilityGuardError as exc:
        print(f"hypothesis check failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    for key, val in manifest["scalars"].items():
        print(f"{key}: {val}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
