"""File formats: CSV for sampled data, the WOPM binary for dense operators,
and JSON run manifests.

All floats are written with repr-style %.17g so identical runs are
byte-identical.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .grid import Grid, GridFunction
from .propagator import DecayReport, Trajectory, UniformityTable
from .symbols import SampledSymbol
from .tfa import PhaseSpaceField
from .wavefront import WavefrontEstimate
from .weyl import OperatorMatrix

__all__ = [
    "write_grid_function_csv",
    "read_grid_function_csv",
    "write_phase_field_csv",
    "write_operator_wopm",
    "read_operator_wopm",
    "write_trajectory_csv",
    "write_trajectory_slices",
    "write_decay_csv",
    "write_uniformity_csv",
    "write_wavefront_csv",
    "write_sampled_symbol_csv",
    "write_manifest",
]

_WOPM_MAGIC = b"WOPM"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_grid_function_csv(f: GridFunction, path) -> None:
    """Columns: index, x (or x,y), re, im."""
    g = f.grid
    x = g.x_mesh().reshape(-1, g.d)
    vals = f.values.reshape(-1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        coords = ["x"] if g.d == 1 else ["x", "y"]
        w.writerow(["index", *coords, "re", "im"])
        for i in range(vals.size):
            w.writerow(
                [i, *(_fmt(c) for c in x[i]), _fmt(vals[i].real), _fmt(vals[i].imag)]
            )


def read_grid_function_csv(path, grid: Grid) -> GridFunction:
    vals = np.zeros(grid.size, dtype=np.complex128)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[0] != "index":
            raise ValueError("missing header row")
        for row in r:
            vals[int(row[0])] = float(row[-2]) + 1j * float(row[-1])
    return GridFunction(grid, vals.reshape(grid.shape))


def write_phase_field_csv(field: PhaseSpaceField, path) -> None:
    """Fields: zx, zxi, re, im.  Matrices: zx, zxi, wx, wxi, abs."""
    lat = field.lattice
    if lat.grid.d != 1:
        raise NotImplementedError("phase-space CSV implemented for d=1")
    pts = lat.points_array()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if field.kind == "field":
            w.writerow(["zx", "zxi", "re", "im"])
            flat = field.flat()
            for i in range(pts.shape[0]):
                w.writerow(
                    [_fmt(pts[i, 0]), _fmt(pts[i, 1]),
                     _fmt(flat[i].real), _fmt(flat[i].imag)]
                )
        else:
            w.writerow(["zx", "zxi", "wx", "wxi", "abs"])
            mags = np.abs(field.values)
            for i in range(pts.shape[0]):
                for j in range(pts.shape[0]):
                    w.writerow(
                        [_fmt(pts[i, 0]), _fmt(pts[i, 1]),
                         _fmt(pts[j, 0]), _fmt(pts[j, 1]), _fmt(mags[i, j])]
                    )


def write_operator_wopm(op: OperatorMatrix, path) -> None:
    """Binary: magic 'WOPM', then d, n (int64 LE), L (float64 LE), then
    row-major complex entries as little-endian float64 (re, im) pairs."""
    g = op.grid
    with open(path, "wb") as fh:
        fh.write(_WOPM_MAGIC)
        fh.write(struct.pack("<qqd", g.d, g.n, g.L))
        inter = np.empty((op.entries.size, 2), dtype="<f8")
        flat = op.entries.reshape(-1)
        inter[:, 0] = flat.real
        inter[:, 1] = flat.imag
        fh.write(inter.tobytes())


def read_operator_wopm(path) -> OperatorMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _WOPM_MAGIC:
            raise ValueError("not a WOPM file")
        d, n, L = struct.unpack("<qqd", fh.read(24))
        grid = Grid(int(d), float(L), int(n))
        N = grid.size
        raw = np.frombuffer(fh.read(), dtype="<f8")
        if raw.size != 2 * N * N:
            raise ValueError("truncated WOPM payload")
        entries = (raw[0::2] + 1j * raw[1::2]).reshape(N, N)
    return OperatorMatrix(grid, entries)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Long format: t, index, x (or x,y), re, im."""
    g = traj.states[0].grid
    x = g.x_mesh().reshape(-1, g.d)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        coords = ["x"] if g.d == 1 else ["x", "y"]
        w.writerow(["t", "index", *coords, "re", "im"])
        for t, u in zip(traj.times, traj.states):
            vals = u.values.reshape(-1)
            for i in range(vals.size):
                w.writerow(
                    [_fmt(t), i, *(_fmt(c) for c in x[i]),
                     _fmt(vals[i].real), _fmt(vals[i].imag)]
                )


def write_trajectory_slices(traj: Trajectory, outdir, stem: str = "state") -> List[str]:
    """One grid-function CSV per time slice; returns the written paths."""
    outdir = Path(outdir)
    paths = []
    for idx, u in enumerate(traj.states):
        p = outdir / f"{stem}_{idx:04d}.csv"
        write_grid_function_csv(u, p)
        paths.append(str(p))
    return paths


def write_decay_csv(report: DecayReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r_lo", "r_hi", "r_center", "max_abs", "used"])
        for i in range(len(report.max_abs)):
            w.writerow(
                [_fmt(report.bins[i]), _fmt(report.bins[i + 1]),
                 _fmt(report.r_centers[i]), _fmt(report.max_abs[i]),
                 int(report.used[i])]
            )


def write_uniformity_csv(table: UniformityTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zx", "zxi", "C"])
        for z, c in table.entries:
            x, xi = z.as_arrays()
            w.writerow([_fmt(x[0]), _fmt(xi[0]), _fmt(c)])


def write_wavefront_csv(est: WavefrontEstimate, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["angle", "exponent", "member"])
        for a, e, m in zip(est.angles, est.exponents, est.members):
            w.writerow([_fmt(a), _fmt(e), int(m)])


def write_sampled_symbol_csv(sym: SampledSymbol, path) -> None:
    """Columns: x, xi, re, im over the phase-space sample grid (d=1)."""
    g = sym.grid
    if g.d != 1:
        raise NotImplementedError("symbol CSV implemented for d=1")
    xs = g.x_axis()
    xis = np.asarray(sym.xi_axis)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "xi", "re", "im"])
        for i, xv in enumerate(xs):
            for j, xiv in enumerate(xis):
                v = sym.values[i, j]
                w.writerow([_fmt(xv), _fmt(xiv), _fmt(v.real), _fmt(v.imag)])


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
