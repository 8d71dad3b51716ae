"""Command-line interface.

Verbs: ``mesh gen``, ``mesh stats``, ``sweep``, ``critical``, ``eigs`` and
``solve``.  Frequencies are the user-facing unit everywhere; wavenumbers are
derived with the fixed speed of sound.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analytic
from .assembly import assemble
from .bench import (
    SweepSpec,
    eigen_report,
    error_report,
    find_numerical_critical,
    run_sweep,
    strategy_eta,
)
from .mesh import icosphere, load_mesh, mesh_stats, save_mesh
from .solver import incident_plane_wave, richardson_step, richardson_step_soft, run_scatter

__all__ = ["main"]


def _add_mesh_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mesh", help="mesh file (overrides --level/--radius)")
    parser.add_argument("--level", type=int, default=3, help="icosphere subdivision level")
    parser.add_argument("--radius", type=float, default=1.0, help="sphere radius in m")


def _mesh_from_args(args):
    if args.mesh:
        return load_mesh(args.mesh)
    return icosphere(args.level, args.radius)


def _parse_strategies(text: str):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _parse_floats(text: str):
    return tuple(float(s) for s in text.split(",") if s.strip())


def cmd_mesh_gen(args) -> int:
    mesh = icosphere(args.level, args.radius)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_elements} elements")
    return 0


def cmd_mesh_stats(args) -> int:
    mesh = load_mesh(args.path)
    stats = mesh_stats(mesh, frequency_hz=args.freq)
    print(f"vertices: {stats.n_vertices}")
    print(f"elements: {stats.n_elements}")
    print(f"edge length min/mean/max: {stats.edge_min:.6g} {stats.edge_mean:.6g} {stats.edge_max:.6g}")
    print(f"total area: {stats.total_area:.9g}")
    print(f"mean collocation radius: {stats.mean_centroid_norm:.6g}")
    print(f"diameter: {stats.diameter:.9g}")
    if stats.elements_per_wavelength is not None:
        print(f"elements per wavelength at {args.freq:g} Hz: {stats.elements_per_wavelength:.4g}")
    return 0


def cmd_sweep(args) -> int:
    freqs = list(args.freq or [])
    if args.start is not None:
        if args.stop is None or args.step is None:
            raise ValueError("--start needs --stop and --step")
        f = args.start
        while f <= args.stop + 1e-9:
            freqs.append(round(f, 9))
            f += args.step
    if not freqs:
        raise ValueError("no frequencies given (use --start/--stop/--step or --freq)")
    spec = SweepSpec(
        frequencies=tuple(freqs),
        strategies=_parse_strategies(args.strategies),
        bc=args.bc,
        level=args.level,
        radius=args.radius,
        mesh_path=args.mesh,
        richardson_w=_parse_floats(args.richardson) if args.richardson else (),
        dense_window_centers=tuple(args.window or []),
        want_cond_2=args.cond_2,
    )
    manifest = run_sweep(spec, args.out, args.manifest)
    rows = sum(1 for _ in open(args.out)) - 1
    print(f"wrote {args.out}: {rows} rows")
    if manifest["failures"]:
        print(f"failures at {len(manifest['failures'])} frequencies (see manifest)")
    return 0


def cmd_critical(args) -> int:
    mesh = _mesh_from_args(args)
    f = find_numerical_critical(
        mesh, args.bc, args.guess, half_window=args.half_window, tol=args.tol
    )
    print(f"{f:.6f}")
    return 0


def cmd_eigs(args) -> int:
    mesh = _mesh_from_args(args)
    report = eigen_report(mesh, args.freq, n_modes=args.modes, radius=args.radius)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_solve(args) -> int:
    mesh = _mesh_from_args(args)
    mesh.validate()
    k = analytic.wavenumber(args.freq)
    hard = args.bc == "hard"
    needed = (
        ("double_layer", "hypersingular") if hard else ("single_layer", "adj_double_layer")
    )
    ops = assemble(mesh, k, operators=needed)
    inc = incident_plane_wave(mesh, k)
    diameter = mesh_stats(mesh).diameter
    eta = strategy_eta(args.strategy, k, diameter)
    run = run_scatter(ops, inc, args.bc, eta)
    solution = run.solution
    corrected = None
    if args.richardson is not None:
        step = richardson_step if hard else richardson_step_soft
        corrected = step(solution, ops, inc, args.richardson)

    report = error_report(solution, mesh, k, args.bc, "on_sphere", args.radius)
    print(f"f = {args.freq:g} Hz, k = {k:.6g} rad/m, eta = {eta:.6g}")
    print(f"cond_inf = {run.cond_inf:.6g}")
    print(f"mean relative error (on-sphere reference) = {report.mean:.6g}")
    if corrected is not None:
        corr_report = error_report(corrected, mesh, k, args.bc, "on_sphere", args.radius)
        print(f"after Richardson w={args.richardson:g}: {corr_report.mean:.6g}")

    if args.out:
        cols = ["index", "x", "y", "z", "solution_re", "solution_im"]
        if corrected is not None:
            cols += ["corrected_re", "corrected_im"]
        lines = [",".join(cols)]
        nodes = mesh.centroids
        for i in range(mesh.n_elements):
            row = [
                str(i),
                "%.17g" % nodes[i, 0],
                "%.17g" % nodes[i, 1],
                "%.17g" % nodes[i, 2],
                "%.17g" % solution[i].real,
                "%.17g" % solution[i].imag,
            ]
            if corrected is not None:
                row += ["%.17g" % corrected[i].real, "%.17g" % corrected[i].imag]
            lines.append(",".join(row))
        with open(args.out, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmbem",
        description="Dense collocation BEM for exterior acoustic scattering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mesh_p = sub.add_parser("mesh", help="generate or inspect meshes")
    mesh_sub = mesh_p.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate an icosphere mesh file")
    gen.add_argument("--level", type=int, required=True)
    gen.add_argument("--radius", type=float, default=1.0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_mesh_gen)
    stats = mesh_sub.add_parser("stats", help="print mesh statistics")
    stats.add_argument("path")
    stats.add_argument("--freq", type=float, help="frequency for elements-per-wavelength")
    stats.set_defaults(func=cmd_mesh_stats)

    sweep = sub.add_parser("sweep", help="frequency sweep over coupling strategies")
    _add_mesh_source(sweep)
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--step", type=float)
    sweep.add_argument("--freq", type=float, action="append", help="explicit frequency (repeatable)")
    sweep.add_argument("--strategies", required=True, help="comma-separated, e.g. none,classical,constant:0.5")
    sweep.add_argument("--bc", choices=("hard", "soft"), default="hard")
    sweep.add_argument("--richardson", help="comma-separated step sizes applied to each solution")
    sweep.add_argument("--window", type=float, action="append", help="dense-window center in Hz (repeatable)")
    sweep.add_argument("--cond-2", action="store_true", help="also compute exact 2-norm condition numbers")
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.add_argument("--manifest", help="JSON manifest output path")
    sweep.set_defaults(func=cmd_sweep)

    crit = sub.add_parser("critical", help="locate a numerical critical frequency")
    _add_mesh_source(crit)
    crit.add_argument("--guess", type=float, required=True, help="theoretical critical frequency in Hz")
    crit.add_argument("--half-window", type=float, default=1.0)
    crit.add_argument("--tol", type=float, default=1e-3)
    crit.add_argument("--bc", choices=("hard", "soft"), default="hard")
    crit.set_defaults(func=cmd_critical)

    eigs = sub.add_parser("eigs", help="discrete operator spectra vs analytic modes")
    _add_mesh_source(eigs)
    eigs.add_argument("--freq", type=float, required=True)
    eigs.add_argument("--modes", type=int, default=4)
    eigs.add_argument("--out", help="JSON output path (default stdout)")
    eigs.set_defaults(func=cmd_eigs)

    solve = sub.add_parser("solve", help="solve one frequency and dump the surface vectors")
    _add_mesh_source(solve)
    solve.add_argument("--freq", type=float, required=True)
    solve.add_argument("--strategy", default="classical")
    solve.add_argument("--bc", choices=("hard", "soft"), default="hard")
    solve.add_argument("--richardson", type=float, help="apply one Richardson step with this w")
    solve.add_argument("--out", help="CSV path for the per-node vectors")
    solve.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
