"""Benchmark orchestration: sweeps, error reports and critical hunts.

A sweep walks a frequency grid, assembles the needed boundary operators once
per frequency, solves the system for every coupling strategy, optionally
applies Richardson steps, and writes one CSV row per (frequency, strategy,
step) triple plus a JSON manifest.  The CSV is a pure function of the sweep
specification: floats are printed with %.17g so repeated runs are
byte-identical, and wall-clock timings live in the manifest only.

Relative errors are measured against the analytic sphere series in two
variants: the reference taken on the sphere surface itself, or evaluated at
the collocation nodes, which for flat elements sit slightly inside the
sphere.  Nodes where the reference magnitude is below 1e-14 are excluded
from the statistics and counted.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import lu_factor

from . import analytic
from .analytic import AIR_DENSITY_KG_PER_M3, SPEED_OF_SOUND_M_PER_S
from .assembly import QuadratureConfig, assemble
from .mesh import TriangleMesh, icosphere, load_mesh, mesh_stats
from .solver import (
    COUPLING_STRATEGIES,
    cond_inf_estimate,
    eta_value,
    incident_plane_wave,
    residual_decomposition,
    residual_decomposition_soft,
    richardson_step,
    richardson_step_soft,
    run_scatter,
)

__all__ = [
    "CSV_COLUMNS",
    "SweepSpec",
    "ErrorReport",
    "NotBracketedError",
    "parse_strategy",
    "strategy_eta",
    "error_report",
    "run_sweep",
    "find_numerical_critical",
    "bie_condition",
    "eigen_report",
    "worker_count",
]

CSV_COLUMNS = (
    "f_hz",
    "k_rad_per_m",
    "bc",
    "strategy",
    "richardson_w",
    "eta_re",
    "eta_im",
    "cond_inf",
    "cond_2",
    "err_sphere_mean",
    "err_sphere_min",
    "err_sphere_max",
    "err_sphere_excluded",
    "err_nodes_mean",
    "err_nodes_min",
    "err_nodes_max",
    "err_nodes_excluded",
    "eps_bie_mean",
    "eps_dbie_mean",
    "eps_combined_mean",
    "rhs_inf_norm",
    "solve_residual",
)

_DENSE_WINDOW_STEPS = 9
_DENSE_WINDOW_SPACING_HZ = 0.05


class NotBracketedError(ValueError):
    """The condition maximum sits on the search-window boundary."""


def worker_count() -> int:
    """Worker processes for sweeps, from the HELMBEM_WORKERS variable."""
    raw = os.environ.get("HELMBEM_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"HELMBEM_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, n)


def parse_strategy(text: str):
    """Split a strategy spec like ``classical`` or ``constant:0.5``.

    Returns ``(name, constant)`` where the constant is only meaningful for
    the ``constant`` strategy.
    """
    name, sep, arg = text.partition(":")
    if name not in COUPLING_STRATEGIES:
        raise ValueError(
            f"unknown strategy {name!r}; choose from {COUPLING_STRATEGIES}"
        )
    if sep and name != "constant":
        raise ValueError(f"strategy {name!r} takes no parameter")
    constant = float(arg) if sep else 1.0
    return name, constant


def strategy_eta(text: str, k: float, diameter: float) -> complex:
    name, constant = parse_strategy(text)
    return eta_value(name, k, diameter=diameter, constant=constant)


@dataclass(frozen=True)
class SweepSpec:
    """Everything needed to reproduce one sweep.

    The mesh is either an icosphere (``level``, ``radius``) or an explicit
    file; ``dense_window_centers`` expands to nine extra frequencies spaced
    0.05 Hz around each center, the protocol used around critical
    frequencies.
    """

    frequencies: tuple
    strategies: tuple
    bc: str = "hard"
    level: int = 3
    radius: float = 1.0
    mesh_path: str | None = None
    richardson_w: tuple = ()
    dense_window_centers: tuple = ()
    direction: tuple = (0.0, 0.0, 1.0)
    want_cond_2: bool = False
    cond_2_cap: int = 2000
    n_max: int = 60
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def validate(self) -> None:
        if not self.strategies:
            raise ValueError("strategy list is empty")
        for s in self.strategies:
            parse_strategy(s)
        if not self.frequencies:
            raise ValueError("frequency list is empty")
        if any(f <= 0 for f in self.frequencies):
            raise ValueError("frequencies must be positive")
        if self.bc not in ("hard", "soft"):
            raise ValueError("bc must be hard or soft")
        lo, hi = min(self.frequencies), max(self.frequencies)
        for c in self.dense_window_centers:
            if not lo <= c <= hi:
                raise ValueError(
                    f"dense window center {c} Hz outside sweep range [{lo}, {hi}]"
                )

    def all_frequencies(self):
        freqs = set(float(f) for f in self.frequencies)
        for center in self.dense_window_centers:
            for i in range(_DENSE_WINDOW_STEPS):
                offset = (i - (_DENSE_WINDOW_STEPS - 1) // 2) * _DENSE_WINDOW_SPACING_HZ
                freqs.add(float(center) + offset)
        return sorted(freqs)

    def build_mesh(self) -> TriangleMesh:
        if self.mesh_path is not None:
            return load_mesh(self.mesh_path)
        return icosphere(self.level, self.radius)


@dataclass
class ErrorReport:
    """Per-node relative error statistics against the analytic series."""

    variant: str
    mean: float
    min: float
    max: float
    excluded: int
    values: np.ndarray


def error_report(
    solution,
    mesh: TriangleMesh,
    k: float,
    bc: str,
    variant: str = "on_sphere",
    radius: float = 1.0,
    direction=(0.0, 0.0, 1.0),
    n_max: int = 60,
) -> ErrorReport:
    """Relative error of a surface solution against the sphere series.

    ``variant`` picks the reference location: ``on_sphere`` evaluates the
    series at radius ``radius``; ``nodes`` at the actual collocation radii,
    which lie inside the sphere for flat elements.
    """
    if variant not in ("on_sphere", "nodes"):
        raise ValueError("variant must be on_sphere or nodes")
    nodes = mesh.centroids
    d = np.asarray(direction, dtype=float)
    node_r = np.linalg.norm(nodes, axis=1)
    cos_theta = (nodes @ d) / node_r
    r = np.full_like(node_r, radius) if variant == "on_sphere" else node_r
    if bc == "hard":
        ana = analytic.hard_sphere_potential(
            k, radius=radius, r=r, cos_theta=cos_theta, n_max=n_max
        )
    elif bc == "soft":
        ana = analytic.soft_sphere_velocity(
            k, radius=radius, r=r, cos_theta=cos_theta, n_max=n_max
        )
    else:
        raise ValueError("bc must be hard or soft")
    keep = np.abs(ana) >= 1e-14
    excluded = int(np.count_nonzero(~keep))
    rel = np.abs(np.asarray(solution)[keep] - ana[keep]) / np.abs(ana[keep])
    return ErrorReport(
        variant=variant,
        mean=float(rel.mean()),
        min=float(rel.min()),
        max=float(rel.max()),
        excluded=excluded,
        values=rel,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return "%.17g" % value


def _frequency_rows(spec: SweepSpec, mesh: TriangleMesh, diameter: float, f: float):
    """All CSV rows of one frequency, in strategy order."""
    k = analytic.wavenumber(f)
    hard = spec.bc == "hard"
    needed = (
        ("double_layer", "hypersingular") if hard else ("single_layer", "adj_double_layer")
    )
    ops = assemble(mesh, k, spec.quadrature, operators=needed)
    inc = incident_plane_wave(mesh, k, spec.direction)
    rows = []
    for strat in spec.strategies:
        eta = strategy_eta(strat, k, diameter)
        run = run_scatter(
            ops,
            inc,
            spec.bc,
            eta,
            want_cond_2=spec.want_cond_2,
            cond_2_cap=spec.cond_2_cap,
        )
        variants = [run.solution]
        for w in spec.richardson_w:
            step = richardson_step if hard else richardson_step_soft
            variants.append(step(run.solution, ops, inc, w))
        for idx, sol in enumerate(variants):
            if hard:
                eps_b, eps_d, eps_c = residual_decomposition(sol, ops, inc, eta)
            else:
                eps_b, eps_d, eps_c = residual_decomposition_soft(sol, ops, inc, eta)
            sphere = error_report(
                sol, mesh, k, spec.bc, "on_sphere", spec.radius, spec.direction, spec.n_max
            )
            at_nodes = error_report(
                sol, mesh, k, spec.bc, "nodes", spec.radius, spec.direction, spec.n_max
            )
            rows.append(
                [
                    _fmt(f),
                    _fmt(k),
                    spec.bc,
                    strat,
                    _fmt(spec.richardson_w[idx - 1]) if idx else "",
                    _fmt(eta.real),
                    _fmt(eta.imag),
                    _fmt(run.cond_inf),
                    _fmt(run.cond_2),
                    _fmt(sphere.mean),
                    _fmt(sphere.min),
                    _fmt(sphere.max),
                    str(sphere.excluded),
                    _fmt(at_nodes.mean),
                    _fmt(at_nodes.min),
                    _fmt(at_nodes.max),
                    str(at_nodes.excluded),
                    _fmt(float(np.abs(eps_b).mean())),
                    _fmt(float(np.abs(eps_d).mean())),
                    _fmt(float(np.abs(eps_c).mean())),
                    _fmt(float(np.abs(run.rhs).max())),
                    _fmt(run.solve_residual),
                ]
            )
    return rows


def _mesh_digest(mesh: TriangleMesh) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(mesh.faces, dtype="<i8").tobytes())
    return h.hexdigest()


def _worker_entry(args):
    spec, f = args
    mesh = spec.build_mesh()
    diameter = mesh_stats(mesh).diameter
    t0 = time.perf_counter()
    try:
        rows = _frequency_rows(spec, mesh, diameter, f)
        return f, rows, None, time.perf_counter() - t0
    except Exception as exc:  # noqa: BLE001 - failures are data here
        return f, [], f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


def run_sweep(spec: SweepSpec, csv_path, manifest_path=None) -> dict:
    """Execute a sweep and write the CSV (and optionally the manifest).

    Per-frequency failures do not abort the sweep; they are recorded in the
    manifest and the affected rows are absent from the CSV.  Returns the
    manifest dictionary.
    """
    spec.validate()
    mesh = spec.build_mesh()
    mesh.validate()
    diameter = mesh_stats(mesh).diameter
    freqs = spec.all_frequencies()
    workers = worker_count()

    results = {}
    failures = {}
    timings = {}
    t_total = time.perf_counter()
    if workers > 1 and len(freqs) > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for f, rows, err, dt in pool.map(
                _worker_entry, [(spec, f) for f in freqs]
            ):
                results[f] = rows
                timings[_fmt(f)] = dt
                if err is not None:
                    failures[_fmt(f)] = err
    else:
        for f in freqs:
            t0 = time.perf_counter()
            try:
                results[f] = _frequency_rows(spec, mesh, diameter, f)
            except Exception as exc:  # noqa: BLE001 - failures are data here
                results[f] = []
                failures[_fmt(f)] = f"{type(exc).__name__}: {exc}"
            timings[_fmt(f)] = time.perf_counter() - t0

    lines = [",".join(CSV_COLUMNS)]
    for f in freqs:
        for row in results[f]:
            lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    with open(csv_path, "w", newline="") as fh:
        fh.write(text)

    manifest = {
        "mesh": {
            "sha256": _mesh_digest(mesh),
            "n_elements": mesh.n_elements,
            "source": spec.mesh_path
            if spec.mesh_path is not None
            else {"level": spec.level, "radius": spec.radius},
            "diameter": diameter,
        },
        "spec": {
            "bc": spec.bc,
            "frequencies": list(spec.frequencies),
            "dense_window_centers": list(spec.dense_window_centers),
            "strategies": list(spec.strategies),
            "richardson_w": list(spec.richardson_w),
            "direction": list(spec.direction),
            "want_cond_2": spec.want_cond_2,
            "n_max": spec.n_max,
            "quadrature": asdict(spec.quadrature),
        },
        "constants": {
            "speed_of_sound_m_per_s": SPEED_OF_SOUND_M_PER_S,
            "density_kg_per_m3": AIR_DENSITY_KG_PER_M3,
        },
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "helmbem": __import__("helmbem").__version__,
        },
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "failures": failures,
        "timings_s": {"per_frequency": timings, "total": time.perf_counter() - t_total},
        "workers": workers,
    }
    if manifest_path is not None:
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest


def bie_condition(
    mesh: TriangleMesh, f: float, bc: str = "hard", config: QuadratureConfig | None = None
) -> float:
    """Infinity-norm condition of the plain (eta = 0) system at ``f`` Hz.

    Assembles only the single operator that system needs, which makes
    frequency searches considerably cheaper than a full assembly.
    """
    k = analytic.wavenumber(f)
    if bc == "hard":
        ops = assemble(mesh, k, config, operators=("double_layer",))
        a = -ops.double_layer
        idx = np.arange(ops.n)
        a[idx, idx] += 0.5
    elif bc == "soft":
        ops = assemble(mesh, k, config, operators=("single_layer",))
        a = ops.single_layer
    else:
        raise ValueError("bc must be hard or soft")
    anorm = float(np.abs(a).sum(axis=1).max())
    lu, piv = lu_factor(a)
    return cond_inf_estimate((lu, piv), anorm)


def find_numerical_critical(
    mesh: TriangleMesh,
    bc: str,
    f_guess: float,
    half_window: float = 1.0,
    tol: float = 1e-3,
    config: QuadratureConfig | None = None,
    scan_points: int = 9,
) -> float:
    """Frequency maximizing the plain-system condition number near a guess.

    A coarse scan over the window brackets the maximum, then golden-section
    search narrows it to ``tol`` Hz.  A maximum on the window boundary means
    the discrete critical is not inside the window and raises
    :class:`NotBracketedError`.
    """
    if half_window <= 0:
        raise ValueError("half_window must be positive")
    cache = {}

    def cond(f: float) -> float:
        if f not in cache:
            cache[f] = bie_condition(mesh, f, bc, config)
        return cache[f]

    grid = np.linspace(f_guess - half_window, f_guess + half_window, scan_points)
    values = [cond(f) for f in grid]
    peak = int(np.argmax(values))
    if peak in (0, len(grid) - 1):
        raise NotBracketedError(
            f"condition maximum at the window boundary {grid[peak]:.3f} Hz; "
            "critical frequency not bracketed"
        )
    lo, hi = float(grid[peak - 1]), float(grid[peak + 1])
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = cond(x1), cond(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = cond(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = cond(x1)
    return 0.5 * (lo + hi)


def eigen_report(
    mesh: TriangleMesh,
    f: float,
    n_modes: int = 4,
    config: QuadratureConfig | None = None,
    radius: float = 1.0,
) -> dict:
    """Discrete spectra of the three sound-hard operators plus modal values.

    Eigenvalues are sorted by descending magnitude; the analytic table lists
    the sphere eigenvalues with their (2n+1) multiplicities for comparison.
    """
    k = analytic.wavenumber(f)
    ops = assemble(
        mesh, k, config, operators=("single_layer", "double_layer", "hypersingular")
    )
    idx = np.arange(ops.n)
    half_minus_h = -ops.double_layer
    half_minus_h[idx, idx] += 0.5
    spectra = {}
    for name, mat in (
        ("single_layer", ops.single_layer),
        ("half_minus_double_layer", half_minus_h),
        ("hypersingular", ops.hypersingular),
    ):
        vals = np.linalg.eigvals(mat)
        vals = vals[np.argsort(-np.abs(vals))]
        spectra[name] = [[float(v.real), float(v.imag)] for v in vals]
    table = []
    for n in range(n_modes):
        lam_g = analytic.modal_eigenvalue("single_layer", n, k, radius=radius)
        lam_h = analytic.modal_eigenvalue("double_layer", n, k, radius=radius)
        lam_e = analytic.modal_eigenvalue("hypersingular", n, k, radius=radius)
        table.append(
            {
                "n": n,
                "multiplicity": 2 * n + 1,
                "single_layer": [lam_g.real, lam_g.imag],
                "half_minus_double_layer": [0.5 - lam_h.real, -lam_h.imag],
                "hypersingular": [lam_e.real, lam_e.imag],
            }
        )
    return {
        "f_hz": f,
        "k_rad_per_m": k,
        "n_elements": mesh.n_elements,
        "spectra": spectra,
        "analytic_modes": table,
    }
