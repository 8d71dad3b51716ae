"""Tests for sweep orchestration, error reports, critical hunts and the CLI.

Sweeps run on the coarsest sphere so the whole module stays fast; the
numerical answers themselves are validated elsewhere, here the focus is
bookkeeping: byte-deterministic CSV output, manifest integrity, failure
recording and argument handling.
"""

import hashlib
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from helmbem import analytic, assembly, bench, solver
from helmbem.bench import (
    CSV_COLUMNS,
    NotBracketedError,
    SweepSpec,
    bie_condition,
    eigen_report,
    error_report,
    find_numerical_critical,
    parse_strategy,
    run_sweep,
    strategy_eta,
    worker_count,
)
from helmbem.cli import main
from helmbem.mesh import icosphere, load_mesh

L1_CRITICAL_HZ = 180.7504


def test_parse_strategy():
    assert parse_strategy("classical") == ("classical", 1.0)
    assert parse_strategy("constant:0.5") == ("constant", 0.5)
    with pytest.raises(ValueError, match="unknown strategy"):
        parse_strategy("kirchhoff")
    with pytest.raises(ValueError, match="takes no parameter"):
        parse_strategy("classical:2")


def test_strategy_eta_threads_arguments():
    assert strategy_eta("constant:0.5", 3.0, 2.0) == 0.5j
    expected = min(1.0 / 3.0, 2.0 * math.pi / (2.0 * 40.0))
    assert_allclose(strategy_eta("bruno_kunyansky", 40.0, 2.0).imag, expected)


def test_worker_count(monkeypatch):
    monkeypatch.delenv("HELMBEM_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("HELMBEM_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("HELMBEM_WORKERS", "0")
    assert worker_count() == 1
    monkeypatch.setenv("HELMBEM_WORKERS", "junk")
    with pytest.raises(ValueError, match="integer"):
        worker_count()


def test_sweep_spec_validation():
    good = SweepSpec(frequencies=(50.0, 100.0), strategies=("none",))
    good.validate()
    with pytest.raises(ValueError, match="strategy list"):
        SweepSpec(frequencies=(50.0,), strategies=()).validate()
    with pytest.raises(ValueError, match="frequency list"):
        SweepSpec(frequencies=(), strategies=("none",)).validate()
    with pytest.raises(ValueError, match="positive"):
        SweepSpec(frequencies=(-5.0,), strategies=("none",)).validate()
    with pytest.raises(ValueError, match="hard or soft"):
        SweepSpec(frequencies=(50.0,), strategies=("none",), bc="rigid").validate()
    with pytest.raises(ValueError, match="outside sweep range"):
        SweepSpec(
            frequencies=(50.0, 100.0),
            strategies=("none",),
            dense_window_centers=(150.0,),
        ).validate()
    with pytest.raises(ValueError, match="unknown strategy"):
        SweepSpec(frequencies=(50.0,), strategies=("bogus",)).validate()


def test_sweep_spec_window_expansion():
    spec = SweepSpec(
        frequencies=(100.0, 200.0),
        strategies=("none",),
        dense_window_centers=(150.0,),
    )
    freqs = spec.all_frequencies()
    expected = sorted({100.0, 200.0} | {150.0 + (i - 4) * 0.05 for i in range(9)})
    assert len(freqs) == 11
    assert_allclose(freqs, expected)
    window = [f for f in freqs if 149.0 < f < 151.0]
    assert_allclose(np.diff(window), 0.05)

    overlapping = SweepSpec(
        frequencies=(100.0, 200.0),
        strategies=("none",),
        dense_window_centers=(100.0,),
    )
    assert len(overlapping.all_frequencies()) == 10


def test_error_report_statistics(mesh80):
    k = analytic.wavenumber(100.0)
    ops = assembly.assemble(mesh80, k, operators=("double_layer", "hypersingular"))
    inc = solver.incident_plane_wave(mesh80, k)
    run = solver.run_scatter(ops, inc, "hard", solver.eta_value("classical", k))
    report = error_report(run.solution, mesh80, k, "hard")
    assert report.variant == "on_sphere"
    assert report.excluded == 0
    assert report.values.shape == (mesh80.n_elements,)
    assert report.min <= report.mean <= report.max
    assert report.mean < 0.2

    at_nodes = error_report(run.solution, mesh80, k, "hard", "nodes")
    assert at_nodes.variant == "nodes"
    assert at_nodes.min <= at_nodes.mean <= at_nodes.max


def test_error_report_excludes_tiny_references(mesh80, monkeypatch):
    n = mesh80.n_elements
    fake = np.ones(n, dtype=complex)
    fake[3] = 0.0

    def fake_series(k, radius, r, cos_theta, n_max):
        return fake

    monkeypatch.setattr(bench.analytic, "hard_sphere_potential", fake_series)
    report = error_report(2.0 * np.ones(n), mesh80, 1.0, "hard")
    assert report.excluded == 1
    assert report.values.shape == (n - 1,)
    assert report.mean == report.min == report.max == 1.0


def test_error_report_argument_errors(mesh80):
    sol = np.ones(mesh80.n_elements, dtype=complex)
    with pytest.raises(ValueError, match="variant"):
        error_report(sol, mesh80, 1.0, "hard", "midpoints")
    with pytest.raises(ValueError, match="hard or soft"):
        error_report(sol, mesh80, 1.0, "rigid")


def _small_spec(**overrides):
    base = dict(
        frequencies=(50.0, 80.0),
        strategies=("none", "classical"),
        level=1,
        richardson_w=(2.0,),
    )
    base.update(overrides)
    return SweepSpec(**base)


def test_run_sweep_is_byte_deterministic(tmp_path):
    spec = _small_spec()
    path_a = tmp_path / "a.csv"
    path_b = tmp_path / "b.csv"
    manifest = run_sweep(spec, path_a, tmp_path / "a.json")
    run_sweep(spec, path_b)
    raw = path_a.read_bytes()
    assert raw == path_b.read_bytes()
    assert manifest["csv_sha256"] == hashlib.sha256(raw).hexdigest()

    lines = raw.decode().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 2 * 2 * 2
    assert manifest["failures"] == {}
    assert manifest["workers"] == 1
    assert manifest["mesh"]["n_elements"] == 80
    assert manifest["mesh"]["source"] == {"level": 1, "radius": 1.0}
    assert set(manifest["timings_s"]["per_frequency"]) == {"50", "80"}

    on_disk = json.loads((tmp_path / "a.json").read_text())
    assert on_disk["csv_sha256"] == manifest["csv_sha256"]
    assert on_disk["failures"] == {}


def test_run_sweep_row_contents(tmp_path):
    import csv as csv_mod

    path = tmp_path / "sweep.csv"
    run_sweep(_small_spec(), path)
    with open(path, newline="") as fh:
        rows = list(csv_mod.DictReader(fh))
    first = rows[0]
    assert first["bc"] == "hard"
    assert first["strategy"] == "none"
    assert first["richardson_w"] == ""
    assert first["cond_2"] == ""
    assert float(first["solve_residual"]) < 1e-12
    stepped = rows[1]
    assert stepped["strategy"] == "none"
    assert float(stepped["richardson_w"]) == 2.0
    classical = rows[2]
    assert classical["strategy"] == "classical"
    k = analytic.wavenumber(50.0)
    assert_allclose(float(classical["eta_im"]), 1.0 / k, rtol=1e-15)
    assert float(classical["eta_re"]) == 0.0
    assert float(classical["err_sphere_mean"]) > 0.0


def test_run_sweep_parallel_matches_serial(tmp_path, monkeypatch):
    spec = _small_spec()
    monkeypatch.setenv("HELMBEM_WORKERS", "1")
    serial = tmp_path / "serial.csv"
    run_sweep(spec, serial)
    monkeypatch.setenv("HELMBEM_WORKERS", "2")
    parallel = tmp_path / "parallel.csv"
    manifest = run_sweep(spec, parallel)
    assert manifest["workers"] == 2
    assert serial.read_bytes() == parallel.read_bytes()


def test_run_sweep_records_failures_and_continues(tmp_path):
    """A frequency far beyond the mesh resolution fails during assembly;
    the sweep records it and still emits the healthy rows."""
    spec = _small_spec(frequencies=(50.0, 4000.0), strategies=("none",), richardson_w=())
    path = tmp_path / "partial.csv"
    manifest = run_sweep(spec, path)
    assert list(manifest["failures"]) == ["4000"]
    assert manifest["failures"]["4000"].startswith("AssemblyConvergenceError")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("50,")


def test_run_sweep_rejects_bad_spec_before_writing(tmp_path):
    path = tmp_path / "never.csv"
    with pytest.raises(ValueError, match="strategy list"):
        run_sweep(_small_spec(strategies=()), path)
    assert not path.exists()


def test_bie_condition_matches_full_solve(mesh80):
    k = analytic.wavenumber(100.0)
    ops = assembly.assemble(mesh80, k, operators=("double_layer", "hypersingular"))
    inc = solver.incident_plane_wave(mesh80, k)
    run = solver.run_scatter(ops, inc, "hard", 0.0)
    assert_allclose(bie_condition(mesh80, 100.0), run.cond_inf, rtol=1e-12)

    gops = assembly.assemble(mesh80, k, operators=("single_layer",))
    grun = solver.run_scatter(gops, inc, "soft", 0.0)
    assert_allclose(bie_condition(mesh80, 100.0, "soft"), grun.cond_inf, rtol=1e-12)
    with pytest.raises(ValueError, match="hard or soft"):
        bie_condition(mesh80, 100.0, "rigid")


def test_find_numerical_critical_on_coarse_sphere(mesh80):
    f_star = find_numerical_critical(mesh80, "hard", 180.5, half_window=4.0)
    assert abs(f_star - L1_CRITICAL_HZ) < 5e-3
    peak = bie_condition(mesh80, f_star)
    assert peak > 2.0 * bie_condition(mesh80, f_star - 1.0)
    assert peak > 2.0 * bie_condition(mesh80, f_star + 1.0)


def test_find_numerical_critical_requires_bracket(mesh80):
    with pytest.raises(NotBracketedError, match="not bracketed"):
        find_numerical_critical(mesh80, "hard", 170.0, half_window=2.0)
    assert issubclass(NotBracketedError, ValueError)


def test_find_numerical_critical_argument_errors(mesh80):
    with pytest.raises(ValueError, match="half_window"):
        find_numerical_critical(mesh80, "hard", 100.0, half_window=0.0)


def test_eigen_report_structure(mesh80):
    report = eigen_report(mesh80, 50.0, n_modes=3)
    assert set(report) == {
        "f_hz",
        "k_rad_per_m",
        "n_elements",
        "spectra",
        "analytic_modes",
    }
    assert report["n_elements"] == 80
    spectra = report["spectra"]
    assert set(spectra) == {
        "single_layer",
        "half_minus_double_layer",
        "hypersingular",
    }
    for values in spectra.values():
        assert len(values) == 80
        mags = [abs(complex(re, im)) for re, im in values]
        assert mags == sorted(mags, reverse=True)
    table = report["analytic_modes"]
    assert [row["n"] for row in table] == [0, 1, 2]
    assert [row["multiplicity"] for row in table] == [1, 3, 5]
    k = analytic.wavenumber(50.0)
    lam_h = analytic.modal_eigenvalue("double_layer", 0, k)
    assert_allclose(
        table[0]["half_minus_double_layer"], [0.5 - lam_h.real, -lam_h.imag]
    )
    # The largest single-layer eigenvalue is the monopole even on the
    # coarsest sphere.
    lam_g = analytic.modal_eigenvalue("single_layer", 0, k)
    top = complex(*spectra["single_layer"][0])
    assert abs(top - lam_g) < 0.1 * abs(lam_g)
    json.dumps(report)


def test_cli_mesh_gen_and_stats(tmp_path, capsys):
    path = tmp_path / "sphere.txt"
    assert main(["mesh", "gen", "--level", "1", "--out", str(path)]) == 0
    out = capsys.readouterr().out
    assert "80 elements" in out
    mesh = load_mesh(path)
    reference = icosphere(1)
    assert np.array_equal(mesh.faces, reference.faces)
    assert_allclose(mesh.vertices, reference.vertices, rtol=0, atol=1e-16)

    assert main(["mesh", "stats", str(path), "--freq", "500"]) == 0
    out = capsys.readouterr().out
    assert "elements: 80" in out
    assert "elements per wavelength at 500 Hz" in out


def test_cli_sweep(tmp_path, capsys):
    csv_path = tmp_path / "sweep.csv"
    man_path = tmp_path / "sweep.json"
    rc = main(
        [
            "sweep",
            "--level",
            "1",
            "--freq",
            "50",
            "--freq",
            "80",
            "--strategies",
            "none,classical",
            "--richardson",
            "2",
            "--out",
            str(csv_path),
            "--manifest",
            str(man_path),
        ]
    )
    assert rc == 0
    assert "8 rows" in capsys.readouterr().out
    manifest = json.loads(man_path.read_text())
    assert manifest["csv_sha256"] == hashlib.sha256(csv_path.read_bytes()).hexdigest()


def test_cli_sweep_range_arguments(tmp_path):
    csv_path = tmp_path / "range.csv"
    rc = main(
        [
            "sweep",
            "--level",
            "1",
            "--start",
            "50",
            "--stop",
            "70",
            "--step",
            "10",
            "--strategies",
            "none",
            "--out",
            str(csv_path),
        ]
    )
    assert rc == 0
    lines = csv_path.read_text().splitlines()
    assert [line.split(",")[0] for line in lines[1:]] == ["50", "60", "70"]


def test_cli_critical(capsys):
    rc = main(["critical", "--level", "1", "--guess", "180.5", "--half-window", "4"])
    assert rc == 0
    printed = float(capsys.readouterr().out.strip())
    assert abs(printed - L1_CRITICAL_HZ) < 5e-3


def test_cli_eigs(tmp_path, capsys):
    path = tmp_path / "eigs.json"
    rc = main(
        ["eigs", "--level", "1", "--freq", "50", "--modes", "2", "--out", str(path)]
    )
    assert rc == 0
    report = json.loads(path.read_text())
    assert len(report["analytic_modes"]) == 2
    assert len(report["spectra"]["hypersingular"]) == 80


def test_cli_solve(tmp_path, capsys):
    path = tmp_path / "surface.csv"
    rc = main(
        [
            "solve",
            "--level",
            "1",
            "--freq",
            "100",
            "--strategy",
            "classical",
            "--richardson",
            "2",
            "--out",
            str(path),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "cond_inf =" in out
    assert "after Richardson w=2" in out
    lines = path.read_text().splitlines()
    assert lines[0] == "index,x,y,z,solution_re,solution_im,corrected_re,corrected_im"
    assert len(lines) == 81
    values = [float(v) for v in lines[1].split(",")]
    assert all(math.isfinite(v) for v in values)


def test_cli_error_paths(tmp_path, capsys):
    rc = main(["mesh", "stats", str(tmp_path / "missing.txt")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")

    rc = main(
        [
            "sweep",
            "--level",
            "1",
            "--freq",
            "50",
            "--strategies",
            "bogus",
            "--out",
            str(tmp_path / "x.csv"),
        ]
    )
    assert rc == 2
    assert "unknown strategy" in capsys.readouterr().err

    rc = main(
        ["sweep", "--level", "1", "--strategies", "none", "--out", str(tmp_path / "y.csv")]
    )
    assert rc == 2
    assert "no frequencies" in capsys.readouterr().err

    with pytest.raises(SystemExit) as excinfo:
        main(["critical", "--level", "1"])
    assert excinfo.value.code == 2
