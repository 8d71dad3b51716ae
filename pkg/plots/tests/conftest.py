"""Shared fixtures: real sweep CSVs produced through the solver CLI.

The figure package consumes only files, so the fixtures shell out to the
``helmbem`` executable once per session on the coarsest mesh and every test
works from the resulting CSVs.
"""

import subprocess

import pytest


def _run_sweep(args):
    subprocess.run(["helmbem", "sweep", *args], check=True, capture_output=True)


@pytest.fixture(scope="session")
def csv_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep-data")
    _run_sweep(
        [
            "--level",
            "1",
            "--freq",
            "50",
            "--freq",
            "80",
            "--freq",
            "110",
            "--strategies",
            "none,classical",
            "--richardson",
            "2",
            "--out",
            str(path / "sweep.csv"),
        ]
    )
    _run_sweep(
        [
            "--level",
            "1",
            "--freq",
            "100",
            "--strategies",
            "none,constant:0.25,constant:0.5,constant:1,constant:2",
            "--out",
            str(path / "eta.csv"),
        ]
    )
    return path


@pytest.fixture(scope="session")
def sweep_csv(csv_dir):
    return str(csv_dir / "sweep.csv")


@pytest.fixture(scope="session")
def eta_csv(csv_dir):
    return str(csv_dir / "eta.csv")
