"""Shared fixtures: icosphere meshes and cached operator assemblies.

Dense assembly on the 1280-element mesh costs a few seconds per frequency,
so tests that need full operator pairs at the standard benchmark
frequencies share them through a session-scoped cache instead of
reassembling per test.
"""

import numpy as np
import pytest

from helmbem import analytic, assembly, bench, solver
from helmbem.mesh import icosphere, mesh_stats


@pytest.fixture(scope="session")
def icosa():
    return icosphere(0)


@pytest.fixture(scope="session")
def mesh80():
    return icosphere(1)


@pytest.fixture(scope="session")
def mesh320():
    return icosphere(2)


@pytest.fixture(scope="session")
def mesh1280():
    return icosphere(3)


_PAIRS = {
    "hard": ("double_layer", "hypersingular"),
    "soft": ("single_layer", "adj_double_layer"),
}

# Frequencies reused across several tests; everything else is assembled on
# demand and dropped so the resident set stays at a handful of matrices.
_PINNED_HZ = frozenset({50.0, 100.0, 150.0, 200.0, 300.0, 168.0})


class OpsCache:
    """Operator pairs on one mesh, assembled lazily and cached per frequency."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.diameter = mesh_stats(mesh).diameter
        self._store = {}
        self._pinned = set(_PINNED_HZ)

    def pin(self, f):
        self._pinned.add(round(float(f), 6))

    def pair(self, bc, f):
        key = (bc, round(float(f), 6))
        if key in self._store:
            return self._store[key]
        ops = assembly.assemble(
            self.mesh, analytic.wavenumber(f), operators=_PAIRS[bc]
        )
        if key[1] in self._pinned:
            self._store[key] = ops
        return ops

    def incident(self, f):
        return solver.incident_plane_wave(self.mesh, analytic.wavenumber(f))

    def eta(self, strategy, f):
        return bench.strategy_eta(strategy, analytic.wavenumber(f), self.diameter)

    def run(self, bc, f, strategy, **kwargs):
        return solver.run_scatter(
            self.pair(bc, f),
            self.incident(f),
            bc,
            self.eta(strategy, f),
            **kwargs,
        )

    def error_mean(self, solution, f, bc, variant="on_sphere"):
        report = bench.error_report(
            solution, self.mesh, analytic.wavenumber(f), bc, variant
        )
        return report.mean


@pytest.fixture(scope="session")
def ops_cache(mesh1280):
    return OpsCache(mesh1280)


@pytest.fixture(scope="session")
def ops80(mesh80):
    """Full four-operator set on the 80-element mesh at 100 Hz."""
    return assembly.assemble(mesh80, analytic.wavenumber(100.0))


@pytest.fixture(scope="session")
def critical_1280(mesh1280, ops_cache):
    """Numerical critical frequency of the plain sound-hard system near 170 Hz."""
    f_star = bench.find_numerical_critical(
        mesh1280, "hard", f_guess=170.65, half_window=0.75
    )
    ops_cache.pin(f_star)
    return f_star


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
