"""Dense collocation BEM for exterior acoustic scattering.

The package solves the exterior Helmholtz problem on closed triangle meshes
with constant elements, couples the surface equation with its normal
derivative through a configurable complex factor, and benchmarks the
published choices of that factor against analytic sphere solutions.
"""

from .analytic import (
    AIR_DENSITY_KG_PER_M3,
    SPEED_OF_SOUND_M_PER_S,
    critical_frequencies,
    frequency,
    modal_eigenvalue,
    wavenumber,
)
from .assembly import OperatorSet, QuadratureConfig, assemble
from .bench import SweepSpec, error_report, find_numerical_critical, run_sweep
from .mesh import TriangleMesh, icosphere, load_mesh, mesh_stats, save_mesh
from .solver import (
    build_system,
    eta_value,
    incident_plane_wave,
    richardson_step,
    run_scatter,
)

__version__ = "0.1.0"

__all__ = [
    "AIR_DENSITY_KG_PER_M3",
    "SPEED_OF_SOUND_M_PER_S",
    "OperatorSet",
    "QuadratureConfig",
    "SweepSpec",
    "TriangleMesh",
    "assemble",
    "build_system",
    "critical_frequencies",
    "error_report",
    "eta_value",
    "find_numerical_critical",
    "frequency",
    "icosphere",
    "incident_plane_wave",
    "load_mesh",
    "mesh_stats",
    "modal_eigenvalue",
    "richardson_step",
    "run_scatter",
    "run_sweep",
    "save_mesh",
    "wavenumber",
    "__version__",
]
