"""Linear systems for the scattering problem and their diagnostics.

The sound-hard and sound-soft boundary conditions each reduce the coupled
surface equations to a single dense system:

* hard (unknown surface potential):  ``(I/2 - H - eta E) phi = phi_inc + eta v_inc``
* soft (unknown surface velocity):   ``(G + eta (I/2 + H')) v = phi_inc + eta v_inc``

``eta`` is the complex weight on the normal-derivative equation; it is applied
to that equation only, never to the plain one.  With ``eta = 0`` the systems
reduce to the classical single-equation forms, and :func:`build_system` then
returns those blocks untouched so the reduction is bit-exact.

Systems are solved by partial-pivoting LU.  Condition numbers come in two
flavours: an infinity-norm estimate from the LU factors (LAPACK's gecon, a
Hager-Higham style estimator) and an exact 2-norm value from a full SVD that
is only permitted up to a configurable size.

The modified Richardson step ``phi + w (phi_inc - (I/2 - H) phi)`` is exposed
for the hard case; one step with ``w = 2``, started from a coupled-system
solution, collapses to ``2 (phi_inc + H phi)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, svdvals
from scipy.linalg import lu_solve as _scipy_lu_solve
from scipy.sparse.linalg import LinearOperator, eigsh

from .assembly import OperatorSet
from .mesh import TriangleMesh

__all__ = [
    "COUPLING_STRATEGIES",
    "BOUNDARY_CONDITIONS",
    "SolveError",
    "IncidentField",
    "ScatterRun",
    "eta_value",
    "incident_plane_wave",
    "build_system",
    "lu_solve",
    "cond_inf_estimate",
    "cond_2_exact",
    "run_scatter",
    "richardson_step",
    "richardson_step_soft",
    "residual_decomposition",
    "residual_decomposition_soft",
    "StepNormEvaluator",
    "max_convergent_step",
]

COUPLING_STRATEGIES = (
    "none",
    "classical",
    "constant",
    "third",
    "amini",
    "duhamel",
    "bruno_kunyansky",
)

BOUNDARY_CONDITIONS = ("hard", "soft")


class SolveError(RuntimeError):
    """A linear solve produced no usable solution."""


def eta_value(
    strategy: str, k: float, *, diameter: float | None = None, constant: float = 1.0
) -> complex:
    """Coupling factor of the named strategy at wavenumber ``k``.

    All published choices are purely imaginary with non-negative imaginary
    part.  ``constant`` yields ``constant * 1j`` and ``bruno_kunyansky``
    needs the scatterer ``diameter`` (its length scale is the wavelength
    over the obstacle size).
    """
    if k <= 0.0:
        raise ValueError("wavenumber must be positive")
    if strategy == "none":
        return 0j
    if strategy == "classical":
        return 1j / k
    if strategy == "constant":
        return complex(constant) * 1j
    if strategy == "third":
        return 1j / 3.0
    if strategy == "amini":
        return min(2.0, 1.0 / k) * 1j
    if strategy == "duhamel":
        return 1j * abs(k) / max(abs(k) ** 2, 50.0)
    if strategy == "bruno_kunyansky":
        if diameter is None:
            raise ValueError("bruno_kunyansky needs the scatterer diameter")
        return min(1.0 / 3.0, 2.0 * np.pi / (diameter * k)) * 1j
    raise ValueError(f"unknown coupling strategy {strategy!r}")


@dataclass(frozen=True)
class IncidentField:
    """Unit-amplitude plane wave sampled at the collocation nodes."""

    direction: np.ndarray
    phi: np.ndarray
    v: np.ndarray


def incident_plane_wave(mesh: TriangleMesh, k: float, direction=(0.0, 0.0, 1.0)) -> IncidentField:
    """Plane wave ``exp(-i k d.x)`` and its normal derivative at the nodes."""
    d = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("propagation direction must be a unit vector")
    phase = np.exp(-1j * k * (mesh.centroids @ d))
    v = -1j * k * (mesh.normals @ d) * phase
    return IncidentField(direction=d, phi=phase, v=v)


def _require(ops: OperatorSet, name: str) -> np.ndarray:
    mat = getattr(ops, name)
    if mat is None:
        raise ValueError(f"operator set lacks the {name} matrix")
    return mat


def build_system(ops: OperatorSet, bc: str, eta: complex, inc: IncidentField):
    """Matrix and right-hand side for the requested boundary condition.

    With ``eta = 0`` the coupled terms are skipped entirely (not multiplied
    by zero), so the returned blocks carry no trace of the other operators.
    """
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}")
    if inc.phi.shape != (ops.n,):
        raise ValueError(
            f"incident field has {inc.phi.shape[0]} nodes, operators have {ops.n}"
        )
    eta = complex(eta)
    if bc == "hard":
        a = -_require(ops, "double_layer")
        idx = np.arange(ops.n)
        a[idx, idx] += 0.5
        if eta != 0:
            a -= eta * _require(ops, "hypersingular")
    else:
        a = _require(ops, "single_layer").copy()
        if eta != 0:
            adj = _require(ops, "adj_double_layer")
            a += eta * adj
            idx = np.arange(ops.n)
            a[idx, idx] += 0.5 * eta
    b = inc.phi + eta * inc.v if eta != 0 else inc.phi.copy()
    return a, b


def lu_solve(a: np.ndarray, b: np.ndarray):
    """Partial-pivoting LU solve; returns the solution and retained factors.

    Raises :class:`SolveError` when the factorization hits an exactly
    singular pivot or the solution is not finite.  Residual quality is the
    caller's concern: near-resonant systems solve with a tiny backward error
    but the scaled residual still reflects the conditioning.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        lu, piv = lu_factor(a)
        diag = np.abs(np.diagonal(lu))
        if not np.all(np.isfinite(lu)) or np.any(diag == 0.0):
            raise SolveError("matrix is exactly singular (zero pivot)")
        x = _scipy_lu_solve((lu, piv), b)
    if not np.all(np.isfinite(x)):
        raise SolveError("solution contains non-finite entries")
    return x, (lu, piv)


def cond_inf_estimate(lu_piv, anorm: float) -> float:
    """Infinity-norm condition estimate from retained LU factors.

    Uses LAPACK's reciprocal-condition estimator, which bounds the true
    value from below by a modest factor; ``anorm`` must be the infinity
    norm of the original matrix.
    """
    lu, _ = lu_piv
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="I")
    if info != 0:
        raise SolveError(f"condition estimator failed (info={info})")
    return np.inf if rcond == 0.0 else 1.0 / rcond


def cond_2_exact(a: np.ndarray, cap: int = 2000) -> float:
    """Exact 2-norm condition number via full SVD, refused above ``cap``."""
    if a.shape[0] > cap:
        raise ValueError(
            f"matrix size {a.shape[0]} exceeds the 2-norm condition cap {cap}"
        )
    s = svdvals(a)
    return np.inf if s[-1] == 0.0 else float(s[0] / s[-1])


@dataclass
class ScatterRun:
    """One assembled-and-solved frequency point.

    ``solution`` is the surface potential for hard runs and the surface
    velocity for soft runs.  ``solve_residual`` is the scaled residual
    ``max|Ax - b| / max|b|`` actually achieved; callers decide what level
    is acceptable for their conditioning regime.
    """

    k: float
    bc: str
    eta: complex
    matrix: np.ndarray
    rhs: np.ndarray
    solution: np.ndarray
    lu: tuple
    cond_inf: float
    solve_residual: float
    cond_2: float | None = None
    timings: dict = field(default_factory=dict)


def run_scatter(
    ops: OperatorSet,
    inc: IncidentField,
    bc: str,
    eta: complex,
    *,
    want_cond_2: bool = False,
    cond_2_cap: int = 2000,
) -> ScatterRun:
    """Build, factor and solve one system, collecting diagnostics."""
    t0 = time.perf_counter()
    a, b = build_system(ops, bc, eta, inc)
    t1 = time.perf_counter()
    x, lu_piv = lu_solve(a, b)
    t2 = time.perf_counter()
    anorm = float(np.abs(a).sum(axis=1).max())
    cond_inf = cond_inf_estimate(lu_piv, anorm)
    cond_2 = cond_2_exact(a, cond_2_cap) if want_cond_2 else None
    t3 = time.perf_counter()
    residual = float(np.abs(a @ x - b).max() / np.abs(b).max())
    return ScatterRun(
        k=ops.k,
        bc=bc,
        eta=complex(eta),
        matrix=a,
        rhs=b,
        solution=x,
        lu=lu_piv,
        cond_inf=cond_inf,
        solve_residual=residual,
        cond_2=cond_2,
        timings={
            "build": t1 - t0,
            "factor_solve": t2 - t1,
            "condition": t3 - t2,
        },
    )


def richardson_step(phi: np.ndarray, ops: OperatorSet, inc: IncidentField, w: float):
    """One modified Richardson step on the plain sound-hard equation.

    ``phi + w (phi_inc - (I/2 - H) phi)``; a solution of that equation is a
    fixed point for every ``w``.
    """
    h = _require(ops, "double_layer")
    residual = inc.phi - (0.5 * phi - h @ phi)
    return phi + w * residual


def richardson_step_soft(v: np.ndarray, ops: OperatorSet, inc: IncidentField, w: float):
    """Richardson step on the soft single-layer equation ``G v = phi_inc``.

    Offered for experiment parity only; unlike the hard case it brings no
    substantial accuracy gain.
    """
    g = _require(ops, "single_layer")
    return v + w * (inc.phi - g @ v)


def residual_decomposition(phi: np.ndarray, ops: OperatorSet, inc: IncidentField, eta: complex):
    """Split a sound-hard solution's defect between the two surface equations.

    Returns the plain-equation residual ``(I/2 - H) phi - phi_inc``, the
    derivative-equation residual ``-E phi - v_inc`` and their eta-weighted
    combination, which is what the coupled solve actually drove to solver
    precision.
    """
    h = _require(ops, "double_layer")
    e = _require(ops, "hypersingular")
    eps_bie = 0.5 * phi - h @ phi - inc.phi
    eps_dbie = -(e @ phi) - inc.v
    return eps_bie, eps_dbie, eps_bie + complex(eta) * eps_dbie


def residual_decomposition_soft(v: np.ndarray, ops: OperatorSet, inc: IncidentField, eta: complex):
    """Counterpart of :func:`residual_decomposition` for soft solutions.

    The plain-equation residual is ``G v - phi_inc`` and the derivative one
    ``(I/2 + H') v - v_inc``.
    """
    g = _require(ops, "single_layer")
    adj = _require(ops, "adj_double_layer")
    eps_bie = g @ v - inc.phi
    eps_dbie = 0.5 * v + adj @ v - inc.v
    return eps_bie, eps_dbie, eps_bie + complex(eta) * eps_dbie


class StepNormEvaluator:
    """Spectral norm of the Richardson iteration matrix as a function of w.

    For ``M(w) = I - w (I/2 - H)`` the squared norm is the largest eigenvalue
    of ``I - w S + w^2 T`` with ``S = P + P^H`` and ``T = P^H P``, both
    Hermitian and precomputed once, so each ``w`` costs a single extremal
    Hermitian eigenvalue.
    """

    def __init__(self, ops: OperatorSet):
        h = _require(ops, "double_layer")
        p = -h.copy()
        idx = np.arange(ops.n)
        p[idx, idx] += 0.5
        self._s = p + p.conj().T
        self._t = p.conj().T @ p
        self._n = ops.n

    def __call__(self, w: float) -> float:
        m = -w * self._s + (w * w) * self._t
        idx = np.arange(self._n)
        m[idx, idx] += 1.0
        op = LinearOperator(
            shape=m.shape, matvec=lambda vec: m @ vec, dtype=complex
        )
        lam = eigsh(op, k=1, which="LA", return_eigenvectors=False, tol=1e-9)[0]
        return float(np.sqrt(max(lam.real, 0.0)))


def max_convergent_step(
    ops: OperatorSet, *, w_max: float = 2.5, tol: float = 1e-3
) -> float:
    """Largest step size with iteration-matrix norm below one.

    Scans upward from small steps to bracket the crossing of
    ``||I - w (I/2 - H)||_2 = 1`` and bisects to ``tol``.  Raises
    :class:`SolveError` when no convergent step exists in ``(0, w_max]``.
    """
    norm = StepNormEvaluator(ops)
    grid = np.linspace(0.1, w_max, 13)
    values = [norm(w) for w in grid]
    below = [i for i, s in enumerate(values) if s < 1.0]
    if not below:
        raise SolveError("no convergent Richardson step found in the scan range")
    lo_i = below[-1]
    if lo_i == len(grid) - 1:
        return float(grid[-1])
    lo, hi = grid[lo_i], grid[lo_i + 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if norm(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))
