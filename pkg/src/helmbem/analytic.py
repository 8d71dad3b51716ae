"""Closed-form references for plane-wave scattering from a sphere.

This module provides everything the benchmarks compare against: the modal
eigenvalues of the boundary integral operators on a sphere, the series solution
for the total surface field of a sound-hard or sound-soft sphere hit by a plane
wave, and the critical frequencies at which the plain boundary integral
formulations become singular.

Conventions: harmonic time factor ``exp(i w t)``, incident plane wave
``exp(-i k d . x)`` travelling along the unit vector ``d``, outgoing radiation
carried by the spherical Hankel function ``h_n = j_n + i y_n``, normals pointing
out of the scatterer.  With these choices the plane-wave expansion coefficient
is ``(-i)^n`` and the sphere eigenvalue of the single-layer operator tends to
``1/(2n+1)`` at low frequency.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .specfun import (
    N_MAX_DEFAULT,
    legendre_p_table,
    sph_bessel_j,
    sph_bessel_y,
    sph_hankel1,
)

__all__ = [
    "SPEED_OF_SOUND_M_PER_S",
    "AIR_DENSITY_KG_PER_M3",
    "wavenumber",
    "frequency",
    "modal_eigenvalue",
    "hard_sphere_potential",
    "soft_sphere_velocity",
    "surface_field_hard",
    "surface_field_soft",
    "critical_frequencies",
    "SeriesConvergenceError",
]

SPEED_OF_SOUND_M_PER_S: float = 340.0
AIR_DENSITY_KG_PER_M3: float = 1.3

#: Operator labels accepted by :func:`modal_eigenvalue`.
EIGENVALUE_KINDS = (
    "single_layer",
    "double_layer",
    "hypersingular",
    "dirichlet_combined",
    "neumann_combined",
)


class SeriesConvergenceError(RuntimeError):
    """Raised when the scattering series has not converged at the order cap."""


def wavenumber(frequency_hz: float) -> float:
    """Acoustic wavenumber ``k = 2 pi f / c`` in rad/m."""
    return 2.0 * np.pi * frequency_hz / SPEED_OF_SOUND_M_PER_S


def frequency(k: float) -> float:
    """Frequency in Hz for a wavenumber in rad/m."""
    return k * SPEED_OF_SOUND_M_PER_S / (2.0 * np.pi)


def modal_eigenvalue(
    kind: str,
    n: int,
    k: float,
    coupling: complex = 0.0j,
    radius: float = 1.0,
) -> complex:
    """Sphere eigenvalue of a boundary integral operator for mode ``n``.

    ``kind`` selects among the single-layer, double-layer (equal to its
    adjoint on the sphere), hypersingular, and the coupled Dirichlet/Neumann
    operators.  The double-layer value is the on-surface principal-value
    eigenvalue.  For ``radius != 1`` the unit-sphere reduction applies and the
    argument of the spherical functions becomes ``k * radius``; ``coupling``
    enters the combined kinds as passed.

    The low-frequency limits are ``1/(2n+1)`` (single layer),
    ``-1/(2(2n+1))`` (double layer) and ``-n(n+1)/(2n+1)`` (hypersingular).
    The combined operators with the frequency-dependent coupling ``i/k`` pick
    up a term diverging like ``1/k`` for modes ``n >= 1``.
    """
    if kind not in EIGENVALUE_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    z = k * radius
    if z <= 0.0:
        raise ValueError("wavenumber times radius must be positive")
    j = sph_bessel_j(n, z)
    jp = sph_bessel_j(n, z, derivative=True)
    h = sph_hankel1(n, z)
    hp = sph_hankel1(n, z, derivative=True)
    if kind == "single_layer":
        return 1j * z * h * j
    if kind == "double_layer":
        return 0.5 + 1j * z * z * hp * j
    if kind == "hypersingular":
        return 1j * z**3 * hp * jp
    if kind == "dirichlet_combined":
        return 1j * z * h * (j - coupling * z * jp)
    return 1j * z * z * hp * (j + coupling * z * jp)


def _mie_reflection(bc: str, n_orders: int, z_surface: float) -> np.ndarray:
    """Reflection coefficients of the scattered series for orders ``0..n_orders``."""
    orders = np.arange(n_orders + 1)
    j = np.array([sph_bessel_j(n, z_surface) for n in orders])
    jp = np.array([sph_bessel_j(n, z_surface, derivative=True) for n in orders])
    h = np.array([sph_hankel1(n, z_surface) for n in orders])
    hp = np.array([sph_hankel1(n, z_surface, derivative=True) for n in orders])
    if bc == "hard":
        return -jp / hp
    if bc == "soft":
        return -j / h
    raise ValueError(f"boundary condition must be 'hard' or 'soft', got {bc!r}")


def _mie_series(
    bc: str,
    k: float,
    radius: float,
    r,
    cos_theta,
    n_max: int,
    velocity: bool,
):
    """Total-field series summed until three consecutive negligible terms."""
    if k <= 0.0 or radius <= 0.0:
        raise ValueError("wavenumber and radius must be positive")
    r = np.asarray(r, dtype=float)
    cos_theta = np.asarray(cos_theta, dtype=float)
    r_b, ct_b = np.broadcast_arrays(r, cos_theta)
    if np.any(r_b <= 0.0):
        raise ValueError("evaluation radius must be positive")
    if np.any(np.abs(ct_b) > 1.0 + 1e-12):
        raise ValueError("cos(theta) must lie in [-1, 1]")
    ct_b = np.clip(ct_b, -1.0, 1.0)

    refl = _mie_reflection(bc, n_max, k * radius)
    legendre = legendre_p_table(n_max, ct_b)
    z = k * r_b

    total = np.zeros(r_b.shape, dtype=complex)
    scale = 0.0
    quiet = 0
    tail = np.inf
    for n in range(n_max + 1):
        radial = sph_bessel_j(n, z, derivative=velocity) + refl[n] * sph_hankel1(
            n, z, derivative=velocity
        )
        if velocity:
            radial = k * radial
        term = (-1j) ** n * (2 * n + 1) * radial * legendre[n]
        total += term
        scale = max(scale, float(np.max(np.abs(total))))
        tail = float(np.max(np.abs(term)))
        if scale > 0.0 and tail < 1e-14 * scale:
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    else:
        if not (scale > 0.0 and tail < 1e-12 * scale):
            raise SeriesConvergenceError(
                f"series not converged at order {n_max}: "
                f"last term {tail:.3e} against field scale {scale:.3e}"
            )
    return total if total.shape else complex(total)


def hard_sphere_potential(
    k: float,
    radius: float = 1.0,
    r=None,
    cos_theta=0.0,
    n_max: int = N_MAX_DEFAULT,
):
    """Total potential of the rigid-sphere solution at radius ``r``, angle ``theta``.

    ``theta`` is measured from the propagation direction of the incident wave;
    ``r`` defaults to the sphere surface.  Evaluation slightly inside the
    nominal radius is permitted so references can be taken at collocation
    nodes of a faceted mesh.
    """
    if r is None:
        r = radius
    return _mie_series("hard", k, radius, r, cos_theta, n_max, velocity=False)


def soft_sphere_velocity(
    k: float,
    radius: float = 1.0,
    r=None,
    cos_theta=0.0,
    n_max: int = N_MAX_DEFAULT,
):
    """Total radial particle-velocity factor of the pressure-release solution.

    Returns the normal derivative of the total potential; on the surface the
    potential itself vanishes and this derivative is the quantity the
    sound-soft boundary solve produces.
    """
    if r is None:
        r = radius
    return _mie_series("soft", k, radius, r, cos_theta, n_max, velocity=True)


def surface_field_hard(k: float, radius, angles, n_max: int = N_MAX_DEFAULT):
    """Total surface potential of a sound-hard sphere at the given polar angles."""
    angles = np.asarray(angles, dtype=float)
    return hard_sphere_potential(k, radius, radius, np.cos(angles), n_max)


def surface_field_soft(k: float, radius, angles, n_max: int = N_MAX_DEFAULT):
    """Total surface velocity of a sound-soft sphere at the given polar angles."""
    angles = np.asarray(angles, dtype=float)
    return soft_sphere_velocity(k, radius, radius, np.cos(angles), n_max)


def _bessel_j_roots(n: int, x_max: float) -> list[float]:
    """Positive roots of ``j_n`` up to ``x_max`` by scan and bisection."""
    roots: list[float] = []
    lo = max(0.05, 0.9 * n)
    if lo >= x_max:
        return roots
    grid = np.arange(lo, x_max + 0.05, 0.05)
    vals = np.array([sph_bessel_j(n, x) for x in grid])
    signs = np.sign(vals)
    for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
        root = brentq(
            lambda x: sph_bessel_j(n, x), grid[i], grid[i + 1], xtol=1e-12, rtol=1e-15
        )
        if root <= x_max:
            roots.append(float(root))
    return roots


def critical_frequencies(
    radius: float = 1.0,
    f_max: float = 500.0,
    bc: str = "hard",
) -> np.ndarray:
    """Frequencies where the plain first-kind formulations are singular.

    Both boundary conditions lead to the same set: the single-layer eigenvalue
    (sound-soft potential equation) and the double-layer jump combination
    (sound-hard equation) vanish exactly at the roots of ``j_n(kR)``.  Returns
    the sorted frequencies ``f = c x / (2 pi R)`` for all roots ``x`` up to
    ``f_max``.
    """
    if bc not in ("hard", "soft"):
        raise ValueError(f"boundary condition must be 'hard' or 'soft', got {bc!r}")
    if radius <= 0.0 or f_max <= 0.0:
        raise ValueError("radius and frequency limit must be positive")
    x_max = wavenumber(f_max) * radius
    found: list[float] = []
    n = 0
    while True:
        roots = _bessel_j_roots(n, x_max)
        if not roots and n > x_max:
            break
        found.extend(roots)
        n += 1
    freqs = np.array(sorted(frequency(x / radius) for x in found))
    return freqs
