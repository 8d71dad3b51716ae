"""Pointwise Helmholtz kernels for collocation assembly.

The free-field Green's function with time factor ``exp(i w t)`` is

    G(x, y) = exp(i k r) / (4 pi r),     r = |x - y|,

and the boundary operators need its directional derivatives with respect to
the source normal ``n_y``, the field normal ``n_x``, and both.  Writing
``u = (x - y) / r``, the derivatives of ``r`` are ``dr/dn_x = u . n_x`` and
``dr/dn_y = -u . n_y``, and the mixed kernel evaluates to

    d2G/(dn_x dn_y) = G * [ (3/r^2 - 3ik/r - k^2) (dr/dn_x)(dr/dn_y)
                            + (1/r)(1/r - ik) (n_x . n_y) ].

All functions broadcast over trailing shape ``(..., 3)`` point arrays.  The
swap identity ``dgreen_dny(k, x, y, n) == dgreen_dnx(k, y, x, n)`` holds
exactly: both reduce to the same function of the separation vector.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "green",
    "dgreen_dny",
    "dgreen_dnx",
    "d2green_dnxdny",
    "kernels_from_separation",
    "evaluate_all",
]


def _separation(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    r = np.sqrt(np.einsum("...i,...i->...", diff, diff))
    if np.any(r == 0.0):
        raise ValueError("coincident field and source point")
    return diff, r


def green(k: float, x, y):
    """Free-field Green's function ``exp(ikr) / (4 pi r)``."""
    _, r = _separation(x, y)
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def dgreen_dny(k: float, x, y, normal_y):
    """Derivative of ``green`` along the source normal (double-layer kernel)."""
    diff, r = _separation(x, y)
    g = np.exp(1j * k * r) / (4.0 * np.pi * r)
    radial = np.einsum("...i,...i->...", -diff, np.asarray(normal_y, dtype=float)) / r
    return g * (1j * k - 1.0 / r) * radial


def dgreen_dnx(k: float, x, y, normal_x):
    """Derivative of ``green`` along the field normal (adjoint double-layer kernel)."""
    diff, r = _separation(x, y)
    g = np.exp(1j * k * r) / (4.0 * np.pi * r)
    radial = np.einsum("...i,...i->...", diff, np.asarray(normal_x, dtype=float)) / r
    return g * (1j * k - 1.0 / r) * radial


def d2green_dnxdny(k: float, x, y, normal_x, normal_y):
    """Mixed second derivative of ``green`` (hypersingular kernel)."""
    diff, r = _separation(x, y)
    nx = np.asarray(normal_x, dtype=float)
    ny = np.asarray(normal_y, dtype=float)
    g = np.exp(1j * k * r) / (4.0 * np.pi * r)
    dr_dnx = np.einsum("...i,...i->...", diff, nx) / r
    dr_dny = -np.einsum("...i,...i->...", diff, ny) / r
    nxny = np.einsum("...i,...i->...", np.broadcast_arrays(nx, ny)[0], np.broadcast_arrays(nx, ny)[1])
    first = (3.0 / r**2 - 3j * k / r - k * k) * dr_dnx * dr_dny
    second = (1.0 / r) * (1.0 / r - 1j * k) * nxny
    return g * (first + second)


def kernels_from_separation(k: float, diff, r, normal_x, normal_y):
    """All four kernels from a precomputed separation ``diff = x - y, r = |diff|``.

    Returns the tuple ``(green, dgreen_dny, dgreen_dnx, d2green_dnxdny)``;
    this is the assembly hot path, so no argument checking happens here.
    """
    nx = np.asarray(normal_x, dtype=float)
    ny = np.asarray(normal_y, dtype=float)
    inv_r = 1.0 / r
    g = np.exp(1j * k * r) * (inv_r / (4.0 * np.pi))
    slope = 1j * k - inv_r
    dr_dnx = np.einsum("...i,...i->...", diff, nx) * inv_r
    dr_dny = -np.einsum("...i,...i->...", diff, ny) * inv_r
    nxny = np.einsum(
        "...i,...i->...", np.broadcast_arrays(nx, ny)[0], np.broadcast_arrays(nx, ny)[1]
    )
    double = g * slope * dr_dny
    adjoint = g * slope * dr_dnx
    hyper = g * (
        (3.0 * inv_r * inv_r - 3j * k * inv_r - k * k) * dr_dnx * dr_dny
        + inv_r * (inv_r - 1j * k) * nxny
    )
    return g, double, adjoint, hyper


def evaluate_all(k: float, x, y, normal_x, normal_y):
    """All four kernels at once, sharing the separation and exponential."""
    diff, r = _separation(x, y)
    return kernels_from_separation(k, diff, r, normal_x, normal_y)
