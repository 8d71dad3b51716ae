"""Spherical Bessel, Hankel and Legendre functions used by the analytic references.

All spectral quantities of the boundary operators on a sphere are built from
spherical Bessel functions of the first and second kind, the outgoing spherical
Hankel function ``h = j + i y`` and Legendre polynomials.  The Bessel evaluations
are delegated to :mod:`scipy.special`, which switches between series and
recurrence internally; Legendre polynomials use the stable three-term upward
recurrence.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

__all__ = [
    "sph_bessel_j",
    "sph_bessel_y",
    "sph_hankel1",
    "legendre_p",
    "legendre_p_table",
]

#: Hard cap for the series order used by the analytic field evaluations.
N_MAX_DEFAULT = 60


def _check_order(n: int) -> int:
    if n != int(n) or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n!r}")
    return int(n)


def _check_argument(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("argument must be positive")
    return x


def sph_bessel_j(n: int, x, derivative: bool = False):
    """Spherical Bessel function of the first kind ``j_n(x)``.

    Parameters
    ----------
    n : int
        Order, ``0 <= n``.
    x : float or ndarray
        Argument, strictly positive.
    derivative : bool, optional
        If True return ``j_n'(x)`` instead.

    Returns
    -------
    float or ndarray
    """
    n = _check_order(n)
    x = _check_argument(x)
    out = _sp.spherical_jn(n, x, derivative=derivative)
    return out if out.shape else float(out)


def sph_bessel_y(n: int, x, derivative: bool = False):
    """Spherical Bessel function of the second kind ``y_n(x)``."""
    n = _check_order(n)
    x = _check_argument(x)
    out = _sp.spherical_yn(n, x, derivative=derivative)
    return out if out.shape else float(out)


def sph_hankel1(n: int, x, derivative: bool = False):
    """Outgoing spherical Hankel function ``h_n(x) = j_n(x) + i y_n(x)``."""
    n = _check_order(n)
    x = _check_argument(x)
    out = _sp.spherical_jn(n, x, derivative=derivative) + 1j * _sp.spherical_yn(
        n, x, derivative=derivative
    )
    return out if out.shape else complex(out)


def legendre_p(n: int, t):
    """Legendre polynomial ``P_n(t)`` for ``t`` in ``[-1, 1]``.

    Evaluated with the three-term recurrence
    ``(m + 1) P_{m+1} = (2m + 1) t P_m - m P_{m-1}``.
    """
    n = _check_order(n)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0):
        raise ValueError("argument must lie in [-1, 1]")
    table = legendre_p_table(n, t)
    out = table[n]
    return out if out.shape else float(out)


def legendre_p_table(n_max: int, t):
    """All Legendre polynomials ``P_0 .. P_{n_max}`` at ``t``.

    Returns an array of shape ``(n_max + 1,) + shape(t)``; the series
    evaluations sum over this table.
    """
    n_max = _check_order(n_max)
    t = np.asarray(t, dtype=float)
    table = np.empty((n_max + 1,) + t.shape, dtype=float)
    table[0] = 1.0
    if n_max >= 1:
        table[1] = t
    for m in range(1, n_max):
        table[m + 1] = ((2 * m + 1) * t * table[m] - m * table[m - 1]) / (m + 1)
    return table
