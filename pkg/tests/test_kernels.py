"""Tests for the Green's function kernels and their normal derivatives.

Derivative kernels are checked against central finite differences of the
plain Green's function, which pins down the sign conventions without
trusting any transcribed formula; the static (k -> 0) limits are compared
to the Laplace kernels written out locally.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from helmbem import kernels
from helmbem.kernels import (
    d2green_dnxdny,
    dgreen_dnx,
    dgreen_dny,
    evaluate_all,
    green,
    kernels_from_separation,
)

# mpmath, 40 significant digits: green(2, origin, (0.3, 0.4, 0)).
GREEN_K2_R_HALF = 0.085991782742863604053 + 0.13392426670058189315j


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _random_config(rng, r_min=0.4):
    while True:
        x = rng.uniform(-1.0, 1.0, 3)
        y = rng.uniform(-1.0, 1.0, 3)
        if np.linalg.norm(x - y) >= r_min:
            break
    return x, y, _unit(rng.normal(size=3)), _unit(rng.normal(size=3))


def _fd_dny(k, x, y, ny, h):
    return (green(k, x, y + h * ny) - green(k, x, y - h * ny)) / (2 * h)


def _fd_dnx(k, x, y, nx, h):
    return (green(k, x + h * nx, y) - green(k, x - h * nx, y)) / (2 * h)


def _fd_mixed(k, x, y, nx, ny, h):
    return (
        green(k, x + h * nx, y + h * ny)
        - green(k, x + h * nx, y - h * ny)
        - green(k, x - h * nx, y + h * ny)
        + green(k, x - h * nx, y - h * ny)
    ) / (4 * h * h)


def test_green_trivial_value():
    x = np.zeros(3)
    y = np.array([1.0, 0.0, 0.0])
    expected = complex(math.cos(1.0), math.sin(1.0)) / (4 * math.pi)
    assert_allclose(green(1.0, x, y), expected, rtol=1e-15)


def test_green_frozen_reference():
    value = green(2.0, np.zeros(3), np.array([0.3, 0.4, 0.0]))
    assert_allclose(value, GREEN_K2_R_HALF, rtol=1e-14)


def test_green_symmetry():
    x = np.array([0.1, -0.7, 0.4])
    y = np.array([-0.3, 0.2, 0.9])
    assert green(1.3, x, y) == green(1.3, y, x)


def test_first_derivatives_match_finite_difference():
    k, h = 1.0, 1e-6
    x = np.zeros(3)
    y = _unit([1.0, 1.0, 0.5]) * 0.5
    n = _unit([0.2, -1.0, 0.3])
    assert_allclose(dgreen_dny(k, x, y, n), _fd_dny(k, x, y, n, h), rtol=1e-6)
    assert_allclose(dgreen_dnx(k, x, y, n), _fd_dnx(k, x, y, n, h), rtol=1e-6)


def test_second_derivative_matches_finite_difference():
    k, h = 1.0, 1e-4
    x = np.zeros(3)
    y = _unit([0.3, -0.2, 1.0]) * 0.7
    nx = _unit([1.0, 0.4, -0.2])
    ny = _unit([-0.3, 1.0, 0.5])
    assert_allclose(
        d2green_dnxdny(k, x, y, nx, ny), _fd_mixed(k, x, y, nx, ny, h), rtol=1e-5
    )


def test_randomized_finite_difference_sweep(rng):
    for _ in range(100):
        x, y, nx, ny = _random_config(rng)
        k = rng.uniform(0.5, 3.0)
        assert_allclose(
            dgreen_dny(k, x, y, ny), _fd_dny(k, x, y, ny, 1e-6), rtol=1e-6
        )
        assert_allclose(
            dgreen_dnx(k, x, y, nx), _fd_dnx(k, x, y, nx, 1e-6), rtol=1e-6
        )
        assert_allclose(
            d2green_dnxdny(k, x, y, nx, ny),
            _fd_mixed(k, x, y, nx, ny, 1e-4),
            rtol=1e-5,
        )


def test_swap_identity(rng):
    for _ in range(20):
        x, y, n, _ = _random_config(rng)
        k = rng.uniform(0.5, 3.0)
        assert dgreen_dny(k, x, y, n) == dgreen_dnx(k, y, x, n)


def test_hypersingular_exchange_symmetry(rng):
    for _ in range(20):
        x, y, nx, ny = _random_config(rng)
        k = rng.uniform(0.5, 3.0)
        a = d2green_dnxdny(k, x, y, nx, ny)
        b = d2green_dnxdny(k, y, x, ny, nx)
        assert_allclose(a, b, rtol=1e-14)


def test_perpendicular_normal_gives_zero():
    x = np.zeros(3)
    y = np.array([0.5, 0.0, 0.0])
    n = np.array([0.0, 1.0, 0.0])
    assert dgreen_dny(1.0, x, y, n) == 0.0
    assert dgreen_dnx(1.0, x, y, n) == 0.0
    nz = np.array([0.0, 0.0, 1.0])
    assert d2green_dnxdny(1.0, x, y, n, nz) == 0.0


def test_static_limits(rng):
    k = 1e-8
    for _ in range(20):
        x, y, nx, ny = _random_config(rng)
        diff = x - y
        r = np.linalg.norm(diff)
        drx = diff @ nx / r
        dry = -diff @ ny / r
        g0 = 1.0 / (4 * math.pi * r)
        h0 = -dry / (4 * math.pi * r**2)
        hp0 = -drx / (4 * math.pi * r**2)
        e0 = (3.0 * drx * dry + nx @ ny) / (4 * math.pi * r**3)
        assert_allclose(green(k, x, y), g0, rtol=1e-6)
        assert_allclose(dgreen_dny(k, x, y, ny), h0, rtol=1e-6)
        assert_allclose(dgreen_dnx(k, x, y, nx), hp0, rtol=1e-6)
        assert_allclose(d2green_dnxdny(k, x, y, nx, ny), e0, rtol=1e-6)


def test_evaluate_all_matches_individual_kernels():
    k = 1.7
    x = np.array([0.2, 0.1, -0.4])
    y = np.array([-0.5, 0.3, 0.6])
    nx = _unit([1.0, 2.0, 3.0])
    ny = _unit([-1.0, 0.5, 0.2])
    g, dbl, adj, hyp = evaluate_all(k, x, y, nx, ny)
    assert g == green(k, x, y)
    assert dbl == dgreen_dny(k, x, y, ny)
    assert adj == dgreen_dnx(k, x, y, nx)
    assert hyp == d2green_dnxdny(k, x, y, nx, ny)


def test_kernels_from_separation_matches_evaluate_all():
    k = 0.9
    x = np.array([0.0, 0.0, 0.3])
    y = np.array([0.8, -0.1, 0.0])
    nx = _unit([0.3, 0.9, 0.1])
    ny = _unit([0.5, -0.5, 1.0])
    diff = x - y
    r = np.linalg.norm(diff)
    got = kernels_from_separation(k, diff, r, nx, ny)
    expected = evaluate_all(k, x, y, nx, ny)
    for a, b in zip(got, expected):
        assert_allclose(a, b, rtol=1e-15)


def test_vectorized_source_points():
    k = 1.2
    x = np.zeros(3)
    ys = np.array([[0.5, 0.1, 0.0], [0.0, 0.8, 0.1], [-0.4, 0.4, 0.4]])
    vec = green(k, x, ys)
    assert vec.shape == (3,)
    for i, y in enumerate(ys):
        assert vec[i] == green(k, x, y)


def test_coincident_points_rejected():
    x = np.array([0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="coincident"):
        green(1.0, x, x.copy())
