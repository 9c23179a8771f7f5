"""Bessel evaluation and the CTOA eigenvalue equation."""

import math

import numpy as np
import pytest

from chronos.config import SystemConfig
from chronos.errors import DomainError, InsufficientRangeError, NumericalError
from chronos.specfun import (
    RootTable,
    bessel_j,
    bessel_j_derivative,
    count_sign_changes,
    ctoa_characteristic,
    ctoa_characteristic_derivative,
    ctoa_roots_below,
    find_ctoa_roots,
    residual_bound,
)


def test_half_integer_closed_forms():
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-12)
    assert bessel_j(-0.5, math.pi) == pytest.approx(-math.sqrt(2) / math.pi, rel=1e-12)


def test_small_argument_leading_term():
    x = 1e-6
    assert bessel_j(0.25, x) == pytest.approx((x / 2) ** 0.25 / math.gamma(1.25), rel=1e-6)


def test_non_positive_argument():
    with pytest.raises(DomainError):
        bessel_j(0.25, 0.0)
    with pytest.raises(DomainError):
        bessel_j_derivative(0.75, np.array([1.0, -1.0]))


@pytest.mark.parametrize("nu", [0.25, 0.75])
@pytest.mark.parametrize("x", [0.5, 1.0, 5.0, 20.0, 50.0])
def test_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("nu", [0.25, 0.75])
@pytest.mark.parametrize("x", [0.5, 3.0, 17.0])
def test_wronskian(nu, x):
    w = bessel_j(nu, x) * bessel_j_derivative(-nu, x) - bessel_j_derivative(nu, x) * bessel_j(-nu, x)
    assert w == pytest.approx(-2 * math.sin(nu * math.pi) / (math.pi * x), rel=1e-9)


def test_characteristic_at_quarter_pi():
    x = np.array([0.7, 2.3, 11.0])
    expected = bessel_j(-0.75, x) * bessel_j(-0.25, x) - bessel_j(0.75, x) * bessel_j(0.25, x)
    np.testing.assert_allclose(ctoa_characteristic(x, math.pi / 4), expected, rtol=1e-12)


def test_characteristic_rejects_degenerate_gamma():
    with pytest.raises(DomainError):
        ctoa_characteristic(1.0, 0.0)


def test_sign_change_near_arrival_root():
    assert ctoa_characteristic(8.9, 0.01) * ctoa_characteristic(9.2, 0.01) < 0


def test_roots_reproduce_arrival_eigenvalues():
    cfg = SystemConfig(gamma=0.01)
    roots = find_ctoa_roots(0.01, 12)
    taus = roots.taus(cfg)
    assert np.min(np.abs(taus - 0.02765)) <= 5e-5
    assert np.min(np.abs(taus - 0.03758)) <= 5e-5
    assert np.min(np.abs(np.asarray(roots.roots) - 9.0416)) < 5e-3
    assert np.min(np.abs(np.asarray(roots.roots) - 6.6525)) < 5e-3


def test_first_root_small_gamma():
    roots = find_ctoa_roots(0.01, 1)
    assert roots.root(1) == pytest.approx(math.sqrt(3) / 2 * math.tan(0.01), rel=0.05)


def test_roots_bracket_sign_changes():
    gamma = 0.01
    roots = find_ctoa_roots(gamma, 15)
    for r in roots.roots:
        delta = 1e-6 * r
        assert ctoa_characteristic(r - delta, gamma) * ctoa_characteristic(r + delta, gamma) < 0
    assert all(res <= bound for res, bound in zip(roots.residuals, roots.bounds))


@pytest.mark.parametrize("gamma", [0.01, math.pi / 4, math.pi / 6])
def test_no_missed_roots(gamma):
    x_max = 20.0
    assert len(ctoa_roots_below(gamma, x_max)) == count_sign_changes(gamma, x_max)


def test_first_root_quarter_pi_before_first_bessel_zero():
    xs = np.arange(1, 5001) * 1e-3
    product = bessel_j(-0.75, xs) * bessel_j(-0.25, xs) * bessel_j(0.75, xs) * bessel_j(0.25, xs)
    first_zero = xs[np.flatnonzero(np.sign(product[:-1]) != np.sign(product[1:]))[0]]
    assert 0 < find_ctoa_roots(math.pi / 4, 1).root(1) < first_zero


def test_insufficient_range():
    with pytest.raises(InsufficientRangeError) as info:
        find_ctoa_roots(0.01, 10, x_max=2.0)
    assert info.value.diagnostics["count"] == 10
    assert info.value.exit_code == 3


def test_root_table_validation():
    with pytest.raises(NumericalError):
        RootTable(gamma=0.01, roots=(2.0, 1.0), residuals=(0.0, 0.0))
    with pytest.raises(NumericalError):
        RootTable(gamma=0.01, roots=(-1.0,), residuals=(0.0,))
    table = RootTable(gamma=0.01, roots=(1.0, 2.0), residuals=(0.0, 0.0))
    with pytest.raises(LookupError):
        table.root(3)
    assert table.root(2) == 2.0


def test_root_table_csv(tmp_path):
    cfg = SystemConfig(gamma=0.01)
    roots = find_ctoa_roots(0.01, 5)
    path = roots.to_csv(tmp_path / "roots.csv", cfg)
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"n,r_n,tau_n,residual,residual_bound"
    assert len([line for line in lines if line]) == 6
    assert b"\r" not in path.read_bytes()


@pytest.mark.parametrize("gamma", [0.01, math.pi / 6])
def test_roots_reach_double_precision(gamma):
    roots = find_ctoa_roots(gamma, 200)
    residuals = np.asarray(roots.residuals)
    bounds = np.asarray(roots.bounds)
    assert np.all(residuals <= bounds)
    np.testing.assert_allclose(bounds, residual_bound(np.asarray(roots.roots), gamma))
    # a handful of ulps of x is all F can resolve
    assert residuals.max() < 2e-9


def test_characteristic_derivative_matches_difference():
    x = np.array([0.7, 3.1, 42.0])
    h = 1e-6
    central = (ctoa_characteristic(x + h, 0.3) - ctoa_characteristic(x - h, 0.3)) / (2 * h)
    np.testing.assert_allclose(ctoa_characteristic_derivative(x, 0.3), central, rtol=1e-6, atol=1e-7)


def test_root_table_enforces_bounds():
    with pytest.raises(NumericalError) as info:
        RootTable(gamma=0.01, roots=(1.0, 2.0), residuals=(1e-14, 1e-7), bounds=(1e-12, 1e-12))
    assert info.value.diagnostics["index"] == 2
    with pytest.raises(NumericalError):
        RootTable(gamma=0.01, roots=(1.0,), residuals=(0.0,), bounds=(1e-12, 1e-12))
