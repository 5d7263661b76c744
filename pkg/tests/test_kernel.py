"""Pointwise kernel values, homogeneity, domination, gradient bounds."""

import math
from fractions import Fraction

import numpy as np
import pytest

from flagint import (
    AccuracyError,
    ExponentConfig,
    FlagKernel,
    SingularityError,
    derive_ab,
    dominating_kernel_eval,
    gradient_bound_ratio,
    gradient_bound_ratios_split,
    gradient_oracle_norm,
    kernel_eval,
    point_pair,
    product_kernel_points,
)

F = Fraction


def _kernel(n=1, m=1, alpha=F(1, 2), beta=F(1, 2), rho=F(2)):
    return FlagKernel(ExponentConfig(n=n, m=m, alpha=alpha, beta=beta, rho=rho))


# ---------------------------------------------------------------------------
# frozen point values


def test_unit_point_value():
    k = _kernel()
    assert kernel_eval(k, point_pair(1.0, 0.0)) == 1.0


def test_hand_computed_value():
    # 2^{-1/2} * (4 + 3)^{-1/2} = 14^{-1/2}
    k = _kernel()
    value = kernel_eval(k, point_pair(2.0, 3.0))
    assert math.isclose(value, 14.0 ** -0.5, rel_tol=1e-14)


def test_higher_dimensional_norms_are_euclidean():
    k = _kernel(n=2, m=2, alpha=F(3, 2), beta=F(1, 2), rho=F(2))
    pt = point_pair([3.0, 4.0], [0.0, 7.0])
    # |x| = 5, |y| = 7: 5^{3/2-2} * (25+7)^{1/2-2}
    expected = 5.0 ** -0.5 * 32.0 ** -1.5
    assert math.isclose(kernel_eval(k, pt), expected, rel_tol=1e-14)


def test_singularity_raises():
    k = _kernel()
    with pytest.raises(SingularityError):
        kernel_eval(k, point_pair(0.0, 1.0))
    with pytest.raises(SingularityError):
        kernel_eval(k, point_pair(1e-305, 1.0))


def test_dimension_mismatch():
    k = _kernel()
    with pytest.raises(ValueError):
        kernel_eval(k, point_pair([1.0, 2.0], 1.0))


# ---------------------------------------------------------------------------
# homogeneity and order properties


def test_homogeneity_over_seeded_samples():
    rng = np.random.default_rng(7)
    for alpha, beta, rho in [(F(1, 2), F(1, 2), F(2)),
                             (F(9, 10), F(3, 10), F(2)),
                             (F(1, 4), F(3, 4), F(3, 2))]:
        k = _kernel(alpha=alpha, beta=beta, rho=rho)
        xn = rng.uniform(0.05, 8.0, size=2000)
        yn = rng.uniform(0.0, 8.0, size=2000)
        delta = 2.0 ** rng.uniform(-6, 6, size=2000)
        lhs = k.eval_norms(delta * xn, delta ** float(rho) * yn)
        rhs = delta ** k.scaling_exponent * k.eval_norms(xn, yn)
        assert np.max(np.abs(lhs / rhs - 1.0)) < 1e-12


def test_monotone_in_each_norm():
    k = _kernel(alpha=F(9, 10), beta=F(3, 10))
    rng = np.random.default_rng(11)
    xn = rng.uniform(0.1, 4.0, size=500)
    yn = rng.uniform(0.0, 4.0, size=500)
    base = k.eval_norms(xn, yn)
    assert np.all(k.eval_norms(xn * 1.5, yn) <= base)
    assert np.all(k.eval_norms(xn, yn + 0.5) <= base)


def test_anisotropy_lower_bound_in_y():
    # scaling |y| by lam >= 1 loses at most lam^{beta-m}
    k = _kernel(alpha=F(1, 2), beta=F(3, 10))
    rng = np.random.default_rng(13)
    xn = rng.uniform(0.1, 4.0, size=500)
    yn = rng.uniform(0.0, 4.0, size=500)
    for lam in (2.0, 8.0):
        lhs = k.eval_norms(xn, lam * yn)
        rhs = lam ** (float(k.cfg.beta) - k.m) * k.eval_norms(xn, yn)
        assert np.all(lhs >= rhs * (1.0 - 1e-12))


def test_domination_by_product_kernel():
    rng = np.random.default_rng(17)
    for n, m, alpha, beta, rho in [(1, 1, F(9, 10), F(3, 10), F(2)),
                                   (2, 1, F(1), F(1, 4), F(2)),
                                   (1, 2, F(1, 2), F(1, 2), F(3, 2))]:
        cfg = ExponentConfig(n=n, m=m, alpha=alpha, beta=beta, rho=rho)
        k = FlagKernel(cfg)
        ab = derive_ab(cfg)
        pts = rng.uniform(-4.0, 4.0, size=(2000, n + m))
        keep = (np.abs(pts[:, :n]).max(axis=1) > 1e-3) & (
            np.abs(pts[:, n:]).max(axis=1) > 1e-3
        )
        pts = pts[keep]
        flag = k.eval_points(pts)
        prod = product_kernel_points(k, ab, pts)
        assert np.all(flag <= prod * (1.0 + 1e-12))


def test_dominating_kernel_point_example():
    # n=m=1, rho=1, alpha=beta=1/2 gives a=b=1/2; at (1,1) the product
    # kernel is 1 while the flag kernel is 2^{-1/2}
    cfg = ExponentConfig(n=1, m=1, alpha=F(1, 2), beta=F(1, 2), rho=F(1))
    k = FlagKernel(cfg)
    ab = derive_ab(cfg)
    assert ab.a == F(1, 2) and ab.b == F(1, 2)
    pt = point_pair(1.0, 1.0)
    assert dominating_kernel_eval(k, ab, pt) == 1.0
    assert math.isclose(kernel_eval(k, pt), 2.0 ** -0.5, rel_tol=1e-14)


def test_dominating_kernel_singular_on_y_axis():
    cfg = ExponentConfig(n=1, m=1, alpha=F(1, 2), beta=F(1, 2), rho=F(1))
    k = FlagKernel(cfg)
    ab = derive_ab(cfg)
    with pytest.raises(SingularityError):
        dominating_kernel_eval(k, ab, point_pair(1.0, 0.0))


# ---------------------------------------------------------------------------
# gradient diagnostics


def test_gradient_ratio_pure_power_point():
    # rho=1, alpha=beta=1/2 at (3, 0): Omega = x^{-1}, so
    # |Omega'| / (Omega * 1/x) = 1 exactly in the limit
    k = _kernel(alpha=F(1, 2), beta=F(1, 2), rho=F(1))
    ratio = gradient_bound_ratio(k, point_pair(3.0, 0.0))
    assert math.isclose(ratio, 1.0, rel_tol=1e-6)


def test_gradient_ratio_reflection_symmetry():
    k = _kernel(alpha=F(9, 10), beta=F(3, 10))
    a = gradient_bound_ratio(k, point_pair(1.7, 0.9))
    b = gradient_bound_ratio(k, point_pair(-1.7, 0.9))
    assert math.isclose(a, b, rel_tol=1e-10)


def test_gradient_ratio_rejects_large_step():
    k = _kernel()
    with pytest.raises(AccuracyError):
        gradient_bound_ratio(k, point_pair(0.001, 1.0), h=0.01)


def test_gradient_matches_closed_form_oracle():
    rng = np.random.default_rng(19)
    for alpha, beta, rho in [(F(1, 2), F(1, 2), F(2)), (F(9, 10), F(3, 10), F(2))]:
        k = _kernel(alpha=alpha, beta=beta, rho=rho)
        for _ in range(50):
            x = rng.uniform(0.3, 4.0) * rng.choice([-1.0, 1.0])
            y = rng.uniform(0.3, 4.0) * rng.choice([-1.0, 1.0])
            pt = point_pair(x, y)
            oracle = gradient_oracle_norm(k, pt)
            omega = kernel_eval(k, pt)
            factor = max(1.0 / abs(x), 1.0 / (abs(x) ** 2 + abs(y)))
            measured = gradient_bound_ratio(k, pt) * omega * factor
            assert math.isclose(measured, oracle, rel_tol=1e-5)


def test_gradient_ratio_bounded_over_scales():
    # stability across |x| in [2^-6, 2^6]; the theoretical bound is a
    # constant depending only on the exponents
    k = _kernel(alpha=F(9, 10), beta=F(3, 10))
    rng = np.random.default_rng(23)
    ratios = []
    for _ in range(200):
        x = 2.0 ** rng.uniform(-6, 6)
        y = rng.uniform(0.1, 4.0)
        ratios.append(gradient_bound_ratio(k, point_pair(x, y)))
    assert max(ratios) < 10.0


def test_split_ratios_are_dilation_invariant():
    # each per-factor ratio compares quantities with matching homogeneity
    # degrees, so (x, y) -> (dx, d^rho y) leaves both unchanged
    k = _kernel(alpha=F(9, 10), beta=F(3, 10), rho=F(2))
    base_x, base_y = gradient_bound_ratios_split(k, point_pair(1.3, 0.7))
    for delta in (0.25, 4.0):
        rx, ry = gradient_bound_ratios_split(k, point_pair(delta * 1.3, delta ** 2 * 0.7))
        assert math.isclose(rx, base_x, rel_tol=1e-3)
        assert math.isclose(ry, base_y, rel_tol=1e-3)


def test_split_ratios_refine_the_coarse_factor():
    k = _kernel(alpha=F(9, 10), beta=F(3, 10), rho=F(2))
    pt = point_pair(0.3, 1.1)
    rx, ry = gradient_bound_ratios_split(k, pt)
    assert rx >= 0.0 and ry >= 0.0
    assert max(rx, ry) < 10.0
