"""Integration engine: convolution values, norms, scaling identities."""

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from flagint import (
    AccuracyError,
    ExponentConfig,
    FlagKernel,
    PreconditionError,
    QuadratureSpec,
    Window,
    apply_operator,
    apply_riesz_1d,
    indicator_box,
    kernel_eval,
    lp_norm,
    lq_mass,
    piecewise_constant,
    point_pair,
    smooth_bump,
    sufficient_inner_cutoff,
)

F = Fraction


def _cfg(alpha=F(1, 2), beta=F(1, 2), rho=F(2)):
    return ExponentConfig(n=1, m=1, alpha=alpha, beta=beta, rho=rho)


def _sgn_payload():
    # sgn(u) on [-1,1]^2, amplitude 1
    return piecewise_constant(
        1, 1,
        [
            (((-1.0, 0.0), (-1.0, 1.0)), -1.0),
            (((0.0, 1.0), (-1.0, 1.0)), 1.0),
        ],
    )


# ---------------------------------------------------------------------------
# one-variable fractional integral


def test_riesz_exterior_point(grid_spec):
    f = indicator_box(1, 0, ((0.0, 1.0),))
    got = apply_riesz_1d(F(1, 2), f, 2.0, grid_spec)
    assert math.isclose(got, 2.0 * (math.sqrt(2.0) - 1.0), rel_tol=1e-4)


def test_riesz_interior_point_with_sized_cutoff(grid_spec):
    cutoff = sufficient_inner_cutoff(0.5, 1, grid_spec.target_rel_error)
    spec = dataclasses.replace(grid_spec, inner_cutoff=cutoff)
    f = indicator_box(1, 0, ((0.0, 1.0),))
    got = apply_riesz_1d(F(1, 2), f, 0.5, spec)
    assert math.isclose(got, 2.0 * math.sqrt(2.0), rel_tol=1e-3)


def test_riesz_interior_default_cutoff_rejected(grid_spec):
    # at 2^-20 the analytic core bound exceeds a 1e-3 relative target
    f = indicator_box(1, 0, ((0.0, 1.0),))
    with pytest.raises(AccuracyError) as exc:
        apply_riesz_1d(F(1, 2), f, 0.5, grid_spec)
    assert isinstance(exc.value.value, float) and math.isfinite(exc.value.value)
    assert isinstance(exc.value.err, float) and exc.value.err > 0.0


def test_riesz_zero_payload(grid_spec):
    f = indicator_box(1, 0, ((0.0, 1.0),), value=0.0)
    assert apply_riesz_1d(F(1, 2), f, 2.0, grid_spec) == 0.0


def test_riesz_rejects_alpha_out_of_range(grid_spec):
    f = indicator_box(1, 0, ((0.0, 1.0),))
    with pytest.raises(PreconditionError):
        apply_riesz_1d("3/2", f, 2.0, grid_spec)


def test_riesz_rejects_pair_payload(grid_spec):
    f = indicator_box(1, 1, ((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        apply_riesz_1d(F(1, 2), f, 2.0, grid_spec)


# ---------------------------------------------------------------------------
# pair convolution


def test_apply_exterior_sandwich(grid_spec):
    # at (10, 0) the integrand over [-1,1]^2 is pinched between the kernel
    # at the farthest and nearest corners
    cfg = _cfg()
    k = FlagKernel(cfg)
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    value, err = apply_operator(cfg, f, point_pair(10.0, 0.0), grid_spec)
    lo = 4.0 * kernel_eval(k, point_pair(11.0, 1.0))
    hi = 4.0 * kernel_eval(k, point_pair(9.0, 0.0))
    assert lo - err <= value <= hi + err
    assert err < 1e-3 * value


def test_apply_grid_vs_monte_carlo(grid_spec, mc_spec):
    cfg = _cfg()
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    pt = point_pair(10.0, 0.0)
    vg, eg = apply_operator(cfg, f, pt, grid_spec)
    vm, em = apply_operator(cfg, f, pt, mc_spec)
    assert abs(vg - vm) <= eg + em


def test_apply_linearity_is_exact_on_grid(grid_spec):
    # doubling the payload doubles every node value; powers of two commute
    # with rounding, so the results match bit for bit
    cfg = _cfg()
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    pt = point_pair(10.0, 0.0)
    v1, e1 = apply_operator(cfg, f, pt, grid_spec)
    v2, e2 = apply_operator(cfg, f.scale_values(2.0), pt, grid_spec)
    assert v2 == 2.0 * v1
    assert e2 == 2.0 * e1


def test_apply_translation_covariance(grid_spec):
    cfg = _cfg(alpha=F(9, 10), beta=F(3, 10))
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    shift = (0.5, 0.25)
    pt = point_pair(10.0, 0.0)
    moved = point_pair(10.5, 0.25)
    v0, _ = apply_operator(cfg, f, pt, grid_spec)
    v1, _ = apply_operator(cfg, f.translate(shift), moved, grid_spec)
    assert math.isclose(v0, v1, rel_tol=1e-12)


def test_apply_rejects_dim_mismatch(grid_spec):
    cfg = ExponentConfig(n=2, m=1, alpha=F(1, 2), beta=F(1, 2), rho=F(2))
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    with pytest.raises(ValueError):
        apply_operator(cfg, f, point_pair([10.0, 0.0], 0.0), grid_spec)


def test_halving_cutoff_shifts_less_than_reported_error():
    # interior point: refining the analytic core must stay inside the
    # previous error bar
    cfg = _cfg(alpha=F(9, 10), beta=F(3, 10))
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    pt = point_pair(0.5, 0.25)
    spec_a = QuadratureSpec(inner_cutoff=-60)
    spec_b = QuadratureSpec(inner_cutoff=-61)
    va, ea = apply_operator(cfg, f, pt, spec_a)
    vb, eb = apply_operator(cfg, f, pt, spec_b)
    assert abs(va - vb) <= ea + eb


# ---------------------------------------------------------------------------
# scaling identities for the q-mass


def _scan_setup():
    cfg = ExponentConfig(
        n=1, m=1, alpha=F(9, 10), beta=F(3, 10), rho=F(2), p=F(1), q=F(2)
    )
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    window = Window(n=1, m=1, box=((2.0, 4.0), (-4.0, 4.0)))
    return cfg, f, window


def test_lq_mass_dilation_identity(grid_spec):
    # payload and window dilated together scale the mass by exactly
    # delta^(q(alpha+rho beta) + n + rho m); dyadic delta keeps the
    # quadrature plans affine images of each other
    cfg, f, window = _scan_setup()
    base, _ = lq_mass(cfg, f, window, 2, grid_spec)
    delta = 2.0
    scaled, _ = lq_mass(
        cfg,
        f.dilate(delta, 1.0, 2.0),
        window.dilated(delta, 1.0, 2.0),
        2,
        grid_spec,
    )
    predicted = delta ** (2.0 * (0.9 + 2.0 * 0.3) + 1.0 + 2.0) * base
    assert math.isclose(scaled, predicted, rel_tol=1e-12)


def test_lq_mass_lambda_lower_bound(grid_spec):
    # for f >= 0 and lam >= 1 the anisotropy of the kernel forces
    # mass(lam) >= lam^(q beta + m) * mass
    cfg, f, window = _scan_setup()
    base, base_err = lq_mass(cfg, f, window, 2, grid_spec)
    lam = 4.0
    scaled, err = lq_mass(
        cfg, f.dilate(1.0, lam, 2.0), window.dilated(1.0, lam, 2.0), 2, grid_spec
    )
    bound = lam ** (2.0 * 0.3 + 1.0) * (base - base_err)
    assert scaled + err >= bound


def test_lq_mass_requires_q_above_one(grid_spec):
    cfg, f, window = _scan_setup()
    with pytest.raises(PreconditionError):
        lq_mass(cfg, f, window, 1, grid_spec)


def test_lq_mass_monte_carlo_is_deterministic(mc_spec):
    cfg, f, window = _scan_setup()
    first = lq_mass(cfg, f, window, 2, mc_spec)
    second = lq_mass(cfg, f, window, 2, mc_spec)
    assert first == second
    reseeded = dataclasses.replace(mc_spec, seed=1)
    third = lq_mass(cfg, f, window, 2, reseeded)
    assert third[0] != first[0]


def test_lq_mass_monte_carlo_brackets_grid(grid_spec, mc_spec):
    cfg, f, window = _scan_setup()
    vg, eg = lq_mass(cfg, f, window, 2, grid_spec)
    vm, em = lq_mass(cfg, f, window, 2, mc_spec)
    assert abs(vg - vm) <= eg + em


# ---------------------------------------------------------------------------
# payload norms


def test_lp_norm_indicator(grid_spec):
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    assert math.isclose(lp_norm(f, 2, grid_spec), 2.0, rel_tol=1e-12)
    assert f.exact_lp_mass(2.0) == 4.0


def test_lp_norm_signed_cells(grid_spec):
    f = _sgn_payload()
    assert math.isclose(lp_norm(f, 3, grid_spec), 4.0 ** (1.0 / 3.0), rel_tol=1e-12)
    assert f.exact_lp_mass(3.0) == 4.0
    assert not f.is_nonnegative()


def test_lp_norm_bump_matches_gauss_oracle(grid_spec):
    # separable profile: the 2-d L1 mass is the square of the 1-d integral
    nodes, weights = np.polynomial.legendre.leggauss(200)
    one_d = float(np.sum(weights * np.exp(1.0 - 1.0 / (1.0 - nodes ** 2))))
    f = smooth_bump(1, 1, radius=1.0)
    got = lp_norm(f, 1, grid_spec)
    assert math.isclose(got, one_d ** 2, rel_tol=1e-3)


def test_lp_norm_bump_monte_carlo(mc_spec):
    f = smooth_bump(1, 1, radius=1.0)
    nodes, weights = np.polynomial.legendre.leggauss(200)
    one_d = float(np.sum(weights * np.exp(1.0 - 1.0 / (1.0 - nodes ** 2))))
    assert math.isclose(lp_norm(f, 1, mc_spec), one_d ** 2, rel_tol=0.05)


def test_lp_norm_requires_p_at_least_one(grid_spec):
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    with pytest.raises(PreconditionError):
        lp_norm(f, "1/2", grid_spec)


# ---------------------------------------------------------------------------
# payload construction


def test_smooth_bump_scalar_radius_broadcasts():
    assert smooth_bump(1, 1, radius=0.5) == smooth_bump(1, 1, radius=[0.5, 0.5])


def test_smooth_bump_peak_and_support():
    f = smooth_bump(1, 1, radius=1.0, amplitude=3.0)
    assert f.evaluate(np.array([[0.0, 0.0]]))[0] == 3.0
    assert f.evaluate(np.array([[1.0, 0.0]]))[0] == 0.0
    assert f.support == ((-1.0, 1.0), (-1.0, 1.0))
    assert f.min_cells_hint == 8


def test_piecewise_constant_rejects_overlap():
    with pytest.raises(ValueError):
        piecewise_constant(
            1, 1,
            [
                (((-1.0, 0.5), (-1.0, 1.0)), 1.0),
                (((0.0, 1.0), (-1.0, 1.0)), 2.0),
            ],
        )


def test_dilate_tracks_both_axes():
    f = indicator_box(1, 1, ((-1.0, 1.0), (-1.0, 1.0)))
    g = f.dilate(2.0, 3.0, 2.0)
    assert g.support == ((-2.0, 2.0), (-12.0, 12.0))


# ---------------------------------------------------------------------------
# spec validation and cutoff sizing


@pytest.mark.parametrize(
    "kwargs",
    [
        {"method": "trapezoid"},
        {"points_per_axis": 3},
        {"samples": 0},
        {"seed": -1},
        {"inner_cutoff": 0},
        {"inner_cutoff": -2000},
        {"target_rel_error": 0.0},
    ],
)
def test_quadrature_spec_validation(kwargs):
    with pytest.raises(ValueError):
        QuadratureSpec(**kwargs)


def test_sufficient_inner_cutoff_matches_formula():
    for alpha, dim, target in [(0.5, 1, 1e-3), (0.9, 2, 1e-3), (0.3, 2, 1e-4)]:
        rhs = 0.25 * target * alpha / (dim * 2.0 ** dim)
        expected = min(-4, math.floor(math.log2(rhs) / alpha))
        assert sufficient_inner_cutoff(alpha, dim, target) == expected
    assert sufficient_inner_cutoff(0.5, 1, 1e-3) == -28


def test_sufficient_inner_cutoff_bound_holds():
    for alpha, dim, target in [(0.5, 1, 1e-3), (0.9, 2, 1e-3)]:
        e = sufficient_inner_cutoff(alpha, dim, target)
        core = dim * 2.0 ** dim * (2.0 ** e) ** alpha / alpha
        assert core <= target
