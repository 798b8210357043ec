import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import DomainError, IntegrabilityError
from fields_and_oracles import (FieldDomain, ScalarField, StarKind, ball_indicator, constant_sphere, gaussian,
                                make_extremizer, make_star_set, plane_extremizer)
from functionals import (NormSpec, PoleWeight, alpha, alpha1, alpha2, alpha_tilde1, beta, beta1, beta_tilde1,
                         dual_quermass, lutwak_mean, precheck, section_dual_quermass, section_field, star_volume,
                         weighted_integral, weighted_norm)
from grassmann_geometry import OrthonormalFrame
from quadrature import QuadratureSpec

TENSOR = QuadratureSpec.tensor_tan(48)
MC = QuadratureSpec.monte_carlo(20_000, seed=7, label='functionals')


def euclidean(n, p=1.0, mu=0.0):
    return NormSpec(FieldDomain.euclidean(n), p, weight_exponent=mu)


def test_gaussian_integral():
    assert weighted_integral(gaussian(3), euclidean(3), TENSOR).value == pytest.approx(math.pi ** 1.5, rel=1e-8)


def test_weighted_gaussian_norm():
    # ∫ e^{−2|x|²}|x|² dx over ℝ² is π/4
    estimate = weighted_norm(gaussian(2), euclidean(2, p=2.0, mu=1.0), TENSOR)
    assert estimate.value == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-8)


@pytest.mark.parametrize('n', [2, 3, 4])
def test_extremizer_norm_is_half_the_sphere(n):
    # ∫ (1+|x|²)^{−(n+1)/2} dx = σ_n/2
    k = 1
    p = (n + 1) / (k + 1)
    estimate = weighted_integral(make_extremizer(n, k), euclidean(n, p=p), TENSOR)
    assert estimate.value == pytest.approx(math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2), rel=1e-6)


def test_plane_extremizer_norm():
    # p = (n+1)/(k+1) gives σ_n/σ_j over A_{n,j}
    n, j, k = 3, 1, 2
    spec = NormSpec(FieldDomain.affine_grassmannian(n, j), (n + 1) / (k + 1))
    assert weighted_integral(plane_extremizer(n, j, k), spec, TENSOR).value == pytest.approx(math.pi, rel=1e-6)


def test_ball_moments():
    assert weighted_integral(ball_indicator(3), euclidean(3), MC).value == pytest.approx(4 * math.pi / 3)
    # ∫_B |x| dx = σ₂/4
    assert weighted_integral(ball_indicator(3), euclidean(3, mu=1.0), MC).value == pytest.approx(math.pi)


def test_supremum_is_a_lower_bound():
    estimate = weighted_norm(gaussian(3), euclidean(3, p=math.inf), MC)
    assert estimate.value == pytest.approx(1.0)
    assert estimate.lower_bound
    with pytest.raises(DomainError, match="p < ∞"):
        weighted_integral(gaussian(3), euclidean(3, p=math.inf), MC)


def test_slow_decay_fails_the_precheck():
    with pytest.raises(IntegrabilityError, match="decay exponent") as info:
        weighted_integral(make_extremizer(3, 1), euclidean(3), TENSOR)
    assert str(info.value).startswith("integrability precheck failed")


def test_origin_weight_fails_the_precheck():
    with pytest.raises(IntegrabilityError, match="μ > −3/p"):
        precheck(ball_indicator(3), euclidean(3, mu=-4.0))


def test_precheck_checks_the_domain():
    with pytest.raises(DomainError):
        precheck(gaussian(2), euclidean(3))


def test_norm_spec_validation():
    with pytest.raises(DomainError, match="1 ≤ p ≤ ∞"):
        euclidean(3, p=0.5)
    with pytest.raises(DomainError, match="pole weights"):
        NormSpec(FieldDomain.sphere(3), weight_exponent=1.0)
    with pytest.raises(DomainError):
        NormSpec(FieldDomain.euclidean(3), pole_weight=PoleWeight(1.0, 0.0))


def test_pole_weight_values():
    assert PoleWeight(2.0, 1.0)(np.array([0.6]))[0] == pytest.approx(0.8 ** 2 * 0.6)
    assert PoleWeight().trivial and not PoleWeight(0.0, -1.0).trivial


@pytest.mark.parametrize('weight, expected', [
    (PoleWeight(cos_exp=2.0), 1 / 3),
    (PoleWeight(sin_exp=2.0), 2 / 3),
])
def test_pole_weighted_sphere_moments(weight, expected):
    spec = NormSpec(FieldDomain.sphere(3), pole_weight=weight)
    estimate = weighted_integral(constant_sphere(3), spec, MC)
    assert estimate.value == pytest.approx(expected, rel=1e-9)


def test_singular_pole_weight_on_the_grassmannian():
    # cos²d is uniform on G_{4,2}, so the mean of 1/cos d is 2
    ones = ScalarField(FieldDomain.grassmannian(4, 2), lambda frames: np.ones(len(frames)))
    spec = NormSpec(FieldDomain.grassmannian(4, 2), pole_weight=PoleWeight(cos_exp=-1.0))
    assert weighted_integral(ones, spec, MC).value == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(IntegrabilityError, match="cos-exponent > −2"):
        weighted_integral(ones, NormSpec(FieldDomain.grassmannian(4, 2), pole_weight=PoleWeight(cos_exp=-2.0)), MC)


def test_sphere_rule_and_monte_carlo_agree():
    star = make_star_set(StarKind.RANDOM_SMOOTH, {'seed': 3}, dim=3)
    exact = star_volume(star, TENSOR)
    sampled = star_volume(star, QuadratureSpec.monte_carlo(40_000, seed=1))
    assert abs(sampled.value - exact.value) < 5 * sampled.stderr


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 8), data=st.data(), mu=st.floats(-0.5, 0.5))
def test_weights_at_p1_are_the_tilde_weights(n, data, mu):
    k = data.draw(st.integers(1, n - 1))
    assert alpha1(k, n, 1.0, mu) == alpha_tilde1(k, n, mu)
    assert beta1(k, n, 1.0, mu) == beta_tilde1(k, n, mu)
    assert alpha1(k, n, 2.0, mu) == alpha(1, k, n, 2.0, mu)
    assert beta1(k, n, 2.0, mu) == beta(1, k, n, 2.0, mu)


@pytest.mark.parametrize('n, k', [(3, 2), (4, 2), (5, 3)])
def test_alpha2_is_alpha1_at_the_critical_exponent(n, k):
    expected = alpha1(k, n, n / k, 0.0)
    assert alpha2(k, n).sin_exp == pytest.approx(expected.sin_exp)
    assert alpha2(k, n).cos_exp == pytest.approx(expected.cos_exp)


def test_dual_quermass_of_balls():
    ball = make_star_set(StarKind.BALL, {'radius': 2.0}, dim=3)
    assert dual_quermass(ball, 3, TENSOR).value == pytest.approx(32 * math.pi / 3, rel=1e-12)
    assert star_volume(ball.scaled(0.5), MC).value == pytest.approx(4 * math.pi / 3, rel=1e-12)


def test_ellipsoid_volume():
    body = make_star_set(StarKind.ELLIPSOID, {'matrix': np.diag([1.0, 4.0, 9.0])}, dim=3)
    assert star_volume(body, TENSOR).value == pytest.approx(2 * math.pi / 9, rel=1e-6)


def test_section_dual_quermass():
    frame = OrthonormalFrame(np.eye(3)[:, :2])
    ball = make_star_set(StarKind.BALL, {}, dim=3)
    assert section_dual_quermass(ball, frame, 2, TENSOR).value == pytest.approx(math.pi, rel=1e-12)
    body = make_star_set(StarKind.ELLIPSOID, {'matrix': np.diag([1.0, 4.0, 9.0])}, dim=3)
    assert section_dual_quermass(body, frame, 2, TENSOR).value == pytest.approx(math.pi / 2, rel=1e-6)
    assert section_field(body, 2, 2, 48)(frame.columns[None])[0] == pytest.approx(math.pi / 2, rel=1e-12)


def test_negative_section_powers_near_the_equator():
    bump = make_star_set(StarKind.EQUATORIAL_BUMP, {'gamma': 2}, dim=3)
    frame = OrthonormalFrame(np.eye(3)[:, 1:])
    with pytest.raises(IntegrabilityError, match="γ·m > −1"):
        section_dual_quermass(bump, frame, -1, TENSOR)


@pytest.mark.parametrize('p', [1.0, 2.0, 5.0])
def test_lutwak_mean_of_the_ball(p):
    ball = make_star_set(StarKind.BALL, {}, dim=3)
    assert lutwak_mean(ball, 2, p, MC).value == pytest.approx(math.pi, rel=1e-9)


@pytest.mark.parametrize('m', [1, 2, 3])
def test_dual_quermass_is_homogeneous(m):
    star = make_star_set(StarKind.RANDOM_SMOOTH, {'seed': 5}, dim=3)
    frame = OrthonormalFrame(np.eye(3)[:, :2])
    assert dual_quermass(star.scaled(1.7), m, TENSOR).value == pytest.approx(
        1.7 ** m * dual_quermass(star, m, TENSOR).value, rel=1e-12)
    assert section_dual_quermass(star.scaled(1.7), frame, m, TENSOR).value == pytest.approx(
        1.7 ** m * section_dual_quermass(star, frame, m, TENSOR).value, rel=1e-12)
    assert star_volume(star.scaled(1.7), TENSOR).value == pytest.approx(
        1.7 ** 3 * star_volume(star, TENSOR).value, rel=1e-12)


@pytest.mark.parametrize('m', [1, 2, 3])
def test_dual_quermass_is_monotone(m):
    star = make_star_set(StarKind.RANDOM_SMOOTH, {'seed': 5}, dim=3)
    ball = make_star_set(StarKind.BALL, {'radius': star.max_radius}, dim=3)
    frame = OrthonormalFrame(np.eye(3)[:, 1:])
    assert dual_quermass(star, m, TENSOR).value < dual_quermass(ball, m, TENSOR).value
    assert section_dual_quermass(star, frame, m, TENSOR).value < section_dual_quermass(ball, frame, m, TENSOR).value


def test_supremum_of_the_extremizer_is_one():
    estimate = weighted_norm(make_extremizer(3, 1), euclidean(3, p=math.inf), MC)
    assert estimate.value == pytest.approx(1.0, rel=1e-12)
    assert estimate.lower_bound


if __name__ == '__main__':
    pytest.main([__file__])
