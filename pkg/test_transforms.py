import math

import numpy as np
import pytest
from scipy import stats

from errors import DomainError, IntegrabilityError
from fields_and_oracles import (ScalarField, FieldDomain, FieldMetadata, ball_indicator, constant_sphere,
                                coordinate_power, gaussian, lines_from_sphere, make_extremizer, oracle_jk_extremizer,
                                oracle_kplane, plane_extremizer, plane_gaussian, pullback_to_sphere,
                                random_smooth_sphere)
from grassmann_geometry import AffinePlane, OrthonormalFrame, haar_frames, lift, sample_affine_planes
from quadrature import QuadratureSpec
from streams import RandomStream
from transforms import (conjugation_factor, funk_field, funk_from_radon, funk_jk_transform, funk_transform,
                        jk_transform, jk_values, kplane_transform, kplane_values, radon_from_funk)

TENSOR = QuadratureSpec.tensor_tan(64)


def planes_for(seed: int, n: int, k: int, count: int = 100):
    rng = RandomStream(seed, f"planes/{n}/{k}").generator()
    return sample_affine_planes(rng, count, n, k, support_radius=2.0).planes


@pytest.mark.parametrize('field_factory, n, k', [
    (gaussian, 2, 1),
    (gaussian, 3, 1),
    (gaussian, 3, 2),
    (ball_indicator, 2, 1),
    (ball_indicator, 3, 1),
    (ball_indicator, 3, 2),
    (lambda n: make_extremizer(n, 1), 2, 1),
    (lambda n: make_extremizer(n, 1), 3, 1),
])
def test_tensor_rule_matches_closed_forms(field_factory, n, k):
    f = field_factory(n)
    planes = planes_for(31, n, k)
    numeric = kplane_values(f, planes, 64, tensor=True)
    assert np.max(np.abs(numeric - oracle_kplane(f, planes))) <= 1e-3


def test_radial_rule_matches_the_extremizer():
    f = make_extremizer(3, 2)
    planes = planes_for(37, 3, 2)
    assert np.allclose(kplane_values(f, planes, 48), oracle_kplane(f, planes), rtol=1e-6)


def test_single_plane_tensor_and_monte_carlo():
    f = gaussian(3)
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :1]), np.array([0.0, 0.4, -0.3]))
    exact = oracle_kplane(f, plane)
    assert kplane_transform(f, plane, TENSOR).value == pytest.approx(exact, rel=1e-6)
    estimate = kplane_transform(f, plane, QuadratureSpec.monte_carlo(50_000, seed=3, label='rk'))
    assert abs(estimate.value - exact) < 5 * estimate.stderr
    assert estimate.samples_used == 50_000


def test_monte_carlo_does_not_depend_on_threads():
    f = make_extremizer(3, 1)
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :1]), np.array([0.0, 1.0, 0.0]))
    one = kplane_transform(f, plane, QuadratureSpec.monte_carlo(20_000, seed=5, block_size=1024))
    four = kplane_transform(f, plane, QuadratureSpec.monte_carlo(20_000, seed=5, block_size=1024, threads=4))
    assert one == four


def test_doubling_samples_shrinks_the_error():
    f = gaussian(2)
    plane = AffinePlane(OrthonormalFrame(np.eye(2)[:, :1]), np.array([0.0, 0.5]))
    small = kplane_transform(f, plane, QuadratureSpec.monte_carlo(40_000, seed=9, label='a'))
    large = kplane_transform(f, plane, QuadratureSpec.monte_carlo(80_000, seed=9, label='a'))
    assert small.stderr / large.stderr == pytest.approx(math.sqrt(2), rel=0.2)


def test_kplane_transform_checks_integrability():
    slow = ScalarField(FieldDomain.euclidean(3), lambda x: np.ones(len(x)), FieldMetadata(decay_exponent=1.0))
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.zeros(3))
    with pytest.raises(IntegrabilityError, match="decay exponent > 2"):
        kplane_transform(slow, plane, TENSOR)


def test_kplane_transform_checks_the_domain():
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :1]), np.zeros(3))
    with pytest.raises(DomainError):
        kplane_transform(gaussian(2), plane, TENSOR)


def test_jk_with_points_is_the_kplane_transform():
    f = gaussian(3)
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.array([0.0, 0.0, 0.8]))
    assert jk_transform(f, plane, TENSOR).value == pytest.approx(kplane_transform(f, plane, TENSOR).value,
                                                                 rel=1e-6)


def test_jk_extremizer_matches_the_oracle():
    f = plane_extremizer(3, 1, 2)
    planes = planes_for(41, 3, 2, count=20)
    assert np.allclose(jk_values(f, planes, 48), oracle_jk_extremizer(3, 1, 2, planes), rtol=1e-6)


def test_jk_gaussian_monte_carlo():
    # R_{1,2} of e^{−|ζ|²} is √π e^{−|τ|²}
    f = plane_gaussian(3, 1)
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.array([0.0, 0.0, 0.5]))
    estimate = jk_transform(f, plane, QuadratureSpec.monte_carlo(40_000, seed=2, label='rjk'))
    assert abs(estimate.value - math.sqrt(math.pi) * math.exp(-0.25)) < 5 * estimate.stderr


def test_jk_needs_j_below_k():
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :1]), np.zeros(3))
    with pytest.raises(DomainError):
        jk_transform(plane_gaussian(3, 1), plane, TENSOR)


def test_funk_of_a_constant():
    frame = OrthonormalFrame(np.eye(3)[:, :2])
    assert funk_transform(constant_sphere(3), frame, TENSOR).value == pytest.approx(1.0, rel=1e-12)
    estimate = funk_transform(constant_sphere(3), frame, QuadratureSpec.monte_carlo(1000, seed=1))
    assert estimate.value == pytest.approx(1.0) and estimate.stderr == 0.0


def test_funk_rule_against_monte_carlo():
    phi = random_smooth_sphere(3, seed=2)
    frame = OrthonormalFrame(haar_frames(np.random.default_rng(8), 1, 3, 2)[0])
    exact = funk_transform(phi, frame, QuadratureSpec.tensor_tan(48)).value
    estimate = funk_transform(phi, frame, QuadratureSpec.monte_carlo(50_000, seed=4, label='funk'))
    assert abs(estimate.value - exact) < 5 * estimate.stderr


def test_funk_over_lines_is_the_funk_transform():
    phi = random_smooth_sphere(3, seed=6)
    frame = OrthonormalFrame(haar_frames(np.random.default_rng(9), 1, 3, 2)[0])
    direct = funk_transform(phi, frame, QuadratureSpec.tensor_tan(48)).value
    via_lines = funk_jk_transform(lines_from_sphere(phi), frame, QuadratureSpec.tensor_tan(48)).value
    assert via_lines == pytest.approx(direct, rel=1e-10)


def test_conjugation_factor():
    assert conjugation_factor(0, 1) == pytest.approx(math.pi)
    assert conjugation_factor(1, 2) == pytest.approx(2.0)


def test_radon_through_the_lift():
    f = gaussian(2)
    plane = AffinePlane(OrthonormalFrame(np.eye(2)[:, :1]), np.array([0.0, 0.5]))
    lifted = pullback_to_sphere(f, 0, 1)
    value = radon_from_funk(lifted, plane, QuadratureSpec.tensor_tan(64)).value
    assert value == pytest.approx(oracle_kplane(f, plane), rel=1e-3)


def test_funk_through_the_plane():
    f = gaussian(2)
    plane = AffinePlane(OrthonormalFrame(np.eye(2)[:, :1]), np.array([0.0, 0.5]))
    lifted = pullback_to_sphere(f, 0, 1)
    frame = lift(plane)
    direct = funk_jk_transform(lifted, frame, QuadratureSpec.tensor_tan(64)).value
    assert funk_from_radon(lifted, frame, QuadratureSpec.tensor_tan(64)).value == pytest.approx(direct, rel=1e-3)


def test_kplane_transform_is_linear():
    f, g = gaussian(3), make_extremizer(3, 1)
    planes = planes_for(43, 3, 1, count=20)
    combined = kplane_values(f.combine(2.0, g, -0.5), planes, 48, tensor=True)
    separate = 2.0 * kplane_values(f, planes, 48, tensor=True) - 0.5 * kplane_values(g, planes, 48, tensor=True)
    assert np.allclose(combined, separate, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize('field_factory', [gaussian, ball_indicator, lambda n: make_extremizer(n, 1)])
def test_kplane_transform_keeps_positivity(field_factory):
    f = field_factory(3)
    assert np.all(kplane_values(f, planes_for(47, 3, 1), 32, tensor=True) >= 0)
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :1]), np.array([0.0, 0.3, 0.2]))
    assert kplane_transform(f, plane, QuadratureSpec.monte_carlo(5000, seed=6)).value >= 0


@pytest.mark.parametrize('n, rank', [(3, 2), (4, 3)])
def test_funk_annihilates_odd_functions(n, rank):
    phi = coordinate_power(n, -1, 1)
    frame = OrthonormalFrame(haar_frames(np.random.default_rng(rank), 1, n, rank)[0])
    assert abs(funk_transform(phi, frame, QuadratureSpec.tensor_tan(32)).value) < 1e-12
    estimate = funk_transform(phi, frame, QuadratureSpec.monte_carlo(40_000, seed=12, label='odd'))
    assert abs(estimate.value) < 5 * estimate.stderr


@pytest.mark.parametrize('n, rank', [(3, 2), (4, 2), (4, 3)])
def test_funk_of_the_squared_last_coordinate(n, rank):
    # mean of θ_n² over the great subsphere of τ₀ is ‖P_{τ₀} e_n‖²/k
    phi = coordinate_power(n, n - 1, 2)
    frame = OrthonormalFrame(haar_frames(np.random.default_rng(10 * n + rank), 1, n, rank)[0])
    expected = np.sum(frame.columns[-1] ** 2) / rank
    assert funk_transform(phi, frame, QuadratureSpec.tensor_tan(16)).value == pytest.approx(expected, rel=1e-12)


def test_funk_transforms_compose():
    # F_{2,3} F_2 = F_3 on S³
    phi = coordinate_power(4, 3, 2)
    frame = OrthonormalFrame(haar_frames(np.random.default_rng(14), 1, 4, 3)[0])
    q = QuadratureSpec.tensor_tan(16)
    composed = funk_jk_transform(funk_field(phi, 2, 16), frame, q).value
    assert composed == pytest.approx(funk_transform(phi, frame, q).value, rel=1e-10)


@pytest.mark.parametrize('j, t', [(1, 0.3), (1, 0.8), (2, 0.3), (2, 0.8)])
def test_subspace_projections_follow_the_beta_law(j, t):
    # ‖P_ζ e₁‖² for Haar j-subspaces ζ of a 3-space containing e₁ is Beta(j/2, (3−j)/2)
    below = ScalarField(FieldDomain.grassmannian(4, j),
                        lambda frames: (np.sum(np.asarray(frames)[:, 0, :] ** 2, axis=-1) <= t).astype(float))
    frame = OrthonormalFrame(np.eye(4)[:, :3])
    estimate = funk_jk_transform(below, frame, QuadratureSpec.monte_carlo(40_000, seed=15, label='beta'))
    assert abs(estimate.value - stats.beta.cdf(t, j / 2, (3 - j) / 2)) < 5 * estimate.stderr


def test_radon_of_the_extremizer_through_the_lift():
    # Λ_j ρ₁^{−1} f₀ is constant, so the lifted side reproduces the closed form
    lifted = pullback_to_sphere(plane_extremizer(3, 1, 2), 1, 2)
    for offset in ([0.0, 0.0, 0.7], [0.0, 0.0, 3.0]):
        plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.array(offset))
        value = radon_from_funk(lifted, plane, QuadratureSpec.tensor_tan(16)).value
        assert value == pytest.approx(oracle_jk_extremizer(3, 1, 2, plane), rel=1e-12)


if __name__ == '__main__':
    pytest.main([__file__])
