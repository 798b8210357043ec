import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from errors import DomainError, ExceptionalSetError, IntegrabilityError
from grassmann_geometry import (AffineMap, AffinePlane, OrthonormalFrame, apply_affine, geodesic_distance,
                                haar_frames, haar_subspace, lift, plane_distance, sample_affine_plane,
                                sample_affine_planes, sample_pole_adapted, sample_subplane, sample_subplanes,
                                sample_subsphere, unlift)
from streams import RandomStream


def random_plane(rng: np.random.Generator, n: int, k: int) -> AffinePlane:
    direction = OrthonormalFrame(haar_frames(rng, 1, n, k)[0])
    return AffinePlane.through(direction, rng.normal(size=n) * 2.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), data=st.data(), seed=st.integers(0, 2 ** 32 - 1))
def test_haar_frames_are_orthonormal(n, data, seed):
    k = data.draw(st.integers(1, n))
    frames = haar_frames(np.random.default_rng(seed), 8, n, k)
    grams = np.einsum('nij,nil->njl', frames, frames)
    assert np.allclose(grams, np.eye(k), atol=1e-10)


def test_full_rank_subspace_is_everything():
    frame = haar_subspace(3, 3, RandomStream(1, 'full'))
    assert np.allclose(frame.projector(), np.eye(3), atol=1e-10)


def test_haar_subspace_domain():
    with pytest.raises(DomainError, match="1 ≤ k ≤ n"):
        haar_subspace(2, 3, 0)


def test_line_directions_match_uniform_sphere():
    # |θ₃| is uniform on [0, 1] for θ uniform on S²
    frames = haar_frames(RandomStream(7, 'ks').generator(), 100_000, 3, 1)
    cosines = np.abs(frames[:, 2, 0])
    assert stats.kstest(cosines, 'uniform').pvalue > 1e-4


def test_plane_distance():
    direction = OrthonormalFrame(np.array([[1.0], [0.0]]))
    assert plane_distance(AffinePlane(direction, np.zeros(2))) == 0.0
    assert plane_distance(AffinePlane(direction, np.array([0.0, 3.0]))) == pytest.approx(3.0)


def test_offset_must_be_orthogonal():
    direction = OrthonormalFrame(np.array([[1.0], [0.0]]))
    with pytest.raises(DomainError, match="orthogonal"):
        AffinePlane(direction, np.array([1.0, 1.0]))


def test_plane_distance_is_the_closest_point():
    rng = np.random.default_rng(3)
    plane = random_plane(rng, 3, 1)
    points = plane.points(np.linspace(-10, 10, 200_001)[:, None])
    assert np.min(np.linalg.norm(points, axis=1)) == pytest.approx(plane_distance(plane), abs=1e-6)


def test_affine_sampler_integrates_the_gaussian_transform():
    # ∫ π^{1/2} e^{−|u|²} dτ over A_{3,1} is the Gaussian integral over ℝ³
    sample = sample_affine_planes(RandomStream(11, 'gauss').generator(), 200_000, 3, 1)
    values = math.sqrt(math.pi) * np.exp(-sample.planes.squared_distances()) * sample.weights
    assert np.all(sample.weights > 0)
    mean, stderr = values.mean(), values.std(ddof=1) / math.sqrt(values.size)
    assert abs(mean - math.pi ** 1.5) < 5 * stderr


def test_affine_sampler_rejects_slow_decay():
    with pytest.raises(DomainError, match="α > n − k"):
        sample_affine_planes(np.random.default_rng(0), 10, 3, 1, radial_exponent=1.5)


def test_subplane_offsets_decompose():
    rng = np.random.default_rng(5)
    plane = random_plane(rng, 4, 3)
    sample = sample_subplanes(rng, plane.direction.columns[None].repeat(50, 0),
                              plane.offset[None].repeat(50, 0), 1)
    shifts = sample.planes.offsets - plane.offset
    assert np.allclose(sample.planes.squared_distances(),
                       plane_distance(plane) ** 2 + np.sum(shifts ** 2, axis=1), atol=1e-10)


def test_subplane_gaussian_average():
    rng = RandomStream(13, 'sub').generator()
    plane = random_plane(np.random.default_rng(2), 3, 2)
    size = 100_000
    sample = sample_subplanes(rng, plane.direction.columns[None].repeat(size, 0),
                              plane.offset[None].repeat(size, 0), 1)
    values = np.exp(-sample.planes.squared_distances()) * sample.weights
    expected = math.sqrt(math.pi) * math.exp(-plane_distance(plane) ** 2)
    assert abs(values.mean() - expected) < 5 * values.std(ddof=1) / math.sqrt(size)


def test_single_affine_plane_matches_the_batch():
    sample = sample_affine_plane(3, 1, 4.0, RandomStream(3, 'one'))
    batch = sample_affine_planes(RandomStream(3, 'one').generator(), 1, 3, 1, 4.0)
    assert sample.plane.dim == 1
    assert np.allclose(sample.plane.offset, batch.planes.offsets[0])
    assert sample.importance_weight == pytest.approx(batch.weights[0])
    assert abs(sample.plane.columns[:, 0] @ sample.plane.offset) < 1e-10


def test_single_subplane_of_dimension_zero_is_a_point():
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.array([0.0, 0.0, 0.5]))
    sample = sample_subplane(plane, 0, 3.0, RandomStream(1, 'p'))
    point = sample.plane
    assert point.dim == 0 and point.direction is None
    assert point.ambient_dim == 3
    assert point.offset[2] == pytest.approx(0.5)
    assert sample.importance_weight > 0
    assert plane_distance(point) ** 2 == pytest.approx(0.25 + np.sum(point.offset[:2] ** 2))


def test_single_subplane_of_a_plane():
    plane = AffinePlane(OrthonormalFrame(np.eye(4)[:, :3]), np.array([0.0, 0.0, 0.0, 1.0]))
    sample = sample_subplane(plane, 1, 3.0, RandomStream(2, 'line'))
    assert sample.plane.dim == 1
    assert abs(sample.plane.columns[3, 0]) < 1e-12
    assert sample.plane.offset[3] == pytest.approx(1.0)


def test_weighted_points_average_to_the_plane_integral():
    # j = 0: weighted points of τ integrate e^{−|x|²} over τ, which is π e^{−|τ|²} for k = 2
    plane = AffinePlane(OrthonormalFrame(np.eye(3)[:, :2]), np.array([0.0, 0.0, 0.5]))
    size = 100_000
    sample = sample_subplanes(RandomStream(4, 'points').generator(), plane.columns[None].repeat(size, 0),
                              plane.offset[None].repeat(size, 0), 0, 3.0)
    values = np.exp(-sample.planes.squared_distances()) * sample.weights
    expected = math.pi * math.exp(-0.25)
    assert abs(values.mean() - expected) < 5 * values.std(ddof=1) / math.sqrt(size)


def test_subsphere_points():
    frame = haar_subspace(3, 2, RandomStream(17, 'frame'))
    rng = RandomStream(17, 'points').generator()
    points = np.array([sample_subsphere(frame, rng) for _ in range(2000)])
    assert np.allclose(np.linalg.norm(points, axis=1), 1.0)
    assert np.allclose(points @ frame.projector(), points, atol=1e-10)
    coords = points @ frame.columns
    angles = np.mod(np.arctan2(coords[:, 1], coords[:, 0]), 2 * math.pi) / (2 * math.pi)
    assert stats.kstest(angles, 'uniform').pvalue > 1e-4


def test_rank_one_subsphere_is_a_sign():
    frame = OrthonormalFrame(np.array([0.6, 0.8, 0.0]))
    rng = np.random.default_rng(19)
    points = np.array([sample_subsphere(frame, rng) for _ in range(400)])
    signs = np.sign(points @ frame.columns[:, 0])
    assert np.allclose(np.abs(points @ frame.columns[:, 0]), 1.0)
    assert 140 < np.sum(signs > 0) < 260


@pytest.mark.parametrize('cos_shift, sin_shift', [(0.0, 0.0), (-0.5, 0.0), (1.0, 2.0)])
def test_pole_adapted_weights_are_unbiased(cos_shift, sin_shift):
    frames, weights = sample_pole_adapted(RandomStream(23, 'pole').generator(), 100_000, 4, 2,
                                          cos_shift, sin_shift)
    grams = np.einsum('nij,nil->njl', frames[:50], frames[:50])
    assert np.allclose(grams, np.eye(2), atol=1e-10)
    assert abs(weights.mean() - 1.0) < 5 * weights.std(ddof=1) / math.sqrt(weights.size) + 1e-12


def test_pole_adapted_rejects_divergent_weights():
    with pytest.raises(IntegrabilityError):
        sample_pole_adapted(np.random.default_rng(0), 10, 3, 1, cos_shift=-1.0)


def test_geodesic_distance():
    e1 = OrthonormalFrame(np.array([1.0, 0.0, 0.0]))
    assert geodesic_distance(e1, np.array([1.0, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-12)
    assert geodesic_distance(e1, np.array([0.0, 0.0, 1.0])) == pytest.approx(math.pi / 2)
    assert geodesic_distance(e1, np.array([1.0, 0.0, 1.0]) / math.sqrt(2)) == pytest.approx(math.pi / 4)


def test_lift_of_a_plane_through_the_origin_contains_the_pole():
    plane = AffinePlane(OrthonormalFrame(np.array([[1.0], [0.0]])), np.zeros(2))
    assert geodesic_distance(lift(plane), np.array([0.0, 0.0, 1.0])) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shape=st.sampled_from([(2, 1), (3, 1), (3, 2), (4, 2)]))
def test_lift_geometry(seed, shape):
    n, k = shape
    plane = random_plane(np.random.default_rng(seed), n, k)
    frame = lift(plane)
    pole = np.eye(n + 1)[n]
    assert math.tan(geodesic_distance(frame, pole)) == pytest.approx(plane_distance(plane), rel=1e-8, abs=1e-10)
    back = unlift(frame)
    assert back.direction.same_subspace(plane.direction)
    assert np.allclose(back.offset, plane.offset, atol=1e-8 * max(1.0, plane_distance(plane)))


def test_unlift_of_a_span_through_the_pole():
    frame = OrthonormalFrame(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
    plane = unlift(frame)
    assert plane.direction.same_subspace(OrthonormalFrame(np.array([1.0, 0.0])))
    assert plane_distance(plane) == pytest.approx(0.0, abs=1e-12)


def test_unlift_exceptional_set():
    frame = OrthonormalFrame(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ExceptionalSetError):
        unlift(frame)


def test_apply_affine():
    rng = np.random.default_rng(29)
    plane = random_plane(rng, 3, 1)
    same = apply_affine(AffineMap.identity(3), plane)
    assert same.direction.same_subspace(plane.direction)
    assert np.allclose(same.offset, plane.offset)

    rotation, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert plane_distance(apply_affine(AffineMap(rotation), plane)) == pytest.approx(plane_distance(plane))

    shift = np.array([0.5, -1.0, 2.0])
    moved = apply_affine(AffineMap(np.eye(3), shift), plane)
    points = plane.points(np.linspace(-20, 20, 400_001)[:, None]) + shift
    assert plane_distance(moved) == pytest.approx(np.min(np.linalg.norm(points, axis=1)), abs=1e-6)


def test_affine_map_must_be_invertible():
    with pytest.raises(DomainError, match="invertible"):
        AffineMap(np.diag([1.0, 0.0]))


if __name__ == '__main__':
    pytest.main([__file__])
