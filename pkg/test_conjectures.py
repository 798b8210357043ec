import math

import numpy as np
import pytest

from conjectures import (ConjectureTarget, ExtremizerFamily, FamilyRegistry, RandomSmoothFamily, conjecture_bound,
                         explore_conjecture, power_field)
from errors import DomainError
from fields_and_oracles import DomainKind
from special_constants import constant


def test_extremizers_sit_on_the_bound():
    report = explore_conjecture('JkLpLq', 'extremizer', 3, 1, 2, members=2, refine=1, seed=5, samples=20_000,
                                options={'moves': ['scale']})
    assert report.bound == constant('BigOmegaJK', n=3, j=1, k=2)
    assert report.normalized_ratio == pytest.approx(1.0, abs=0.05)
    assert not report.violation_found
    assert report.members_evaluated == 2
    assert report.evaluations == 2 + 1 + 1
    assert set(report.best_params) == {'scale'}


def test_balls_attain_the_star_sections_bound():
    report = explore_conjecture(ConjectureTarget.STAR_SECTIONS, 'ball', 3, 1, 2, members=3, refine=0, seed=2)
    assert report.m == 2.0
    assert report.bound == pytest.approx((math.pi / 2) ** 3)
    assert report.normalized_ratio == pytest.approx(1.0, rel=1e-9)
    assert not report.violation_found


def test_equal_dimensions_give_ratio_one():
    report = explore_conjecture('StarSections', 'random_smooth', 3, 2, 2, members=2, refine=0,
                                options={'seeds': [1, 2]}, samples=2000)
    assert report.bound == 1.0
    assert report.best_ratio == 1.0
    assert report.best_params['seed'] in (1, 2)


def test_empty_family():
    with pytest.raises(DomainError, match="non-empty family"):
        explore_conjecture('JkLpLq', 'extremizer', 3, 1, 2, members=0)


def test_unknown_family():
    with pytest.raises(DomainError, match="family among ball, ellipsoid, random_smooth"):
        explore_conjecture('StarSections', 'cube', 3, 1, 2)
    assert FamilyRegistry.names(ConjectureTarget.JK_LP_LQ) == ['extremizer', 'power']


def test_bounds():
    assert conjecture_bound(ConjectureTarget.STAR_SECTIONS, 4, 3, 3) == 1.0
    with pytest.raises(DomainError, match="j < k"):
        conjecture_bound(ConjectureTarget.JK_LP_LQ, 3, 2, 2)
    with pytest.raises(DomainError, match="1 ≤ j ≤ k < n"):
        conjecture_bound(ConjectureTarget.STAR_SECTIONS, 3, 0, 2)


def test_extremizer_moves():
    assert ExtremizerFamily(3, 0, 1).moves == ('scale', 'translation', 'diag')
    assert ExtremizerFamily(3, 1, 2).moves == ('scale', 'translation')
    assert ExtremizerFamily(3, 1, 2, {'moves': ['diag']}).moves == ('diag',)
    with pytest.raises(DomainError, match="moves among"):
        _ = ExtremizerFamily(3, 1, 2, {'moves': ['shear']}).moves


def test_random_smooth_family_cycles_its_seeds():
    family = RandomSmoothFamily(3, 1, 2, {'seeds': [7, 8, 9]})
    rng = np.random.default_rng(0)
    assert family.default_members == 3
    assert [family.draw(rng, index)['seed'] for index in range(4)] == [7, 8, 9, 7]
    moved = family.perturb({'seed': 7, 'amplitude': 0.3}, rng, 0.5)
    assert moved['seed'] == 7 and 0.05 <= moved['amplitude'] <= 0.8


def test_power_field_domains():
    assert power_field(3, 0, 2.0).domain.kind is DomainKind.EUCLIDEAN
    on_lines = power_field(3, 1, 3.0)
    assert on_lines.domain.kind is DomainKind.AFFINE_GRASSMANNIAN
    assert on_lines.metadata.decay_exponent == 3.0


if __name__ == '__main__':
    pytest.main([__file__])
