import math

import numpy as np
import pytest
from scipy import special

from checks_affine import _dpp_field, _section_power_integral
from config import Config
from errors import DomainError, UnknownCheckError
from fields_and_oracles import StarKind, gaussian, make_star_set
from grassmann_geometry import PlaneBatch
from quadrature import Estimate, QuadratureSpec
from verification_harness import (CheckContext, CheckRegistry, Relation, TolerancePolicy, Verdict, judge, make_spec,
                                  run_check, run_checks)

POLICY = TolerancePolicy()

REGISTERED = [
    'rk_p1_equality', 'rjk_p1_equality', 'rk_weighted_bound', 'rk_lplq_extremizer', 'rjk_lplq_extremizer',
    'dpp_inequality', 'section_weighted', 'section_p1_equality', 'fubini_identity', 'section_jk_weighted',
    'section_lplq', 'gardner_inequality', 'schneider_inequality', 'asymptotic_norms', 'lift_conjugation',
    'measure_transfer', 'funk_sharp', 'funk_mean_value', 'funk_weighted', 'funk_weighted_p1', 'funk_jk_weighted',
    'star_weighted_equality', 'star_weighted_bound', 'sections_of_sections', 'busemann', 'furstenberg_tzkoni',
    'dual_quermass_identity',
]


def test_exact_equality_passes():
    judgement = judge(Estimate.exact(2.0), Estimate.exact(1.0), 2.0, Relation.EQUALITY, POLICY)
    assert judgement.verdict is Verdict.PASS_EQUALITY
    assert judgement.verdict.passed


def test_equality_outside_the_relative_tolerance_fails():
    judgement = judge(Estimate.exact(1.1), Estimate.exact(1.0), 1.0, Relation.EQUALITY, POLICY)
    assert judgement.verdict is Verdict.FAIL
    assert not judgement.verdict.passed


def test_equality_needs_statistical_agreement():
    # within 2% but 10σ away
    lhs = Estimate(1.01, 0.001, 1000)
    assert judge(lhs, Estimate.exact(1.0), 1.0, Relation.EQUALITY, POLICY).verdict is Verdict.FAIL
    lhs = Estimate(1.002, 0.001, 1000)
    assert judge(lhs, Estimate.exact(1.0), 1.0, Relation.EQUALITY, POLICY).verdict is Verdict.PASS_EQUALITY


def test_inequality():
    below = judge(Estimate(0.9, 0.01, 100), Estimate.exact(1.0), 1.0, Relation.INEQUALITY, POLICY)
    assert below.verdict is Verdict.PASS_INEQUALITY
    assert below.margin_sigma == pytest.approx(10.0)
    # 2σ above the bound is still consistent with it
    assert judge(Estimate(1.02, 0.01, 100), Estimate.exact(1.0), 1.0, Relation.INEQUALITY,
                 POLICY).verdict is Verdict.PASS_INEQUALITY
    assert judge(Estimate(1.1, 0.01, 100), Estimate.exact(1.0), 1.0, Relation.INEQUALITY,
                 POLICY).verdict is Verdict.FAIL


def test_large_errors_are_inconclusive():
    judgement = judge(Estimate(1.0, 0.5, 10), Estimate.exact(1.0), 1.0, Relation.EQUALITY, POLICY)
    assert judgement.verdict is Verdict.INCONCLUSIVE


def test_non_finite_sides_are_inconclusive():
    judgement = judge(Estimate.exact(math.inf), Estimate.exact(1.0), 1.0, Relation.INEQUALITY, POLICY)
    assert judgement.verdict is Verdict.INCONCLUSIVE
    assert judgement.margin_sigma is None


def test_threshold_grows_with_comparisons():
    assert POLICY.threshold() == 3.0
    assert POLICY.threshold(20) > POLICY.threshold(2) > 3.0


def test_tolerance_policy_validation():
    with pytest.raises(DomainError):
        TolerancePolicy(stat_sigma=0.0)
    policy = TolerancePolicy.from_config(Config(rel_tol=0.05), stat_sigma=4.0, inconclusive_fraction=None)
    assert (policy.rel_tol, policy.stat_sigma, policy.inconclusive_fraction) == (0.05, 4.0, 0.25)


def test_registry_lists_every_check():
    assert CheckRegistry.ids() == REGISTERED


def test_unknown_check_id():
    with pytest.raises(UnknownCheckError, match="no_such_check"):
        CheckRegistry.get('no_such_check')


def test_schema():
    schema = CheckRegistry.get('asymptotic_norms').schema()
    assert schema['relation'] == 'equality'
    assert schema['params'] == {'n': 1_000_000, 'j': 0, 'k': 1, 'p': 2.0, 'mu': 0.5}
    assert schema['budget'] == {'samples': 1, 'order': None}
    assert schema['description'].startswith("ω_{j,k,p,μ}(n)")


def test_unknown_parameters_are_rejected():
    with pytest.raises(DomainError, match="asymptotic_norms got q"):
        make_spec('asymptotic_norms', {'q': 3})


def test_make_spec_resolves_defaults():
    spec = make_spec('furstenberg_tzkoni', {'k': 1}, samples=1234)
    assert spec.seed == Config().seed
    assert spec.params == {'n': 3, 'k': 1, 'star': 'ellipsoid'}
    assert spec.budget.samples == 1234
    assert spec.budget.label == 'furstenberg_tzkoni'
    assert make_spec('asymptotic_norms').tolerance.rel_tol == 1e-3


def test_asymptotic_norms_pass():
    result = run_check(make_spec('asymptotic_norms', {'n': 1_000_000, 'j': 1, 'k': 3, 'p': 2.0, 'mu': 0.0}))
    assert result.verdict is Verdict.PASS_EQUALITY
    assert result.normalized_ratio == pytest.approx(1.0, rel=1e-3)
    assert result.stderr == 0.0
    assert result.wall_time is None


def test_ellipsoid_sections_match_their_closed_form():
    result = run_check(make_spec('furstenberg_tzkoni', {'star': {'name': 'ellipsoid', 'diag': [1, 2, 4]}},
                                 seed=11), timing=True)
    assert result.verdict is Verdict.PASS_EQUALITY
    assert result.relation is Relation.EQUALITY
    assert result.wall_time is not None and result.wall_time >= 0


def test_runs_are_deterministic():
    first = run_check(make_spec('funk_mean_value', seed=3, samples=20_000))
    again = run_check(make_spec('funk_mean_value', seed=3, samples=20_000))
    threaded = run_check(make_spec('funk_mean_value', seed=3, samples=20_000, threads=4))
    assert first.lhs == again.lhs == threaded.lhs
    assert first.rhs == again.rhs == threaded.rhs
    assert first.verdict is again.verdict


def test_run_checks_keeps_the_order():
    specs = [make_spec('asymptotic_norms', {'p': p}) for p in (1.0, 2.0, 4.0)]
    results = run_checks(specs, threads=3)
    assert [result.params['p'] for result in results] == [1.0, 2.0, 4.0]
    assert all(result.verdict.passed for result in results)


@pytest.mark.parametrize('distance', [0.5, 15.0, 20.0, 26.0])
def test_dpp_integrand_far_from_the_gaussian(distance):
    # (R f)^{n+1}/sup^{n−k} = π² e^{−2d²} for the Gaussian on lines of ℝ³
    planes = PlaneBatch(np.eye(3)[None, :, :1], np.array([[0.0, distance, 0.0]]))
    exact = _dpp_field(gaussian(3), 1, 24, True)(planes)
    assert exact[0] == pytest.approx(math.pi ** 2 * math.exp(-2 * distance ** 2), rel=1e-9)
    numeric = _dpp_field(gaussian(3), 1, 24, False)(planes)
    assert np.isfinite(numeric[0]) and numeric[0] >= 0


@pytest.mark.parametrize('seed', [20240917, 1])
def test_dpp_inequality_runs(seed):
    result = run_check(make_spec('dpp_inequality', {'n': 3, 'k': 1}, seed=seed))
    assert math.isfinite(result.lhs.value) and math.isfinite(result.rhs.value)
    assert result.verdict is not Verdict.FAIL
    assert len(result.details['members']) == 4


@pytest.mark.parametrize('p, mu', [(1.0, 0.0), (2.0, 0.5)])
def test_section_powers_carry_the_distance_weight(p, mu):
    # lines through the unit ball: ∫ (2√(1−|u|²))^p |u|^{μp} du = π 2^p B(p/2+1, μp/2+1)
    ctx = CheckContext({}, QuadratureSpec.monte_carlo(40_000, seed=3, label='sections'), POLICY, Config())
    ball = make_star_set(StarKind.BALL, {}, dim=3)
    estimate = _section_power_integral(ctx, ball, 1, p, mu, 'sections')
    expected = math.pi * 2 ** p * math.exp(special.betaln(p / 2 + 1, mu * p / 2 + 1))
    assert abs(estimate.value - expected) < 5 * estimate.stderr + 1e-9 * expected


if __name__ == '__main__':
    pytest.main([__file__])
