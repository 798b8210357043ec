import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ConstantOverflowError, DomainError
from special_constants import (ConstantKind, ConstantTag, asymptotic_limit, ball_volume, constant, log_gamma,
                               scaled_norm_constant, sharp_constant, sphere_area)


@pytest.mark.parametrize('x, expected', [
    (1.0, 0.0),
    (0.5, 0.5723649429247001),
    (10.0, math.log(362880.0)),
])
def test_log_gamma(x, expected):
    assert log_gamma(x) == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_log_gamma_rejects_non_positive():
    with pytest.raises(DomainError, match="x > 0"):
        log_gamma(0.0)


@pytest.mark.parametrize('m, expected', [(0, 2.0), (1, 2 * math.pi), (2, 4 * math.pi)])
def test_sphere_area(m, expected):
    assert sphere_area(m) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('m, expected', [(0, 1.0), (1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_ball_volume(m, expected):
    assert ball_volume(m) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 20), data=st.data())
def test_p1_constant_is_one(n, data):
    k = data.draw(st.integers(1, n - 1))
    assert constant('OmegaKPMu', n=n, k=k, p=1, mu=0) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 20), data=st.data())
def test_big_omega_jk_reduces_at_j0(n, data):
    k = data.draw(st.integers(1, n - 1))
    assert constant('BigOmegaJK', n=n, j=0, k=k) == pytest.approx(constant('BigOmegaK', n=n, k=k), rel=1e-12)


def test_hand_evaluated_values():
    assert constant('OmegaKPMu', n=5, k=2, p=1, mu=0) == pytest.approx(1.0, abs=1e-12)
    assert constant('OmegaKPMu', n=2, k=1, p=2, mu=1) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert constant('BigOmegaK', n=2, k=1) == pytest.approx((math.pi / 2) ** (1 / 3), rel=1e-12)


def test_gardner_and_dpp_coincide():
    for n, k in [(2, 1), (3, 1), (3, 2), (5, 3)]:
        assert constant('DppC', n=n, k=k) == constant('GardnerC', n=n, k=k)


def test_gardner_is_one_for_full_dimension():
    # k = n: both sides are the volume itself
    assert constant('GardnerC', n=3, k=3) == pytest.approx(1.0, rel=1e-12)


def test_busemann_constant():
    assert constant('BusemannC', n=3, k=2) == pytest.approx(math.pi ** 3 / (4 * math.pi / 3) ** 2, rel=1e-12)


def test_star_sections_constant():
    assert constant('StarSectionsC', n=3, j=1, k=2) == pytest.approx((math.pi / 2) ** 3, rel=1e-12)


@pytest.mark.parametrize('j, k, p, expected', [
    (0, 1, 1.0, 1.0),
    (0, 1, 2.0, (2 * math.pi) ** 0.25 * math.sqrt(2.0)),
    (1, 3, 2.0, (2 * math.pi) ** 0.5 * 2.0),
])
def test_asymptotic_limit(j, k, p, expected):
    assert asymptotic_limit(j, k, p) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('j, k', [(0, 1), (0, 2), (1, 3)])
@pytest.mark.parametrize('p', [1.0, 2.0, 4.0])
@pytest.mark.parametrize('mu', [0.0, 1.0])
def test_norms_approach_their_limit(j, k, p, mu):
    scaled = scaled_norm_constant(j, k, p, mu, 1_000_000)
    assert scaled == pytest.approx(asymptotic_limit(j, k, p), rel=1e-3)


def test_asymptotic_limit_at_infinity_overflows():
    with pytest.raises(ConstantOverflowError):
        asymptotic_limit(0, 1, math.inf)


@pytest.mark.parametrize('tag, params, constraint', [
    ('OmegaKPMu', {'n': 2, 'k': 3, 'p': 1, 'mu': 0}, "k < n"),
    ('OmegaKPMu', {'n': 3, 'k': 1, 'p': 0.5, 'mu': 0}, "1 ≤ p ≤ ∞"),
    ('OmegaKPMu', {'n': 3, 'k': 2, 'p': 1, 'mu': -2}, "μ > k − n/p"),
    ('BigOmegaJK', {'n': 3, 'j': 2, 'k': 2}, "j < k"),
    ('SchneiderC', {'n': 3, 'k': 1, 'm': 4}, "1 ≤ m ≤ n"),
    ('StarSectionsC', {'n': 3, 'j': 0, 'k': 2}, "j ≥ 1"),
])
def test_domain_errors_name_the_constraint(tag, params, constraint):
    with pytest.raises(DomainError) as info:
        constant(tag, **params)
    assert info.value.constraint == constraint
    assert str(info.value).startswith(f"requires {constraint}")


def test_missing_and_fractional_parameters():
    with pytest.raises(DomainError, match="parameters mu"):
        ConstantKind(ConstantTag.OMEGA_K_P_MU, {'n': 3, 'k': 1, 'p': 1})
    with pytest.raises(DomainError, match="integer n"):
        ConstantKind(ConstantTag.BIG_OMEGA_K, {'n': 2.5, 'k': 1})


def test_p_infinity_is_special_cased():
    value = constant('OmegaKPMu', n=3, k=1, p=math.inf, mu=1.5)
    assert math.isfinite(value) and value > 0


def test_large_dimensions_stay_finite():
    kind = ConstantKind(ConstantTag.OMEGA_K_P_MU, {'n': 1_000_000, 'k': 2, 'p': 2, 'mu': 0})
    assert math.isfinite(sharp_constant(kind))


if __name__ == '__main__':
    pytest.main([__file__])
