import math

import numpy as np
import pytest

from waning_interest.errors import DomainError, InvalidParameterError
from waning_interest.model import (
    ModelParams,
    RegimeClass,
    classify_regime,
    conditional_survival,
    cumulative_intensity,
    intensity,
    inverse_cumulative_intensity,
    regime_rate,
)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        ModelParams(alpha=0.0, beta=0.0, b=1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(alpha=-1.0, beta=1.0, b=1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(alpha=1.0, beta=math.inf, b=1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(alpha=1.0, beta=1.0, b=math.nan)


def test_from_cutoff_form():
    p = ModelParams.from_cutoff_form(gamma=0.5, t0=7.7, beta=0.065)
    assert p.b == pytest.approx(1 / 7.7)
    assert p.alpha == pytest.approx(0.5 / 7.7)
    assert p.gamma == pytest.approx(0.5)
    with pytest.raises(InvalidParameterError):
        ModelParams.from_cutoff_form(gamma=0.5, t0=0.0, beta=0.1)


def test_intensity_examples():
    assert intensity(ModelParams(1, 0.5, 1), 0.0) == pytest.approx(1.5)
    for t in (0.0, 3.0, 1e6):
        assert intensity(ModelParams(0, 2, 1), t) == pytest.approx(2.0)
    assert intensity(ModelParams(2, 0.5, 0.1), 10.0) == pytest.approx(1.5)


def test_intensity_bounds(cutoff_params):
    t = np.geomspace(1e-3, 1e6, 200)
    lam = intensity(cutoff_params, t)
    assert np.all(lam >= cutoff_params.beta)
    assert np.all(np.diff(lam) <= 0)
    assert lam[-1] == pytest.approx(cutoff_params.beta, rel=1e-4)


def test_cumulative_intensity_examples(cutoff_params):
    for p in (cutoff_params, ModelParams(1, 0, 1), ModelParams(1, 1, 0)):
        assert cumulative_intensity(p, 0.0) == 0.0
    assert cumulative_intensity(ModelParams(1, 0, 1), math.e - 1) == pytest.approx(1.0, rel=1e-12)
    assert cumulative_intensity(ModelParams(1, 1, 0), 3.0) == pytest.approx(6.0)


def test_negative_time_is_domain_error(cutoff_params):
    with pytest.raises(DomainError):
        intensity(cutoff_params, -1.0)
    with pytest.raises(DomainError):
        cumulative_intensity(cutoff_params, [1.0, -0.5])
    with pytest.raises(DomainError):
        conditional_survival(cutoff_params, -1.0, 1.0)
    with pytest.raises(DomainError):
        inverse_cumulative_intensity(cutoff_params, -2.0)


def test_derivative_of_cumulative_is_intensity(cutoff_params):
    rng = np.random.default_rng(11)
    t = rng.uniform(0.01, 200.0, size=100)
    h = 1e-5 * np.maximum(1.0, t)
    fd = (cumulative_intensity(cutoff_params, t + h) - cumulative_intensity(cutoff_params, t - h)) / (2 * h)
    np.testing.assert_allclose(fd, intensity(cutoff_params, t), rtol=1e-6)


def test_cumulative_strictly_increasing(cutoff_params):
    t = np.linspace(0.0, 500.0, 2001)
    assert np.all(np.diff(cumulative_intensity(cutoff_params, t)) > 0)


@pytest.mark.parametrize(
    "params",
    [ModelParams(1, 0.1, 0.2), ModelParams(1, 0, 1), ModelParams(0, 2, 1), ModelParams(1, 1, 0)],
)
def test_inverse_at_zero(params):
    assert inverse_cumulative_intensity(params, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_inverse_examples(cutoff_params):
    assert inverse_cumulative_intensity(ModelParams(1, 0, 1), 1.0) == pytest.approx(math.e - 1, rel=1e-12)
    y = cumulative_intensity(cutoff_params, 7.3)
    assert inverse_cumulative_intensity(cutoff_params, y) == pytest.approx(7.3, abs=1e-9)


@pytest.mark.parametrize(
    "params",
    [
        ModelParams(1, 0.1, 0.2),
        ModelParams(100, 1, 0.05),
        ModelParams(0.0649, 0.065, 0.13),
        ModelParams(5, 1e-4, 10),
        ModelParams(1, 0, 1),
        ModelParams(0, 3, 0),
    ],
)
def test_inverse_roundtrip_vectorised(params):
    t = np.concatenate(([0.0], np.geomspace(1e-6, 1e5, 300)))
    y = cumulative_intensity(params, t)
    back = inverse_cumulative_intensity(params, y)
    np.testing.assert_allclose(cumulative_intensity(params, back), y, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(back, t, rtol=1e-8, atol=1e-12)


def test_conditional_survival_examples():
    p = ModelParams(1, 0.1, 0.2)
    for x in (0.0, 1.0, 50.0):
        assert conditional_survival(p, x, 0.0) == 1.0
    for x in (0.0, 2.0, 100.0):
        assert conditional_survival(ModelParams(0, 1, 1), x, 2.0) == pytest.approx(math.exp(-2), rel=1e-12)
    assert conditional_survival(ModelParams(1, 0, 1), 0.0, 1.0) == pytest.approx(0.5)


def test_conditional_survival_matches_lambda_difference(cutoff_params):
    x = np.linspace(0.0, 50.0, 26)[:, None]
    t = np.geomspace(1e-3, 80.0, 40)[None, :]
    via_lambda = np.exp(-(cumulative_intensity(cutoff_params, x + t) - cumulative_intensity(cutoff_params, x)))
    np.testing.assert_allclose(conditional_survival(cutoff_params, x, t), via_lambda, rtol=0, atol=1e-12)


def test_conditional_survival_shape(cutoff_params):
    t = np.linspace(0.0, 300.0, 400)
    s = conditional_survival(cutoff_params, 3.0, t)
    assert np.all((s >= 0) & (s <= 1))
    assert np.all(np.diff(s) <= 0)
    # first gap: e^(-beta t) (bt + 1)^(-alpha/b)
    expected = np.exp(-0.1 * t) * (0.2 * t + 1) ** (-5.0)
    np.testing.assert_allclose(conditional_survival(cutoff_params, 0.0, t), expected, rtol=1e-12)


def test_memoryless_when_alpha_zero():
    p = ModelParams(0, 0.7, 3)
    t = np.linspace(0.0, 10.0, 11)
    base = conditional_survival(p, 0.0, t)
    for x in (0.5, 7.0, 1e4):
        np.testing.assert_allclose(conditional_survival(p, x, t), base, rtol=0, atol=1e-12)


def test_classify_regime_examples():
    assert classify_regime(ModelParams(0, 1, 5)) is RegimeClass.EXPONENTIAL_BETA
    assert classify_regime(ModelParams(1, 0, 1)) is RegimeClass.PURE_FAT_TAIL
    assert classify_regime(ModelParams(1, 1, 0)) is RegimeClass.EXPONENTIAL_ALPHA_PLUS_BETA
    assert classify_regime(ModelParams(1, 0, 0)) is RegimeClass.EXPONENTIAL_ALPHA
    assert classify_regime(ModelParams(1, 0.1, 0.2)) is RegimeClass.POWER_LAW_EXP_CUTOFF


def test_regime_rate():
    assert regime_rate(ModelParams(0, 1.5, 5)) == 1.5
    assert regime_rate(ModelParams(2, 0, 0)) == 2.0
    assert regime_rate(ModelParams(2, 0.5, 0)) == 2.5
    assert regime_rate(ModelParams(1, 0.1, 0.2)) is None
    assert RegimeClass.EXPONENTIAL_ALPHA.is_exponential
    assert not RegimeClass.PURE_FAT_TAIL.is_exponential
