import math

import numpy as np
import pytest

from waning_interest.errors import InsufficientDataError, InvalidParameterError, TooFewEventsError
from waning_interest.inference import (
    CutoffPowerLawFit,
    MleFit,
    default_init,
    fit_ccdf,
    fit_mle,
    fitted_intensity,
    log_likelihood,
    reduce_params,
)
from waning_interest.model import ModelParams, RegimeClass, classify_regime, cumulative_intensity, intensity
from waning_interest.published import load_bloggers
from waning_interest.simulator import EventStream, SimulationSpec, sample_interarrival_ensemble, simulate
from waning_interest.stats import EmpiricalCcdf, empirical_ccdf, interarrival_sample


# ----------------------------
# Likelihood
# ----------------------------
def test_log_likelihood_homogeneous_example():
    stream = EventStream(times=[1.0], horizon=2.0)
    assert log_likelihood(ModelParams(0, 1, 0), stream) == pytest.approx(-2.0)


def test_poisson_rate_maximises_likelihood():
    stream = simulate(SimulationSpec(params=ModelParams(0, 0.8, 0), horizon=400.0, seed=8))
    rate = len(stream) / stream.horizon
    best = log_likelihood(ModelParams(0, rate, 0), stream)
    for factor in (0.9, 0.99, 1.01, 1.1):
        assert log_likelihood(ModelParams(0, rate * factor, 0), stream) < best


def test_true_params_beat_constant_rate(cutoff_params):
    wins = 0
    for seed in range(100):
        stream = simulate(SimulationSpec(params=cutoff_params, horizon=500.0, seed=seed))
        constant = ModelParams(0, len(stream) / stream.horizon, 0)
        wins += log_likelihood(cutoff_params, stream) > log_likelihood(constant, stream)
    assert wins >= 95


# ----------------------------
# Maximum likelihood
# ----------------------------
def test_fit_mle_needs_twenty_events(cutoff_params):
    stream = EventStream(times=np.arange(1.0, 20.0), horizon=20.0)
    with pytest.raises(TooFewEventsError):
        fit_mle(stream)


def test_default_init_shape():
    stream = EventStream(times=np.arange(1.0, 101.0), horizon=100.0)
    init = default_init(stream)
    assert init.beta == pytest.approx(0.5)
    assert init.b == pytest.approx(0.1)
    assert init.alpha > 0


def test_fit_from_truth_does_not_get_worse(cutoff_params):
    stream = simulate(SimulationSpec(params=cutoff_params, event_count=2000, seed=21))
    fit = fit_mle(stream, init=cutoff_params)
    assert fit.log_likelihood >= log_likelihood(cutoff_params, stream) - 1e-9
    assert fit.iterations > 0
    record = fit.as_record()
    assert set(record) == {"alpha", "beta", "b", "log_likelihood", "converged", "iterations"}


def test_fit_balances_expected_count(cutoff_params):
    # scaling alpha and beta together is a direction of the search, so Lambda-hat(T) = N
    stream = simulate(SimulationSpec(params=cutoff_params, event_count=3000, seed=4))
    fit = fit_mle(stream)
    assert cumulative_intensity(fit.params, stream.horizon) == pytest.approx(len(stream), rel=5e-3)
    assert fit.params.beta == pytest.approx(cutoff_params.beta, rel=0.1)


def test_homogeneous_recovery():
    stream = simulate(SimulationSpec(params=ModelParams(0, 2, 0), event_count=10_000, seed=31))
    fit = fit_mle(stream)
    ts = np.linspace(0.2 * stream.horizon, stream.horizon, 50)
    np.testing.assert_allclose(fitted_intensity(fit, ts), 2.0, rtol=0.05)


def test_intensity_recovery():
    truth = ModelParams(alpha=100.0, beta=1.0, b=0.05)
    stream = simulate(SimulationSpec(params=truth, event_count=10_000, seed=17))
    fit = fit_mle(stream, restarts=2, seed=17)
    ts = np.geomspace(stream.horizon / 100, stream.horizon, 40)
    np.testing.assert_allclose(fitted_intensity(fit, ts), intensity(truth, ts), rtol=0.1)
    assert fitted_intensity(fit, 0.0) == pytest.approx(intensity(truth, 0.0), rel=0.25)


def test_regular_stream_reduces_to_constant_rate():
    # on a regular grid no decreasing rate beats the constant one
    stream = EventStream(times=np.arange(1.0, 201.0), horizon=200.0)
    fit = fit_mle(stream)
    reduced = reduce_params(stream, fit)
    assert classify_regime(reduced) is RegimeClass.EXPONENTIAL_BETA
    assert reduced.beta == pytest.approx(1.0)


def test_decaying_stream_keeps_decay():
    truth = ModelParams(alpha=100.0, beta=1.0, b=0.05)
    stream = simulate(SimulationSpec(params=truth, event_count=10_000, seed=17))
    fit = fit_mle(stream)
    assert not classify_regime(reduce_params(stream, fit)).is_exponential


# ----------------------------
# CCDF fit
# ----------------------------
def _noiseless(prefactor, gamma, t0, beta, t):
    s = prefactor * (t + t0) ** (-gamma) * np.exp(-beta * t)
    return EmpiricalCcdf(t=t, survival=s, sample_size=10**9)


def test_ccdf_fit_noiseless_published():
    t = np.geomspace(0.5, 60.0, 30)
    a = fit_ccdf(_noiseless(1.85, 0.5, 7.7, 0.065, t), tail_trim=0)
    np.testing.assert_allclose([a.prefactor, a.gamma, a.t0, a.beta], [1.85, 0.5, 7.7, 0.065], rtol=1e-4)
    assert a.sse < 1e-12
    assert a.n_points == 30


@pytest.mark.parametrize("blogger", load_bloggers(), ids=lambda b: b.label)
def test_ccdf_fit_recovers_each_blogger(blogger):
    t = np.geomspace(0.5, 60.0, 30)
    fit = fit_ccdf(_noiseless(blogger.prefactor, blogger.gamma, blogger.t0, blogger.beta, t), tail_trim=0)
    np.testing.assert_allclose(
        [fit.prefactor, fit.gamma, fit.t0, fit.beta],
        [blogger.prefactor, blogger.gamma, blogger.t0, blogger.beta],
        rtol=1e-4,
    )


def test_ccdf_fit_pure_exponential():
    t = np.geomspace(0.01, 10.0, 30)
    fit = fit_ccdf(EmpiricalCcdf(t=t, survival=np.exp(-t), sample_size=10**9), tail_trim=0)
    assert fit.gamma == pytest.approx(0.0, abs=1e-2)
    assert fit.beta == pytest.approx(1.0, abs=1e-2)
    np.testing.assert_allclose(fit.evaluate(t), np.exp(-t), rtol=1e-3)


def test_ccdf_fit_simulated_first_gaps():
    params = ModelParams.from_cutoff_form(gamma=0.5, t0=7.7, beta=0.065)
    gaps = sample_interarrival_ensemble(params, n=0, reps=50_000, seed=2010)
    fit = fit_ccdf(empirical_ccdf(interarrival_sample(gaps)))
    assert fit.gamma == pytest.approx(0.5, abs=0.1)
    assert fit.beta == pytest.approx(0.065, abs=0.01)
    back = fit.model_params()
    assert back.b == pytest.approx(1.0 / fit.t0)
    assert back.alpha == pytest.approx(fit.gamma / fit.t0)


def test_ccdf_fit_needs_eight_points():
    t = np.geomspace(0.5, 60.0, 7)
    with pytest.raises(InsufficientDataError):
        fit_ccdf(_noiseless(1.85, 0.5, 7.7, 0.065, t), tail_trim=0)


def test_tail_trim_drops_sparse_points():
    ccdf = empirical_ccdf(interarrival_sample(np.arange(1.0, 21.0)))
    trimmed = fit_ccdf(ccdf)
    untrimmed = fit_ccdf(ccdf, tail_trim=0)
    # survival 0 is never used; 1/20 and 2/20 go with the trim
    assert untrimmed.n_points == 19
    assert trimmed.n_points == 17


def test_ccdf_fit_weights_must_match():
    t = np.geomspace(0.5, 60.0, 12)
    with pytest.raises(InvalidParameterError):
        fit_ccdf(_noiseless(1.0, 0.3, 2.0, 0.1, t), weights=np.ones(3))


def test_fit_records():
    fit = CutoffPowerLawFit(prefactor=1.0, gamma=0.5, t0=2.0, beta=0.1, sse=0.0, n_points=9)
    assert set(fit.as_record()) == {"prefactor", "gamma", "t0", "beta", "sse", "n_points"}
    assert fit.evaluate(0.0) == pytest.approx(2.0 ** -0.5)
    mle = MleFit(params=ModelParams(1, 2, 3), log_likelihood=-1.0, converged=True, iterations=7)
    assert mle.as_record()["beta"] == 2.0
    assert math.isfinite(mle.as_record()["log_likelihood"])


def test_fit_mle_reaches_the_truth_likelihood(cutoff_params):
    # long streams of this process are nearly flat along b -> 0; the fit must not stall there
    reached = 0
    for seed in range(10):
        stream = simulate(SimulationSpec(params=cutoff_params, event_count=10_000, seed=seed))
        fit = fit_mle(stream)
        reached += fit.log_likelihood >= log_likelihood(cutoff_params, stream) - 2.0
    assert reached >= 9


def test_fit_mle_without_profile_uses_single_start(cutoff_params):
    stream = simulate(SimulationSpec(params=cutoff_params, event_count=500, seed=5))
    single = fit_mle(stream, b_points=0)
    profiled = fit_mle(stream)
    assert profiled.log_likelihood >= single.log_likelihood - 1e-9
    assert profiled.iterations > single.iterations
