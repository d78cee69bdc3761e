import math

import numpy as np
import pytest

from putraffic.exceptions import EnumerationCapacityError, TrafficDomainError
from putraffic.models import (
    PERFECT_SENSING,
    SampleVector,
    SamplingPlan,
    SensingModel,
    TransitionCounts,
    all_bit_vectors,
    apply_sensing_errors,
    count_transitions,
    generate_samples,
)
from putraffic.services.likelihood import (
    LogLikelihoodValue,
    loglik_clean,
    loglik_clean_general,
    loglik_noisy_bruteforce,
    loglik_noisy_forward,
    loglik_noisy_forward_grid,
    loglik_observed,
    observation_probabilities,
)

IRREGULAR_TIMES = [0.0, 0.4, 0.9, 2.3, 2.6, 4.0]


@pytest.fixture
def irregular_plan():
    return SamplingPlan.from_times(IRREGULAR_TIMES)


def _total_probability(loglik, plan):
    return sum(math.exp(loglik(SampleVector(bits, plan)).value) for bits in all_bit_vectors(plan.n))


def test_two_idle_samples_reference_value(params):
    value = loglik_clean(TransitionCounts(0, 1, 0, 0, 0), params, 1.0)
    assert value.value == pytest.approx(math.log(0.5004553), abs=1e-6)
    assert not value.underflowed


def test_general_form_matches_counts_on_uniform_plan(params):
    samples = generate_samples(params, SamplingPlan.uniform(20.0, 40), 4)
    expected = loglik_clean(count_transitions(samples), params, 20.0 / 39).value
    assert loglik_clean_general(samples, params).value == pytest.approx(expected, rel=1e-12)


def test_single_sample_is_the_stationary_prior(params):
    plan = SamplingPlan.from_times([0.0])
    assert loglik_clean_general(SampleVector([1], plan), params).value == pytest.approx(math.log(0.3))


def test_clean_likelihood_is_normalised(params, irregular_plan):
    assert _total_probability(lambda s: loglik_clean_general(s, params), irregular_plan) == pytest.approx(1.0, abs=1e-12)


def test_noisy_likelihood_is_normalised(params, irregular_plan, noisy):
    total = _total_probability(lambda s: loglik_noisy_bruteforce(s, params, noisy), irregular_plan)
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize('bits', [[0, 0, 0, 0, 0, 0], [1, 0, 1, 1, 0, 1], [1, 1, 1, 1, 1, 1]])
def test_forward_matches_bruteforce(params, irregular_plan, bits):
    samples = SampleVector(bits, irregular_plan)
    model = SensingModel(0.1, 0.2)
    forward = loglik_noisy_forward(samples, params, model).value
    brute = loglik_noisy_bruteforce(samples, params, model).value
    assert forward == pytest.approx(brute, rel=1e-10)


def test_forward_without_errors_is_the_clean_likelihood(params):
    samples = generate_samples(params, SamplingPlan.uniform(50.0, 300), 9)
    forward = loglik_noisy_forward(samples, params, PERFECT_SENSING).value
    assert forward == pytest.approx(loglik_clean_general(samples, params).value, rel=1e-10)


def test_forward_grid_matches_scalar_recursion(params, noisy):
    samples = generate_samples(params, SamplingPlan.uniform(30.0, 120), 2)
    u = np.array([0.3, 0.5, 0.1])
    lambda_f = np.array([0.9, 0.2, 4.0])
    grid = loglik_noisy_forward_grid(samples, u, lambda_f, noisy)
    for i in range(3):
        point = params.from_u_lf(u[i], lambda_f[i])
        assert grid[i] == pytest.approx(loglik_noisy_forward(samples, point, noisy).value, rel=1e-10)


def test_single_reading_and_underflow_flag(params):
    plan = SamplingPlan.from_times([0.0])
    value = loglik_noisy_forward(SampleVector([1], plan), params, SensingModel(0.0, 0.0))
    assert value.value == pytest.approx(math.log(0.3))
    impossible = LogLikelihoodValue.of(-math.inf)
    assert impossible.underflowed


def test_nan_is_rejected():
    with pytest.raises(TrafficDomainError):
        LogLikelihoodValue(float('nan'))


def test_bruteforce_cap(params):
    samples = SampleVector([0, 1, 0, 1], SamplingPlan.uniform(3.0, 4))
    with pytest.raises(EnumerationCapacityError):
        loglik_noisy_bruteforce(samples, params, SensingModel(0.1, 0.1), cap=3)


def test_observation_probabilities(params, irregular_plan, noisy):
    vectors, probabilities = observation_probabilities(params, irregular_plan, noisy)
    assert vectors.shape == (2 ** irregular_plan.n, irregular_plan.n)
    assert float(np.sum(probabilities)) == pytest.approx(1.0, abs=1e-12)
    samples = SampleVector(vectors[13], irregular_plan)
    assert math.log(probabilities[13]) == pytest.approx(
        loglik_noisy_bruteforce(samples, params, noisy).value, rel=1e-10)


def test_observed_dispatch(params, noisy):
    samples = generate_samples(params, SamplingPlan.uniform(10.0, 50), 5)
    assert loglik_observed(samples, params).value == loglik_clean_general(samples, params).value
    assert loglik_observed(samples, params, noisy).value == loglik_noisy_forward(samples, params, noisy).value


def test_equal_counts_give_identical_likelihoods(params):
    plan = SamplingPlan.uniform(4.0, 5)
    first = SampleVector([0, 0, 1, 1, 0], plan)
    second = SampleVector([0, 1, 1, 0, 0], plan)
    assert count_transitions(first) == count_transitions(second)
    assert loglik_clean_general(first, params).value == loglik_clean_general(second, params).value
    assert loglik_observed(first, params).value == loglik_observed(second, params).value


@pytest.mark.parametrize('bits', [[0, 0, 1, 0, 1, 1], [1, 1, 1, 0, 0, 0]])
def test_relabeling_preserves_the_likelihood(params, irregular_plan, bits):
    samples = SampleVector(bits, irregular_plan)
    flipped = SampleVector(1 - np.array(bits), irregular_plan)
    original = loglik_noisy_forward(samples, params, SensingModel(0.1, 0.2)).value
    relabeled = loglik_noisy_forward(flipped, params.swapped(), SensingModel(0.2, 0.1)).value
    assert relabeled == pytest.approx(original, rel=1e-12)
    assert loglik_clean_general(flipped, params.swapped()).value == pytest.approx(
        loglik_clean_general(samples, params).value, rel=1e-12)


def test_forward_recursion_is_stable_for_long_records(params, noisy):
    n = 100000
    samples = apply_sensing_errors(generate_samples(params, SamplingPlan.uniform(50000.0, n), 12), noisy, 13)
    value = loglik_noisy_forward(samples, params, noisy)
    assert not value.underflowed
    assert math.isfinite(value.value)
    assert -n * math.log(2.0) < value.value < 0.0
    grid = loglik_noisy_forward_grid(samples, np.array([params.u]), np.array([params.lambda_f]), noisy)
    assert grid[0] == pytest.approx(value.value, rel=1e-9)
