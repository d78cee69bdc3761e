import numpy as np
import pytest

from putraffic.exceptions import TrafficDomainError
from putraffic.models import (
    PERFECT_SENSING,
    SampleVector,
    SamplingPlan,
    SensingModel,
    TrafficParams,
    TransitionCounts,
    all_bit_vectors,
    apply_sensing_errors,
    count_transitions,
    generate_samples,
    read_sample_file,
    transition_matrix,
    transition_prob,
    write_sample_file,
)


class TestTrafficParams:

    def test_derives_third_parameter(self, params):
        assert params.lambda_n == pytest.approx(2.1)
        assert params.total_rate == pytest.approx(3.0)

    def test_constructors_agree(self):
        from_rates = TrafficParams.from_rates(0.9, 2.1)
        from_ln = TrafficParams.from_u_ln(0.3, 2.1)
        assert from_rates.u == pytest.approx(0.3)
        assert from_ln.lambda_f == pytest.approx(0.9)

    def test_from_any_needs_exactly_two(self):
        with pytest.raises(TrafficDomainError):
            TrafficParams.from_any(u=0.3)
        with pytest.raises(TrafficDomainError):
            TrafficParams.from_any(u=0.3, lambda_f=0.9, lambda_n=2.1)

    @pytest.mark.parametrize('u', [0.0, 1.0, -0.2, float('nan')])
    def test_rejects_u_outside_open_interval(self, u):
        with pytest.raises(TrafficDomainError):
            TrafficParams.from_u_lf(u, 0.9)

    def test_rejects_uncoupled_triple(self):
        with pytest.raises(TrafficDomainError):
            TrafficParams(0.3, 0.9, 1.0)

    def test_swapped(self, params):
        swapped = params.swapped()
        assert swapped.u == pytest.approx(0.7)
        assert swapped.lambda_f == params.lambda_n


class TestTransitionKernel:

    def test_reference_value(self, params):
        assert transition_prob(params, 0, 0, 1.0) == pytest.approx(0.7149361, abs=5e-8)

    def test_rows_sum_to_one(self, params):
        kernel = transition_matrix(params, np.array([0.01, 0.5, 3.0, 50.0]))
        assert kernel.shape == (4, 2, 2)
        assert np.allclose(kernel.sum(axis=-1), 1.0, rtol=0, atol=1e-15)

    def test_identity_at_zero_and_stationary_at_infinity(self, params):
        assert np.array_equal(transition_matrix(params, 0.0), np.eye(2))
        far = transition_matrix(params, 1e6)
        assert far[0, 1] == pytest.approx(0.3)
        assert far[1, 1] == pytest.approx(0.3)

    def test_rejects_negative_time(self, params):
        with pytest.raises(TrafficDomainError):
            transition_prob(params, 0, 1, -1.0)

    @pytest.mark.parametrize('s,t', [(0.3, 1.7), (2.0, 5.0), (0.01, 0.02)])
    def test_chapman_kolmogorov(self, params, s, t):
        composed = transition_matrix(params, s) @ transition_matrix(params, t)
        assert np.allclose(transition_matrix(params, s + t), composed, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize('t', [0.05, 1.0, 20.0])
    def test_detailed_balance(self, params, t):
        kernel = transition_matrix(params, t)
        stationary = np.array([1 - params.u, params.u])
        assert stationary[0] * kernel[0, 1] == pytest.approx(stationary[1] * kernel[1, 0], rel=1e-14)
        assert np.allclose(stationary @ kernel, stationary, rtol=0, atol=1e-15)

    @pytest.mark.parametrize('t', [0.05, 1.0, 20.0])
    def test_relabeling_reverses_the_kernel(self, params, t):
        swapped = transition_matrix(params.swapped(), t)
        assert np.allclose(swapped, transition_matrix(params, t)[::-1, ::-1], rtol=1e-13, atol=1e-15)


class TestSamplingPlan:

    def test_uniform(self):
        plan = SamplingPlan.uniform(50.0, 1000)
        assert plan.n == 1000
        assert plan.is_uniform
        assert plan.uniform_gap == pytest.approx(50.0 / 999)
        assert plan.t_total == pytest.approx(50.0)

    def test_uniform_needs_two_samples(self):
        with pytest.raises(TrafficDomainError):
            SamplingPlan.uniform(50.0, 1)

    def test_from_times(self):
        plan = SamplingPlan.from_times([0.0, 0.5, 2.0])
        assert plan.n == 3
        assert not plan.is_uniform
        assert np.allclose(plan.sample_times, [0.0, 0.5, 2.0])

    def test_evenly_spaced_instants_give_a_uniform_plan(self):
        times = np.concatenate(([0.0], np.cumsum(np.full(999, 50.0 / 999))))
        plan = SamplingPlan.from_times(times)
        assert plan.is_uniform
        assert plan.uniform_gap == pytest.approx(50.0 / 999, rel=1e-12)
        assert plan.t_total == pytest.approx(50.0, rel=1e-12)

    def test_single_sample_plan(self):
        assert SamplingPlan.from_times([3.0]).n == 1

    def test_gaps_are_read_only(self):
        plan = SamplingPlan.uniform(10.0, 5)
        with pytest.raises(ValueError):
            plan.inter_sample_times[0] = 1.0

    def test_rejects_non_increasing_times(self):
        with pytest.raises(TrafficDomainError):
            SamplingPlan.from_times([0.0, 1.0, 1.0])


class TestSensingModel:

    def test_perfect(self):
        assert PERFECT_SENSING.is_perfect
        assert not SensingModel(0.05, 0.0).is_perfect

    @pytest.mark.parametrize('p_f,p_m', [(-0.1, 0.0), (1.0, 0.0), (0.6, 0.5)])
    def test_rejects_invalid_probabilities(self, p_f, p_m):
        with pytest.raises(TrafficDomainError):
            SensingModel(p_f, p_m)

    def test_emission_weights(self):
        from_idle, from_busy = SensingModel(0.1, 0.2).emission_weights([0, 1])
        assert np.allclose(from_idle, [0.9, 0.1])
        assert np.allclose(from_busy, [0.2, 0.8])


class TestSamplesAndCounts:

    def test_count_transitions(self):
        samples = SampleVector([0, 0, 1, 1, 0], SamplingPlan.uniform(4.0, 5))
        counts = count_transitions(samples)
        assert counts == TransitionCounts(0, 1, 1, 1, 1)
        assert counts.n == 5

    def test_inconsistent_counts_rejected(self):
        with pytest.raises(TrafficDomainError):
            TransitionCounts(0, 0, 0, 1, 0)

    def test_count_transitions_needs_two_samples(self):
        with pytest.raises(TrafficDomainError):
            count_transitions(SampleVector([1], SamplingPlan.from_times([0.0])))

    def test_sample_vector_validation(self):
        plan = SamplingPlan.uniform(2.0, 3)
        with pytest.raises(TrafficDomainError):
            SampleVector([0, 2, 1], plan)
        with pytest.raises(TrafficDomainError):
            SampleVector([0, 1], plan)

    def test_all_bit_vectors(self):
        vectors = all_bit_vectors(3)
        assert vectors.shape == (8, 3)
        assert vectors[5].tolist() == [1, 0, 1]


class TestGeneration:

    def test_same_seed_same_path(self, params):
        plan = SamplingPlan.uniform(50.0, 200)
        assert generate_samples(params, plan, 7) == generate_samples(params, plan, 7)

    def test_transition_frequency_matches_kernel(self, params):
        # one long path at unit spacing: the 0->0 frequency estimates Pr00(1)
        samples = generate_samples(params, SamplingPlan.uniform(20000.0, 20001), 11)
        counts = count_transitions(samples)
        assert counts.n0 / (counts.n0 + counts.n1) == pytest.approx(0.7149361, abs=0.02)
        assert float(np.mean(samples.bits)) == pytest.approx(0.3, abs=0.03)

    def test_perfect_sensing_returns_input(self, params):
        samples = generate_samples(params, SamplingPlan.uniform(10.0, 20), 1)
        assert apply_sensing_errors(samples, PERFECT_SENSING, 2) is samples

    def test_false_alarm_rate(self):
        plan = SamplingPlan.uniform(1.0, 10000)
        idle = SampleVector(np.zeros(10000, dtype=int), plan)
        observed = apply_sensing_errors(idle, SensingModel(0.2, 0.0), 5)
        assert float(np.mean(observed.bits)) == pytest.approx(0.2, abs=0.02)

    def test_sample_file(self, params, tmp_path):
        samples = generate_samples(params, SamplingPlan.from_times([0.0, 0.5, 1.25, 2.0]), 3)
        path = write_sample_file(samples, tmp_path / 'samples.csv')
        assert read_sample_file(path) == samples

    def test_uniform_sample_file_keeps_the_plan(self, params, tmp_path):
        plan = SamplingPlan.uniform(50.0, 1000)
        samples = generate_samples(params, plan, 3)
        restored = read_sample_file(write_sample_file(samples, tmp_path / 'uniform.csv'))
        assert restored.plan.is_uniform
        assert restored.plan.uniform_gap == plan.uniform_gap
        assert restored == samples

    def test_every_index_is_stationary(self, params):
        plan = SamplingPlan.uniform(10.0, 6)
        trials = 4000
        bits = np.array([generate_samples(params, plan, seed).bits for seed in range(trials)])
        assert np.all(np.abs(bits.mean(axis=0) - params.u) < 0.035)

    def test_sample_file_needs_columns(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('t,value\n0,1\n')
        with pytest.raises(TrafficDomainError):
            read_sample_file(path)

    def test_sample_file_needs_increasing_times(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('time,bit\n0,1\n2,0\n1,0\n')
        with pytest.raises(TrafficDomainError):
            read_sample_file(path)
