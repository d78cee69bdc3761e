"""Log-likelihood of sampled PU traffic, with and without sensing errors"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from putraffic.config import get_config
from putraffic.exceptions import EnumerationCapacityError, TrafficDomainError
from putraffic.models.traffic import (
    PERFECT_SENSING,
    SampleVector,
    SensingModel,
    TrafficParams,
    TransitionCounts,
    all_bit_vectors,
    count_transitions,
    transition_matrix,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogLikelihoodValue:
    """Natural log of a sample probability; underflowed marks a zero probability"""
    value: float
    underflowed: bool = False

    def __post_init__(self):
        value = float(self.value)
        if math.isnan(value):
            raise TrafficDomainError("log-likelihood evaluated to NaN")
        # rounding can push log(1) a few ulps above zero
        object.__setattr__(self, 'value', min(value, 0.0))
        object.__setattr__(self, 'underflowed', bool(self.underflowed or value == -math.inf))

    @classmethod
    def of(cls, value: float) -> 'LogLikelihoodValue':
        return cls(value, value == -math.inf)


def log_kernel(u, lambda_f, t):
    """
    Logs of the four transition probabilities, broadcast over u, lambda_f and t

    Returns:
        tuple (log Pr00, log Pr01, log Pr10, log Pr11); zero probabilities give -inf
    """
    u = np.asarray(u, dtype=float)
    lambda_f = np.asarray(lambda_f, dtype=float)
    t = np.asarray(t, dtype=float)
    decay = -np.expm1(-(lambda_f / u) * t)
    to_busy = u * decay
    to_idle = (1.0 - u) * decay
    with np.errstate(divide='ignore'):
        return (np.log1p(-to_busy), np.log(to_busy), np.log(to_idle), np.log1p(-to_idle))


def _weighted_sum(counts: np.ndarray, logs) -> np.ndarray:
    # 0 * log(0) counts as 0
    total = 0.0
    for count, log_p in zip(counts, logs):
        if count:
            total = total + count * log_p
    return total


# ========== Error-free likelihood ==========

def loglik_clean(counts: TransitionCounts, params: TrafficParams, t_c: float) -> LogLikelihoodValue:
    """
    Log-likelihood of uniformly spaced error-free samples from their transition counts

    Args:
        counts: first sample and transition counts
        params: traffic parameters
        t_c: constant inter-sample time (seconds)
    """
    if not t_c > 0:
        raise TrafficDomainError(f"inter-sample time must be positive, got {t_c}")
    prefix = math.log(params.u) if counts.z1 == 1 else math.log1p(-params.u)
    logs = log_kernel(params.u, params.lambda_f, t_c)
    return LogLikelihoodValue.of(prefix + float(_weighted_sum(counts.as_array(), logs)))


def loglik_clean_counts_grid(counts: TransitionCounts, u, lambda_f, t_c: float) -> np.ndarray:
    """Error-free log-likelihood over broadcast arrays of u and lambda_f (no validation of the grid)"""
    u = np.asarray(u, dtype=float)
    prefix = np.log(u) if counts.z1 == 1 else np.log1p(-u)
    logs = log_kernel(u, lambda_f, t_c)
    return prefix + _weighted_sum(counts.as_array(), logs)


def loglik_clean_general(samples: SampleVector, params: TrafficParams) -> LogLikelihoodValue:
    """Error-free log-likelihood for any sampling plan"""
    plan = samples.plan
    if plan.n == 1:
        prefix = math.log(params.u) if samples.bits[0] == 1 else math.log1p(-params.u)
        return LogLikelihoodValue.of(prefix)
    if plan.is_uniform:
        return loglik_clean(count_transitions(samples), params, plan.uniform_gap)

    bits = samples.bits.astype(np.intp)
    gaps, gap_index = np.unique(plan.inter_sample_times, return_inverse=True)
    logs = np.stack(log_kernel(params.u, params.lambda_f, gaps), axis=-1)
    steps = logs[gap_index, 2 * bits[:-1] + bits[1:]]
    prefix = math.log(params.u) if bits[0] == 1 else math.log1p(-params.u)
    return LogLikelihoodValue.of(prefix + float(np.sum(steps)))


# ========== Likelihood under sensing errors ==========

def loglik_noisy_bruteforce(samples: SampleVector, params: TrafficParams, model: SensingModel,
                            cap: Optional[int] = None) -> LogLikelihoodValue:
    """
    Likelihood of observed samples by summing over every hidden state sequence

    Exponential in N; only suitable as a reference for small N.

    Raises:
        EnumerationCapacityError: N above the enumeration cap
    """
    cap = get_config().ENUMERATION_CAP if cap is None else cap
    n = samples.n
    if n > cap:
        raise EnumerationCapacityError(
            f"brute-force likelihood is capped at N={cap} (got N={n}); use loglik_noisy_forward"
        )

    hidden = all_bit_vectors(n).astype(np.intp)
    log_paths = np.where(hidden[:, 0] == 1, math.log(params.u), math.log1p(-params.u))
    if n > 1:
        logs = np.stack(log_kernel(params.u, params.lambda_f, samples.plan.inter_sample_times), axis=-1)
        steps = 2 * hidden[:, :-1] + hidden[:, 1:]
        log_paths = log_paths + logs[np.arange(n - 1), steps].sum(axis=1)

    from_idle, from_busy = model.emission_weights(samples.bits)
    with np.errstate(divide='ignore'):
        log_emit = np.where(hidden == 0, np.log(from_idle), np.log(from_busy)).sum(axis=1)
        value = float(logsumexp(log_paths + log_emit))
    return LogLikelihoodValue.of(value)


def _step_kernels(samples: SampleVector, params: TrafficParams) -> list:
    """Flattened (Pr00, Pr01, Pr10, Pr11) per gap, computed once per distinct gap"""
    plan = samples.plan
    if plan.is_uniform:
        kernel = transition_matrix(params, plan.uniform_gap).ravel().tolist()
        return [kernel] * (plan.n - 1)
    gaps, gap_index = np.unique(plan.inter_sample_times, return_inverse=True)
    kernels = transition_matrix(params, gaps).reshape(-1, 4).tolist()
    return [kernels[j] for j in gap_index.tolist()]


def loglik_noisy_forward(samples: SampleVector, params: TrafficParams,
                         model: SensingModel) -> LogLikelihoodValue:
    """
    Likelihood of observed samples by forward filtering over the hidden state

    Linear in N. The two state weights are renormalised every step and the
    log of each normaliser is accumulated.
    """
    bits = samples.bits.tolist()
    p_f, p_m = model.p_f, model.p_m
    # emission[state][observed bit]
    idle_emit = (1.0 - p_f, p_f)
    busy_emit = (p_m, 1.0 - p_m)

    w0 = (1.0 - params.u) * idle_emit[bits[0]]
    w1 = params.u * busy_emit[bits[0]]
    total = 0.0
    for (p00, p01, p10, p11), bit in zip(_step_kernels(samples, params), bits[1:]):
        norm = w0 + w1
        if norm <= 0.0:
            return LogLikelihoodValue(-math.inf, True)
        total += math.log(norm)
        w0, w1 = w0 / norm, w1 / norm
        w0, w1 = (w0 * p00 + w1 * p10) * idle_emit[bit], (w0 * p01 + w1 * p11) * busy_emit[bit]

    norm = w0 + w1
    if norm <= 0.0:
        return LogLikelihoodValue(-math.inf, True)
    return LogLikelihoodValue.of(total + math.log(norm))


def loglik_noisy_forward_grid(samples: SampleVector, u, lambda_f, model: SensingModel) -> np.ndarray:
    """Forward recursion vectorised over broadcast arrays of u and lambda_f (optimizer seeding)"""
    u, lambda_f = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(lambda_f, dtype=float))
    bits = samples.bits.tolist()
    idle_emit = (1.0 - model.p_f, model.p_f)
    busy_emit = (model.p_m, 1.0 - model.p_m)
    plan = samples.plan

    w0 = (1.0 - u) * idle_emit[bits[0]]
    w1 = u * busy_emit[bits[0]]
    total = np.zeros(u.shape)
    kernel_cache = {}
    with np.errstate(divide='ignore', invalid='ignore'):
        for gap, bit in zip(plan.inter_sample_times.tolist(), bits[1:]):
            if gap not in kernel_cache:
                decay = -np.expm1(-(lambda_f / u) * gap)
                kernel_cache[gap] = (u * decay, (1.0 - u) * decay)
            to_busy, to_idle = kernel_cache[gap]
            norm = w0 + w1
            total += np.log(norm)
            w0, w1 = w0 / norm, w1 / norm
            w0, w1 = ((w0 * (1.0 - to_busy) + w1 * to_idle) * idle_emit[bit],
                      (w0 * to_busy + w1 * (1.0 - to_idle)) * busy_emit[bit])
        total += np.log(w0 + w1)
    return np.where(np.isnan(total), -np.inf, total)


def observation_probabilities(params: TrafficParams, plan, model: SensingModel = PERFECT_SENSING,
                              cap: Optional[int] = None) -> tuple:
    """
    Probability of every possible observation vector under a plan

    Runs the forward recursion for all 2^N observation vectors at once.

    Returns:
        (vectors, probabilities): array (2^N, N) in lexicographic order and the matching probabilities
    """
    cap = get_config().ENUMERATION_CAP if cap is None else cap
    if plan.n > cap:
        raise EnumerationCapacityError(
            f"enumerating observation vectors is capped at N={cap} (got N={plan.n})"
        )
    vectors = all_bit_vectors(plan.n)
    from_idle, from_busy = model.emission_weights(vectors)
    w0 = (1.0 - params.u) * from_idle[:, 0]
    w1 = params.u * from_busy[:, 0]
    kernels = transition_matrix(params, plan.inter_sample_times)
    for i, kernel in enumerate(kernels, start=1):
        w0, w1 = ((w0 * kernel[0, 0] + w1 * kernel[1, 0]) * from_idle[:, i],
                  (w0 * kernel[0, 1] + w1 * kernel[1, 1]) * from_busy[:, i])
    return vectors, w0 + w1


def loglik_observed(samples: SampleVector, params: TrafficParams,
                    model: SensingModel = PERFECT_SENSING) -> LogLikelihoodValue:
    """Production likelihood: error-free form for perfect sensing, forward recursion otherwise"""
    if model.is_perfect:
        return loglik_clean_general(samples, params)
    return loglik_noisy_forward(samples, params, model)
