"""Fisher information, Cramer-Rao bounds and the MSE of the averaging estimator"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from putraffic.config import get_config
from putraffic.exceptions import DegenerateInformationError, EnumerationCapacityError, TrafficDomainError
from putraffic.models.traffic import (
    PERFECT_SENSING,
    SamplingPlan,
    SensingModel,
    TrafficParams,
    all_bit_vectors,
)
from putraffic.services.likelihood import log_kernel, observation_probabilities

logger = logging.getLogger(__name__)


class BoundKind(str, Enum):
    CR_U_JOINT = 'cr_u_joint'
    CR_LF_JOINT = 'cr_lf_joint'
    CR_LN_JOINT = 'cr_ln_joint'
    CR_U_KNOWN_LF = 'cr_u_known_lf'
    CR_LF_KNOWN_U = 'cr_lf_known_u'
    CR_U_JOINT_LIMIT = 'cr_u_joint_limit'
    CR_LF_LIMIT = 'cr_lf_limit'
    CR_LN_LIMIT = 'cr_ln_limit'
    CR_U_KNOWN_LF_LIMIT = 'cr_u_known_lf_limit'
    MSE_AVG = 'mse_avg'
    MSE_AVG_UNIFORM = 'mse_avg_uniform'
    MSE_AVG_UNIFORM_LIMIT = 'mse_avg_uniform_limit'


@dataclass(frozen=True)
class BoundReport:
    """An MSE bound (or exact MSE): dimensionless for u, 1/s^2 for rates"""
    value: float
    kind: BoundKind

    def __post_init__(self):
        if not self.value >= 0:
            raise DegenerateInformationError(f"{self.kind.value} evaluated to {self.value}")

    @property
    def rms(self) -> float:
        return math.sqrt(self.value)


@dataclass(frozen=True)
class FisherInfo:
    """Fisher information of (u, lambda_f) for N uniformly spaced error-free samples"""
    i11: float
    i12: float
    i22: float
    n: int
    t_c: float
    params: TrafficParams

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.i11, self.i12], [self.i12, self.i22]])

    @property
    def determinant_direct(self) -> float:
        return self.i11 * self.i22 - self.i12 ** 2

    @property
    def determinant_closed_form(self) -> float:
        k = _Kernel(self.params, self.t_c)
        return ((k.gamma * self.t_c) ** 2 * (self.n - 1) * (2 * k.gamma + self.n * k.one_minus_gamma)
                / (self.params.u * k.p01 * k.p00 * k.p11))

    def is_positive_semidefinite(self) -> bool:
        scale = max(abs(self.i11 * self.i22), self.i12 ** 2, 1e-300)
        return self.i11 >= 0 and self.i22 >= 0 and self.determinant_direct >= -1e-9 * scale

    def inverse_diagonal(self) -> Tuple[float, float]:
        """Diagonal of the inverse matrix, using the closed-form determinant"""
        det = self.determinant_closed_form
        if not (math.isfinite(det) and det > 0):
            raise DegenerateInformationError(f"Fisher matrix is singular (determinant {det})")
        return self.i22 / det, self.i11 / det

    def inverse(self) -> np.ndarray:
        det = self.determinant_closed_form
        if not (math.isfinite(det) and det > 0):
            raise DegenerateInformationError(f"Fisher matrix is singular (determinant {det})")
        return np.array([[self.i22, -self.i12], [-self.i12, self.i11]]) / det


class _Kernel:
    """Gamma_c and the transition probabilities at a uniform gap"""

    def __init__(self, params: TrafficParams, t_c: float):
        x = params.lambda_f * t_c / params.u
        self.gamma = math.exp(-x)
        self.one_minus_gamma = -math.expm1(-x)
        self.p01 = params.u * self.one_minus_gamma
        self.p00 = 1.0 - self.p01
        self.p10 = (1.0 - params.u) * self.one_minus_gamma
        self.p11 = 1.0 - self.p10


def _check_uniform_args(t_c: float, n: int):
    if not t_c > 0 or not math.isfinite(t_c):
        raise TrafficDomainError(f"inter-sample time must be positive, got {t_c}")
    if int(n) != n or n < 2:
        raise TrafficDomainError(f"at least two samples are required, got n={n}")


def _check_window(t_total: float):
    if not t_total > 0 or not math.isfinite(t_total):
        raise TrafficDomainError(f"observation window must be positive, got {t_total}")


# ========== Fisher information ==========

def fisher_matrix(params: TrafficParams, t_c: float, n: int) -> FisherInfo:
    """
    Closed-form Fisher information of (u, lambda_f)

    Args:
        params: interior traffic parameters
        t_c: uniform inter-sample time (seconds)
        n: number of samples
    """
    _check_uniform_args(t_c, n)
    u, lf = params.u, params.lambda_f
    k = _Kernel(params, t_c)
    g, omg = k.gamma, k.one_minus_gamma
    lt = lf * t_c
    triple = k.p01 * k.p00 * k.p11

    i11 = (g ** 2 * lt * (n - 1) * (lt * (1 - u) * (1 + g) + 2 * u * (2 * u - 1) * omg) / (u ** 2 * triple)
           - ((n - 1) * g ** 2 - n * g + u * k.p10 * ((3 * n - 2) * g - n)) / (u * (1 - u) * k.p00 * k.p11))
    i12 = -(n - 1) * g ** 2 * t_c * (lt * (1 - u) * (1 + g) + k.p01 * (2 * u - 1)) / (u * triple)
    i22 = (n - 1) * g ** 2 * t_c ** 2 * (1 - u) * (1 + g) / triple

    info = FisherInfo(i11, i12, i22, int(n), float(t_c), params)
    if not all(math.isfinite(v) for v in (i11, i12, i22)):
        raise DegenerateInformationError(f"Fisher information is not finite at {params}, t_c={t_c}")
    return info


def _increment_deltas(params: TrafficParams, t_c: float, du: float, dl: float) -> np.ndarray:
    """log(Pr_new / Pr_old) for Pr00, Pr01, Pr10, Pr11 after a step (du, dl), differences formed exactly"""
    u, lf = params.u, params.lambda_f
    k = _Kernel(params, t_c)
    exponent_change = -t_c * (u * dl - lf * du) / (u * (u + du))
    gamma_change = k.gamma * math.expm1(exponent_change)
    one_minus_new = k.one_minus_gamma - gamma_change
    d01 = du * one_minus_new - u * gamma_change
    d10 = -du * one_minus_new - (1 - u) * gamma_change
    return np.array([
        math.log1p(-d01 / k.p00),
        math.log1p(d01 / k.p01),
        math.log1p(d10 / k.p10),
        math.log1p(-d10 / k.p11),
    ])


def fisher_by_enumeration(params: TrafficParams, t_c: float, n: int, cap: Optional[int] = None,
                          relative_step: Optional[float] = None) -> FisherInfo:
    """
    Fisher information as the expected negative Hessian over all 2^n sample vectors

    Second derivatives are central finite differences in (u, lambda_f) with a
    relative step, taken on exactly formed log-likelihood increments.
    """
    cfg = get_config()
    cap = cfg.FISHER_ENUMERATION_CAP if cap is None else cap
    step = cfg.FD_RELATIVE_STEP if relative_step is None else relative_step
    _check_uniform_args(t_c, n)
    if n > cap:
        raise EnumerationCapacityError(f"Fisher enumeration is capped at n={cap} (got n={n}); use fisher_matrix")

    vectors = all_bit_vectors(n).astype(np.intp)
    pairs = 2 * vectors[:, :-1] + vectors[:, 1:]
    counts = np.stack([(pairs == j).sum(axis=1) for j in range(4)], axis=1).astype(float)
    busy_start = vectors[:, 0] == 1

    u = params.u
    logs = np.array(log_kernel(u, params.lambda_f, t_c), dtype=float)
    log_prior = np.where(busy_start, math.log(u), math.log1p(-u))
    weights = np.exp(log_prior + counts @ logs)

    def expected_increment(du: float, dl: float) -> float:
        prior_change = np.where(busy_start, math.log1p(du / u), math.log1p(-du / (1 - u)))
        change = prior_change + counts @ _increment_deltas(params, t_c, du, dl)
        return float(np.dot(weights, change))

    h = step * u
    k = step * params.lambda_f
    i11 = -(expected_increment(h, 0.0) + expected_increment(-h, 0.0)) / h ** 2
    i22 = -(expected_increment(0.0, k) + expected_increment(0.0, -k)) / k ** 2
    i12 = -(expected_increment(h, k) - expected_increment(h, -k)
            - expected_increment(-h, k) + expected_increment(-h, -k)) / (4 * h * k)
    return FisherInfo(i11, i12, i22, int(n), float(t_c), params)


# ========== Cramer-Rao bounds ==========

def _route_checked(closed_form: float, matrix_route: float, kind: BoundKind) -> BoundReport:
    tolerance = get_config().CR_ROUTE_RTOL
    if not math.isfinite(matrix_route) or matrix_route <= 0:
        raise DegenerateInformationError(f"{kind.value}: inverse Fisher diagonal is {matrix_route}")
    if not math.isfinite(closed_form) or abs(closed_form - matrix_route) > tolerance * abs(matrix_route):
        logger.warning(f"{kind.value}: closed form {closed_form!r} disagrees with the inverse Fisher "
                       f"diagonal {matrix_route!r}; using the latter")
        return BoundReport(matrix_route, kind)
    return BoundReport(closed_form, kind)


def _gap_terms(params: TrafficParams, t_c: float, n: int):
    k = _Kernel(params, t_c)
    if k.gamma == 0.0:
        raise DegenerateInformationError(
            f"samples {t_c}s apart carry no rate information at {params}"
        )
    spread = 2 * k.gamma + n * k.one_minus_gamma
    tail = k.p10 * params.u * ((3 * n - 2) * k.gamma - n) + (n - 1) * k.gamma ** 2 - k.gamma * n
    return k, spread, tail


class JointVariances(NamedTuple):
    u: float
    lambda_f: float
    lambda_n: float


def cr_closed_forms(params: TrafficParams, t_c: float, n: int) -> JointVariances:
    """Closed-form joint bounds on u, lambda_f (jointly with u) and lambda_n (jointly with u)"""
    _check_uniform_args(t_c, n)
    u, lf, ln = params.u, params.lambda_f, params.lambda_n
    k, spread, tail = _gap_terms(params, t_c, n)
    gt2 = (k.gamma * t_c) ** 2

    var_u = u * (1 - u) * (1 + k.gamma) / spread
    var_lf = (lf * (lf * t_c * (1 - u) * (1 + k.gamma) + 2 * u * (2 * u - 1) * k.one_minus_gamma)
              / (u * t_c * spread)
              - k.p01 * tail / (gt2 * (1 - u) * (n - 1) * spread))
    var_ln = (ln * (ln * t_c * u * (1 + k.gamma) + 2 * (1 - u) * (1 - 2 * u) * k.one_minus_gamma)
              / ((1 - u) * t_c * spread)
              - k.p10 * tail / (gt2 * u * (n - 1) * spread))
    return JointVariances(var_u, var_lf, var_ln)


def cr_matrix_route(params: TrafficParams, t_c: float, n: int) -> JointVariances:
    """The same bounds read off the inverse Fisher matrix"""
    info = fisher_matrix(params, t_c, n)
    var_u, var_lf = info.inverse_diagonal()
    u = params.u
    # lambda_n = lambda_f (1 - u) / u; propagate through the Jacobian
    jacobian = np.array([-params.lambda_f / u ** 2, (1 - u) / u])
    var_ln = float(jacobian @ info.inverse() @ jacobian)
    return JointVariances(float(var_u), float(var_lf), var_ln)


def cr_bounds_joint_uf(params: TrafficParams, t_c: float, n: int) -> Tuple[BoundReport, BoundReport]:
    """Cramer-Rao bounds on u and lambda_f when both are estimated jointly"""
    route = cr_matrix_route(params, t_c, n)
    closed = cr_closed_forms(params, t_c, n)
    return (_route_checked(closed.u, route.u, BoundKind.CR_U_JOINT),
            _route_checked(closed.lambda_f, route.lambda_f, BoundKind.CR_LF_JOINT))


def cr_bounds_joint_un(params: TrafficParams, t_c: float, n: int) -> Tuple[BoundReport, BoundReport]:
    """Cramer-Rao bounds on u and lambda_n when both are estimated jointly"""
    route = cr_matrix_route(params, t_c, n)
    closed = cr_closed_forms(params, t_c, n)
    return (_route_checked(closed.u, route.u, BoundKind.CR_U_JOINT),
            _route_checked(closed.lambda_n, route.lambda_n, BoundKind.CR_LN_JOINT))


def cr_bound_u_known_lf(params: TrafficParams, t_c: float, n: int) -> BoundReport:
    """Cramer-Rao bound on u when lambda_f is known"""
    info = fisher_matrix(params, t_c, n)
    if not info.i11 > 0:
        raise DegenerateInformationError(f"no information on u at {params}")
    return BoundReport(1.0 / info.i11, BoundKind.CR_U_KNOWN_LF)


def cr_bound_lf_known_u(params: TrafficParams, t_c: float, n: int) -> BoundReport:
    """Cramer-Rao bound on lambda_f when u is known"""
    info = fisher_matrix(params, t_c, n)
    if not info.i22 > 0:
        raise DegenerateInformationError(f"no information on lambda_f at {params}, t_c={t_c}")
    return BoundReport(1.0 / info.i22, BoundKind.CR_LF_KNOWN_U)


def cr_asymptotes(params: TrafficParams, t_total: float) -> List[BoundReport]:
    """
    Large-N limits of the bounds at a fixed observation window

    Returns:
        [joint u limit, lambda_f limit, lambda_n limit, known-lambda_f u limit]
    """
    _check_window(t_total)
    u, lf, ln = params.u, params.lambda_f, params.lambda_n
    # grouped as (T * lambda_f) / (2u) so that doubling T reproduces the known-lambda_f limit bit for bit
    joint_u = u * (1 - u) / (1 + t_total * lf / (2.0 * u))
    known_lf_u = u * (1 - u) / (1 + t_total * lf / u)
    lf_limit = lf * (u + t_total * lf) / (t_total * (1 - u) * (2 * u + t_total * lf))
    ln_limit = ln * ((1 - u) + t_total * ln) / (t_total * u * (2 * (1 - u) + t_total * ln))
    return [
        BoundReport(joint_u, BoundKind.CR_U_JOINT_LIMIT),
        BoundReport(lf_limit, BoundKind.CR_LF_LIMIT),
        BoundReport(ln_limit, BoundKind.CR_LN_LIMIT),
        BoundReport(known_lf_u, BoundKind.CR_U_KNOWN_LF_LIMIT),
    ]


# ========== Averaging estimator MSE ==========

def _sensing_term(params: TrafficParams, n: int, model: SensingModel) -> float:
    p_f, p_m = model.p_f, model.p_m
    return ((params.u * p_m * (1 - p_m) + (1 - params.u) * p_f * (1 - p_f))
            / (n * (1 - p_f - p_m) ** 2))


def _correlation_sum_general(sample_times: np.ndarray, rate: float) -> float:
    """Sum over sample pairs m < l of exp(-rate (t_l - t_m))"""
    total = 0.0
    for lag in range(1, sample_times.size):
        total += float(np.sum(np.exp(-rate * (sample_times[lag:] - sample_times[:-lag]))))
    return total


def _correlation_sum_uniform(n: int, epsilon: float, small_eta: float) -> float:
    """Sum_{i=1}^{n-1} (n - i) exp(-i epsilon)"""
    if n < 2:
        return 0.0
    if n * epsilon < small_eta:
        lags = np.arange(1, n, dtype=float)
        return float(np.sum((n - lags) * np.exp(-lags * epsilon)))
    em1 = math.expm1(-epsilon)
    return math.exp(-epsilon) * (-n * em1 + math.expm1(-n * epsilon)) / em1 ** 2


def mse_avg(params: TrafficParams, plan: SamplingPlan, model: SensingModel = PERFECT_SENSING) -> BoundReport:
    """
    Exact MSE of the bias-corrected averaging estimator

    O(N) for uniform plans through the geometric closed form, O(N^2) otherwise.
    """
    u, n = params.u, plan.n
    rate = params.lambda_f / u
    if plan.is_uniform:
        correlation = _correlation_sum_uniform(n, rate * plan.uniform_gap, get_config().SMALL_ETA)
        kind = BoundKind.MSE_AVG_UNIFORM
    else:
        correlation = _correlation_sum_general(plan.sample_times, rate)
        kind = BoundKind.MSE_AVG
    value = 2 * u * (1 - u) * correlation / n ** 2 + u * (1 - u) / n + _sensing_term(params, n, model)
    return BoundReport(value, kind)


def mse_avg_uniform_limit(params: TrafficParams, t_total: float) -> BoundReport:
    """Large-N MSE of the averaging estimator under uniform sampling over t_total seconds"""
    _check_window(t_total)
    u = params.u
    eta = t_total * params.lambda_f / u
    if eta < get_config().SMALL_ETA:
        # (e^-eta + eta - 1) / eta^2 = sum_k (-eta)^k / (k + 2)!
        shape = sum((-eta) ** j / math.factorial(j + 2) for j in range(6))
    else:
        shape = (math.expm1(-eta) + eta) / eta ** 2
    return BoundReport(2 * u * (1 - u) * shape, BoundKind.MSE_AVG_UNIFORM_LIMIT)


def mse_avg_recursive_check(params: TrafficParams, plan: SamplingPlan,
                            model: SensingModel = PERFECT_SENSING) -> BoundReport:
    """MSE of the averaging estimator grown one sample at a time from the two-sample case"""
    if plan.n < 2:
        raise TrafficDomainError("the recursion starts from two samples")
    u = params.u
    rate = params.lambda_f / u
    p_f, p_m = model.p_f, model.p_m
    contrast = 1 - p_f - p_m
    decays = np.exp(-rate * plan.inter_sample_times).tolist()

    value = u * (1 - u) * (decays[0] + 1) / 2 + _sensing_term(params, 2, model)
    # pair-correlation sum from every earlier sample to the newest one
    reach = decays[0]
    for size in range(2, plan.n):
        reach = decays[size - 1] * (reach + 1)
        grown = (size + 1) ** 2
        cross = 2 * size * u ** 2 / grown + 2 * u * (1 - u) * reach / grown
        own = (p_f * (1 - p_f) + u * (1 - 2 * p_f) * contrast) / (grown * contrast ** 2)
        value = size ** 2 * value / grown + cross + own - (2 * size + 1) * u ** 2 / grown
    return BoundReport(value, BoundKind.MSE_AVG if not plan.is_uniform else BoundKind.MSE_AVG_UNIFORM)


def mse_avg_by_enumeration(params: TrafficParams, plan: SamplingPlan,
                           model: SensingModel = PERFECT_SENSING, cap: Optional[int] = None) -> BoundReport:
    """MSE of the averaging estimator as E[estimate^2] - u^2 over all 2^N observation vectors"""
    cap = get_config().AVG_ENUMERATION_CAP if cap is None else cap
    vectors, probabilities = observation_probabilities(params, plan, model, cap=cap)
    estimates = (vectors.mean(axis=1) - model.p_f) / (1 - model.p_f - model.p_m)
    value = float(np.dot(probabilities, estimates ** 2)) - params.u ** 2
    return BoundReport(max(value, 0.0), BoundKind.MSE_AVG if not plan.is_uniform else BoundKind.MSE_AVG_UNIFORM)
