"""Identity and oracle checks run by `putraffic verify`"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from putraffic.models.traffic import (
    SampleVector,
    SamplingPlan,
    SensingModel,
    TrafficParams,
    all_bit_vectors,
)
from putraffic.services.bounds import (
    cr_asymptotes,
    cr_closed_forms,
    cr_matrix_route,
    fisher_by_enumeration,
    fisher_matrix,
    mse_avg,
    mse_avg_by_enumeration,
    mse_avg_recursive_check,
    mse_avg_uniform_limit,
)
from putraffic.services.likelihood import (
    loglik_clean_general,
    loglik_noisy_bruteforce,
    loglik_noisy_forward,
)
from putraffic.utils.rng import make_rng

logger = logging.getLogger(__name__)

# Reference values at u=0.3, lambda_f=0.9 1/s over a 50 s window
REFERENCE_WINDOW = 50.0
REFERENCE_U_LIMIT = 0.00276316
REFERENCE_LF_LIMIT = 0.0255451
REFERENCE_AVG_LIMIT = 0.00278133
REFERENCE_DIGITS_RTOL = 5e-6


@dataclass(frozen=True)
class VerificationCheck:
    name: str
    passed: bool
    max_rel_err: float
    tolerance: float
    detail: str = ''


def rel_err(value: float, reference: float, scale: float = 0.0) -> float:
    """|value - reference| relative to max(|reference|, scale)"""
    denominator = max(abs(reference), scale)
    if denominator == 0:
        return abs(value - reference)
    return abs(value - reference) / denominator


def random_params(rng, u_range=(0.1, 0.9), memory_range=(0.05, 3.0)) -> tuple:
    """Interior parameters and a gap with lambda_f t_c / u drawn log-uniformly from memory_range"""
    u = float(rng.uniform(*u_range))
    lambda_f = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    x = float(np.exp(rng.uniform(np.log(memory_range[0]), np.log(memory_range[1]))))
    return TrafficParams.from_u_lf(u, lambda_f), x * u / lambda_f


def random_plan(rng, n: int, mean_gap: float) -> SamplingPlan:
    return SamplingPlan(rng.uniform(0.2, 1.8, size=n - 1) * mean_gap)


def _check(name: str, errors: List[float], tolerance: float, detail: str = '') -> VerificationCheck:
    worst = max(errors) if errors else 0.0
    passed = bool(errors) and all(math.isfinite(e) for e in errors) and worst <= tolerance
    return VerificationCheck(name, passed, worst, tolerance, detail)


# ========== Suites ==========

def check_fisher_identity(max_n: int, rng, points: int = 50) -> VerificationCheck:
    errors = []
    top = min(max_n, 8)
    for _ in range(points):
        params, t_c = random_params(rng)
        for n in range(2, top + 1):
            closed = fisher_matrix(params, t_c, n)
            oracle = fisher_by_enumeration(params, t_c, n)
            scale = math.sqrt(closed.i11 * closed.i22)
            errors.append(rel_err(oracle.i11, closed.i11))
            errors.append(rel_err(oracle.i22, closed.i22))
            errors.append(rel_err(oracle.i12, closed.i12, scale))
    return _check('fisher_identity', errors, 1e-5, f"N=2..{top}, {points} parameter points")


def check_determinant_and_routes(rng, points: int = 100) -> List[VerificationCheck]:
    determinant, routes = [], []
    for _ in range(points):
        params, t_c = random_params(rng)
        n = int(rng.integers(2, 1001))
        info = fisher_matrix(params, t_c, n)
        determinant.append(rel_err(info.determinant_direct, info.determinant_closed_form))
        closed = cr_closed_forms(params, t_c, n)
        route = cr_matrix_route(params, t_c, n)
        routes.extend(rel_err(c, r) for c, r in zip(closed, route))
    return [
        _check('determinant_identity', determinant, 1e-8, f"{points} points"),
        _check('cr_route_identity', routes, 1e-8, f"{points} points, u / lambda_f / lambda_n"),
    ]


def _all_samples(plan: SamplingPlan):
    return [SampleVector(bits, plan) for bits in all_bit_vectors(plan.n)]


def check_likelihoods(max_n: int, rng, cases: int = 200) -> List[VerificationCheck]:
    normalisation = []
    for n in range(1, min(max_n, 10) + 1):
        params, t_c = random_params(rng)
        plan = random_plan(rng, n, t_c)
        model = SensingModel(float(rng.uniform(0, 0.3)), float(rng.uniform(0, 0.3)))
        vectors = _all_samples(plan)
        clean = sum(math.exp(loglik_clean_general(s, params).value) for s in vectors)
        noisy = sum(math.exp(loglik_noisy_bruteforce(s, params, model).value) for s in vectors)
        normalisation.extend([abs(clean - 1.0), abs(noisy - 1.0)])

    equivalence = []
    for _ in range(cases):
        n = int(rng.integers(1, min(max_n, 12) + 1))
        params, t_c = random_params(rng)
        plan = random_plan(rng, n, t_c)
        model = SensingModel(float(rng.uniform(0, 0.4)), float(rng.uniform(0, 0.4)))
        samples = SampleVector(rng.integers(0, 2, size=n), plan)
        forward = loglik_noisy_forward(samples, params, model).value
        brute = loglik_noisy_bruteforce(samples, params, model).value
        # relative error of the likelihood itself
        equivalence.append(abs(math.expm1(forward - brute)))
    return [
        _check('likelihood_normalisation', normalisation, 1e-10),
        _check('forward_vs_bruteforce', equivalence, 1e-10, f"{cases} random cases"),
    ]


def check_averaging_mse(max_n: int, rng) -> List[VerificationCheck]:
    enumeration, recursion = [], []
    for n in range(2, min(max_n, 10) + 1):
        params, t_c = random_params(rng)
        plan = random_plan(rng, n, t_c)
        model = SensingModel(float(rng.uniform(0, 0.2)), float(rng.uniform(0, 0.2)))
        enumeration.append(rel_err(mse_avg_by_enumeration(params, plan, model).value,
                                   mse_avg(params, plan, model).value))
    for n in (2, 3, 5, 10, 30, 100):
        params, t_c = random_params(rng)
        model = SensingModel(float(rng.uniform(0, 0.2)), float(rng.uniform(0, 0.2)))
        for plan in (random_plan(rng, n, t_c), SamplingPlan.uniform(t_c * (n - 1), n)):
            recursion.append(rel_err(mse_avg_recursive_check(params, plan, model).value,
                                     mse_avg(params, plan, model).value))
    return [
        _check('mse_avg_vs_enumeration', enumeration, 1e-10),
        _check('mse_avg_vs_recursion', recursion, 1e-10),
    ]


def check_asymptotes(rng, points: int = 50) -> List[VerificationCheck]:
    params = TrafficParams.from_u_lf(0.3, 0.9)
    limits = cr_asymptotes(params, REFERENCE_WINDOW)
    values = [
        rel_err(limits[0].value, REFERENCE_U_LIMIT),
        rel_err(limits[1].value, REFERENCE_LF_LIMIT),
        rel_err(mse_avg_uniform_limit(params, REFERENCE_WINDOW).value, REFERENCE_AVG_LIMIT),
    ]

    n = 100000
    t_c = REFERENCE_WINDOW / (n - 1)
    closed = cr_closed_forms(params, t_c, n)
    convergence = [
        rel_err(closed.u, limits[0].value),
        rel_err(closed.lambda_f, limits[1].value),
        rel_err(closed.lambda_n, limits[2].value),
        rel_err(mse_avg(params, SamplingPlan.uniform(REFERENCE_WINDOW, n)).value,
                mse_avg_uniform_limit(params, REFERENCE_WINDOW).value),
    ]

    doubling = []
    for _ in range(points):
        sample, _ = random_params(rng)
        window = float(rng.uniform(1.0, 500.0))
        doubled = cr_asymptotes(sample, 2.0 * window)[0].value
        known = cr_asymptotes(sample, window)[3].value
        doubling.append(abs(doubled - known))
    return [
        _check('asymptote_values', values, REFERENCE_DIGITS_RTOL, "u=0.3, lambda_f=0.9, T=50"),
        _check('limit_convergence', convergence, 1e-2, f"N={n}"),
        _check('doubling_identity', doubling, 0.0, f"{points} random points"),
    ]


def run_verification(max_n: int = 10, seed: int = 0, progress: Callable = None) -> List[VerificationCheck]:
    """
    Run every identity and oracle check

    Args:
        max_n: largest N used by the enumeration suites (capped per suite)
        seed: seed of the random parameter grids
        progress: optional callback receiving each finished check
    """
    rng = make_rng(seed)
    suites = [
        lambda: [check_fisher_identity(max_n, rng)],
        lambda: check_determinant_and_routes(rng),
        lambda: check_likelihoods(max_n, rng),
        lambda: check_averaging_mse(max_n, rng),
        lambda: check_asymptotes(rng),
    ]
    checks = []
    for suite in suites:
        for check in suite():
            level = logging.INFO if check.passed else logging.ERROR
            logger.log(level, f"{check.name}: max rel err {check.max_rel_err:.3g} "
                              f"(tolerance {check.tolerance:g}) {'ok' if check.passed else 'FAILED'}")
            if progress is not None:
                progress(check)
            checks.append(check)
    return checks
