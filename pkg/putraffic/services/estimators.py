"""Duty-cycle and rate estimators for sampled PU traffic"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from putraffic.config import get_config
from putraffic.exceptions import TrafficDomainError
from putraffic.models.traffic import (
    PERFECT_SENSING,
    SampleVector,
    SensingModel,
    TrafficParams,
    count_transitions,
    transition_matrix,
)
from putraffic.services.likelihood import (
    loglik_clean_counts_grid,
    loglik_noisy_forward_grid,
    loglik_observed,
)

logger = logging.getLogger(__name__)

COUPLING_TOLERANCE = 1e-9
BOUNDARY_TOLERANCE = 1e-6


class EstimatorId(str, Enum):
    AVG = 'avg'
    ML_JOINT_F = 'ml-joint-f'
    ML_JOINT_N = 'ml-joint-n'
    ML_KNOWN_LF = 'ml-known-lf'
    ML_KNOWN_U = 'ml-known-u'

    @property
    def estimates_rates(self) -> bool:
        return self is not EstimatorId.AVG


@dataclass(frozen=True)
class EstimateReport:
    """Estimator output with optimizer diagnostics; rate fields are None for the averaging estimator"""
    u_hat: float
    lambda_f_hat: Optional[float]
    lambda_n_hat: Optional[float]
    loglik_at_opt: Optional[float]
    converged: bool
    boundary_hit: bool
    iterations: int
    estimator_id: EstimatorId
    u_unclamped: Optional[float] = None
    objective_evaluations: int = 0

    def __post_init__(self):
        if self.lambda_f_hat is not None and self.lambda_n_hat is not None:
            implied = self.lambda_f_hat / (self.lambda_f_hat + self.lambda_n_hat)
            if abs(implied - self.u_hat) > COUPLING_TOLERANCE:
                raise TrafficDomainError(f"estimates are not coupled: u_hat={self.u_hat}, implied {implied}")

    def as_params(self) -> TrafficParams:
        if self.lambda_f_hat is None:
            raise TrafficDomainError(f"{self.estimator_id.value} does not estimate rates")
        return TrafficParams.from_u_lf(self.u_hat, self.lambda_f_hat)


class StationarityResiduals(NamedTuple):
    r_lambda: float
    r_u: float
    r_u_printed: float


class _LikelihoodSurface:
    """Log-likelihood of fixed data as a function of (u, lambda_f), scalar and vectorised"""

    def __init__(self, samples: SampleVector, model: SensingModel):
        self.samples = samples
        self.model = model
        self.counts = None
        if model.is_perfect and samples.plan.is_uniform:
            self.counts = count_transitions(samples)
            self.gap = samples.plan.uniform_gap

    def value(self, u: float, lambda_f: float) -> float:
        if self.counts is not None:
            return float(loglik_clean_counts_grid(self.counts, u, lambda_f, self.gap))
        params = TrafficParams.from_u_lf(u, lambda_f)
        return loglik_observed(self.samples, params, self.model).value

    def grid(self, u, lambda_f) -> np.ndarray:
        if self.counts is not None:
            return np.broadcast_to(loglik_clean_counts_grid(self.counts, u, lambda_f, self.gap),
                                   np.broadcast(u, lambda_f).shape)
        return loglik_noisy_forward_grid(self.samples, u, lambda_f, self.model)


@dataclass
class _SearchResult:
    x: np.ndarray
    loglik: float
    converged: bool
    boundary_hit: bool
    iterations: int
    evaluations: int


class TrafficEstimator:
    """
    Maximum-likelihood and averaging estimators sharing one set of search settings

    The ML searches work in (logit u, log rate) coordinates over a box, seeded
    from a grid and refined with a bounded Nelder-Mead simplex.
    """

    def __init__(self, grid_size: Optional[int] = None, u_min: Optional[float] = None,
                 rate_min_factor: Optional[float] = None, rate_max_factor: Optional[float] = None,
                 fatol: Optional[float] = None, xatol: Optional[float] = None,
                 maxiter: Optional[int] = None):
        cfg = get_config()
        self.grid_size = cfg.GRID_SIZE if grid_size is None else grid_size
        self.u_min = cfg.U_MIN if u_min is None else u_min
        self.rate_min_factor = cfg.RATE_MIN_FACTOR if rate_min_factor is None else rate_min_factor
        self.rate_max_factor = cfg.RATE_MAX_FACTOR if rate_max_factor is None else rate_max_factor
        self.fatol = cfg.SIMPLEX_FATOL if fatol is None else fatol
        self.xatol = cfg.SIMPLEX_XATOL if xatol is None else xatol
        self.maxiter = cfg.SIMPLEX_MAXITER if maxiter is None else maxiter
        self._check_settings()

    def _check_settings(self):
        if int(self.grid_size) != self.grid_size or self.grid_size < 1:
            raise TrafficDomainError(f"grid_size must be a positive integer, got {self.grid_size}")
        if not 0.0 < self.u_min < 0.5:
            raise TrafficDomainError(f"u_min must lie in (0, 0.5), got {self.u_min}")
        if not 0.0 < self.rate_min_factor < self.rate_max_factor:
            raise TrafficDomainError(
                f"rate factors must satisfy 0 < min < max, got {self.rate_min_factor}, {self.rate_max_factor}"
            )
        if self.fatol < 0 or self.xatol < 0:
            raise TrafficDomainError("simplex tolerances must be non-negative")
        if int(self.maxiter) != self.maxiter or self.maxiter < 1:
            raise TrafficDomainError(f"maxiter must be a positive integer, got {self.maxiter}")
        self.grid_size = int(self.grid_size)
        self.maxiter = int(self.maxiter)

    # ========== Search box ==========

    def rate_bounds(self, samples: SampleVector) -> tuple:
        plan = samples.plan
        return (self.rate_min_factor / plan.t_total,
                self.rate_max_factor * (plan.n - 1) / plan.t_total)

    def _logit_u_bounds(self) -> tuple:
        return float(logit(self.u_min)), float(logit(1.0 - self.u_min))

    def _log_rate_bounds(self, samples: SampleVector) -> tuple:
        low, high = self.rate_bounds(samples)
        return math.log(low), math.log(high)

    # ========== Averaging ==========

    def averaging(self, samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
        """Bias-corrected sample mean, clamped to [u_min, 1 - u_min]"""
        contrast = 1.0 - model.p_f - model.p_m
        if contrast <= 0:
            raise TrafficDomainError("p_f + p_m must be below 1")
        raw = (float(np.mean(samples.bits)) - model.p_f) / contrast
        clamped = min(max(raw, self.u_min), 1.0 - self.u_min)
        return EstimateReport(
            u_hat=clamped, lambda_f_hat=None, lambda_n_hat=None, loglik_at_opt=None,
            converged=True, boundary_hit=clamped != raw, iterations=0,
            estimator_id=EstimatorId.AVG, u_unclamped=raw,
        )

    # ========== Maximum likelihood ==========

    def joint_uf(self, samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
        """Joint ML estimate over (u, lambda_f)"""
        _require_transitions(samples)
        lower = np.array([self._logit_u_bounds()[0], self._log_rate_bounds(samples)[0]])
        upper = np.array([self._logit_u_bounds()[1], self._log_rate_bounds(samples)[1]])

        def to_native(x):
            return expit(x[0]), np.exp(x[1])

        return self._run(samples, model, to_native, lower, upper, EstimatorId.ML_JOINT_F,
                         corner=lambda busy: np.array([upper[0] if busy else lower[0], lower[1]]))

    def joint_un(self, samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
        """Joint ML estimate over (u, lambda_n)"""
        _require_transitions(samples)
        lower = np.array([self._logit_u_bounds()[0], self._log_rate_bounds(samples)[0]])
        upper = np.array([self._logit_u_bounds()[1], self._log_rate_bounds(samples)[1]])

        def to_native(x):
            u = expit(x[0])
            # lambda_f = u lambda_n / (1 - u) = lambda_n exp(logit u)
            return u, np.exp(x[1] + x[0])

        report = self._run(samples, model, to_native, lower, upper, EstimatorId.ML_JOINT_N,
                           corner=lambda busy: np.array([upper[0] if busy else lower[0], lower[1]]),
                           free_rate='lambda_n')
        return report

    def u_known_lf(self, samples: SampleVector, lambda_f: float,
                   model: SensingModel = PERFECT_SENSING) -> EstimateReport:
        """ML estimate of u with lambda_f fixed"""
        _require_transitions(samples)
        if not lambda_f > 0:
            raise TrafficDomainError(f"lambda_f must be positive, got {lambda_f}")
        lower = np.array([self._logit_u_bounds()[0]])
        upper = np.array([self._logit_u_bounds()[1]])

        def to_native(x):
            return expit(x[0]), lambda_f

        return self._run(samples, model, to_native, lower, upper, EstimatorId.ML_KNOWN_LF,
                         corner=lambda busy: np.array([upper[0] if busy else lower[0]]))

    def lf_known_u(self, samples: SampleVector, u: float,
                   model: SensingModel = PERFECT_SENSING) -> EstimateReport:
        """ML estimate of lambda_f with u fixed"""
        _require_transitions(samples)
        if not 0.0 < u < 1.0:
            raise TrafficDomainError(f"u must lie in (0, 1), got {u}")
        lower = np.array([self._log_rate_bounds(samples)[0]])
        upper = np.array([self._log_rate_bounds(samples)[1]])

        def to_native(x):
            return u, np.exp(x[0])

        return self._run(samples, model, to_native, lower, upper, EstimatorId.ML_KNOWN_U,
                         corner=lambda busy: lower.copy())

    def _run(self, samples: SampleVector, model: SensingModel, to_native: Callable,
             lower: np.ndarray, upper: np.ndarray, estimator_id: EstimatorId,
             corner: Callable, free_rate: str = 'lambda_f') -> EstimateReport:
        surface = _LikelihoodSurface(samples, model)
        bits = samples.bits
        if bits.min() == bits.max():
            # no transitions: the supremum sits at the corner of the box
            x = corner(bool(bits[0]))
            u, lambda_f = to_native(x)
            logger.debug(f"{estimator_id.value}: constant samples, returning box corner")
            result = _SearchResult(x, surface.value(float(u), float(lambda_f)), True, True, 0, 1)
        else:
            result = self._search(surface, to_native, lower, upper)
            if not result.converged:
                logger.warning(f"{estimator_id.value}: simplex search did not converge after "
                               f"{result.iterations} iterations")

        u, lambda_f = (float(v) for v in to_native(result.x))
        if free_rate == 'lambda_n':
            lambda_n = float(np.exp(result.x[1]))
        else:
            lambda_n = lambda_f * (1.0 - u) / u
        return EstimateReport(
            u_hat=u, lambda_f_hat=lambda_f, lambda_n_hat=lambda_n, loglik_at_opt=result.loglik,
            converged=result.converged, boundary_hit=result.boundary_hit, iterations=result.iterations,
            estimator_id=estimator_id, objective_evaluations=result.evaluations,
        )

    def _search(self, surface: _LikelihoodSurface, to_native: Callable,
                lower: np.ndarray, upper: np.ndarray) -> _SearchResult:
        dims = lower.size
        axes = [np.linspace(lo, hi, self.grid_size + 2)[1:-1] for lo, hi in zip(lower, upper)]
        # 'ij' ordering: argmax picks the lowest u, then the lowest rate, among ties
        points = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing='ij')], axis=1)
        native = to_native(points.T)
        values = surface.grid(native[0], native[1])
        best = int(np.argmax(values))
        x0 = points[best]

        steps = (upper - lower) / (self.grid_size + 1)
        simplex = [x0]
        for d in range(dims):
            vertex = x0.copy()
            vertex[d] += steps[d] if x0[d] + steps[d] <= upper[d] else -steps[d]
            simplex.append(vertex)

        def objective(x):
            u, lambda_f = to_native(x)
            value = surface.value(float(u), float(lambda_f))
            return -value if math.isfinite(value) else math.inf

        result = minimize(
            objective, x0, method='Nelder-Mead', bounds=list(zip(lower, upper)),
            options={'xatol': self.xatol, 'fatol': self.fatol, 'maxiter': self.maxiter,
                     'initial_simplex': np.array(simplex)},
        )
        x, loglik = np.asarray(result.x, dtype=float), -float(result.fun)
        if values[best] > loglik:
            x, loglik = x0, float(values[best])

        boundary = bool(np.any(x <= lower + BOUNDARY_TOLERANCE) or np.any(x >= upper - BOUNDARY_TOLERANCE))
        return _SearchResult(x, loglik, bool(result.success), boundary, int(result.nit),
                             int(result.nfev) + values.size)


def _require_transitions(samples: SampleVector):
    if samples.n < 2:
        raise TrafficDomainError("ML estimation needs at least two samples")


# ========== Module-level API ==========

def estimate_avg(samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
    return TrafficEstimator().averaging(samples, model)


def estimate_ml_joint_uf(samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
    return TrafficEstimator().joint_uf(samples, model)


def estimate_ml_joint_un(samples: SampleVector, model: SensingModel = PERFECT_SENSING) -> EstimateReport:
    return TrafficEstimator().joint_un(samples, model)


def estimate_ml_u_known_lf(samples: SampleVector, lambda_f: float,
                           model: SensingModel = PERFECT_SENSING) -> EstimateReport:
    return TrafficEstimator().u_known_lf(samples, lambda_f, model)


def estimate_ml_lf_known_u(samples: SampleVector, u: float,
                           model: SensingModel = PERFECT_SENSING) -> EstimateReport:
    return TrafficEstimator().lf_known_u(samples, u, model)


def estimate(estimator_id, samples: SampleVector, model: SensingModel = PERFECT_SENSING,
             known: Optional[TrafficParams] = None,
             estimator: Optional[TrafficEstimator] = None) -> EstimateReport:
    """
    Run an estimator by id

    Args:
        estimator_id: EstimatorId or its string value
        samples: observed samples
        model: sensing model the samples went through
        known: true parameters supplying lambda_f (ml-known-lf) or u (ml-known-u)
        estimator: estimator with custom settings (default settings otherwise)
    """
    try:
        estimator_id = EstimatorId(estimator_id)
    except ValueError:
        raise TrafficDomainError(f"Unknown estimator: {estimator_id}")
    estimator = estimator or TrafficEstimator()

    if estimator_id in (EstimatorId.ML_KNOWN_LF, EstimatorId.ML_KNOWN_U) and known is None:
        raise TrafficDomainError(f"{estimator_id.value} needs the known parameter")

    if estimator_id is EstimatorId.AVG:
        return estimator.averaging(samples, model)
    if estimator_id is EstimatorId.ML_JOINT_F:
        return estimator.joint_uf(samples, model)
    if estimator_id is EstimatorId.ML_JOINT_N:
        return estimator.joint_un(samples, model)
    if estimator_id is EstimatorId.ML_KNOWN_LF:
        return estimator.u_known_lf(samples, known.lambda_f, model)
    return estimator.lf_known_u(samples, known.u, model)


def stationarity_residuals(samples: SampleVector, params: TrafficParams) -> StationarityResiduals:
    """
    Likelihood-equation residuals of error-free uniform samples, each divided by N - 1

    r_lambda is the transition balance that vanishes with the lambda_f derivative,
    r_u the u derivative of the log-likelihood, and r_u_printed the balance form
    (z1 - u)/(1 - u) minus the transition terms, which equals u * r_u.
    """
    plan = samples.plan
    if not plan.is_uniform:
        raise TrafficDomainError("residuals are defined for uniform sampling")
    counts = count_transitions(samples)
    u, t_c = params.u, plan.uniform_gap
    kernel = transition_matrix(params, t_c)
    p00, p01, p10, p11 = kernel[0, 0], kernel[0, 1], kernel[1, 0], kernel[1, 1]
    a = math.exp(-params.lambda_f * t_c / u) * t_c * params.lambda_f
    transitions = plan.n - 1

    r_lambda = (counts.n1 + counts.n2 - counts.n0 * p01 / p00 - counts.n3 * p10 / p11) / transitions

    from_idle = (counts.n1 * p00 - counts.n0 * p01) * (a - p01) / (p00 * p01)
    from_busy = (counts.n2 * p11 - counts.n3 * p10) * ((1 - u) / u * a + p01) / (p10 * p11)
    printed = (counts.z1 - u) / (1 - u) - from_idle - from_busy

    decay = 1.0 - math.exp(-params.lambda_f * t_c / u)
    slope_01 = decay - a / u
    slope_10 = -decay - (1 - u) * a / u ** 2
    derivative = ((counts.z1 - u) / (u * (1 - u))
                  + slope_01 * (counts.n1 / p01 - counts.n0 / p00)
                  + slope_10 * (counts.n2 / p10 - counts.n3 / p11))
    return StationarityResiduals(float(r_lambda), float(derivative / transitions), float(printed / transitions))
