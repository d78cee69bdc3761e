"""Primary-user traffic model: parameters, sampling plans and the on/off transition kernel"""
import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from putraffic.exceptions import TrafficDomainError

logger = logging.getLogger(__name__)

COUPLING_RTOL = 1e-12
# absolute instants accumulate rounding, so gaps rebuilt from them only agree to a few ulps
UNIFORM_GAP_RTOL = 1e-9


def _readonly(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype).ravel()
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TrafficParams:
    """Duty cycle u, departure rate lambda_f (1/s) and arrival rate lambda_n (1/s).

    Off-times are exponential with rate lambda_f, on-times with rate lambda_n,
    so u = lambda_f / (lambda_f + lambda_n). Build instances through one of the
    ``from_*`` constructors, which derive the third value.
    """
    u: float
    lambda_f: float
    lambda_n: float

    def __post_init__(self):
        for name in ('u', 'lambda_f', 'lambda_n'):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating)) or not math.isfinite(value):
                raise TrafficDomainError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not (0.0 < self.u < 1.0):
            raise TrafficDomainError(f"u must lie in (0, 1), got {self.u}")
        if self.lambda_f <= 0 or self.lambda_n <= 0:
            raise TrafficDomainError(f"rates must be positive, got lambda_f={self.lambda_f}, lambda_n={self.lambda_n}")
        implied = self.lambda_f / (self.lambda_f + self.lambda_n)
        if abs(implied - self.u) > COUPLING_RTOL * self.u:
            raise TrafficDomainError(
                f"u={self.u} is inconsistent with lambda_f/(lambda_f+lambda_n)={implied}"
            )

    @classmethod
    def from_u_lf(cls, u: float, lambda_f: float) -> 'TrafficParams':
        _check_u(u)
        return cls(u, lambda_f, lambda_f * (1.0 - u) / u)

    @classmethod
    def from_u_ln(cls, u: float, lambda_n: float) -> 'TrafficParams':
        _check_u(u)
        return cls(u, u * lambda_n / (1.0 - u), lambda_n)

    @classmethod
    def from_rates(cls, lambda_f: float, lambda_n: float) -> 'TrafficParams':
        if lambda_f <= 0 or lambda_n <= 0:
            raise TrafficDomainError("rates must be positive")
        return cls(lambda_f / (lambda_f + lambda_n), lambda_f, lambda_n)

    @classmethod
    def from_any(cls, u: Optional[float] = None, lambda_f: Optional[float] = None,
                 lambda_n: Optional[float] = None) -> 'TrafficParams':
        """Build from exactly two of the three parameters"""
        given = sum(v is not None for v in (u, lambda_f, lambda_n))
        if given != 2:
            raise TrafficDomainError("exactly two of u, lambda_f, lambda_n are required")
        if lambda_f is not None and lambda_n is not None:
            return cls.from_rates(lambda_f, lambda_n)
        if lambda_f is not None:
            return cls.from_u_lf(u, lambda_f)
        return cls.from_u_ln(u, lambda_n)

    @property
    def total_rate(self) -> float:
        """lambda_f / u (= lambda_f + lambda_n), the decay rate of state memory"""
        return self.lambda_f / self.u

    def swapped(self) -> 'TrafficParams':
        """Same process with the on and off labels exchanged"""
        return TrafficParams(1.0 - self.u, self.lambda_n, self.lambda_f)


def _check_u(u):
    if not isinstance(u, (int, float, np.floating)) or not (0.0 < u < 1.0):
        raise TrafficDomainError(f"u must lie in (0, 1), got {u!r}")


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Inter-sample times T_1..T_{N-1} in seconds.

    A plan with no gaps describes a single sample (N = 1).
    """
    inter_sample_times: np.ndarray

    def __post_init__(self):
        gaps = _readonly(self.inter_sample_times, float)
        if not np.all(np.isfinite(gaps)) or np.any(gaps <= 0):
            raise TrafficDomainError("inter-sample times must be finite and positive")
        object.__setattr__(self, 'inter_sample_times', gaps)

    @classmethod
    def uniform(cls, t_total: float, n: int) -> 'SamplingPlan':
        """N samples spread evenly over a window of t_total seconds"""
        if int(n) != n or n < 2:
            raise TrafficDomainError(f"a uniform plan needs an integer N >= 2, got {n}")
        if not t_total > 0:
            raise TrafficDomainError(f"observation window must be positive, got {t_total}")
        n = int(n)
        return cls(np.full(n - 1, t_total / (n - 1)))

    @classmethod
    def from_times(cls, times) -> 'SamplingPlan':
        """
        Plan from absolute, strictly increasing sample instants

        Instants that are evenly spaced up to rounding give a uniform plan whose
        gap is the first one, so a uniform plan written by ``sample_times``
        reads back unchanged.
        """
        times = np.asarray(times, dtype=float).ravel()
        if times.size == 0:
            raise TrafficDomainError("at least one sample time is required")
        gaps = np.diff(times)
        if gaps.size and gaps[0] > 0 and np.allclose(gaps, gaps[0], rtol=UNIFORM_GAP_RTOL, atol=0.0):
            return cls(np.full(gaps.size, gaps[0]))
        return cls(gaps)

    @property
    def n(self) -> int:
        return self.inter_sample_times.size + 1

    @property
    def t_total(self) -> float:
        if self.is_uniform:
            return float(self.inter_sample_times[0] * (self.n - 1))
        return float(np.sum(self.inter_sample_times))

    @property
    def is_uniform(self) -> bool:
        gaps = self.inter_sample_times
        return gaps.size > 0 and bool(np.all(gaps == gaps[0]))

    @property
    def uniform_gap(self) -> float:
        if not self.is_uniform:
            raise TrafficDomainError("plan is not uniform")
        return float(self.inter_sample_times[0])

    @property
    def sample_times(self) -> np.ndarray:
        if self.is_uniform:
            return np.arange(self.n) * self.inter_sample_times[0]
        return np.concatenate(([0.0], np.cumsum(self.inter_sample_times)))


@dataclass(frozen=True)
class SensingModel:
    """False-alarm (p_f) and mis-detection (p_m) probabilities"""
    p_f: float = 0.0
    p_m: float = 0.0

    def __post_init__(self):
        for name in ('p_f', 'p_m'):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating)) or not (0.0 <= value < 1.0):
                raise TrafficDomainError(f"{name} must lie in [0, 1), got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.p_f + self.p_m >= 1.0:
            raise TrafficDomainError(f"p_f + p_m must be below 1, got {self.p_f + self.p_m}")

    @property
    def is_perfect(self) -> bool:
        return self.p_f == 0.0 and self.p_m == 0.0

    def emission_weights(self, bits) -> tuple:
        """Probability of each observed bit given a true state of 0 and of 1"""
        bits = np.asarray(bits)
        from_idle = np.where(bits == 1, self.p_f, 1.0 - self.p_f)
        from_busy = np.where(bits == 1, 1.0 - self.p_m, self.p_m)
        return from_idle, from_busy


PERFECT_SENSING = SensingModel(0.0, 0.0)


@dataclass(frozen=True, eq=False)
class SampleVector:
    """Binary samples (true or observed) paired with the plan they were taken on"""
    bits: np.ndarray
    plan: SamplingPlan

    def __post_init__(self):
        bits = _readonly(self.bits, np.int8)
        if bits.size and not np.all((bits == 0) | (bits == 1)):
            raise TrafficDomainError("samples must be 0 or 1")
        if bits.size != self.plan.n:
            raise TrafficDomainError(f"{bits.size} samples do not match a plan of N={self.plan.n}")
        object.__setattr__(self, 'bits', bits)

    @property
    def n(self) -> int:
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, SampleVector):
            return NotImplemented
        return (np.array_equal(self.bits, other.bits)
                and np.array_equal(self.plan.inter_sample_times, other.plan.inter_sample_times))

    __hash__ = None


@dataclass(frozen=True)
class TransitionCounts:
    """First sample and the numbers of 0->0, 0->1, 1->0 and 1->1 transitions"""
    z1: int
    n0: int
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if self.z1 not in (0, 1):
            raise TrafficDomainError("z1 must be 0 or 1")
        counts = (self.n0, self.n1, self.n2, self.n3)
        if any(int(c) != c or c < 0 for c in counts):
            raise TrafficDomainError("transition counts must be non-negative integers")
        # entries into state 1 minus exits from it is 0 or 1 (sign set by the start)
        drift = self.n1 - self.n2 if self.z1 == 0 else self.n2 - self.n1
        if drift not in (0, 1):
            raise TrafficDomainError(f"counts {counts} cannot follow a sequence starting at {self.z1}")
        if self.z1 == 0 and self.n1 == 0 and (self.n2 or self.n3):
            raise TrafficDomainError("state 1 transitions without ever entering state 1")
        if self.z1 == 1 and self.n2 == 0 and (self.n0 or self.n1):
            raise TrafficDomainError("state 0 transitions without ever entering state 0")

    @property
    def n(self) -> int:
        """Number of samples the counts were taken from"""
        return self.n0 + self.n1 + self.n2 + self.n3 + 1

    def as_array(self) -> np.ndarray:
        return np.array([self.n0, self.n1, self.n2, self.n3], dtype=float)


def transition_matrix(params: TrafficParams, t) -> np.ndarray:
    """
    On/off transition kernel evaluated at one or more elapsed times

    Args:
        params: traffic parameters
        t: elapsed time(s) in seconds, any shape

    Returns:
        array of shape t.shape + (2, 2) with [..., x, y] = Pr_xy(t)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise TrafficDomainError("elapsed time must be non-negative")
    # 1 - exp(-lambda_f t / u), exponent formed first; underflow to 1 is exact
    decay = -np.expm1(-(params.lambda_f / params.u) * t)
    to_busy = params.u * decay
    to_idle = (1.0 - params.u) * decay
    kernel = np.empty(t.shape + (2, 2))
    kernel[..., 0, 1] = to_busy
    kernel[..., 0, 0] = 1.0 - to_busy
    kernel[..., 1, 0] = to_idle
    kernel[..., 1, 1] = 1.0 - to_idle
    return kernel


def transition_prob(params: TrafficParams, from_state: int, to_state: int, t: float) -> float:
    """Pr_xy(t): probability of being in to_state t seconds after from_state"""
    if from_state not in (0, 1) or to_state not in (0, 1):
        raise TrafficDomainError("states must be 0 or 1")
    if not t >= 0:
        raise TrafficDomainError(f"elapsed time must be non-negative, got {t}")
    return float(transition_matrix(params, t)[from_state, to_state])


def count_transitions(samples: SampleVector) -> TransitionCounts:
    """Sufficient statistics of a sample vector under uniform sampling"""
    bits = samples.bits
    if bits.size < 2:
        raise TrafficDomainError("at least two samples are needed to count transitions")
    pairs = 2 * bits[:-1].astype(np.int64) + bits[1:]
    n0, n1, n2, n3 = np.bincount(pairs, minlength=4).tolist()
    return TransitionCounts(int(bits[0]), n0, n1, n2, n3)


def all_bit_vectors(n: int) -> np.ndarray:
    """Every binary vector of length n, one per row, in lexicographic order"""
    if n < 1:
        raise TrafficDomainError("vector length must be positive")
    shifts = np.arange(n - 1, -1, -1)
    return ((np.arange(2 ** n)[:, None] >> shifts) & 1).astype(np.int8)
