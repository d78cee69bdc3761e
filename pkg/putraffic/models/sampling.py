"""Sample-path generation, the sensing-error channel and sample files"""
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from putraffic.exceptions import TrafficDomainError
from putraffic.models.traffic import SampleVector, SamplingPlan, SensingModel, TrafficParams
from putraffic.utils.rng import make_rng

logger = logging.getLogger(__name__)

SAMPLE_FILE_COLUMNS = ('time', 'bit')


def _switch_instants(params: TrafficParams, start_state: int, horizon: float, rng) -> np.ndarray:
    """Instants in (0, horizon] at which the alternating renewal process changes state"""
    # memoryless holding times: the residual time of the state at t=0 has the full distribution
    first_scale = 1.0 / (params.lambda_f if start_state == 0 else params.lambda_n)
    second_scale = 1.0 / (params.lambda_n if start_state == 0 else params.lambda_f)
    mean_cycle = first_scale + second_scale
    # even chunk length keeps the idle/busy alternation aligned across chunks
    chunk = 2 * (int(math.ceil(horizon / mean_cycle)) + 8)
    scales = np.where(np.arange(chunk) % 2 == 0, first_scale, second_scale)

    pieces = []
    elapsed = 0.0
    while elapsed <= horizon:
        ends = elapsed + np.cumsum(rng.exponential(scales))
        pieces.append(ends)
        elapsed = ends[-1]
    return np.concatenate(pieces)


def generate_samples(params: TrafficParams, plan: SamplingPlan, rng_seed: int) -> SampleVector:
    """
    Sample a stationary on/off path at the instants of a plan

    The path is built from exponential off-times (rate lambda_f) and on-times
    (rate lambda_n), starting from a Bernoulli(u) state at time zero.

    Args:
        params: traffic parameters
        plan: sampling plan
        rng_seed: seed for the path stream

    Returns:
        SampleVector of the true PU states
    """
    rng = make_rng(rng_seed)
    start_state = int(rng.random() < params.u)
    times = plan.sample_times
    if plan.n == 1:
        return SampleVector(np.array([start_state]), plan)

    switches = _switch_instants(params, start_state, float(times[-1]), rng)
    flips = np.searchsorted(switches, times, side='right')
    bits = (start_state + flips) % 2
    return SampleVector(bits, plan)


def apply_sensing_errors(samples: SampleVector, model: SensingModel, rng_seed: int) -> SampleVector:
    """Flip idle bits with probability p_f and busy bits with probability p_m"""
    if model.is_perfect:
        return samples
    rng = make_rng(rng_seed)
    draws = rng.random(samples.n)
    flip = np.where(samples.bits == 0, draws < model.p_f, draws < model.p_m)
    return SampleVector(samples.bits ^ flip.astype(np.int8), samples.plan)


def sample_frame(samples: SampleVector) -> pd.DataFrame:
    return pd.DataFrame({'time': samples.plan.sample_times, 'bit': samples.bits.astype(int)})


def write_sample_file(samples: SampleVector, path) -> Path:
    """Write samples as a `time,bit` CSV"""
    path = Path(path)
    sample_frame(samples).to_csv(path, index=False, float_format='%.17g')
    logger.debug(f"Wrote {samples.n} samples to {path}")
    return path


def read_sample_file(path) -> SampleVector:
    """Read a `time,bit` CSV back into a SampleVector"""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TrafficDomainError(f"Cannot read sample file {path}: {e}") from e

    missing = [c for c in SAMPLE_FILE_COLUMNS if c not in frame.columns]
    if missing:
        raise TrafficDomainError(f"Sample file {path} is missing columns: {', '.join(missing)}")
    if frame.empty:
        raise TrafficDomainError(f"Sample file {path} holds no samples")

    times = frame['time'].to_numpy(dtype=float)
    if np.any(np.diff(times) <= 0):
        raise TrafficDomainError("sample times must be strictly increasing")
    return SampleVector(frame['bit'].to_numpy(), SamplingPlan.from_times(times))
