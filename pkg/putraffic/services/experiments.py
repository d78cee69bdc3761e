"""Monte Carlo RMS-error sweeps with closed-form reference columns"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from putraffic.config import get_config
from putraffic.exceptions import ConfigError, DegenerateInformationError, TrafficError
from putraffic.models.sampling import apply_sensing_errors, generate_samples
from putraffic.models.traffic import SamplingPlan, SensingModel, TrafficParams
from putraffic.services.bounds import (
    cr_asymptotes,
    cr_bound_lf_known_u,
    cr_bound_u_known_lf,
    cr_bounds_joint_uf,
    mse_avg,
)
from putraffic.services.estimators import EstimatorId, TrafficEstimator, estimate
from putraffic.utils.preprocess import sanitize_input, validate_sweep_config
from putraffic.utils.rng import PATH_STREAM, SENSING_STREAM, derive_seed

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    'axis_name', 'axis_value', 'estimator', 'pf', 'pm',
    'rms_u', 'rms_lf', 'rms_ln',
    'crb_u', 'crb_lf', 'crb_u_limit', 'mse_avg_closed_form',
    'trials', 'boundary_fraction',
]

# which errors each estimator produces: (u, lambda_f, lambda_n)
_ESTIMATED = {
    EstimatorId.AVG: (True, False, False),
    EstimatorId.ML_JOINT_F: (True, True, True),
    EstimatorId.ML_JOINT_N: (True, True, True),
    EstimatorId.ML_KNOWN_LF: (True, False, True),
    EstimatorId.ML_KNOWN_U: (False, True, True),
}

TRIALS_PER_TASK = 50


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a single axis crossed with sensing models and estimators"""
    params: dict
    t_total: float
    axis_name: str
    axis_values: Tuple[float, ...]
    estimators: Tuple[EstimatorId, ...]
    sensing: Tuple[SensingModel, ...] = (SensingModel(0.0, 0.0),)
    samples: Optional[int] = None
    trials: Optional[int] = None
    master_seed: int = 0
    output: Optional[str] = None
    noisy_n_cap: Optional[int] = None

    @classmethod
    def from_dict(cls, data: dict) -> 'SweepConfig':
        """Build from a configuration mapping, raising ConfigError when it is invalid"""
        data = sanitize_input(data)
        if isinstance(data.get('params'), dict):
            data['params'] = sanitize_input(data['params'])
        is_valid, message = validate_sweep_config(data)
        if not is_valid:
            raise ConfigError(message)

        axis = data['axis']
        return cls(
            params={k: float(v) for k, v in data['params'].items()},
            t_total=float(data['duration']),
            axis_name=axis['name'],
            axis_values=tuple(float(v) for v in axis['values']),
            estimators=tuple(EstimatorId(e) for e in data['estimators']),
            sensing=tuple(SensingModel(float(pf), float(pm)) for pf, pm in data.get('sensing', [[0, 0]])),
            samples=int(data['samples']) if 'samples' in data else None,
            trials=data.get('trials'),
            master_seed=data.get('seed', 0),
            output=data.get('output'),
            noisy_n_cap=data.get('noisy_n_cap'),
        )

    def params_at(self, value: float) -> TrafficParams:
        fixed = dict(self.params)
        if self.axis_name == 'u':
            other = 'lambda_f' if 'lambda_f' in fixed else 'lambda_n'
            return TrafficParams.from_any(u=value, **{other: fixed[other]})
        if self.axis_name == 'lambda_f':
            other = 'u' if 'u' in fixed else 'lambda_n'
            return TrafficParams.from_any(lambda_f=value, **{other: fixed[other]})
        return TrafficParams.from_any(**fixed)

    def samples_at(self, value: float) -> int:
        return int(value) if self.axis_name == 'samples' else int(self.samples)

    def trials_for(self, estimator_id: EstimatorId) -> int:
        if self.trials is not None:
            return int(self.trials)
        cfg = get_config()
        return cfg.AVG_TRIALS if estimator_id is EstimatorId.AVG else cfg.ML_TRIALS


@dataclass
class SweepResultRow:
    axis_name: str
    axis_value: float
    estimator: str
    pf: float
    pm: float
    rms_u: Optional[float] = None
    rms_lf: Optional[float] = None
    rms_ln: Optional[float] = None
    crb_u: Optional[float] = None
    crb_lf: Optional[float] = None
    crb_u_limit: Optional[float] = None
    mse_avg_closed_form: Optional[float] = None
    trials: int = 0
    boundary_fraction: Optional[float] = None


@dataclass
class _TrialTask:
    params: TrafficParams
    t_total: float
    n: int
    model: SensingModel
    model_index: int
    axis_index: int
    estimator_id: EstimatorId
    estimator: TrafficEstimator
    master_seed: int
    start: int
    stop: int


def _run_trials(task: _TrialTask) -> np.ndarray:
    """Squared errors (u, lambda_f, lambda_n) and boundary flags for trials [start, stop)"""
    plan = SamplingPlan.uniform(task.t_total, task.n)
    out = np.full((task.stop - task.start, 4), np.nan)
    truth = task.params
    for row, trial in enumerate(range(task.start, task.stop)):
        # the path stream ignores the sensing model and estimator: common random numbers across rows
        path_seed = derive_seed(task.master_seed, task.axis_index, trial, PATH_STREAM)
        sensing_seed = derive_seed(task.master_seed, task.axis_index, task.model_index, trial, SENSING_STREAM)
        observed = apply_sensing_errors(generate_samples(truth, plan, path_seed), task.model, sensing_seed)
        report = estimate(task.estimator_id, observed, task.model, known=truth, estimator=task.estimator)

        out[row, 0] = (report.u_hat - truth.u) ** 2
        if report.lambda_f_hat is not None:
            out[row, 1] = (report.lambda_f_hat - truth.lambda_f) ** 2
            out[row, 2] = (report.lambda_n_hat - truth.lambda_n) ** 2
        out[row, 3] = float(report.boundary_hit)
    return out


def _root(value: Optional[float]) -> Optional[float]:
    return None if value is None else math.sqrt(value)


def _reference_columns(estimator_id: EstimatorId, params: TrafficParams, plan: SamplingPlan,
                       model: SensingModel) -> dict:
    """Closed-form references for a row, as root-mean-square values"""
    t_c = plan.uniform_gap
    columns = {}
    try:
        joint_u, joint_lf = cr_bounds_joint_uf(params, t_c, plan.n)
        limits = cr_asymptotes(params, plan.t_total)
        if estimator_id in (EstimatorId.AVG, EstimatorId.ML_JOINT_F, EstimatorId.ML_JOINT_N):
            columns['crb_u'] = joint_u.value
            columns['crb_u_limit'] = limits[0].value
        if estimator_id in (EstimatorId.ML_JOINT_F, EstimatorId.ML_JOINT_N):
            columns['crb_lf'] = joint_lf.value
        if estimator_id is EstimatorId.ML_KNOWN_LF:
            columns['crb_u'] = cr_bound_u_known_lf(params, t_c, plan.n).value
            columns['crb_u_limit'] = limits[3].value
        if estimator_id is EstimatorId.ML_KNOWN_U:
            columns['crb_lf'] = cr_bound_lf_known_u(params, t_c, plan.n).value
    except DegenerateInformationError as e:
        logger.warning(f"No Cramer-Rao reference at {params}, N={plan.n}: {e}")
    if estimator_id is EstimatorId.AVG:
        columns['mse_avg_closed_form'] = mse_avg(params, plan, model).value
    return {key: _root(value) for key, value in columns.items()}


class SweepRunner:
    """Runs a SweepConfig; results do not depend on the number of workers"""

    def __init__(self, config: SweepConfig, threads: Optional[int] = None,
                 estimator: Optional[TrafficEstimator] = None):
        cfg = get_config()
        self.config = config
        self.threads = max(1, threads or cfg.THREADS)
        self.estimator = estimator or TrafficEstimator()
        self.noisy_n_cap = config.noisy_n_cap or cfg.NOISY_N_CAP

    def run(self) -> List[SweepResultRow]:
        config = self.config
        rows = []
        with Parallel(n_jobs=self.threads) as parallel:
            for axis_index, value in enumerate(config.axis_values):
                params = config.params_at(value)
                plan = SamplingPlan.uniform(config.t_total, config.samples_at(value))
                logger.info(f"Sweep point {config.axis_name}={value:g} ({axis_index + 1}/{len(config.axis_values)})")
                for model_index, model in enumerate(config.sensing):
                    for estimator_id in config.estimators:
                        rows.append(self._run_point(parallel, axis_index, value, params, plan,
                                                    model_index, model, estimator_id))
        return rows

    def _run_point(self, parallel, axis_index, value, params, plan, model_index, model,
                   estimator_id) -> SweepResultRow:
        row = SweepResultRow(self.config.axis_name, value, estimator_id.value, model.p_f, model.p_m)
        for key, reference in _reference_columns(estimator_id, params, plan, model).items():
            setattr(row, key, reference)

        if estimator_id.estimates_rates and not model.is_perfect and plan.n > self.noisy_n_cap:
            logger.warning(f"Skipping {estimator_id.value} at N={plan.n}: above the noisy ML cap "
                           f"of {self.noisy_n_cap}")
            return row

        trials = self.config.trials_for(estimator_id)
        tasks = [
            _TrialTask(params, self.config.t_total, plan.n, model, model_index, axis_index, estimator_id,
                       self.estimator, self.config.master_seed, start, min(start + TRIALS_PER_TASK, trials))
            for start in range(0, trials, TRIALS_PER_TASK)
        ]
        # Parallel returns results in task order, so every trial keeps its slot
        errors = np.concatenate(parallel(delayed(_run_trials)(task) for task in tasks))

        estimated = _ESTIMATED[estimator_id]
        for column, wanted, squared in zip(('rms_u', 'rms_lf', 'rms_ln'), estimated, errors[:, :3].T):
            if wanted:
                setattr(row, column, math.sqrt(float(np.mean(squared))))
        row.trials = trials
        row.boundary_fraction = float(np.mean(errors[:, 3]))
        return row


def run_sweep(config: SweepConfig, threads: Optional[int] = None) -> List[SweepResultRow]:
    return SweepRunner(config, threads=threads).run()


def load_sweep_config(path) -> SweepConfig:
    """Read a JSON sweep configuration"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read sweep config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("sweep config must be a JSON object")
    try:
        return SweepConfig.from_dict(data)
    except TrafficError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


def rows_to_frame(rows: List[SweepResultRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows], columns=CSV_COLUMNS)


def write_sweep_csv(rows: List[SweepResultRow], path) -> Path:
    """Write rows with a header, fixed column order and 9 significant digits"""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    rows_to_frame(rows).to_csv(path, index=False, float_format='%.9g', na_rep='', lineterminator='\n')
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path
