"""Validation of user supplied dictionaries (CLI arguments, sweep config files)"""
import math
import logging

logger = logging.getLogger(__name__)

PARAM_KEYS = ('u', 'lambda_f', 'lambda_n')
AXIS_NAMES = ('samples', 'u', 'lambda_f')
ESTIMATOR_IDS = ('avg', 'ml-joint-f', 'ml-joint-n', 'ml-known-lf', 'ml-known-u')


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def validate_param_pair(data: dict, allow_single: bool = False) -> tuple:
    """
    Validate a traffic-parameter dictionary

    Exactly two of u / lambda_f / lambda_n must be present (one is enough
    when allow_single is set, for sweeps where the axis supplies the other).

    Returns:
        (is_valid, error_message)
    """
    given = [k for k in PARAM_KEYS if data.get(k) is not None]
    wanted = (1, 2) if allow_single else (2,)
    if len(given) not in wanted:
        return False, f"Exactly two of {', '.join(PARAM_KEYS)} are required, got {given or 'none'}"

    for key in given:
        value = data[key]
        if not _is_number(value):
            return False, f"{key} must be a number"
        if key == 'u' and not (0 < value < 1):
            return False, "u must be between 0 and 1 (exclusive)"
        if key != 'u' and value <= 0:
            return False, f"{key} must be positive"

    return True, ""


def validate_sensing(data: dict) -> tuple:
    """
    Validate false-alarm / mis-detection probabilities

    Returns:
        (is_valid, error_message)
    """
    p_f = data.get('pf', 0.0)
    p_m = data.get('pm', 0.0)
    for name, value in (('pf', p_f), ('pm', p_m)):
        if not _is_number(value):
            return False, f"{name} must be a number"
        if not (0 <= value < 1):
            return False, f"{name} must be in [0, 1)"
    if p_f + p_m >= 1:
        return False, "pf + pm must be below 1"
    return True, ""


def validate_sweep_config(data: dict) -> tuple:
    """
    Validate a sweep configuration dictionary

    Expected structure:
    {
        'params': {'u': 0.3, 'lambda_f': 0.9},
        'duration': 50,
        'samples': 1000,
        'axis': {'name': 'samples', 'values': [200, 500, 1000]},
        'sensing': [[0, 0], [0.05, 0.05]],
        'estimators': ['avg', 'ml-joint-f'],
        'trials': 2000,
        'seed': 1
    }

    Returns:
        (is_valid, error_message)
    """
    required_fields = ['params', 'duration', 'axis', 'estimators']

    for field in required_fields:
        if field not in data:
            return False, f"Missing required field: {field}"

    if not isinstance(data['params'], dict):
        return False, "params must be a mapping"

    axis = data['axis']
    if not isinstance(axis, dict) or set(axis) != {'name', 'values'}:
        return False, "axis must be a mapping with exactly 'name' and 'values'"
    if axis['name'] not in AXIS_NAMES:
        return False, f"axis name must be one of: {list(AXIS_NAMES)}"
    values = axis['values']
    if not isinstance(values, list) or not values:
        return False, "axis values must be a non-empty list"
    if not all(_is_number(v) for v in values):
        return False, "axis values must be numbers"
    if any(b <= a for a, b in zip(values, values[1:])):
        return False, "axis values must be strictly increasing"

    is_valid, message = validate_param_pair(data['params'], allow_single=axis['name'] != 'samples')
    if not is_valid:
        return False, message

    if axis['name'] == 'samples':
        if not all(float(v).is_integer() and v >= 2 for v in values):
            return False, "sample counts must be integers >= 2"
    elif 'samples' not in data:
        return False, "Missing required field: samples"

    if axis['name'] == 'u' and not all(0 < v < 1 for v in values):
        return False, "u axis values must be between 0 and 1"
    if axis['name'] == 'lambda_f' and not all(v > 0 for v in values):
        return False, "lambda_f axis values must be positive"
    if axis['name'] == 'u' and data['params'].get('lambda_f') is None and data['params'].get('lambda_n') is None:
        return False, "a u sweep needs lambda_f or lambda_n fixed"
    if axis['name'] == 'lambda_f' and data['params'].get('u') is None and data['params'].get('lambda_n') is None:
        return False, "a lambda_f sweep needs u or lambda_n fixed"

    if not _is_number(data['duration']) or data['duration'] <= 0:
        return False, "duration must be a positive number"
    if 'samples' in data and (not _is_number(data['samples']) or data['samples'] < 2):
        return False, "samples must be a number >= 2"

    estimators = data['estimators']
    if not isinstance(estimators, list) or not estimators:
        return False, "estimators must be a non-empty list"
    for estimator in estimators:
        if estimator not in ESTIMATOR_IDS:
            return False, f"estimator must be one of: {list(ESTIMATOR_IDS)}"

    for pair in data.get('sensing', [[0, 0]]):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            return False, "sensing entries must be [pf, pm] pairs"
        is_valid, message = validate_sensing({'pf': pair[0], 'pm': pair[1]})
        if not is_valid:
            return False, message

    trials = data.get('trials', 1)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        return False, "trials must be an integer >= 1"
    seed = data.get('seed', 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        return False, "seed must be a non-negative integer"

    return True, ""


def sanitize_input(data: dict) -> dict:
    """Normalise keys (dashes to underscores) and drop None values"""
    sanitized = {}

    for key, value in data.items():
        # Skip None values
        if value is None:
            continue

        if isinstance(value, str):
            value = value.strip()

        sanitized[key.replace('-', '_').strip()] = value

    return sanitized
