import pytest

from putraffic.utils.preprocess import sanitize_input, validate_param_pair, validate_sensing, validate_sweep_config


@pytest.mark.parametrize('data,ok', [
    ({'u': 0.3, 'lambda_f': 0.9}, True),
    ({'lambda_f': 0.9, 'lambda_n': 2.1}, True),
    ({'u': 0.3}, False),
    ({'u': 1.2, 'lambda_f': 0.9}, False),
    ({'u': 0.3, 'lambda_n': -1}, False),
    ({'u': 0.3, 'lambda_f': True}, False),
])
def test_validate_param_pair(data, ok):
    assert validate_param_pair(data)[0] is ok


def test_single_parameter_allowed_for_sweeps():
    assert validate_param_pair({'lambda_f': 0.4}, allow_single=True) == (True, "")


@pytest.mark.parametrize('data,ok', [
    ({}, True),
    ({'pf': 0.05, 'pm': 0.05}, True),
    ({'pf': 0.5, 'pm': 0.5}, False),
    ({'pf': -0.1}, False),
])
def test_validate_sensing(data, ok):
    assert validate_sensing(data)[0] is ok


def test_sweep_needs_samples_off_the_samples_axis():
    data = {
        'params': {'u': 0.3},
        'duration': 100,
        'axis': {'name': 'lambda_f', 'values': [0.1, 0.2]},
        'estimators': ['ml-joint-f'],
    }
    is_valid, message = validate_sweep_config(data)
    assert not is_valid
    assert 'samples' in message
    assert validate_sweep_config({**data, 'samples': 300}) == (True, "")


def test_missing_field():
    assert validate_sweep_config({'params': {}})[1] == "Missing required field: duration"


def test_sanitize_input():
    assert sanitize_input({'lambda-f': 0.9, 'u': None, ' name ': ' x '}) == {'lambda_f': 0.9, 'name': 'x'}
