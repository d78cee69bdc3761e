import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from putraffic import create_app
from putraffic.models import SamplingPlan, SensingModel, TrafficParams


@pytest.fixture(autouse=True, scope='session')
def testing_config():
    return create_app('testing')


@pytest.fixture
def params():
    """u=0.3, lambda_f=0.9 1/s: the reference operating point"""
    return TrafficParams.from_u_lf(0.3, 0.9)


@pytest.fixture
def unit_plan():
    return SamplingPlan.uniform(9.0, 10)


@pytest.fixture
def noisy():
    return SensingModel(0.05, 0.05)
