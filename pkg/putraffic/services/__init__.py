"""Services package initialization"""
from .likelihood import loglik_clean, loglik_noisy_forward, loglik_observed
from .bounds import BoundKind, BoundReport, FisherInfo, fisher_matrix
from .estimators import EstimateReport, EstimatorId, TrafficEstimator, estimate
from .experiments import SweepConfig, SweepRunner, run_sweep
from .verification import VerificationCheck, run_verification

__all__ = [
    'loglik_clean',
    'loglik_noisy_forward',
    'loglik_observed',
    'BoundKind',
    'BoundReport',
    'FisherInfo',
    'fisher_matrix',
    'EstimateReport',
    'EstimatorId',
    'TrafficEstimator',
    'estimate',
    'SweepConfig',
    'SweepRunner',
    'run_sweep',
    'VerificationCheck',
    'run_verification'
]
