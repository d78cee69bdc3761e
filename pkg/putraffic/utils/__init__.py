"""Utils package initialization"""
from .logger import setup_logger
from .preprocess import (
    validate_param_pair,
    validate_sensing,
    validate_sweep_config,
    sanitize_input
)
from .rng import make_rng, derive_seed

__all__ = [
    'setup_logger',
    'validate_param_pair',
    'validate_sensing',
    'validate_sweep_config',
    'sanitize_input',
    'make_rng',
    'derive_seed'
]
