import os
from dotenv import load_dotenv

load_dotenv()


def _env_int(name, default):
    value = os.getenv(name)
    return int(value) if value not in (None, '') else default


def _env_float(name, default):
    value = os.getenv(name)
    return float(value) if value not in (None, '') else default


class Config:
    """Base configuration"""

    # Enumeration oracles (2^N work)
    ENUMERATION_CAP = _env_int('PUTRAFFIC_ENUMERATION_CAP', 14)
    FISHER_ENUMERATION_CAP = _env_int('PUTRAFFIC_FISHER_ENUMERATION_CAP', 8)
    AVG_ENUMERATION_CAP = _env_int('PUTRAFFIC_AVG_ENUMERATION_CAP', 14)

    # ML search box and simplex settings
    GRID_SIZE = _env_int('PUTRAFFIC_GRID_SIZE', 16)
    U_MIN = _env_float('PUTRAFFIC_U_MIN', 1e-4)
    RATE_MIN_FACTOR = 1e-6   # lambda_min = factor / T
    RATE_MAX_FACTOR = 10.0   # lambda_max = factor * (N - 1) / T
    SIMPLEX_FATOL = _env_float('PUTRAFFIC_SIMPLEX_FATOL', 1e-9)
    SIMPLEX_XATOL = _env_float('PUTRAFFIC_SIMPLEX_XATOL', 1e-9)
    SIMPLEX_MAXITER = _env_int('PUTRAFFIC_SIMPLEX_MAXITER', 4000)

    # Bounds evaluation
    FD_RELATIVE_STEP = 1e-5
    SMALL_ETA = 1e-4
    CR_ROUTE_RTOL = 1e-8

    # Monte Carlo sweeps
    ML_TRIALS = _env_int('PUTRAFFIC_ML_TRIALS', 2000)
    AVG_TRIALS = _env_int('PUTRAFFIC_AVG_TRIALS', 100000)
    NOISY_N_CAP = _env_int('PUTRAFFIC_NOISY_N_CAP', 2000)
    THREADS = _env_int('PUTRAFFIC_THREADS', os.cpu_count() or 1)

    # Logging
    LOG_LEVEL = os.getenv('PUTRAFFIC_LOG_LEVEL', '')
    LOG_DIR = os.getenv('PUTRAFFIC_LOG_DIR', '')

    DEBUG = False
    TESTING = False


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    TESTING = False


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False
    TESTING = False


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    DEBUG = True
    THREADS = 1
    ML_TRIALS = 200
    AVG_TRIALS = 2000


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}

_active = None


def get_config():
    """Return the active configuration class (selected by PUTRAFFIC_ENV)."""
    global _active
    if _active is None:
        _active = config.get(os.getenv('PUTRAFFIC_ENV', 'default'), DevelopmentConfig)
    return _active


def set_config(config_name):
    """Switch the active configuration; returns the selected class."""
    global _active
    if config_name not in config:
        raise KeyError(f"Unknown configuration: {config_name}")
    _active = config[config_name]
    return _active
