import logging

from putraffic.config import get_config, set_config

logger = logging.getLogger(__name__)

__version__ = '1.0.0'


def create_app(config_name=None):
    """Select the active configuration and install logging"""
    cfg = set_config(config_name) if config_name is not None else get_config()

    from putraffic.utils.logger import setup_logger
    setup_logger(cfg)

    logger.debug(f"Using {cfg.__name__}")
    return cfg
