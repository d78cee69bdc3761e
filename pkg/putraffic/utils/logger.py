"""Logging configuration for the package"""
import logging
import os
from logging.handlers import RotatingFileHandler
from datetime import datetime

PACKAGE_LOGGER = 'putraffic'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(cfg):
    """Configure package logging from a configuration class"""

    if cfg.LOG_LEVEL:
        log_level = getattr(logging, cfg.LOG_LEVEL.upper(), logging.INFO)
    else:
        log_level = logging.DEBUG if cfg.DEBUG else logging.INFO

    logging.basicConfig(
        level=log_level,
        format=LOG_FORMAT,
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(log_level)

    # File handler with rotation, only when a log directory is configured
    if cfg.LOG_DIR:
        os.makedirs(cfg.LOG_DIR, exist_ok=True)
        log_file = os.path.join(cfg.LOG_DIR, f'putraffic_{datetime.now().strftime("%Y%m%d")}.log')
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=10
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    logger.debug("Logging configured successfully")
    return logger
