"""
Logging configuration for warpcheck.
"""
import logging
from logging.handlers import RotatingFileHandler
import sys
import os
import traceback

from configs.logging_config import LOGGER

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'


def setup_logger(name='warpcheck'):
    """
    Set up and configure the package logger.

    Console output goes to stderr so that json reports on stdout stay clean.

    Args:
        name (str): The name of the logger

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(name)

    level = getattr(logging, LOGGER['level'].upper(), logging.INFO)
    logger.setLevel(level)
    logger.propagate = False

    # Clear any existing handlers
    logger.handlers = []

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

    log_file = LOGGER['file']
    if not log_file:
        return logger

    try:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=LOGGER['max_size'],
            backupCount=LOGGER['backup_count']
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    except Exception as e:
        # Fallback to console-only logging if file logging fails
        logger.warning(f"Could not set up file logging: {e}")

    logger.debug(f"Logger initialized with level {LOGGER['level']}")

    return logger


def log_exception(logger, message="An error occurred"):
    """
    Log an exception with full traceback details.

    Args:
        logger (logging.Logger): Logger to use
        message (str, optional): Custom error message
    """
    exc_type, exc_value, exc_traceback = sys.exc_info()
    lines = traceback.format_exception(exc_type, exc_value, exc_traceback)

    logger.error(message)
    for line in lines:
        logger.error(line.strip())


logger = setup_logger()
