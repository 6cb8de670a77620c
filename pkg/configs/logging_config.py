"""
Logging configuration for warpcheck.
"""
import os

from configs.config import PATHS

_log_file = os.getenv('WARPCHECK_LOG_FILE', os.path.join(PATHS['log_dir'], 'warpcheck.log'))

LOGGER = {
    'level': os.getenv('LOG_LEVEL', 'INFO'),
    # empty string disables the rotating file handler
    'file': _log_file and os.path.join(PATHS['root'], _log_file),
    'max_size': 5 * 1024 * 1024,
    'backup_count': 3,
}
