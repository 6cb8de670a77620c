"""
Engine configuration. Values come from the environment (optionally a .env
file at the project root) with the defaults below.
"""
import os

from dotenv import load_dotenv

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

load_dotenv(os.path.join(ROOT_DIR, '.env'))


def _env_bool(name, default=False):
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


def _env_path(name, default):
    """Directory setting; relative values are taken from the project root."""
    return os.path.join(ROOT_DIR, os.getenv(name) or default)


PATHS = {
    'root': ROOT_DIR,
    'fixture_dir': _env_path('WARPCHECK_FIXTURE_DIR', 'fixtures'),
    'log_dir': _env_path('WARPCHECK_LOG_DIR', 'logs'),
}

SAMPLING = {
    'count': int(os.getenv('WARPCHECK_SAMPLES', '20')),
    'seed': int(os.getenv('WARPCHECK_SEED', '20240601')),
    'max_redraws': 100,
    'random_probes': 8,
    # box used for coordinates a scenario does not bound explicitly
    'default_box': (0.5, 2.0),
}

TOLERANCE = {
    'default': float(os.getenv('WARPCHECK_TOL', '1e-8')),
    'det_floor': 1e-12,
    'warp_floor': 1e-9,
    'unit': 1e-9,
    'lie_forms': 1e-9,
}

PARALLEL = {
    'n_jobs': int(os.getenv('WARPCHECK_JOBS', '1')),
    # threads: per-sample work is small and the expression trees are shared
    'prefer': 'threads',
}

ENGINE = {
    'progress': _env_bool('WARPCHECK_PROGRESS'),
    'geodesic_dt': 1e-3,
    'geodesic_steps': 1000,
}
