"""
Settings for the numerical apps are all namespaced in the FBVP setting.
For example your project's `settings.py` file might look like this:

FBVP = {
    'GRID_SIZE': 401,
    'THREADS': 4,
}

Keys that are not given fall back to DEFAULTS below.
"""
from django.conf import settings

DEFAULTS = {
    'ML_REL_TOL': 2.220446049250313e-16,
    'ML_K_MAX': 2000,
    'ML_MAX_ARGUMENT': 100.0,
    'QUAD_ORDER': 15,
    'QUAD_LOW_ORDER': 7,
    'QUAD_ABS_TOL': 1e-10,
    'QUAD_REL_TOL': 1e-10,
    'QUAD_MAX_SUBDIVISIONS': 5000,
    'QUAD_GRADING_RATIO': 0.5,
    'OPERATOR_QUAD_ORDER': 8,
    'OPERATOR_GRADING_LEVELS': 30,
    'GRID_SIZE': 801,
    'TOL': 1e-5,
    'DAMPING': 0.5,
    'MAX_ITER': 500,
    'FIXED_POINT_TOL': 1e-11,
    'INTERP': 'linear',
    'RESIDUAL_WINDOW': (0.05, 0.9),
    'RESIDUAL_TOL': 1e-3,
    'NEUMANN_SLOPE_FACTOR': 4.0,
    'CONDITION_SAMPLES': 10_000,
    'CONDITION_QUAD_REL_TOL': 1e-8,
    'EPSILON_RESOLUTION': 1e-6,
    'THREADS': 0,
}


def fbvp_settings(name):
    """Return the configured value of FBVP[name], or its default."""
    if name not in DEFAULTS:
        raise AttributeError(f"Invalid FBVP setting: '{name}'")
    user_settings = getattr(settings, 'FBVP', None) or {}
    return user_settings.get(name, DEFAULTS[name])
