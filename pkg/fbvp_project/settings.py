"""
Django settings for fbvp_project project.

Generated by 'django-admin startproject' using Django 5.2.6.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only signing would use it; the project serves no requests.
SECRET_KEY = config("DJANGO_SECRET_KEY", default="django-insecure-fbvp-local-only")

DEBUG = config("DJANGO_DEBUG", default=False, cast=bool)


# Application definition
# No web surface: the project is driven through `manage.py fbvp ...`.

INSTALLED_APPS = [
    'rest_framework',
    'numerics',
    'bvp',
]


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

FBVP_LOG_LEVEL = config("FBVP_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "numerics": {
            "handlers": ["console"],
            "level": FBVP_LOG_LEVEL,
            "propagate": False,
        },
        "bvp": {
            "handlers": ["console"],
            "level": FBVP_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Numerical defaults, read through numerics.conf.fbvp_settings.
# Any key left out falls back to numerics.conf.DEFAULTS.

FBVP = {
    # Mittag-Leffler series
    'ML_REL_TOL': 2.220446049250313e-16,
    'ML_K_MAX': 2000,
    'ML_MAX_ARGUMENT': 100.0,

    # adaptive quadrature
    'QUAD_ORDER': 15,
    'QUAD_LOW_ORDER': 7,
    'QUAD_ABS_TOL': 1e-10,
    'QUAD_REL_TOL': 1e-10,
    'QUAD_MAX_SUBDIVISIONS': 5000,
    'QUAD_GRADING_RATIO': 0.5,

    # discretized T_m operator
    'OPERATOR_QUAD_ORDER': 8,
    'OPERATOR_GRADING_LEVELS': 30,

    # solver
    'GRID_SIZE': 801,
    'TOL': 1e-5,
    'DAMPING': 0.5,
    'MAX_ITER': 500,
    'FIXED_POINT_TOL': 1e-11,
    'INTERP': 'linear',

    # certification
    'RESIDUAL_WINDOW': (0.05, 0.9),
    'RESIDUAL_TOL': 1e-3,
    'NEUMANN_SLOPE_FACTOR': 4.0,

    # conditions
    'CONDITION_SAMPLES': 10_000,
    'CONDITION_QUAD_REL_TOL': 1e-8,
    'EPSILON_RESOLUTION': 1e-6,

    # 0 = serial
    'THREADS': config("FBVP_THREADS", default=0, cast=int),
}

OUTPUT_DIR = config("FBVP_OUTPUT_DIR", default=str(BASE_DIR / 'output'))
