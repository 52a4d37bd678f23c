"""Runtime settings for mpcsd.

Values are read from the module named by ``MPCSD_SETTINGS_MODULE`` when it is
set, falling back to the defaults below.
"""
import importlib
import os

from mpcsd.exceptions import ImproperlyConfigured

SETTINGS_MODULE_ENV = "MPCSD_SETTINGS_MODULE"


def _load_settings():
    module_name = os.environ.get(SETTINGS_MODULE_ENV)
    if not module_name:
        return None
    try:
        return importlib.import_module(module_name)
    except ImportError as exc:
        raise ImproperlyConfigured(f"cannot import settings module {module_name!r}: {exc}") from exc


settings = _load_settings()

MAX_TRANSMIT_POWER_DBM = float(getattr(settings, "MAX_TRANSMIT_POWER_DBM", 30.0))
MAX_EIRP_DBM = float(getattr(settings, "MAX_EIRP_DBM", 36.0))
ENFORCE_REGULATORY_CAP = bool(getattr(settings, "ENFORCE_REGULATORY_CAP", True))
DEFAULT_LOAD_OHMS = float(getattr(settings, "DEFAULT_LOAD_OHMS", 50.0))
DEFAULT_MAX_ORDER = getattr(settings, "DEFAULT_MAX_ORDER", 2)
SWEEP_WORKERS = getattr(settings, "SWEEP_WORKERS", 4)
ORACLE_SAMPLES_PER_BEAT = getattr(settings, "ORACLE_SAMPLES_PER_BEAT", 256)
ORACLE_TOLERANCE = float(getattr(settings, "ORACLE_TOLERANCE", 1e-6))
LOG_LEVEL = getattr(settings, "LOG_LEVEL", "INFO")

if DEFAULT_LOAD_OHMS <= 0:
    raise ImproperlyConfigured("DEFAULT_LOAD_OHMS should be a positive resistance, e.g., 50.0.")
if not isinstance(DEFAULT_MAX_ORDER, int) or DEFAULT_MAX_ORDER < 0:
    raise ImproperlyConfigured("DEFAULT_MAX_ORDER should be a non-negative integer, e.g., 2.")
if not isinstance(SWEEP_WORKERS, int) or SWEEP_WORKERS < 1:
    raise ImproperlyConfigured("SWEEP_WORKERS should be a positive integer, e.g., 4.")
if not isinstance(ORACLE_SAMPLES_PER_BEAT, int) or ORACLE_SAMPLES_PER_BEAT < 100:
    raise ImproperlyConfigured("ORACLE_SAMPLES_PER_BEAT should be an integer >= 100, e.g., 256.")
if not 0 < ORACLE_TOLERANCE < 1:
    raise ImproperlyConfigured("ORACLE_TOLERANCE should be a relative error in (0, 1), e.g., 1e-6.")
