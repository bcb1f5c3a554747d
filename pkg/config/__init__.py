from .constants import log_lock, DEFAULT_PARAMS_PATH, DEFAULT_REGIMENS_PATH, DEFAULT_SCENARIOS_PATH

__all__ = ['log_lock', 'DEFAULT_PARAMS_PATH', 'DEFAULT_REGIMENS_PATH', 'DEFAULT_SCENARIOS_PATH']
