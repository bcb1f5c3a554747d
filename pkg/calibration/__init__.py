from .gompertz import gompertz_shape
from .regimens import RegimenSpec, load_regimens, regimen_doses, regimen_to_effective_concentration
from .kill_effect import (CalibrationResult, DriftModel, solve_eta_for_delta, calibrate_kill_effect,
                          calibrate_all, apply_calibration, prr_curve, response_threshold)

__all__ = [
    'gompertz_shape', 'RegimenSpec', 'load_regimens', 'regimen_doses', 'regimen_to_effective_concentration',
    'CalibrationResult', 'DriftModel', 'solve_eta_for_delta', 'calibrate_kill_effect', 'calibrate_all',
    'apply_calibration', 'prr_curve', 'response_threshold'
]
