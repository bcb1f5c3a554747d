from .metrics import plan_metrics, operational_violations
from .runner import SolveTask, run_task, run_tasks
from .sensitivity import (sensitivity_sweep, apply_selector, scale_max_dose, remap_pill_regimen, max_dose_beta_conc,
                          DEFAULT_FRACTIONS)
from .regularize import regularize_plan, RegularizationReport, report_frame, dominant_pattern, fit_pattern
from .compare import compare_step_sizes, compare_bilinear, compare_configurations, DEFAULT_BILINEAR_CONFIGS

__all__ = [
    'plan_metrics', 'operational_violations', 'SolveTask', 'run_task', 'run_tasks', 'sensitivity_sweep',
    'apply_selector', 'scale_max_dose', 'remap_pill_regimen', 'max_dose_beta_conc', 'DEFAULT_FRACTIONS',
    'regularize_plan', 'RegularizationReport', 'report_frame', 'dominant_pattern', 'fit_pattern',
    'compare_step_sizes', 'compare_bilinear', 'compare_configurations', 'DEFAULT_BILINEAR_CONFIGS'
]
