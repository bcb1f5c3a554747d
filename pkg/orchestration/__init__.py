from .orchestrator import PlanningOrchestrator, load_scenario_options
from .validation import SuiteResult, run_validation, results_frame

__all__ = ['PlanningOrchestrator', 'load_scenario_options', 'SuiteResult', 'run_validation', 'results_frame']
