from .interfaces import T, R, Processor, SolverBackend
from .enums import (ProcessingMode, Route, VarKind, Sense, BilinearMode, ObjectiveMode,
                    WbcSampling, StudentizeMode, SolveStatus)
from .context import PlanningContext
from .stats import RunStats

__all__ = [
    'T', 'R', 'ProcessingMode', 'Route', 'VarKind', 'Sense', 'BilinearMode', 'ObjectiveMode',
    'WbcSampling', 'StudentizeMode', 'SolveStatus', 'PlanningContext', 'RunStats',
    'Processor', 'SolverBackend'
]
