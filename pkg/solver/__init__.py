from .result import SolveResult
from .mps import write_mps, read_mps
from .builtin import solve_builtin, solve_enumeration, solve_lp, SolverLimits
from .feasibility import check_feasibility
from .external import solve_external, read_solution, write_solution
from .backends import BuiltinBackend, ScipyBackend, ExternalBackend, get_backend, verify

__all__ = [
    'SolveResult', 'write_mps', 'read_mps', 'solve_builtin', 'solve_enumeration', 'solve_lp',
    'SolverLimits', 'check_feasibility', 'solve_external', 'read_solution', 'write_solution',
    'BuiltinBackend', 'ScipyBackend', 'ExternalBackend', 'get_backend', 'verify'
]
