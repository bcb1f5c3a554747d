"""求解後端：統一介面與獨立可行性檢查"""
from typing import Optional

from core.context import PlanningContext
from core.interfaces import SolverBackend
from solver.builtin import SolverLimits, solve_builtin
from solver.external import solve_external
from solver.feasibility import check_feasibility
from solver.result import SolveResult
from transcription.model import MilpModel
from utils.logging import get_logger

logger = get_logger(__name__)


def verify(model: MilpModel, result: SolveResult) -> SolveResult:
    """對任何後端回傳的解執行獨立可行性檢查，違反項目記錄在結果中"""
    if not result.has_solution:
        return result
    violations = check_feasibility(model, result.assignment)
    if violations:
        logger.warning(f"[{result.backend}] 解有 {len(violations)} 項違反，例如: {violations[0]}")
    return result.with_violations(violations)


class BuiltinBackend(SolverBackend):
    name = 'builtin'

    def __init__(self, limits: Optional[SolverLimits] = None):
        self.limits = limits or SolverLimits()

    def solve(self, model: MilpModel, time_limit: Optional[float] = None) -> SolveResult:
        return verify(model, solve_builtin(model, self.limits))


class ScipyBackend(SolverBackend):
    name = 'scipy'

    def __init__(self, mip_rel_gap: Optional[float] = None):
        self.mip_rel_gap = mip_rel_gap

    def solve(self, model: MilpModel, time_limit: Optional[float] = None) -> SolveResult:
        from solver.adapters.highs import solve_scipy
        if self.mip_rel_gap is None:
            return verify(model, solve_scipy(model, time_limit))
        return verify(model, solve_scipy(model, time_limit, self.mip_rel_gap))


class ExternalBackend(SolverBackend):
    name = 'external'

    def __init__(self, command_template: Optional[str] = None, workdir: Optional[str] = None):
        self.command_template = command_template
        self.workdir = workdir

    def solve(self, model: MilpModel, time_limit: Optional[float] = None) -> SolveResult:
        return verify(model, solve_external(model, self.command_template, time_limit, self.workdir))


def get_backend(name: str, context: Optional[PlanningContext] = None) -> SolverBackend:
    """
    依名稱建立後端

    參數:
        name: builtin | scipy | external
        context: 提供 solver_command 與 workdir 設定
    """
    context = context or PlanningContext()
    if name == 'builtin':
        return BuiltinBackend()
    if name == 'scipy':
        return ScipyBackend(context.get_config('mip_rel_gap'))
    if name == 'external':
        return ExternalBackend(context.get_config('solver_command'), context.get_config('workdir'))
    raise ValueError(f"未知的求解後端: {name}")
