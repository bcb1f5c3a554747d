from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

from core.enums import SolveStatus


@dataclass(frozen=True)
class SolveResult:
    """
    求解結果

    status 為 OPTIMAL 時 assignment 涵蓋所有變數；gap 為相對 MIP 間隙；
    violations 由獨立可行性檢查填入
    """
    status: SolveStatus
    objective: Optional[float] = None
    assignment: Dict[str, float] = field(default_factory=dict)
    gap: float = 0.0
    runtime: float = 0.0
    backend: str = ''
    nodes: int = 0
    message: str = ''
    violations: List[str] = field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    @property
    def has_solution(self) -> bool:
        return bool(self.assignment)

    def with_violations(self, violations: List[str]) -> 'SolveResult':
        return replace(self, violations=list(violations))

    def summary(self) -> str:
        objective = 'n/a' if self.objective is None else f"{self.objective:.6g}"
        return (f"[{self.backend}] 狀態={self.status.value} 目標={objective} "
                f"間隙={self.gap:.2e} 耗時={self.runtime:.2f}秒")
