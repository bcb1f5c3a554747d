from typing import List, Generic, Optional, TypeVar, TYPE_CHECKING
from abc import ABC, abstractmethod

from core.context import PlanningContext

if TYPE_CHECKING:
    from transcription.model import MilpModel
    from solver.result import SolveResult

T = TypeVar('T')  # 處理器輸入
R = TypeVar('R')  # 處理器輸出


class Processor(ABC, Generic[T, R]):
    """處理器抽象基類"""
    def __init__(self, context: PlanningContext = None):
        self.context = context or PlanningContext()

    @abstractmethod
    def process(self, input_data: T, **kwargs) -> R:
        """處理單筆數據"""

    def process_concurrent(self, input_data: List[T], **kwargs) -> List[R]:
        """並行處理多筆數據，預設依序呼叫 process"""
        return [self.process(item, **kwargs) for item in input_data]


class SolverBackend(ABC):
    """求解後端介面：內建、scipy (HiGHS) 或外部命令"""
    name: str = "abstract"

    @abstractmethod
    def solve(self, model: 'MilpModel', time_limit: Optional[float] = None) -> 'SolveResult':
        """求解模型並回傳 SolveResult"""
