from typing import Optional


class ChemoPlanError(Exception):
    """本工具所有錯誤的基類"""


class ParameterFileError(ChemoPlanError):
    """參數檔解析失敗，帶有檔案路徑與行號"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class InvariantViolation(ChemoPlanError):
    """參數違反型別不變量，field 為出錯欄位名稱"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnstableStepError(ChemoPlanError):
    """時間步長不滿足 Euler 離散化的絕對穩定條件"""


class ModelBuildError(ChemoPlanError):
    """MILP 建模失敗"""


class SolverError(ChemoPlanError):
    """求解器執行或結果解析失敗"""


class SolverLimitError(SolverError):
    """超過內建求解器的規模限制或迭代限制"""


class InfeasibleModelError(ChemoPlanError):
    """模型不可行"""


class PlanExtractionError(ChemoPlanError):
    """無法從解中取出治療計畫"""


class CalibrationError(ChemoPlanError):
    """殺傷參數校準失敗"""


class ScenarioError(ChemoPlanError):
    """情境生成或聚類失敗"""
