from enum import Enum


class ProcessingMode(Enum):
    """處理模式枚舉"""
    SEQUENTIAL = "sequential"  # 串行處理
    CONCURRENT = "concurrent"  # 並行處理


class Route(Enum):
    """給藥途徑"""
    ORAL = "oral"                  # 口服 (藥丸)
    INTRAVENOUS = "intravenous"    # 靜脈注射


class VarKind(Enum):
    """MILP 變數類型"""
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"

    @property
    def is_integral(self) -> bool:
        return self is not VarKind.CONTINUOUS


class Sense(Enum):
    """約束方向，值與 MPS ROWS 區段的代碼一致"""
    LE = "L"
    EQ = "E"
    GE = "G"


class BilinearMode(Enum):
    """白血球雙線性項 N_w·C 的處理方式"""
    MCCORMICK = "mccormick"  # McCormick 包絡鬆弛
    DISCRETE = "discrete"    # 白血球數離散化


class ObjectiveMode(Enum):
    """機會約束模型的目標"""
    SHRINKAGE = "shrinkage"      # 最可能情境的腫瘤總量最小化
    PROBABILITY = "probability"  # 可手術機率最大化


class WbcSampling(Enum):
    """白血球日步長取用藥物濃度的方式"""
    DAY_START = "day_start"      # 取當日起點的濃度
    DAY_AVERAGE = "day_average"  # 取當日各步長的平均濃度


class StudentizeMode(Enum):
    """情境聚類前的標準化尺度"""
    LOG = "log"
    RAW = "raw"


class SolveStatus(Enum):
    """求解狀態"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"
