from dataclasses import dataclass, replace
import math
from typing import Optional

from core.domain import ScenarioSet, WbcParams
from core.enums import BilinearMode, ObjectiveMode, WbcSampling
from core.errors import ModelBuildError

# 可手術腫瘤大小 (約 20 mm 直徑)
DEFAULT_N_SURG = 0.4e9
DEFAULT_EPSILON = 0.05


@dataclass(frozen=True)
class BuildOptions:
    """
    MILP 建模選項

    參數:
        bilinear: 白血球雙線性項的處理方式
        levels: 離散化層數 K
        delta: 離散化寬度 Δ (cells/m³)，None 時取 (n_w0 − β_w)/K
        objective: 機會約束模型的目標
        scenario_set: 機會約束模型的情境
        epsilon: 允許未達可手術大小的機率 ε
        n_surg: 可手術細胞數
        wbc_sampling: 白血球延遲項取用的日濃度
        check_stability: 建模前檢查 Euler 穩定條件
    """
    bilinear: BilinearMode = BilinearMode.DISCRETE
    levels: int = 20
    delta: Optional[float] = None
    objective: ObjectiveMode = ObjectiveMode.SHRINKAGE
    scenario_set: Optional[ScenarioSet] = None
    epsilon: float = DEFAULT_EPSILON
    n_surg: float = DEFAULT_N_SURG
    wbc_sampling: WbcSampling = WbcSampling.DAY_START
    check_stability: bool = True

    @classmethod
    def mccormick(cls, **kwargs) -> 'BuildOptions':
        return cls(bilinear=BilinearMode.MCCORMICK, **kwargs)

    @classmethod
    def discrete(cls, fraction: float = 1 / 20, **kwargs) -> 'BuildOptions':
        """Δ = fraction·(n_w0 − β_w)，fraction 須為 1/K"""
        levels = int(round(1.0 / fraction))
        if levels < 1 or not math.isclose(levels * fraction, 1.0, rel_tol=1e-9):
            raise ModelBuildError(f"離散化比例 {fraction} 必須為 1/K")
        return cls(bilinear=BilinearMode.DISCRETE, levels=levels, **kwargs)

    def with_scenarios(self, scenarios: ScenarioSet, **changes) -> 'BuildOptions':
        return replace(self, scenario_set=scenarios, **changes)

    def resolve_delta(self, wbc: WbcParams) -> float:
        """回傳離散化寬度 Δ，並檢查 K·Δ = n_w0 − β_w"""
        span = wbc.n_w0 - wbc.beta_w
        if self.levels < 1:
            raise ModelBuildError(f"離散化層數必須至少為 1，實際為 {self.levels}")
        if self.delta is None:
            return span / self.levels
        if not self.delta > 0 or not math.isclose(self.levels * self.delta, span, rel_tol=1e-6):
            raise ModelBuildError(f"離散化設定不一致: K·Δ = {self.levels * self.delta:.6g}，"
                                  f"應等於 n_w0 − β_w = {span:.6g}")
        return self.delta

    def validate_chance(self) -> ScenarioSet:
        if self.scenario_set is None:
            raise ModelBuildError("機會約束模型需要情境集合")
        if not 0.0 <= self.epsilon < 1.0:
            raise ModelBuildError(f"ε 必須在 [0, 1) 內，實際為 {self.epsilon}")
        if not self.n_surg > 0:
            raise ModelBuildError(f"可手術細胞數必須大於 0，實際為 {self.n_surg}")
        return self.scenario_set
