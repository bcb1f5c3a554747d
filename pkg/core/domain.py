"""
領域型別：藥物、腫瘤、白血球、時間網格與異質性情境

所有型別在建構後不可變，可安全地在多線程/多進程任務間共享。
單位約定：
    時間 - 天 (步長另以小時表示)
    濃度 - g/m³
    藥量 - g (β_rate / β_cum 以 g/m² 表示，乘上體表面積換算為克)
    細胞數 - 個 (白血球為 cells/m³)
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple
import math

import numpy as np

from core.enums import Route
from core.errors import InvariantViolation
from utils.logging import get_logger

logger = get_logger(__name__)

# 1e9 個細胞約對應直徑 25 mm 的球形腫瘤
REFERENCE_CELLS = 1e9
REFERENCE_DIAMETER_MM = 25.0
MAX_XI = 1.0  # 1/day


def _require(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise InvariantViolation(field_name, message)


@dataclass(frozen=True)
class DrugParams:
    """單一藥物的藥動/藥效與操作參數"""
    id: int
    name: str
    xi: float                           # 排除速率 (1/day)
    eta_by_celltype: Tuple[float, ...]  # 各癌細胞類型的殺傷效應 (m³·g⁻¹·day⁻¹)
    eta_wbc: float                      # 白血球殺傷效應 (m³·g⁻¹·day⁻¹)
    rho: float                          # 時間抗藥性衰減 (1/day)
    beta_eff: float                     # 有效濃度門檻 (g/m³)
    beta_conc: float                    # 最大濃度，以隔室內總克數表示 (g)
    beta_rate: float                    # 口服: 每次給藥 g/m²；靜脈: g·m⁻²·hr⁻¹
    beta_cum: float                     # 每日累積上限 (g/m²)
    route: Route
    pill_mass: Optional[float] = None   # 藥丸重量 (g)
    rest_days: Optional[int] = None     # 給藥後強制休息天數
    window_days: Optional[int] = None   # 治療窗口 (天)，僅記錄

    def __post_init__(self):
        object.__setattr__(self, 'eta_by_celltype', tuple(float(v) for v in self.eta_by_celltype))
        _require(bool(self.name) and ' ' not in self.name, 'name', f"藥物名稱必須非空且不含空白: {self.name!r}")
        _require(self.xi > 0, 'xi', f"必須大於 0，實際為 {self.xi}")
        _require(all(v >= 0 for v in self.eta_by_celltype), 'eta_by_celltype', "殺傷效應不可為負")
        _require(self.eta_wbc >= 0, 'eta_wbc', f"不可為負，實際為 {self.eta_wbc}")
        _require(self.rho >= 0, 'rho', f"不可為負，實際為 {self.rho}")
        _require(self.beta_eff >= 0, 'beta_eff', f"不可為負，實際為 {self.beta_eff}")
        _require(self.beta_conc > 0, 'beta_conc', f"必須大於 0，實際為 {self.beta_conc}")
        _require(self.beta_rate > 0, 'beta_rate', f"必須大於 0，實際為 {self.beta_rate}")
        _require(self.beta_cum > 0, 'beta_cum', f"必須大於 0，實際為 {self.beta_cum}")
        if self.route is Route.ORAL:
            _require(self.pill_mass is not None and self.pill_mass > 0, 'pill_mass', "口服藥物必須指定正的藥丸重量")
        else:
            _require(self.pill_mass is None, 'pill_mass', "靜脈注射藥物不可指定藥丸重量")
        if self.rest_days is not None:
            _require(self.rest_days >= 0, 'rest_days', f"不可為負，實際為 {self.rest_days}")
        if self.window_days is not None:
            _require(self.window_days >= 1, 'window_days', f"至少為 1 天，實際為 {self.window_days}")

    @property
    def is_oral(self) -> bool:
        return self.route is Route.ORAL

    @property
    def eta0(self) -> float:
        """對非抗藥細胞的基準殺傷效應"""
        return max(self.eta_by_celltype) if self.eta_by_celltype else 0.0

    def conc_cap(self, volume: float) -> float:
        """濃度上限 (g/m³) = β_conc / 𝒱"""
        return self.beta_conc / volume

    def rate_cap_grams(self, body_surface: float, step_hours: float) -> float:
        """每個步長的給藥上限 (g)"""
        if self.is_oral:
            return self.beta_rate * body_surface
        return self.beta_rate * body_surface * step_hours

    def daily_cap_grams(self, body_surface: float) -> float:
        return self.beta_cum * body_surface

    def max_pills_per_admin(self, body_surface: float) -> int:
        if not self.is_oral:
            return 0
        return int(math.floor(self.rate_cap_grams(body_surface, 1.0) / self.pill_mass + 1e-9))

    def max_pills_per_day(self, body_surface: float) -> int:
        if not self.is_oral:
            return 0
        return int(math.floor(self.daily_cap_grams(body_surface) / self.pill_mass + 1e-9))


@dataclass(frozen=True)
class CellType:
    """癌細胞類型，resistant_to 為其抗藥的藥物 id"""
    id: int
    name: str
    resistant_to: Optional[int] = None


@dataclass(frozen=True)
class TumorParams:
    """腫瘤 Gompertz 生長參數"""
    cell_types: Tuple[CellType, ...]
    n0_by_type: Tuple[float, ...]
    n_inf_by_type: Tuple[float, ...]
    lam: float  # Gompertz 形狀參數 Λ (1/day)

    def __post_init__(self):
        object.__setattr__(self, 'cell_types', tuple(self.cell_types))
        object.__setattr__(self, 'n0_by_type', tuple(float(v) for v in self.n0_by_type))
        object.__setattr__(self, 'n_inf_by_type', tuple(float(v) for v in self.n_inf_by_type))
        _require(len(self.cell_types) > 0, 'cell_types', "至少需要一種細胞類型")
        _require(len(self.n0_by_type) == len(self.cell_types), 'n0_by_type', "長度必須等於細胞類型數")
        _require(len(self.n_inf_by_type) == len(self.cell_types), 'n_inf_by_type', "長度必須等於細胞類型數")
        _require(all(v > 0 for v in self.n0_by_type), 'n0_by_type', "初始細胞數必須大於 0")
        _require(all(inf > n0 for inf, n0 in zip(self.n_inf_by_type, self.n0_by_type)),
                 'n_inf_by_type', "漸近上限必須大於初始細胞數")
        _require(self.lam > 0, 'lambda', f"必須大於 0，實際為 {self.lam}")

    @property
    def n_types(self) -> int:
        return len(self.cell_types)

    @property
    def p0(self) -> np.ndarray:
        """初始對數細胞數 P_{q,0}"""
        return np.log(np.asarray(self.n0_by_type, dtype=float))

    @property
    def p_inf(self) -> np.ndarray:
        return np.log(np.asarray(self.n_inf_by_type, dtype=float))

    @property
    def total_n0(self) -> float:
        return float(sum(self.n0_by_type))


@dataclass(frozen=True)
class WbcParams:
    """白血球動態參數"""
    n_w0: float          # 初始白血球數 (cells/m³)
    production: float    # υ_w (cells·m⁻³·day⁻¹)
    turnover: float      # ν_w (1/day)
    delay_days: int      # t_w (天)
    theta_neu: float
    theta_lym: float
    beta_neu: float      # 嗜中性球減少門檻 (cells/m³)
    beta_lym: float      # 淋巴球減少門檻 (cells/m³)

    def __post_init__(self):
        _require(self.n_w0 > 0, 'n_w0', f"必須大於 0，實際為 {self.n_w0}")
        _require(self.turnover > 0, 'turnover', f"必須大於 0，實際為 {self.turnover}")
        _require(math.isclose(self.production, self.turnover * self.n_w0, rel_tol=1e-9),
                 'production', f"必須等於 turnover × n_w0 = {self.turnover * self.n_w0:.6g}，實際為 {self.production:.6g}")
        _require(self.delay_days >= 0, 'delay_days', f"不可為負，實際為 {self.delay_days}")
        _require(self.theta_neu > 0 and self.theta_lym > 0, 'theta_neu', "細胞類型比例必須大於 0")
        _require(self.theta_neu + self.theta_lym <= 1, 'theta_lym', "theta_neu + theta_lym 不可超過 1")
        _require(self.beta_neu > 0 and self.beta_lym > 0, 'beta_neu', "毒性門檻必須大於 0")
        _require(self.beta_w < self.n_w0, 'beta_w', f"β_w = {self.beta_w:.6g} 必須小於 n_w0")

    @property
    def beta_w(self) -> float:
        """白血球下限 β_w = min(β_neu/θ_neu, β_lym/θ_lym)"""
        return min(self.beta_neu / self.theta_neu, self.beta_lym / self.theta_lym)


@dataclass(frozen=True)
class TimeGrid:
    """規劃期間 [0, T] 的離散化"""
    horizon_days: int
    step_hours: float
    meal_offsets: Tuple[float, ...] = (8.0, 13.0, 19.0)
    wbc_lag_days: int = 5
    compartment_volume: float = 0.015  # 𝒱 (m³)
    body_surface: float = 1.7          # 體表面積 (m²)

    def __post_init__(self):
        object.__setattr__(self, 'meal_offsets', tuple(float(v) for v in self.meal_offsets))
        _require(self.horizon_days >= 1, 'horizon_days', f"至少為 1 天，實際為 {self.horizon_days}")
        _require(self.step_hours > 0, 'step_hours', f"必須大於 0，實際為 {self.step_hours}")
        per_day = 24.0 / self.step_hours
        _require(abs(per_day - round(per_day)) < 1e-9, 'step_hours', f"24 小時必須可被步長 {self.step_hours} 整除")
        _require(all(0 <= v < 24 for v in self.meal_offsets), 'meal_offsets', "用餐時間必須在 [0, 24) 內")
        _require(all(a < b for a, b in zip(self.meal_offsets, self.meal_offsets[1:])),
                 'meal_offsets', "用餐時間必須嚴格遞增")
        _require(self.wbc_lag_days >= 0, 'wbc_lag_days', f"不可為負，實際為 {self.wbc_lag_days}")
        _require(self.compartment_volume > 0, 'compartment_volume', "必須大於 0")
        _require(self.body_surface > 0, 'body_surface', "必須大於 0")

    @classmethod
    def from_minutes(cls, horizon_days: int, step_minutes: float, **kwargs) -> 'TimeGrid':
        return cls(horizon_days=horizon_days, step_hours=step_minutes / 60.0, **kwargs)

    @property
    def h(self) -> float:
        """步長 (天)"""
        return self.step_hours / 24.0

    @property
    def step_minutes(self) -> float:
        return self.step_hours * 60.0

    @property
    def steps_per_day(self) -> int:
        return int(round(24.0 / self.step_hours))

    @property
    def n_steps(self) -> int:
        """S = 24·M / h"""
        return self.steps_per_day * self.horizon_days

    def times_days(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    def meal_steps_in_day(self) -> Tuple[int, ...]:
        """用餐時間對齊到網格 (向下取整)，碰撞時去重並警告"""
        snapped = [int(math.floor(offset / self.step_hours + 1e-9)) for offset in self.meal_offsets]
        unique = tuple(sorted(set(snapped)))
        if len(unique) < len(snapped):
            logger.warning(f"步長 {self.step_hours} 小時下用餐時間 {self.meal_offsets} 對齊後重疊，"
                           f"保留 {len(unique)} 個給藥時點")
        return unique

    def meal_steps(self) -> Tuple[int, ...]:
        in_day = self.meal_steps_in_day()
        spd = self.steps_per_day
        return tuple(day * spd + j for day in range(self.horizon_days) for j in in_day)

    def meal_mask(self) -> np.ndarray:
        """長度 S 的布林陣列，標記用餐步長"""
        mask = np.zeros(self.n_steps, dtype=bool)
        mask[list(self.meal_steps())] = True
        return mask

    def day_start_steps(self) -> Tuple[int, ...]:
        spd = self.steps_per_day
        return tuple(m * spd for m in range(self.horizon_days + 1))

    def day_steps(self, day: int) -> range:
        spd = self.steps_per_day
        return range(day * spd, (day + 1) * spd)

    def with_step(self, step_hours: float) -> 'TimeGrid':
        return replace(self, step_hours=step_hours)

    def with_horizon(self, horizon_days: int) -> 'TimeGrid':
        return replace(self, horizon_days=horizon_days)


@dataclass(frozen=True)
class Scenario:
    """單一異質性情境：各類型對數細胞數 π 與機率 μ"""
    log_pops: Tuple[float, ...]
    prob: float

    @property
    def counts(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_pops, dtype=float))


@dataclass(frozen=True)
class ScenarioSet:
    """K 個情境，依機率遞減排序 (同機率保留原順序)"""
    scenarios: Tuple[Scenario, ...]

    def __post_init__(self):
        items = tuple(self.scenarios)
        _require(len(items) > 0, 'scenarios', "至少需要一個情境")
        width = len(items[0].log_pops)
        _require(all(len(s.log_pops) == width for s in items), 'log_pops', "各情境的細胞類型數必須一致")
        _require(all(np.isfinite(s.log_pops).all() for s in items), 'log_pops', "對數細胞數必須為有限值")
        _require(all(s.prob >= 0 for s in items), 'prob', "機率不可為負")
        total = sum(s.prob for s in items)
        _require(abs(total - 1.0) <= 1e-9, 'prob', f"機率總和必須為 1，實際為 {total:.12f}")
        ordered = tuple(sorted(items, key=lambda s: -s.prob))
        object.__setattr__(self, 'scenarios', ordered)

    @classmethod
    def from_arrays(cls, log_pops: Sequence[Sequence[float]], probs: Sequence[float]) -> 'ScenarioSet':
        return cls(tuple(Scenario(tuple(float(v) for v in row), float(p)) for row, p in zip(log_pops, probs)))

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def n_types(self) -> int:
        return len(self.scenarios[0].log_pops)

    @property
    def probs(self) -> np.ndarray:
        return np.array([s.prob for s in self.scenarios])

    @property
    def log_pops(self) -> np.ndarray:
        return np.array([s.log_pops for s in self.scenarios], dtype=float)

    @property
    def most_likely(self) -> Scenario:
        return self.scenarios[0]

    def weighted_mean_counts(self) -> np.ndarray:
        """各類型機率加權平均細胞數 Σ_k μ^(k)·exp(π^(k)_q)"""
        return self.probs @ np.exp(self.log_pops)


@dataclass(frozen=True)
class ParamBundle:
    """一次規劃所需的完整參數組"""
    drugs: Tuple[DrugParams, ...]
    tumor: TumorParams
    wbc: WbcParams
    grid: TimeGrid
    regimen_notes: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'drugs', tuple(self.drugs))
        names = [d.name for d in self.drugs]
        _require(len(set(names)) == len(names), 'drugs', f"藥物名稱重複: {names}")
        for drug in self.drugs:
            _require(len(drug.eta_by_celltype) == self.tumor.n_types, 'eta_by_celltype',
                     f"{drug.name} 的殺傷效應數量 {len(drug.eta_by_celltype)} 與細胞類型數 {self.tumor.n_types} 不符")

    @property
    def drug_names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.drugs)

    def drug(self, name: str) -> DrugParams:
        for d in self.drugs:
            if d.name == name:
                return d
        raise KeyError(f"找不到藥物 {name}")

    def with_grid(self, grid: TimeGrid) -> 'ParamBundle':
        return replace(self, grid=grid)

    def with_step_minutes(self, step_minutes: float) -> 'ParamBundle':
        return replace(self, grid=self.grid.with_step(step_minutes / 60.0))

    def with_drug(self, name: str, **changes) -> 'ParamBundle':
        self.drug(name)
        drugs = tuple(replace(d, **changes) if d.name == name else d for d in self.drugs)
        return replace(self, drugs=drugs)

    def with_drugs(self, names: Sequence[str]) -> 'ParamBundle':
        return replace(self, drugs=tuple(self.drug(n) for n in names))

    def with_wbc(self, **changes) -> 'ParamBundle':
        return replace(self, wbc=replace(self.wbc, **changes))

    def with_initial_state(self, n0_by_type: Sequence[float]) -> 'ParamBundle':
        return replace(self, tumor=replace(self.tumor, n0_by_type=tuple(float(v) for v in n0_by_type)))

    def with_scenario_mean(self, scenarios: ScenarioSet) -> 'ParamBundle':
        """以情境的機率加權平均細胞數作為確定性模型初始狀態"""
        return self.with_initial_state(scenarios.weighted_mean_counts())

    def scaled(self, selector: str, fraction: float) -> 'ParamBundle':
        """
        將單一參數乘上 fraction

        參數:
            selector: 'xi:NAME'、'eta0:NAME' (各細胞類型一起縮放，保持抗藥比例)、
                      'etaw:NAME'、'rho:NAME' 或 'neutropenia'
            fraction: 縮放比例 (> 0)

        異常:
            ValueError: 未知的選擇器
            InvariantViolation: 縮放後參數不合法
        """
        _require(fraction > 0, 'fraction', f"必須大於 0，實際為 {fraction}")
        if selector == 'neutropenia':
            return self.with_wbc(beta_neu=self.wbc.beta_neu * fraction)
        kind, _, name = selector.partition(':')
        if not name:
            raise ValueError(f"未知的參數選擇器: {selector}")
        drug = self.drug(name)
        if kind == 'xi':
            # 生理上排除速率不超過 1.0/day
            return self.with_drug(name, xi=min(drug.xi * fraction, MAX_XI))
        if kind == 'eta0':
            return self.with_drug(name, eta_by_celltype=tuple(v * fraction for v in drug.eta_by_celltype))
        if kind == 'etaw':
            return self.with_drug(name, eta_wbc=drug.eta_wbc * fraction)
        if kind == 'rho':
            return self.with_drug(name, rho=drug.rho * fraction)
        raise ValueError(f"未知的參數選擇器: {selector}")


def cells_to_diameter(n: float) -> float:
    """
    細胞數換算為腫瘤直徑 (mm)，假設球形且密度固定

    參數:
        n: 細胞數
    返回:
        直徑 d = 25·(n/1e9)^(1/3) mm
    """
    if not n > 0:
        raise InvariantViolation('n', f"細胞數必須大於 0，實際為 {n}")
    return REFERENCE_DIAMETER_MM * (n / REFERENCE_CELLS) ** (1.0 / 3.0)


def diameter_to_cells(d_mm: float) -> float:
    """直徑 (mm) 換算為細胞數，cells_to_diameter 的反函數"""
    if not d_mm > 0:
        raise InvariantViolation('d_mm', f"直徑必須大於 0，實際為 {d_mm}")
    return REFERENCE_CELLS * (d_mm / REFERENCE_DIAMETER_MM) ** 3
