"""
將最優計畫轉為固定的每日用餐給藥模式

口服藥：非休息日的總藥丸數除以非休息日數 (向下取整，餘數捨棄)，
每日的用餐模式沿用最優計畫中最常見的模式 (調整到每日藥丸數)，
沒有唯一最常見者時平均分配到各用餐時點；靜脈注射藥物維持原計畫。
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.metrics import operational_violations, plan_metrics
from core.domain import ParamBundle, cells_to_diameter
from dynamics.simulation import SimulationResult, simulate_all
from transcription.plan import TreatmentPlan
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class RegularizationReport:
    doses: np.ndarray                 # (D, S+1) 規則化後的給藥量 (g)
    pills_per_day: Dict[str, int]
    original: SimulationResult
    regulated: SimulationResult
    violations: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def objective_delta(self) -> float:
        """規則化計畫 Σ_q P_{q,S} 減去最優計畫"""
        return self.regulated.objective - self.original.objective

    @property
    def diameter_delta_mm(self) -> float:
        return (cells_to_diameter(self.regulated.final_total_cells)
                - cells_to_diameter(self.original.final_total_cells))


def _meal_pattern(per_day: int, n_meals: int, per_admin: int) -> List[int]:
    """將每日藥丸數平均分配到用餐時點，前面的餐次先多分一顆"""
    base, extra = divmod(per_day, n_meals)
    return [min(per_admin, base + (1 if i < extra else 0)) for i in range(n_meals)]


def dominant_pattern(day_patterns: np.ndarray) -> Optional[Tuple[int, ...]]:
    """給藥日中出現次數最多的用餐模式；沒有唯一最多者時回傳 None"""
    counts = Counter(tuple(int(p) for p in row) for row in day_patterns if row.sum() > 0)
    ranked = counts.most_common(2)
    if not ranked or (len(ranked) == 2 and ranked[0][1] == ranked[1][1]):
        return None
    return ranked[0][0]


def fit_pattern(pattern: Sequence[int], per_day: int, per_admin: int) -> List[int]:
    """
    將模式調整為每日 per_day 顆

    減量時從藥丸最多的餐次扣 (同數取較晚的餐次)；
    加量時先補已給藥的餐次，再依序補其他餐次，每次不超過 per_admin
    """
    fitted = [min(per_admin, int(p)) for p in pattern]
    while sum(fitted) > per_day:
        j = max(range(len(fitted)), key=lambda i: (fitted[i], i))
        fitted[j] -= 1
    while sum(fitted) < per_day:
        open_meals = [i for i in range(len(fitted)) if fitted[i] < per_admin]
        if not open_meals:
            break
        j = min(open_meals, key=lambda i: (fitted[i] == 0, i))
        fitted[j] += 1
    return fitted


def regularize_plan(plan: TreatmentPlan, params: ParamBundle, preserve_rest_days: bool = True) -> RegularizationReport:
    """
    規則化計畫並重新模擬

    參數:
        plan: 最優計畫
        params: 參數組 (網格以 plan.grid 為準)
        preserve_rest_days: 保留最優計畫中沒有給藥的日子；False 時所有日子都給藥

    返回:
        RegularizationReport；違反毒性或操作限制時 violations 非空，不做修正
    """
    bundle = params.with_grid(plan.grid).with_drugs(plan.drug_names)
    grid = bundle.grid
    spd, days = grid.steps_per_day, grid.horizon_days
    meals = grid.meal_steps_in_day()
    doses = plan.doses.copy()
    pills_per_day: Dict[str, int] = {}

    for d, drug in enumerate(bundle.drugs):
        if not drug.is_oral:
            continue
        step_pills = np.rint(plan.doses[d, :grid.n_steps] / drug.pill_mass).reshape(days, spd)
        daily_pills = step_pills.sum(axis=1)
        active = daily_pills > 0 if preserve_rest_days else np.ones(days, dtype=bool)
        n_active = int(active.sum())
        per_day = int(daily_pills.sum()) // n_active if n_active else 0
        per_day = min(per_day, drug.max_pills_per_day(grid.body_surface))
        per_admin = drug.max_pills_per_admin(grid.body_surface)
        dominant = dominant_pattern(step_pills[:, list(meals)])
        if dominant is None:
            pattern = _meal_pattern(per_day, len(meals), per_admin)
        else:
            pattern = fit_pattern(dominant, per_day, per_admin)
        pills_per_day[drug.name] = sum(pattern)

        doses[d, :] = 0.0
        for m in np.flatnonzero(active):
            for j, count in zip(meals, pattern):
                doses[d, m * spd + j] = count * drug.pill_mass
        dropped = int(daily_pills.sum()) - sum(pattern) * n_active
        logger.info(f"{drug.name}: 每日 {sum(pattern)} 顆 {pattern}，{n_active} 個給藥日，捨棄 {dropped} 顆")

    original = simulate_all(bundle, plan.doses, sampling=plan.wbc_sampling)
    regulated = simulate_all(bundle, doses, sampling=plan.wbc_sampling)
    violations = operational_violations(bundle, doses, regulated)
    report = RegularizationReport(doses, pills_per_day, original, regulated, violations)
    if violations:
        logger.warning(f"規則化計畫不可行 ({len(violations)} 項): {violations[0]}")
    else:
        logger.info(f"規則化完成: Σ P_S {original.objective:.4f} → {regulated.objective:.4f}，"
                    f"直徑變化 {report.diameter_delta_mm:+.3f} mm")
    return report


def report_frame(report: RegularizationReport, params: ParamBundle, plan: TreatmentPlan) -> pd.DataFrame:
    """兩個計畫的指標並列，列為指標名稱"""
    bundle = params.with_grid(plan.grid).with_drugs(plan.drug_names)
    rows = {
        'optimal': plan_metrics(bundle, plan.doses, report.original),
        'regulated': plan_metrics(bundle, report.doses, report.regulated),
    }
    frame = pd.DataFrame(rows)
    frame.index.name = 'metric'
    return frame.reset_index()
