"""求解後的計畫指標與操作限制檢查"""
from typing import Dict, List

import numpy as np

from core.domain import ParamBundle, cells_to_diameter
from dynamics.simulation import SimulationResult

# 模擬與 MILP 間的相對容差
CAP_TOL = 1e-6


def plan_metrics(bundle: ParamBundle, doses: np.ndarray, result: SimulationResult) -> Dict[str, float]:
    """
    計畫的摘要指標

    參數:
        bundle: 與給藥矩陣對齊的參數組
        doses: (D, S+1) 每步給藥量 (g)
        result: 以 doses 重新模擬的結果

    返回:
        {objective, total_cells, diameter_mm, N[type], nadir_wbc, nadir_neutrophils,
         nadir_lymphocytes, dose[drug], rest_days[drug]}
    """
    grid = bundle.grid
    finals = np.exp(result.log_pops[:, -1])
    metrics: Dict[str, float] = {
        'objective': result.objective,
        'total_cells': float(finals.sum()),
        'diameter_mm': cells_to_diameter(float(finals.sum())),
        'nadir_wbc': float(result.wbc.min()),
        'nadir_neutrophils': float(result.neutrophils.min()),
        'nadir_lymphocytes': float(result.lymphocytes.min()),
    }
    for q, name in enumerate(result.type_names):
        metrics[f'N[{name}]'] = float(finals[q])
    daily = np.asarray(doses, dtype=float)[:, :grid.n_steps].reshape(
        len(bundle.drugs), grid.horizon_days, grid.steps_per_day).sum(axis=2)
    for d, name in enumerate(bundle.drug_names):
        metrics[f'dose[{name}]'] = float(daily[d].sum())
        metrics[f'rest_days[{name}]'] = int(np.sum(daily[d] <= 0))
    return metrics


def _rest_window_violations(name: str, active_days: np.ndarray, rest_days: int) -> List[str]:
    found = []
    dosing = np.flatnonzero(active_days)
    for a, b in zip(dosing, dosing[1:]):
        if b - a <= rest_days:
            found.append(f"{name}: 第 {a} 天與第 {b} 天之間少於 {rest_days} 天休息")
    return found


def operational_violations(bundle: ParamBundle, doses: np.ndarray, result: SimulationResult) -> List[str]:
    """
    不經 MILP 直接檢查給藥矩陣與模擬結果的操作限制

    檢查項目：口服藥只在用餐時點給藥且為整數顆藥丸、每次與每日上限、
    休息日、濃度上限、嗜中性球與淋巴球門檻

    返回:
        違反描述列表，空列表表示可行
    """
    grid, wbc = bundle.grid, bundle.wbc
    doses = np.asarray(doses, dtype=float)
    meal = grid.meal_mask()
    found: List[str] = []
    for d, drug in enumerate(bundle.drugs):
        u = doses[d, :grid.n_steps]
        per_step = drug.rate_cap_grams(grid.body_surface, grid.step_hours)
        daily_cap = drug.daily_cap_grams(grid.body_surface)
        if np.any(u < -CAP_TOL):
            found.append(f"{drug.name}: 給藥量為負")
        if drug.is_oral:
            off_meal = np.flatnonzero((u > CAP_TOL) & ~meal)
            if off_meal.size:
                found.append(f"{drug.name}: 第 {off_meal[0]} 步非用餐時點給藥")
            pills = u / drug.pill_mass
            if np.any(np.abs(pills - np.round(pills)) > CAP_TOL):
                found.append(f"{drug.name}: 給藥量不是整數顆藥丸")
        over = np.flatnonzero(u > per_step * (1 + CAP_TOL) + CAP_TOL)
        if over.size:
            found.append(f"{drug.name}: 第 {over[0]} 步給藥 {u[over[0]]:.6g} g 超過上限 {per_step:.6g} g")
        daily = u.reshape(grid.horizon_days, grid.steps_per_day).sum(axis=1)
        over_day = np.flatnonzero(daily > daily_cap * (1 + CAP_TOL) + CAP_TOL)
        if over_day.size:
            found.append(f"{drug.name}: 第 {over_day[0]} 天總量 {daily[over_day[0]]:.6g} g 超過上限 {daily_cap:.6g} g")
        if drug.rest_days:
            found.extend(_rest_window_violations(drug.name, daily > CAP_TOL, drug.rest_days))
        cap = drug.conc_cap(grid.compartment_volume)
        peak = float(result.conc[d].max())
        if peak > cap * (1 + CAP_TOL):
            found.append(f"{drug.name}: 最高濃度 {peak:.6g} g/m^3 超過上限 {cap:.6g}")

    neu_low = float(result.neutrophils.min())
    if neu_low < wbc.beta_neu * (1 - CAP_TOL):
        found.append(f"嗜中性球減少: 最低 {neu_low:.6g} < {wbc.beta_neu:.6g}")
    lym_low = float(result.lymphocytes.min())
    if lym_low < wbc.beta_lym * (1 - CAP_TOL):
        found.append(f"淋巴球減少: 最低 {lym_low:.6g} < {wbc.beta_lym:.6g}")
    return found
