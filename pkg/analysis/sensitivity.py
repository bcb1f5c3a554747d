"""
單一參數敏感度掃描

選擇器：
    xi:NAME       排除速率 (上限 1.0/day)
    eta0:NAME     殺傷效應，各細胞類型一起縮放
    etaw:NAME     白血球殺傷效應
    rho:NAME      時間抗藥性
    neutropenia   嗜中性球門檻 β_neu
    maxdose:NAME  最大劑量方案；口服藥重新對應每日/每次藥丸數，β_conc 由方案峰值濃度重算
"""
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.runner import SolveTask, empty_row, run_tasks
from calibration.regimens import RegimenSpec, load_regimens
from core.context import PlanningContext
from core.domain import DrugParams, ParamBundle, TimeGrid
from core.enums import ProcessingMode
from core.errors import ChemoPlanError
from dynamics.pk import simulate_pk
from transcription.options import BuildOptions
from utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_FRACTIONS = (0.8, 0.9, 1.0, 1.1, 1.2)


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def remap_pill_regimen(drug: DrugParams, body_surface: float, fraction: float) -> Tuple[int, int]:
    """
    最大劑量方案縮放後的 (每日藥丸數, 每次藥丸數)

    每日藥丸數至少變動一顆：Δ = max(1, round(|fraction − 1|·每日))，方向隨 fraction；
    每日給藥次數 (每日 / 每次) 不變，每次藥丸數 = ceil(新每日 / 給藥次數)。
    例如 capecitabine 8/4 在 1.25 時為 10/5、0.75 時為 6/3；
    etoposide 2/1 在 1.25 時為 3/2、0.75 時為 1/1
    """
    per_day = drug.max_pills_per_day(body_surface)
    per_admin = drug.max_pills_per_admin(body_surface)
    if fraction == 1.0:
        return per_day, per_admin
    admins_per_day = max(1, math.ceil(per_day / per_admin))
    change = max(1, _round_half_up(abs(fraction - 1.0) * per_day))
    new_day = max(1, per_day + change if fraction > 1.0 else per_day - change)
    return new_day, math.ceil(new_day / admins_per_day)


def regimen_peak_grams(drug: DrugParams, grid: TimeGrid, per_day: int, per_admin: int,
                       regimen: Optional[RegimenSpec] = None) -> float:
    """
    以藥丸方案模擬最高隔室藥量 (g)

    每個給藥日在用餐時點依序給 per_admin 顆直到 per_day 顆；
    有臨床方案時沿用其一個週期的給藥/休息天數，否則整個規劃期每天給藥
    """
    days = regimen.cycle_days if regimen is not None else grid.horizon_days
    on_days = regimen.on_days if regimen is not None else days
    grid = grid.with_step(1.0).with_horizon(days)
    meals = grid.meal_steps_in_day()
    pattern, left = [], per_day
    for _ in meals:
        pattern.append(min(per_admin, left))
        left -= pattern[-1]
    doses = np.zeros(grid.n_steps + 1)
    for m in range(on_days):
        for j, count in zip(meals, pattern):
            doses[m * grid.steps_per_day + j] = count * drug.pill_mass
    conc = simulate_pk(drug, doses, grid).values
    return float(conc.max() * grid.compartment_volume)


def max_dose_beta_conc(drug: DrugParams, grid: TimeGrid, per_day: int, per_admin: int,
                       regimen: Optional[RegimenSpec] = None) -> float:
    """新方案的 β_conc：原 β_conc 乘上新舊方案模擬峰值的比例，原方案時恰為原值"""
    bsa = grid.body_surface
    base = regimen_peak_grams(drug, grid, drug.max_pills_per_day(bsa), drug.max_pills_per_admin(bsa), regimen)
    if not base > 0:
        raise ValueError(f"{drug.name}: 原方案模擬峰值為 0，無法換算 β_conc")
    return drug.beta_conc * regimen_peak_grams(drug, grid, per_day, per_admin, regimen) / base


def scale_max_dose(bundle: ParamBundle, name: str, fraction: float,
                   regimens: Optional[Dict[str, RegimenSpec]] = None) -> ParamBundle:
    """
    縮放最大劑量方案

    口服藥：β_rate、β_cum 依新的藥丸數換算，β_conc 依臨床方案週期的模擬峰值比例換算；
    靜脈注射藥：β_rate、β_cum、β_conc 直接乘上 fraction

    參數:
        regimens: 臨床給藥方案，預設讀取 config/params/regimens.ini
    """
    if fraction == 1.0:
        return bundle
    drug = bundle.drug(name)
    grid = bundle.grid
    if not drug.is_oral:
        return bundle.with_drug(name, beta_rate=drug.beta_rate * fraction, beta_cum=drug.beta_cum * fraction,
                                beta_conc=drug.beta_conc * fraction)
    regimen = (load_regimens() if regimens is None else regimens).get(name)
    per_day, per_admin = remap_pill_regimen(drug, grid.body_surface, fraction)
    beta_rate = per_admin * drug.pill_mass / grid.body_surface
    beta_cum = per_day * drug.pill_mass / grid.body_surface
    beta_conc = max_dose_beta_conc(drug, grid, per_day, per_admin, regimen)
    logger.info(f"{name} 最大劑量方案 {drug.max_pills_per_day(grid.body_surface)}/"
                f"{drug.max_pills_per_admin(grid.body_surface)} → {per_day}/{per_admin}，"
                f"β_conc {drug.beta_conc:.4g} → {beta_conc:.4g} g")
    return bundle.with_drug(name, beta_rate=beta_rate, beta_cum=beta_cum, beta_conc=beta_conc)


def apply_selector(bundle: ParamBundle, selector: str, fraction: float) -> ParamBundle:
    """依選擇器縮放單一參數，fraction = 1.0 時回傳原參數組"""
    if not fraction > 0:
        raise ValueError(f"縮放比例必須大於 0，實際為 {fraction}")
    kind, _, name = selector.partition(':')
    if kind == 'maxdose':
        return scale_max_dose(bundle, name, fraction)
    if fraction == 1.0:
        return bundle
    return bundle.scaled(selector, fraction)


def sensitivity_sweep(bundle: ParamBundle, selector: str, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                      options: Optional[BuildOptions] = None, backend: str = 'builtin',
                      time_limit: Optional[float] = None, context: Optional[PlanningContext] = None,
                      mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                      max_workers: Optional[int] = None) -> pd.DataFrame:
    """
    每個比例求解一次，只縮放所選參數

    參數:
        bundle: 基準參數組
        selector: 參數選擇器 (見模組說明)
        fractions: 縮放比例
        options: 建模選項；帶有情境集合時求解機會約束模型
        backend: builtin | scipy | external

    返回:
        DataFrame，欄位 fraction, selector, objective, status, runtime, gap, 模型規模與 error；
        單點失敗記錄在 error 欄，掃描繼續
    """
    options = options or BuildOptions()
    context = context or PlanningContext()
    solver_config = {k: context.get_config(k) for k in ('mip_rel_gap', 'solver_command', 'workdir')
                     if context.get_config(k) is not None}
    tasks, failed = [], {}
    for i, fraction in enumerate(fractions):
        label = f"{selector}×{fraction:g}"
        try:
            scaled = apply_selector(bundle, selector, float(fraction))
        except (ChemoPlanError, ValueError, KeyError) as e:
            logger.error(f"[{label}] 參數縮放失敗: {e}")
            context.stats.record_error(type(e).__name__)
            failed[i] = dict(empty_row(label), error=f"{type(e).__name__}: {e}")
            continue
        tasks.append(SolveTask(label, scaled, options, backend=backend, time_limit=time_limit,
                               solver_config=solver_config))
    solved = iter(run_tasks(tasks, mode=mode, max_workers=max_workers, context=context,
                            label='敏感度點').to_dict('records'))
    frame = pd.DataFrame([failed[i] if i in failed else next(solved) for i in range(len(fractions))])
    frame.insert(0, 'fraction', [float(f) for f in fractions])
    frame.insert(1, 'selector', selector)
    return frame
