"""從 MILP 解取出治療計畫，並以動態模組重新模擬驗證"""
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from config.constants import INTEGRALITY_TOL, WBC_UNIT
from core.domain import ParamBundle, TimeGrid
from core.enums import WbcSampling
from core.errors import PlanExtractionError
from dynamics.simulation import SimulationResult, simulate_all
from transcription import naming
from transcription.model import MilpModel
from utils.file_utils import read_table


@dataclass(frozen=True, eq=False)
class TreatmentPlan:
    """
    治療計畫：每種藥物每步的給藥量與模型中的狀態軌跡

    log_pops 為確定性模型的 P 或機會約束模型最可能情境的 P^(0)；
    log_pops_by_scenario 僅機會約束模型有值
    """
    grid: TimeGrid
    drug_names: Tuple[str, ...]
    type_names: Tuple[str, ...]
    doses: np.ndarray          # (D, S+1) g，最後一欄恆為 0
    pills: np.ndarray          # (D, S+1) 口服藥丸數，靜脈注射藥物為 0
    conc: np.ndarray           # (D, S+1)
    log_pops: np.ndarray       # (Q, S+1)
    wbc: np.ndarray            # (M+1,) cells/m³
    objective: float
    log_pops_by_scenario: Optional[np.ndarray] = None  # (K, Q, S+1)
    surgical: Optional[np.ndarray] = None              # (K,)
    wbc_sampling: WbcSampling = WbcSampling.DAY_START

    @property
    def n_drugs(self) -> int:
        return len(self.drug_names)

    def daily_doses(self) -> np.ndarray:
        """(D, M) 每日總給藥量"""
        spd, days = self.grid.steps_per_day, self.grid.horizon_days
        return self.doses[:, :self.grid.n_steps].reshape(self.n_drugs, days, spd).sum(axis=2)

    def total_dose(self) -> Dict[str, float]:
        return {name: float(self.doses[d].sum()) for d, name in enumerate(self.drug_names)}

    def dose_frame(self) -> pd.DataFrame:
        """給藥表，每步一列：step, t (day), U[drug] (g)"""
        frame = pd.DataFrame({'step': np.arange(self.grid.n_steps + 1), 't (day)': self.grid.times_days()})
        for d, name in enumerate(self.drug_names):
            frame[f'U[{name}] (g)'] = self.doses[d]
        return frame

    def state_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t (day)': self.grid.times_days()})
        for d, name in enumerate(self.drug_names):
            frame[f'C[{name}] (g/m^3)'] = self.conc[d]
        for q, name in enumerate(self.type_names):
            frame[f'P[{name}] (ln cells)'] = self.log_pops[q]
        return frame


def _lookup(solution: Mapping[str, float], name: str) -> float:
    try:
        return float(solution[name])
    except KeyError:
        raise PlanExtractionError(f"解中缺少變數 {name}") from None


def extract_plan(model: MilpModel, solution: Mapping[str, float]) -> TreatmentPlan:
    """
    由模型 meta 與解 (名稱→值) 組成治療計畫

    異常:
        PlanExtractionError: 解缺少變數或整數變數偏離整數超過 1e-6
    """
    meta = model.meta
    if 'grid' not in meta:
        raise PlanExtractionError("模型缺少 meta 資訊，無法解讀解")
    missing = [v.name for v in model.variables if v.name not in solution]
    if missing:
        raise PlanExtractionError(f"解中缺少 {len(missing)} 個變數，例如 {missing[0]}")
    for index in model.integer_indices():
        name = model.variables[index].name
        value = float(solution[name])
        if abs(value - round(value)) > INTEGRALITY_TOL:
            raise PlanExtractionError(f"整數變數 {name} 的值 {value} 不是整數")

    grid: TimeGrid = meta['grid']
    drugs, types = tuple(meta['drugs']), tuple(meta['types'])
    S, days = grid.n_steps, grid.horizon_days
    doses = np.zeros((len(drugs), S + 1))
    pills = np.zeros((len(drugs), S + 1), dtype=int)
    conc = np.zeros((len(drugs), S + 1))
    for d, name in enumerate(drugs):
        for s in range(S):
            # 求解器可能回傳 -1e-12 等微小負值
            doses[d, s] = max(0.0, _lookup(solution, naming.dose(name, s)))
            pill_name = naming.pills(name, s)
            if meta['oral'][d] and pill_name in solution:
                pills[d, s] = int(round(solution[pill_name]))
        for s in range(S + 1):
            conc[d, s] = _lookup(solution, naming.conc(name, s))

    n_scenarios = meta.get('scenarios', 0)
    by_scenario, surgical = None, None
    if n_scenarios:
        by_scenario = np.array([[[_lookup(solution, naming.log_pop(t, s, k)) for s in range(S + 1)]
                                 for t in types] for k in range(n_scenarios)])
        surgical = np.array([int(round(_lookup(solution, naming.surgical(k)))) for k in range(n_scenarios)])
        log_pops = by_scenario[0]
    else:
        log_pops = np.array([[_lookup(solution, naming.log_pop(t, s)) for s in range(S + 1)] for t in types])
    wbc = np.array([_lookup(solution, naming.wbc(m)) for m in range(days + 1)]) * WBC_UNIT

    return TreatmentPlan(grid=grid, drug_names=drugs, type_names=types, doses=doses, pills=pills, conc=conc,
                         log_pops=log_pops, wbc=wbc, objective=model.objective_value(solution),
                         log_pops_by_scenario=by_scenario, surgical=surgical,
                         wbc_sampling=meta.get('wbc_sampling', WbcSampling.DAY_START))


def resimulate(plan: TreatmentPlan, params: ParamBundle, p0=None, sampling=None) -> SimulationResult:
    """以動態模組重新模擬計畫的給藥序列"""
    bundle = params.with_grid(plan.grid).with_drugs(plan.drug_names)
    return simulate_all(bundle, plan.doses, sampling=sampling or plan.wbc_sampling, p0=p0)


def state_deviation(plan: TreatmentPlan, result: SimulationResult) -> Dict[str, float]:
    """計畫內狀態與重新模擬結果的最大絕對差"""
    return {
        'conc': float(np.max(np.abs(plan.conc - result.conc))) if plan.n_drugs else 0.0,
        'log_pops': float(np.max(np.abs(plan.log_pops - result.log_pops))),
        'wbc_rel': float(np.max(np.abs(plan.wbc - result.wbc) / result.wbc)),
    }


def load_doses(path: str, bundle: ParamBundle) -> np.ndarray:
    """讀取 dose_frame 格式的給藥表，回傳 (D, S+1) 矩陣"""
    frame = read_table(path)
    expected = bundle.grid.n_steps + 1
    if len(frame) != expected:
        raise PlanExtractionError(f"{path}: 給藥表有 {len(frame)} 列，網格需要 {expected} 列")
    doses = np.zeros((len(bundle.drugs), expected))
    for d, name in enumerate(bundle.drug_names):
        column = f'U[{name}] (g)'
        if column in frame.columns:
            doses[d] = frame[column].to_numpy(dtype=float)
    return doses


def plan_from_doses(bundle: ParamBundle, doses: np.ndarray,
                    sampling: WbcSampling = WbcSampling.DAY_START) -> TreatmentPlan:
    """由給藥矩陣 (例如讀入的給藥表) 模擬出完整計畫，狀態取自模擬結果"""
    result = simulate_all(bundle, doses, sampling=sampling)
    pills = np.zeros(np.shape(doses), dtype=int)
    for d, drug in enumerate(bundle.drugs):
        if drug.is_oral:
            pills[d] = np.rint(np.asarray(doses[d], dtype=float) / drug.pill_mass).astype(int)
    return TreatmentPlan(grid=bundle.grid, drug_names=bundle.drug_names,
                         type_names=tuple(ct.name for ct in bundle.tumor.cell_types),
                         doses=np.asarray(doses, dtype=float), pills=pills, conc=result.conc,
                         log_pops=result.log_pops, wbc=result.wbc, objective=result.objective,
                         wbc_sampling=sampling)
