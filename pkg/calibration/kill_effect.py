"""
殺傷效應 η_{d,0} 的校準

在 ρ = 0 下，擾動 ε_k 的最終對數細胞數為 P^(k)_S = a − (η + ε_k)·b，對 η 呈仿射；
給定目標平均值可直接解出 η，外層以二分法調整 δ 使模擬的部分緩解率符合試驗。
"""
from dataclasses import dataclass, replace
import math
from typing import Dict, Optional, Sequence

import numpy as np

from calibration.regimens import RegimenSpec, regimen_to_effective_concentration
from core.domain import DrugParams, ParamBundle, TimeGrid, TumorParams
from core.enums import ProcessingMode
from core.errors import CalibrationError
from dynamics.pd import gompertz_recursion
from utils.concurrency import run_indexed
from utils.logging import get_logger

logger = get_logger(__name__)

PRR_TOL = 0.01
DELTA_TOL = 1e-12
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class DriftModel:
    """單一聚合族群的 Gompertz 漂移：初始 p0、上限 p_inf、形狀 Λ、步長 h (day)"""
    p0: float
    p_inf: float
    lam: float
    h: float

    @classmethod
    def from_tumor(cls, tumor: TumorParams, grid: TimeGrid) -> 'DriftModel':
        return cls(p0=math.log(tumor.total_n0), p_inf=float(tumor.p_inf[0]), lam=tumor.lam, h=grid.h)

    def decay(self) -> float:
        return 1.0 - self.h * self.lam

    def drift_final(self, n_steps: int) -> float:
        """無藥物時的 P_S"""
        a = self.decay()
        return self.p_inf + (self.p0 - self.p_inf) * a ** n_steps

    def kill_weight(self, effective: np.ndarray) -> float:
        """b = Σ_s h·E_s·(1 − hΛ)^{S−1−s}"""
        effective = np.asarray(effective, dtype=float)
        n_steps = effective.size - 1
        powers = self.decay() ** np.arange(n_steps - 1, -1, -1)
        return float(self.h * np.dot(effective[:n_steps], powers))

    def simulate_finals(self, effective: np.ndarray, etas: np.ndarray) -> np.ndarray:
        """以 Euler 遞推模擬每個 η (含擾動) 的最終對數細胞數"""
        effective = np.asarray(effective, dtype=float)
        etas = np.asarray(etas, dtype=float)
        kills = etas[:, None] * effective[None, :]
        p0 = np.full(etas.shape, self.p0)
        return gompertz_recursion(p0, self.p_inf, self.lam, self.h, kills)[:, -1]


def response_threshold(n0: float) -> float:
    """直徑減半 ⇒ 體積 (細胞數) 除以 8：P' = ln(N_0/8)"""
    return math.log(n0 / 8.0)


def solve_eta_for_delta(effective, perturbations: Sequence[float], target: float, drift: DriftModel) -> float:
    """
    解 mean_k(a − (η + ε_k)·b) = target

    參數:
        effective: 有效濃度 (Trajectory 或長度 S+1 的陣列)
        perturbations: 擾動 ε_k
        target: 目標平均最終對數細胞數 P' + δ
        drift: 漂移參數

    異常:
        CalibrationError: b = 0 (有效濃度全為 0，η 無法識別)
    """
    values = getattr(effective, 'values', effective)
    values = np.asarray(values, dtype=float)
    b = drift.kill_weight(values)
    if not b > 0:
        raise CalibrationError("有效濃度全為 0，殺傷效應無法識別")
    a = drift.drift_final(values.size - 1)
    eps = np.asarray(perturbations, dtype=float)
    mean_eps = float(eps.mean()) if eps.size else 0.0
    return (a - target) / b - mean_eps


@dataclass(frozen=True)
class CalibrationResult:
    drug: str
    eta: float
    delta: float
    prr: float
    target_prr: float
    iterations: int


def _simulated_prr(effective: np.ndarray, eta: float, z: np.ndarray, sigma_frac: float,
                   drift: DriftModel, threshold: float) -> float:
    finals = drift.simulate_finals(effective, eta + sigma_frac * abs(eta) * z)
    return float(np.mean(finals <= threshold))


def calibrate_kill_effect(spec: RegimenSpec, drug: DrugParams, tumor: TumorParams, grid: TimeGrid,
                          trials: int = 1000, sigma_frac: float = 0.10, rng_seed: int = 0) -> CalibrationResult:
    """
    二分 δ 使模擬 PRR 接近試驗 PRR

    每一步 σ = sigma_frac·η_前一步，ε_k = σ·z_k (z_k 為固定的標準常態抽樣)；
    PRR 為 P^(k)_S ≤ P' 的比例。PRR 對 δ 單調遞減。

    參數:
        grid: 涵蓋整個試驗期間的網格 (通常 h = 1 小時)

    返回:
        CalibrationResult
    異常:
        CalibrationError: 目標 PRR 不在可達範圍內
    """
    drug = drug if drug.rho == 0 else _without_resistance(drug)
    effective = regimen_to_effective_concentration(spec, drug, grid).values
    drift = DriftModel.from_tumor(tumor, grid)
    threshold = response_threshold(tumor.total_n0)
    a = drift.drift_final(grid.n_steps)
    z = np.random.default_rng(rng_seed).standard_normal(trials)

    span = a - threshold
    if not span > 0:
        raise CalibrationError(f"{drug.name}: 無藥物時的最終細胞數已低於反應門檻")
    eta_prev = solve_eta_for_delta(effective, [], threshold, drift)

    def evaluate(delta: float, sigma_from: float):
        eps = sigma_frac * abs(sigma_from) * z
        eta = solve_eta_for_delta(effective, eps, threshold + delta, drift)
        finals = drift.simulate_finals(effective, eta + eps)
        return eta, float(np.mean(finals <= threshold))

    lo, hi = -span, span
    _, prr_lo = evaluate(lo, eta_prev)
    _, prr_hi = evaluate(hi, eta_prev)
    if not prr_hi - PRR_TOL <= spec.target_prr <= prr_lo + PRR_TOL:
        raise CalibrationError(f"{drug.name}: 目標 PRR {spec.target_prr:.3f} 不在可達範圍 "
                               f"[{prr_hi:.3f}, {prr_lo:.3f}] 內")

    delta, eta, prr = 0.0, eta_prev, math.nan
    iterations = 0
    while iterations < MAX_BISECTIONS:
        iterations += 1
        delta = 0.5 * (lo + hi)
        eta, prr = evaluate(delta, eta_prev)
        eta_prev = eta
        if abs(prr - spec.target_prr) <= PRR_TOL or hi - lo < DELTA_TOL:
            break
        # PRR 過高表示 η 過大：提高目標平均值
        if prr > spec.target_prr:
            lo = delta
        else:
            hi = delta
    logger.info(f"{drug.name} 校準完成: η = {eta:.4e}，δ = {delta:.4g}，PRR = {prr:.3f} "
                f"(目標 {spec.target_prr:.2f})，{iterations} 次二分")
    return CalibrationResult(drug.name, eta, delta, prr, spec.target_prr, iterations)


def _without_resistance(drug: DrugParams) -> DrugParams:
    return replace(drug, rho=0.0)


def prr_curve(spec: RegimenSpec, drug: DrugParams, tumor: TumorParams, grid: TimeGrid, etas: Sequence[float],
              trials: int = 1000, sigma_frac: float = 0.10, rng_seed: int = 0) -> np.ndarray:
    """固定抽樣下，模擬 PRR 隨 η 的變化 (σ = sigma_frac·η)"""
    effective = regimen_to_effective_concentration(spec, _without_resistance(drug), grid).values
    drift = DriftModel.from_tumor(tumor, grid)
    threshold = response_threshold(tumor.total_n0)
    z = np.random.default_rng(rng_seed).standard_normal(trials)
    return np.array([_simulated_prr(effective, float(eta), z, sigma_frac, drift, threshold) for eta in etas])


def _calibrate_task(task) -> CalibrationResult:
    spec, drug, tumor, grid, trials, sigma_frac, seed = task
    return calibrate_kill_effect(spec, drug, tumor, grid, trials, sigma_frac, seed)


def calibrate_all(bundle: ParamBundle, regimens: Dict[str, RegimenSpec], trials: int = 1000,
                  sigma_frac: float = 0.10, rng_seed: int = 0, step_hours: float = 1.0,
                  mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                  max_workers: Optional[int] = None) -> Dict[str, CalibrationResult]:
    """
    校準參數組中所有有方案的藥物

    各藥物獨立，可用進程池並行；相同種子下結果與工作數無關
    """
    tasks = []
    for drug in bundle.drugs:
        spec = regimens.get(drug.name)
        if spec is None:
            logger.warning(f"{drug.name} 沒有給藥方案，略過校準")
            continue
        tasks.append((spec, drug, bundle.tumor, spec.trial_grid(bundle.grid, step_hours), trials, sigma_frac, rng_seed))
    outcomes = run_indexed(_calibrate_task, tasks, mode=mode, max_workers=max_workers, task_type='cpu', label='校準')
    results = {}
    for task, outcome in zip(tasks, outcomes):
        if not outcome.ok:
            raise CalibrationError(f"{task[1].name} 校準失敗: {outcome.error_info['error_message']}")
        results[task[1].name] = outcome.value
    return results


def apply_calibration(bundle: ParamBundle, results: Dict[str, CalibrationResult],
                      resistant_factor: float = 0.25) -> ParamBundle:
    """以校準的 η_{d,0} 更新參數組；對抗藥類型使用 resistant_factor·η_{d,0}"""
    for name, result in results.items():
        drug = bundle.drug(name)
        etas = tuple(result.eta * (resistant_factor if ct.resistant_to == drug.id else 1.0)
                     for ct in bundle.tumor.cell_types)
        bundle = bundle.with_drug(name, eta_by_celltype=etas)
    return bundle
