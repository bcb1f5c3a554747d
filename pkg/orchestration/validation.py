"""
性質驗證套件：穩定條件、Euler 誤差上界、單調支配、求解器與窮舉一致性、分支過程期望值

每個套件回傳 SuiteResult，套件內的例外記為失敗而不中斷其他套件
"""
from dataclasses import dataclass
import math
import time
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.domain import ParamBundle
from core.enums import ProcessingMode, Sense, VarKind
from core.errors import UnstableStepError
from dynamics.pd import gompertz_recursion
from dynamics.reference import rk4_reference_pd
from dynamics.simulation import simulate_all
from dynamics.stability import estimate_curvature, euler_error_bound
from scenarios.branching import BranchingConfig, expected_populations, simulate_branching, standard_errors
from solver.builtin import solve_builtin, solve_enumeration
from transcription.blocks import check_model_stability
from transcription.deterministic import build_deterministic
from transcription.model import MilpModel
from transcription.options import BuildOptions
from utils.logging import get_logger

logger = get_logger(__name__)

ORACLE_TOL = 1e-7


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    runtime: float = 0.0


def micro_bundle(params: ParamBundle, drug: str = 'docetaxel', days: int = 2, step_hours: float = 6.0) -> ParamBundle:
    """單一藥物、短期間、粗步長的小實例，內建求解器與窮舉都可在數秒內求解"""
    return params.with_drugs([drug]).with_grid(params.grid.with_step(step_hours).with_horizon(days))


def random_micro_model(rng: np.random.Generator, name: str = 'micro') -> MilpModel:
    """
    隨機小型 MILP：2-4 個有界整數變數、1-3 個連續變數、係數非負的 ≤ 約束，x = 0 恆可行
    """
    model = MilpModel(name=name)
    n_int = int(rng.integers(2, 5))
    n_cont = int(rng.integers(1, 4))
    names = []
    for j in range(n_int):
        model.add_var(f"y{j}", VarKind.INTEGER, 0.0, float(rng.integers(1, 4)))
        names.append(f"y{j}")
    for j in range(n_cont):
        model.add_var(f"x{j}", VarKind.CONTINUOUS, 0.0, float(rng.uniform(1.0, 10.0)))
        names.append(f"x{j}")
    for i in range(int(rng.integers(1, 4))):
        coefs = rng.uniform(0.0, 5.0, size=len(names))
        model.add_constraint(f"R{i}", [(n, float(round(c, 3))) for n, c in zip(names, coefs)],
                             Sense.LE, float(round(rng.uniform(2.0, 12.0), 3)))
    model.set_objective({n: float(round(-rng.uniform(0.1, 3.0), 3)) for n in names})
    return model


def _error_bound_suite(params: ParamBundle, drug: str = 'docetaxel') -> Tuple[bool, str]:
    """5 天單一藥物實例，h = 1 小時與 30 分鐘的 Euler 誤差都不超過上界，且誤差比約為 1/2"""
    errors = []
    details = []
    for step_hours in (1.0, 0.5):
        bundle = params.with_drugs([drug]).with_grid(params.grid.with_step(step_hours).with_horizon(5))
        grid = bundle.grid
        doses = np.zeros((1, grid.n_steps + 1))
        doses[0, int(round(8.0 / step_hours))] = bundle.drugs[0].rate_cap_grams(grid.body_surface, 1.0)
        euler = simulate_all(bundle, doses)
        reference = rk4_reference_pd(bundle.tumor, bundle.drugs, doses, grid, grid.h / 64.0)
        pk_error = float(np.max(np.abs(euler.conc - reference.conc)))
        pd_error = float(np.max(np.abs(euler.log_pops - reference.log_pops)))
        d = bundle.drugs[0]
        bound = euler_error_bound(
            grid, lipschitz_g=d.xi, lipschitz_f=max(max(d.eta_by_celltype), bundle.tumor.lam),
            alpha_z=estimate_curvature(reference.fine_conc[0], reference.fine_step, reference.breaks),
            alpha_y=max(estimate_curvature(row, reference.fine_step, reference.breaks)
                        for row in reference.fine_log_pops))
        if pk_error > bound.pk or pd_error > bound.pd:
            return False, (f"h={step_hours:g}hr 誤差 (pk {pk_error:.3e}, pd {pd_error:.3e}) "
                           f"超過上界 (pk {bound.pk:.3e}, pd {bound.pd:.3e})")
        errors.append(pd_error)
        details.append(f"h={step_hours:g}hr pd 誤差 {pd_error:.3e} ≤ {bound.pd:.3e}")
    ratio = errors[1] / errors[0] if errors[0] > 0 else 0.0
    details.append(f"誤差比 {ratio:.3f}")
    return 0.3 <= ratio <= 0.7, '; '.join(details)


def _dominance_suite(seed: int, pairs: int = 200) -> Tuple[bool, str]:
    """E¹ ≥ E² 且 Λh ≤ 1 時 P¹_S ≤ P²_S"""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(pairs):
        n_steps = int(rng.integers(5, 60))
        h = float(rng.uniform(0.01, 1.0))
        lam = float(rng.uniform(0.0, 1.0 / h))
        e2 = rng.uniform(0.0, 5.0, size=n_steps + 1)
        e1 = e2 + rng.uniform(0.0, 2.0, size=n_steps + 1)
        eta = float(rng.uniform(0.0, 0.05))
        p0, p_inf = float(rng.uniform(15.0, 25.0)), 27.6
        p1 = gompertz_recursion(np.array(p0), p_inf, lam, h, eta * e1)[-1]
        p2 = gompertz_recursion(np.array(p0), p_inf, lam, h, eta * e2)[-1]
        if p1 > p2 + 1e-12:
            violations += 1
    return violations == 0, f"{pairs} 組中 {violations} 組違反"


def _oracle_suite(params: ParamBundle, seed: int, instances: int = 50) -> Tuple[bool, str]:
    """內建分支定界與窮舉在隨機小型 MILP 與小型化療模型上目標一致"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        model = random_micro_model(rng, f"micro{i}")
        bnb, oracle = solve_builtin(model), solve_enumeration(model)
        if bnb.status is not oracle.status:
            return False, f"實例 {i}: 狀態不一致 {bnb.status.value} vs {oracle.status.value}"
        if bnb.is_optimal:
            worst = max(worst, abs(bnb.objective - oracle.objective))
    chemo = build_deterministic(micro_bundle(params), options=BuildOptions(levels=2))
    bnb, oracle = solve_builtin(chemo), solve_enumeration(chemo)
    if not (bnb.is_optimal and oracle.is_optimal):
        return False, f"化療小模型狀態 {bnb.status.value} / {oracle.status.value}"
    chemo_gap = abs(bnb.objective - oracle.objective)
    worst = max(worst, chemo_gap)
    return worst <= ORACLE_TOL, f"最大目標差 {worst:.3e} (化療小模型 {chemo_gap:.3e})"


def _relaxation_suite(params: ParamBundle) -> Tuple[bool, str]:
    """同一小實例上 McCormick 目標不大於離散化目標"""
    bundle = micro_bundle(params)
    mcc = solve_builtin(build_deterministic(bundle, options=BuildOptions.mccormick()))
    disc = solve_builtin(build_deterministic(bundle, options=BuildOptions(levels=2)))
    if not (mcc.is_optimal and disc.is_optimal):
        return False, f"狀態 {mcc.status.value} / {disc.status.value}"
    return mcc.objective <= disc.objective + 1e-9, f"McCormick {mcc.objective:.6f} ≤ 離散化 {disc.objective:.6f}"


def _stability_suite(params: ParamBundle) -> Tuple[bool, str]:
    """預設參數在 h ≤ 4 小時穩定；ξ 使 h ≥ 2/ξ 時拒絕建模"""
    for step_hours in (0.25, 1.0, 4.0):
        grid = params.grid.with_step(step_hours)
        check_model_stability(params.drugs, params.tumor, params.wbc, grid)
    fast = params.with_drug(params.drugs[0].name, xi=10.0)
    grid = fast.grid.with_step(6.0)
    try:
        check_model_stability(fast.drugs, fast.tumor, fast.wbc, grid)
    except UnstableStepError:
        return True, "h ∈ {15, 60, 240} 分鐘穩定；h = 6 小時、ξ = 10 時拒絕"
    return False, "不穩定步長未被拒絕"


def _branching_suite(seed: int, mode: ProcessingMode, max_workers: Optional[int]) -> Tuple[bool, str]:
    """非抗藥細胞的蒙地卡羅平均與 (α_00 + 1)^t 相差不超過 3 個標準誤"""
    config = BranchingConfig(generations=30, replications=10_000, rng_seed=seed)
    pops = simulate_branching(config, mode, max_workers)
    expected = expected_populations(config, config.generations)[0]
    mean = float(pops[:, 0].mean())
    se = float(standard_errors(pops)[0])
    z = abs(mean - expected) / se if se > 0 else math.inf
    return z <= 3.0, f"平均 {mean:.6g}，期望 {expected:.6g}，{z:.2f} 個標準誤"


def run_validation(params: ParamBundle, seed: int = 0, mode: ProcessingMode = ProcessingMode.SEQUENTIAL,
                   max_workers: Optional[int] = None) -> List[SuiteResult]:
    """
    執行所有性質驗證套件

    參數:
        params: 參數組
        seed: 隨機套件的種子
        mode / max_workers: 分支過程模擬的並行設定

    返回:
        SuiteResult 列表，順序固定
    """
    suites: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ('stability', lambda: _stability_suite(params)),
        ('error_bound', lambda: _error_bound_suite(params)),
        ('dominance', lambda: _dominance_suite(seed)),
        ('oracle', lambda: _oracle_suite(params, seed)),
        ('relaxation', lambda: _relaxation_suite(params)),
        ('branching', lambda: _branching_suite(seed, mode, max_workers)),
    ]
    results = []
    for name, suite in suites:
        start_time = time.time()
        try:
            passed, detail = suite()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
            logger.error(f"驗證套件 {name} 執行失敗: {e}")
        result = SuiteResult(name, bool(passed), detail, time.time() - start_time)
        (logger.info if result.passed else logger.warning)(
            f"[{'通過' if result.passed else '失敗'}] {name}: {detail} ({result.runtime:.2f}秒)")
        results.append(result)
    return results


def results_frame(results: List[SuiteResult]) -> pd.DataFrame:
    return pd.DataFrame([{'suite': r.name, 'passed': r.passed, 'detail': r.detail, 'runtime (s)': r.runtime}
                         for r in results])
