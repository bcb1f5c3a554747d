"""
術前機會約束 MILP

各情境共用給藥、濃度與白血球變數，對數細胞數 P^(k) 依情境分開遞推；
ZS[k] = 1 表示情境 k 在治療結束時達到可手術大小。
"""
import math
import time
from typing import Optional

import numpy as np

from core.domain import ParamBundle, TimeGrid
from core.enums import ObjectiveMode, Sense, VarKind
from core.errors import ModelBuildError
from transcription import naming
from transcription.blocks import add_pd_block, check_model_stability
from transcription.deterministic import add_shared_blocks, build_deterministic, describe
from transcription.model import MilpModel
from transcription.options import BuildOptions
from utils.logging import get_logger

logger = get_logger(__name__)


def surgical_big_m(p_inf: float, p_surg: float, log_fraction: float) -> float:
    """M_{k,q} = P_{q,∞} − P_surg − ln(fraction)，使 ZS = 0 時約束退化為 P ≤ P_{q,∞}"""
    return max(0.0, p_inf - p_surg - log_fraction)


def build_chance_constrained(params: ParamBundle, grid: Optional[TimeGrid] = None,
                             options: Optional[BuildOptions] = None) -> MilpModel:
    """
    建立機會約束 MILP

    參數:
        params: 參數組
        grid: 覆寫時間網格
        options: 必須帶有 scenario_set；epsilon ∈ [0, 1)；objective 選擇縮小或機率目標

    返回:
        MilpModel。縮小目標為最可能情境 (索引 0，同機率取最小索引) 的 Σ_q P^(0)_{q,S}；
        機率目標為最小化 −Σ_k μ^(k)·ZS[k]

    異常:
        ModelBuildError: 缺少情境、ε 超出範圍、n_surg 不小於某情境的初始總細胞數
    """
    options = options or BuildOptions()
    scenarios = options.validate_chance()
    grid = grid or params.grid
    tumor = params.tumor
    start_time = time.time()
    if scenarios.n_types != tumor.n_types:
        raise ModelBuildError(f"情境的細胞類型數 {scenarios.n_types} 與腫瘤參數 {tumor.n_types} 不符")
    if options.check_stability:
        check_model_stability(params.drugs, tumor, params.wbc, grid)

    log_pops = scenarios.log_pops
    totals = np.exp(log_pops).sum(axis=1)
    for k, total in enumerate(totals):
        if options.n_surg >= total:
            raise ModelBuildError(f"情境 {k}: 可手術細胞數 {options.n_surg:.4g} 不小於初始總細胞數 {total:.4g}")
    if np.any(log_pops >= tumor.p_inf[None, :]):
        raise ModelBuildError("情境的初始對數細胞數必須小於對應的 P_∞")

    model = MilpModel(name='chance')
    add_shared_blocks(model, params, grid, options)

    p_surg = math.log(options.n_surg)
    S = grid.n_steps
    for k in range(len(scenarios)):
        add_pd_block(model, tumor, params.drugs, grid, log_pops[k], scenario=k)
        z = naming.surgical(k)
        model.add_var(z, VarKind.BINARY)
        for q, cell in enumerate(tumor.cell_types):
            # ln(N_q0 / Σ N_0)：每型按初始比例分配可手術細胞數
            log_fraction = float(log_pops[k, q] - math.log(totals[k]))
            big_m = surgical_big_m(float(tumor.p_inf[q]), p_surg, log_fraction)
            model.add_constraint(f"Surg[{k},{cell.name}]",
                                 [(naming.log_pop(cell.name, S, k), 1.0), (z, big_m)],
                                 Sense.LE, p_surg + log_fraction + big_m)

    probs = scenarios.probs
    if options.objective is ObjectiveMode.SHRINKAGE:
        model.add_constraint("Surg.Knapsack", [(naming.surgical(k), float(probs[k])) for k in range(len(scenarios))],
                             Sense.GE, 1.0 - options.epsilon)
        model.set_objective({naming.log_pop(ct.name, S, 0): 1.0 for ct in tumor.cell_types})
    else:
        model.set_objective({naming.surgical(k): -float(probs[k]) for k in range(len(scenarios))})

    meta = describe(params, grid, options, 'chance')
    meta.update({'scenarios': len(scenarios), 'probs': tuple(float(p) for p in probs),
                 'n_surg': options.n_surg, 'epsilon': options.epsilon, 'objective': options.objective})
    model.meta.update(meta)

    stats = model.stats()
    logger.info(f"機會約束模型建立完成 ({len(scenarios)} 個情境, ε={options.epsilon:g}, "
                f"{options.objective.value}): {stats.constraints} 約束, {stats.variables} 變數, "
                f"{stats.integers} 整數, {stats.binaries} 二元，耗時 {time.time() - start_time:.2f}秒")
    return model


def build_model(params: ParamBundle, grid: Optional[TimeGrid] = None,
                options: Optional[BuildOptions] = None) -> MilpModel:
    """options 帶有情境集合時建立機會約束模型，否則建立確定性模型"""
    options = options or BuildOptions()
    if options.scenario_set is None:
        return build_deterministic(params, grid, options)
    return build_chance_constrained(params, grid, options)
