"""確定性組合化療 MILP：最小化治療結束時各類型對數細胞數之和"""
import time
from typing import Optional

from core.domain import ParamBundle, TimeGrid
from transcription import naming
from transcription.blocks import (add_dosing_block, add_effective_block, add_pd_block, add_pk_block,
                                  add_wbc_block, check_model_stability)
from transcription.model import MilpModel
from transcription.options import BuildOptions
from utils.logging import get_logger

logger = get_logger(__name__)


def add_shared_blocks(model: MilpModel, params: ParamBundle, grid: TimeGrid, options: BuildOptions) -> None:
    """藥物相關區塊與白血球區塊，確定性與機會約束模型共用"""
    for drug in params.drugs:
        add_pk_block(model, drug, grid)
        add_effective_block(model, drug, grid)
        add_dosing_block(model, drug, grid)
    add_wbc_block(model, params.wbc, params.drugs, grid, options)


def describe(params: ParamBundle, grid: TimeGrid, options: BuildOptions, kind: str) -> dict:
    """模型 meta：解讀解時所需的網格與名稱"""
    return {
        'kind': kind,
        'grid': grid,
        'drugs': params.drug_names,
        'oral': tuple(d.is_oral for d in params.drugs),
        'types': tuple(ct.name for ct in params.tumor.cell_types),
        'bilinear': options.bilinear,
        'wbc_sampling': options.wbc_sampling,
        'levels': options.levels,
        'scenarios': 0,
    }


def build_deterministic(params: ParamBundle, grid: Optional[TimeGrid] = None,
                        options: Optional[BuildOptions] = None) -> MilpModel:
    """
    建立確定性 MILP

    參數:
        params: 參數組 (初始狀態取 params.tumor.n0_by_type)
        grid: 覆寫時間網格，預設為 params.grid
        options: 建模選項，預設為 Δ = (n_w0 − β_w)/20 的離散化

    返回:
        MilpModel，目標為 Σ_q P_{q,S}

    異常:
        UnstableStepError: 步長不滿足穩定條件
        ModelBuildError: 離散化設定不一致
    """
    grid = grid or params.grid
    options = options or BuildOptions()
    start_time = time.time()
    if options.check_stability:
        check_model_stability(params.drugs, params.tumor, params.wbc, grid)

    model = MilpModel(name='deterministic')
    add_shared_blocks(model, params, grid, options)
    add_pd_block(model, params.tumor, params.drugs, grid, params.tumor.p0)
    model.set_objective({naming.log_pop(ct.name, grid.n_steps): 1.0 for ct in params.tumor.cell_types})
    model.meta.update(describe(params, grid, options, 'deterministic'))

    stats = model.stats()
    logger.info(f"確定性模型建立完成 (h={grid.step_minutes:g} 分鐘, {options.bilinear.value}): "
                f"{stats.constraints} 約束, {stats.variables} 變數, {stats.integers} 整數, "
                f"{stats.binaries} 二元，耗時 {time.time() - start_time:.2f}秒")
    return model
