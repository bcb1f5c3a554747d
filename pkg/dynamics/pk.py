"""藥物動力學：單隔室指數排除加上脈衝給藥的 Euler 遞推"""
from typing import Union

import numpy as np
from scipy.signal import lfilter

from core.domain import DrugParams, TimeGrid
from dynamics.stability import check_stability
from dynamics.trajectory import Trajectory
from utils.logging import get_logger

logger = get_logger(__name__)


def simulate_pk(drug: DrugParams, doses, grid: TimeGrid) -> Trajectory:
    """
    以 Euler 遞推模擬藥物濃度

    C_0 = 0；C_{s+1} = C_s − h·ξ·C_s + U_s/𝒱

    參數:
        drug: 藥物參數
        doses: 每個步長的給藥量 (g)，長度 S+1 (最後一項超出規劃期，不影響濃度)
        grid: 時間網格

    返回:
        濃度軌跡 (g/m³)
    """
    doses = np.asarray(doses, dtype=float)
    n_steps = grid.n_steps
    if doses.shape != (n_steps + 1,):
        raise ValueError(f"{drug.name} 給藥序列長度 {doses.shape} 與網格 S+1={n_steps + 1} 不符")
    if not check_stability(grid.h, drug.xi, 'pk'):
        logger.warning(f"{drug.name}: 步長 h={grid.h:.4g} 天不滿足 h < 2/ξ = {2 / drug.xi:.4g}，Euler 遞推不穩定")

    decay = 1.0 - grid.h * drug.xi
    conc = np.zeros(n_steps + 1)
    if n_steps > 0:
        conc[1:] = lfilter([1.0], [1.0, -decay], doses[:n_steps] / grid.compartment_volume)
    return Trajectory(grid.times_days(), conc, unit='g/m^3', label=f'C[{drug.name}]')


def effective_concentration(c: Union[float, np.ndarray], beta_eff: float) -> Union[float, np.ndarray]:
    """有效濃度 max(0, c − β_eff)"""
    result = np.maximum(0.0, np.asarray(c, dtype=float) - beta_eff)
    return float(result) if result.ndim == 0 else result
