"""Euler 離散化的穩定性條件與全域誤差上界"""
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from core.domain import TimeGrid


class ErrorBound(NamedTuple):
    """濃度 (pk) 與對數細胞數 (pd) 的全域誤差上界"""
    pk: float
    pd: float


def check_stability(h: float, rate: float, kind: str = 'pk') -> bool:
    """
    Euler 遞推的絕對穩定條件 h < 2/rate

    參數:
        h: 步長 (day)
        rate: 藥物為 ξ，腫瘤為 Λ (1/day)
        kind: 'pk' 或 'pd'，僅用於錯誤訊息
    """
    if not rate > 0:
        raise ValueError(f"{kind} 速率必須大於 0，實際為 {rate}")
    return h < 2.0 / rate


def euler_error_bound(grid: TimeGrid, lipschitz_g: float, lipschitz_f: float,
                      alpha_z: float, alpha_y: float) -> ErrorBound:
    """
    全域誤差上界

    pk: (h/2)·(α_z/L_g)·(e^{L_g T} − 1)
    pd: (h/2)·(α_z/L_g·(e^{L_g T} − 1) + α_y/L_f)·(e^{L_f T} − 1)

    參數:
        lipschitz_g: L_g = |ξ|
        lipschitz_f: L_f = max(|η_q|, |Λ|)
        alpha_z, alpha_y: 濃度與對數細胞數二階導數的上界
    """
    if not (lipschitz_g > 0 and lipschitz_f > 0):
        raise ValueError("Lipschitz 常數必須大於 0")
    if alpha_z < 0 or alpha_y < 0:
        raise ValueError("曲率上界不可為負")
    h, horizon = grid.h, float(grid.horizon_days)
    pk_growth = alpha_z / lipschitz_g * math.expm1(lipschitz_g * horizon)
    pk = 0.5 * h * pk_growth
    pd = 0.5 * h * (pk_growth + alpha_y / lipschitz_f) * math.expm1(lipschitz_f * horizon)
    return ErrorBound(pk=pk, pd=pd)


def estimate_curvature(values: np.ndarray, step: float, breaks: Optional[Sequence[int]] = None) -> float:
    """
    以 max |二階差分| / step² 估計二階導數上界

    參數:
        values: 細網格上的參考軌跡
        step: 細網格步長 (day)
        breaks: 脈衝落點的索引；跨越這些點的差分模板不計入
    """
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return 0.0
    second = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2]) / step ** 2
    if breaks:
        # 模板 (i, i+1, i+2) 跨越落點 b 時 (i < b <= i+2) 排除
        mask = np.ones(second.size, dtype=bool)
        for b in breaks:
            lo, hi = max(0, b - 2), min(second.size, b)
            mask[lo:hi] = False
        second = second[mask]
    return float(second.max()) if second.size else 0.0
