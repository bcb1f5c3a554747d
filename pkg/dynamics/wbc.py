"""白血球動態：日步長、帶延遲的藥物抑制"""
from typing import Sequence

import numpy as np

from core.domain import DrugParams, TimeGrid, WbcParams
from core.enums import WbcSampling
from dynamics.trajectory import Trajectory


def day_concentrations(conc: np.ndarray, grid: TimeGrid,
                       sampling: WbcSampling = WbcSampling.DAY_START) -> np.ndarray:
    """
    將步長濃度 (..., S+1) 轉為日濃度 (..., M+1)

    DAY_START 取第 m 天起點 s = m·spd 的濃度；DAY_AVERAGE 取第 m 天各步長的平均，
    第 M 天 (規劃期終點) 只有一個取樣點
    """
    conc = np.asarray(conc, dtype=float)
    spd, days = grid.steps_per_day, grid.horizon_days
    if conc.shape[-1] != grid.n_steps + 1:
        raise ValueError(f"濃度長度 {conc.shape[-1]} 與網格 S+1={grid.n_steps + 1} 不符")
    if sampling is WbcSampling.DAY_START:
        return conc[..., ::spd].copy()
    body = conc[..., :grid.n_steps].reshape(conc.shape[:-1] + (days, spd)).mean(axis=-1)
    return np.concatenate([body, conc[..., -1:]], axis=-1)


def simulate_wbc(wbc: WbcParams, drugs: Sequence[DrugParams], day_conc: np.ndarray, days: int,
                 lag_days: int = None) -> Trajectory:
    """
    日步長白血球遞推

    s < τ: N_{s+1} = N_s + (υ − ν·N_s)
    s ≥ τ: 再減去 Σ_d η_{d,w}·N_s·C_{d,s−τ}

    參數:
        day_conc: (D, M+1) 日濃度 (g/m³)
        days: 天數 M
        lag_days: 延遲 τ，預設為 wbc.delay_days

    返回:
        白血球軌跡 (cells/m³)，長度 M+1
    """
    tau = wbc.delay_days if lag_days is None else lag_days
    day_conc = np.asarray(day_conc, dtype=float).reshape(len(drugs), -1) if len(drugs) else \
        np.zeros((0, days + 1))
    if day_conc.shape[1] != days + 1:
        raise ValueError(f"日濃度長度 {day_conc.shape[1]} 與 M+1={days + 1} 不符")
    eta_w = np.array([d.eta_wbc for d in drugs], dtype=float)

    counts = np.empty(days + 1)
    counts[0] = wbc.n_w0
    for s in range(days):
        n = counts[s]
        nxt = n + (wbc.production - wbc.turnover * n)
        if s >= tau and len(drugs):
            nxt -= float(eta_w @ day_conc[:, s - tau]) * n
        counts[s + 1] = nxt
    return Trajectory(np.arange(days + 1, dtype=float), counts, unit='cells/m^3', label='N_w')
