"""藥效學：Gompertz 對數細胞數遞推與分數殺傷"""
from typing import List, Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from core.domain import DrugParams, TimeGrid, TumorParams
from dynamics.pk import effective_concentration
from dynamics.trajectory import Trajectory


def kill_rates(drugs: Sequence[DrugParams], effective: np.ndarray, grid: TimeGrid,
               n_types: int, ignore_resistance: bool = False) -> np.ndarray:
    """
    各細胞類型每步的殺傷速率 Σ_d η_{d,q}·exp(−ρ_d t(s))·E_{d,s}

    參數:
        effective: (D, S+1) 有效濃度
        ignore_resistance: 令 ρ = 0 (校準時使用)

    返回:
        (Q, S+1) 陣列
    """
    effective = np.atleast_2d(np.asarray(effective, dtype=float))
    times = grid.times_days()
    rates = np.zeros((n_types, times.size))
    for d, drug in enumerate(drugs):
        decay = np.ones_like(times) if ignore_resistance else np.exp(-drug.rho * times)
        weighted = decay * effective[d]
        for q in range(n_types):
            rates[q] += drug.eta_by_celltype[q] * weighted
    return rates


def gompertz_recursion(p0: np.ndarray, p_inf: np.ndarray, lam: float, h: float,
                       kills: np.ndarray) -> np.ndarray:
    """
    P_{s+1} = P_s + h·(Λ(P_∞ − P_s) − k_s)

    參數:
        p0: 初始對數細胞數，形狀 (...,)
        p_inf: 對數漸近上限，可廣播到 p0
        kills: 殺傷速率，形狀 (..., S+1)；最後一欄不參與遞推

    返回:
        形狀 (..., S+1) 的軌跡
    """
    p0 = np.asarray(p0, dtype=float)
    kills = np.asarray(kills, dtype=float)
    n_steps = kills.shape[-1] - 1
    a = 1.0 - h * lam
    drive = h * lam * np.asarray(p_inf, dtype=float)[..., None] - h * kills[..., :n_steps]
    out = np.empty(kills.shape[:-1] + (n_steps + 1,))
    out[..., 0] = p0
    if n_steps > 0:
        zi = (a * p0)[..., None]
        out[..., 1:], _ = lfilter([1.0], [1.0, -a], drive, axis=-1, zi=zi)
    return out


def simulate_pd_effective(tumor: TumorParams, drugs: Sequence[DrugParams], effective: np.ndarray,
                          grid: TimeGrid, p0: Optional[Sequence[float]] = None) -> np.ndarray:
    """以有效濃度 (D, S+1) 直接遞推，回傳 (Q, S+1) 對數細胞數"""
    start = tumor.p0 if p0 is None else np.asarray(p0, dtype=float)
    kills = kill_rates(drugs, effective, grid, tumor.n_types) if len(drugs) else \
        np.zeros((tumor.n_types, grid.n_steps + 1))
    return gompertz_recursion(start, tumor.p_inf, tumor.lam, grid.h, kills)


def simulate_pd(tumor: TumorParams, drugs: Sequence[DrugParams], concentrations: Sequence[Trajectory],
                grid: TimeGrid, p0: Optional[Sequence[float]] = None) -> List[Trajectory]:
    """
    模擬各細胞類型的對數細胞數

    P_{q,0} = ln N_{q,0}；每步加上 Gompertz 漂移 hΛ(ln N_{q,∞} − P_{q,s})
    並減去 Σ_d h·η_{d,q}·exp(−ρ_d t(s))·E_{d,s}

    參數:
        concentrations: 每種藥物的濃度軌跡，須與網格對齊
        p0: 覆寫初始對數細胞數 (情境模擬)

    返回:
        每種細胞類型一條軌跡
    """
    if len(concentrations) != len(drugs):
        raise ValueError(f"濃度軌跡數 {len(concentrations)} 與藥物數 {len(drugs)} 不符")
    times = grid.times_days()
    effective = np.zeros((len(drugs), times.size))
    for d, (drug, traj) in enumerate(zip(drugs, concentrations)):
        if len(traj) != times.size or not np.allclose(traj.times, times):
            raise ValueError(f"{drug.name} 的濃度軌跡與網格不一致")
        effective[d] = effective_concentration(traj.values, drug.beta_eff)
    log_pops = simulate_pd_effective(tumor, drugs, effective, grid, p0)
    return [Trajectory(times, log_pops[q], unit='ln cells', label=f'P[{ct.name}]')
            for q, ct in enumerate(tumor.cell_types)]
