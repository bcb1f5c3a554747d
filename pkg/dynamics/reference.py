"""
高精度參考解：細網格 RK4 積分連續 PK/PD 方程，作為 Euler 遞推的驗證基準

脈衝語義與 Euler 遞推一致：第 s 步的給藥 U_s 在 t(s+1) 使濃度跳升 U_s/𝒱，
粗網格取樣為跳升後的右極限值。
"""
from dataclasses import dataclass
import math
from typing import Sequence, Tuple

import numpy as np

from core.domain import DrugParams, TimeGrid, TumorParams
from dynamics.trajectory import Trajectory


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """粗網格取樣與細網格完整軌跡"""
    conc: np.ndarray          # (D, S+1)
    log_pops: np.ndarray      # (Q, S+1)
    fine_times: np.ndarray
    fine_conc: np.ndarray     # (D, n_fine)
    fine_log_pops: np.ndarray  # (Q, n_fine)
    fine_step: float
    breaks: Tuple[int, ...]   # 細網格上脈衝落點索引


def _rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0


def _substeps(grid: TimeGrid, fine_step: float) -> int:
    if not fine_step > 0:
        raise ValueError(f"細網格步長必須大於 0，實際為 {fine_step}")
    if fine_step > grid.h / 16.0 * (1 + 1e-12):
        raise ValueError(f"細網格步長 {fine_step:.3g} 必須不大於 h/16 = {grid.h / 16.0:.3g}")
    return int(math.ceil(grid.h / fine_step - 1e-9))


def rk4_reference_pd(tumor: TumorParams, drugs: Sequence[DrugParams], doses: np.ndarray,
                     grid: TimeGrid, fine_step: float) -> ReferenceSolution:
    """
    聯合積分 dC_d/dt = −ξ_d C_d 與
    dP_q/dt = Λ(P_{q,∞} − P_q) − Σ_d η_{d,q} e^{−ρ_d t} max(0, C_d − β_{d,eff})

    參數:
        doses: (D, S+1) 每步給藥量 (g)
        fine_step: 細網格步長 (day)，不大於 h/16
    """
    n_drugs, n_types = len(drugs), tumor.n_types
    doses = np.asarray(doses, dtype=float).reshape(n_drugs, -1) if n_drugs else np.zeros((0, grid.n_steps + 1))
    if doses.shape[1] != grid.n_steps + 1:
        raise ValueError(f"給藥序列長度 {doses.shape[1]} 與網格 S+1={grid.n_steps + 1} 不符")
    n_sub = _substeps(grid, fine_step)
    dt = grid.h / n_sub

    xi = np.array([d.xi for d in drugs], dtype=float)
    rho = np.array([d.rho for d in drugs], dtype=float)
    beta = np.array([d.beta_eff for d in drugs], dtype=float)
    eta = np.array([d.eta_by_celltype for d in drugs], dtype=float).reshape(n_drugs, n_types)
    p_inf, lam = tumor.p_inf, tumor.lam

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        c, p = y[:n_drugs], y[n_drugs:]
        eff = np.maximum(0.0, c - beta) * np.exp(-rho * t)
        return np.concatenate([-xi * c, lam * (p_inf - p) - eff @ eta])

    n_fine = grid.n_steps * n_sub + 1
    fine = np.empty((n_drugs + n_types, n_fine))
    y = np.concatenate([np.zeros(n_drugs), tumor.p0])
    fine[:, 0] = y
    breaks = []
    idx = 0
    for s in range(grid.n_steps):
        t0 = s * grid.h
        for j in range(n_sub):
            y = _rk4_step(rhs, t0 + j * dt, y, dt)
            idx += 1
            fine[:, idx] = y
        if n_drugs and np.any(doses[:, s] > 0):
            y = y.copy()
            y[:n_drugs] += doses[:, s] / grid.compartment_volume
            fine[:, idx] = y
            breaks.append(idx)

    coarse = fine[:, ::n_sub]
    return ReferenceSolution(
        conc=coarse[:n_drugs], log_pops=coarse[n_drugs:],
        fine_times=np.arange(n_fine) * dt,
        fine_conc=fine[:n_drugs], fine_log_pops=fine[n_drugs:],
        fine_step=dt, breaks=tuple(breaks),
    )


def rk4_reference(drug: DrugParams, doses, grid: TimeGrid, fine_step: float) -> Trajectory:
    """單一藥物濃度的 RK4 參考軌跡，取樣於粗網格"""
    from core.domain import CellType
    # PK 與 PD 解耦，借用一個無殺傷效應的佔位細胞類型
    placeholder = TumorParams(cell_types=(CellType(0, 'placeholder'),), n0_by_type=(1.0,),
                              n_inf_by_type=(2.0,), lam=1.0)
    neutral = DrugParams(id=drug.id, name=drug.name, xi=drug.xi, eta_by_celltype=(0.0,), eta_wbc=0.0,
                         rho=0.0, beta_eff=0.0, beta_conc=drug.beta_conc, beta_rate=drug.beta_rate,
                         beta_cum=drug.beta_cum, route=drug.route, pill_mass=drug.pill_mass)
    solution = rk4_reference_pd(placeholder, [neutral], np.asarray(doses, dtype=float)[None, :], grid, fine_step)
    return Trajectory(grid.times_days(), solution.conc[0], unit='g/m^3', label=f'C_ref[{drug.name}]')
