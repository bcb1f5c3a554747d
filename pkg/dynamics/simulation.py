"""完整治療計畫的前向模擬：濃度、有效濃度、對數細胞數與白血球"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from core.domain import ParamBundle
from core.enums import WbcSampling
from dynamics.pd import simulate_pd_effective
from dynamics.pk import effective_concentration, simulate_pk
from dynamics.wbc import day_concentrations, simulate_wbc
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    times: np.ndarray        # (S+1,) day
    conc: np.ndarray         # (D, S+1)
    effective: np.ndarray    # (D, S+1)
    log_pops: np.ndarray     # (Q, S+1)
    wbc: np.ndarray          # (M+1,)
    neutrophils: np.ndarray  # (M+1,)
    lymphocytes: np.ndarray  # (M+1,)
    drug_names: Sequence[str] = ()
    type_names: Sequence[str] = ()

    @property
    def final_total_cells(self) -> float:
        return float(np.exp(self.log_pops[:, -1]).sum())

    @property
    def objective(self) -> float:
        """Σ_q P_{q,S}"""
        return float(self.log_pops[:, -1].sum())

    def to_frame(self) -> pd.DataFrame:
        """步長層級的寬表，白血球欄位以當天數值前向填入"""
        frame = pd.DataFrame({'t (day)': self.times})
        for d, name in enumerate(self.drug_names):
            frame[f'C[{name}] (g/m^3)'] = self.conc[d]
        for q, name in enumerate(self.type_names):
            frame[f'P[{name}] (ln cells)'] = self.log_pops[q]
        day_index = np.minimum(np.floor(self.times + 1e-9).astype(int), self.wbc.size - 1)
        frame['N_w (cells/m^3)'] = self.wbc[day_index]
        frame['N_neu (cells/m^3)'] = self.neutrophils[day_index]
        frame['N_lym (cells/m^3)'] = self.lymphocytes[day_index]
        return frame


def simulate_all(bundle: ParamBundle, doses: np.ndarray,
                 sampling: WbcSampling = WbcSampling.DAY_START,
                 p0: Optional[Sequence[float]] = None) -> SimulationResult:
    """
    依給藥矩陣模擬所有動態

    參數:
        bundle: 參數組
        doses: (D, S+1) 每步給藥量 (g)
        sampling: 白血球遞推的日濃度取樣方式
        p0: 覆寫初始對數細胞數

    返回:
        SimulationResult
    """
    grid = bundle.grid
    n_drugs = len(bundle.drugs)
    doses = np.asarray(doses, dtype=float)
    if doses.shape != (n_drugs, grid.n_steps + 1):
        raise ValueError(f"給藥矩陣形狀 {doses.shape} 應為 {(n_drugs, grid.n_steps + 1)}")

    conc = np.zeros((n_drugs, grid.n_steps + 1))
    effective = np.zeros_like(conc)
    for d, drug in enumerate(bundle.drugs):
        conc[d] = simulate_pk(drug, doses[d], grid).values
        effective[d] = effective_concentration(conc[d], drug.beta_eff)

    log_pops = simulate_pd_effective(bundle.tumor, bundle.drugs, effective, grid, p0)
    daily = day_concentrations(conc, grid, sampling)
    wbc = simulate_wbc(bundle.wbc, bundle.drugs, daily, grid.horizon_days, grid.wbc_lag_days).values
    logger.debug(f"模擬完成: S={grid.n_steps}，Σ P_S = {log_pops[:, -1].sum():.4f}")
    return SimulationResult(
        times=grid.times_days(), conc=conc, effective=effective, log_pops=log_pops, wbc=wbc,
        neutrophils=bundle.wbc.theta_neu * wbc, lymphocytes=bundle.wbc.theta_lym * wbc,
        drug_names=bundle.drug_names, type_names=tuple(ct.name for ct in bundle.tumor.cell_types),
    )
