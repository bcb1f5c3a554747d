"""臨床試驗給藥方案與其有效濃度軌跡"""
from dataclasses import dataclass
import math
from typing import Dict, Optional, Tuple

import numpy as np

from config.constants import DEFAULT_REGIMENS_PATH
from config.loader import IniReader
from core.domain import DrugParams, TimeGrid
from core.errors import CalibrationError, ParameterFileError
from dynamics.pk import effective_concentration, simulate_pk
from dynamics.trajectory import Trajectory


@dataclass(frozen=True)
class RegimenSpec:
    """
    多週期給藥方案

    參數:
        drug: 藥物名稱
        dose_per_admin: 每次給藥劑量 (g/m²)
        admin_hours: 給藥日內的給藥時間 (hour)
        on_days / rest_days: 每週期的給藥天數與休息天數
        cycles: 週期數
        target_prr: 試驗的部分緩解率
    """
    drug: str
    dose_per_admin: float
    admin_hours: Tuple[float, ...]
    on_days: int
    rest_days: int
    cycles: int
    target_prr: float

    def __post_init__(self):
        object.__setattr__(self, 'admin_hours', tuple(float(h) for h in self.admin_hours))
        if self.dose_per_admin < 0:
            raise CalibrationError(f"{self.drug}: 劑量不可為負")
        if not all(0 <= h < 24 for h in self.admin_hours):
            raise CalibrationError(f"{self.drug}: 給藥時間必須在 [0, 24) 內")
        if self.on_days < 1 or self.rest_days < 0 or self.cycles < 1:
            raise CalibrationError(f"{self.drug}: 週期結構不合法 (on={self.on_days}, rest={self.rest_days}, "
                                   f"cycles={self.cycles})")
        if not 0 < self.target_prr < 1:
            raise CalibrationError(f"{self.drug}: 目標 PRR 必須在 (0, 1) 內，實際為 {self.target_prr}")

    @property
    def cycle_days(self) -> int:
        return self.on_days + self.rest_days

    @property
    def horizon_days(self) -> int:
        """評估反應的時點：最後一個週期結束"""
        return self.cycle_days * self.cycles

    def admin_days(self) -> Tuple[int, ...]:
        return tuple(c * self.cycle_days + d for c in range(self.cycles) for d in range(self.on_days))

    def trial_grid(self, base: TimeGrid, step_hours: float = 1.0) -> TimeGrid:
        return base.with_step(step_hours).with_horizon(self.horizon_days)


def load_regimens(path: Optional[str] = None) -> Dict[str, RegimenSpec]:
    """讀取 [regimen.NAME] 區段，回傳 藥物名稱 → RegimenSpec"""
    reader = IniReader(path or DEFAULT_REGIMENS_PATH)
    regimens = {}
    for section in reader.sections('regimen.'):
        try:
            spec = RegimenSpec(
                drug=reader.get_text(section, 'drug', section.split('.', 1)[1]),
                dose_per_admin=reader.get_float(section, 'dose'),
                admin_hours=reader.get_floats(section, 'admin_hours'),
                on_days=reader.get_int(section, 'on_days'),
                rest_days=reader.get_int(section, 'rest_days'),
                cycles=reader.get_int(section, 'cycles'),
                target_prr=reader.get_float(section, 'target_prr'),
            )
        except CalibrationError as e:
            raise reader.error(section, '', str(e)) from e
        if spec.drug in regimens:
            raise reader.error(section, 'drug', f"藥物 {spec.drug} 的方案重複")
        regimens[spec.drug] = spec
    if not regimens:
        raise ParameterFileError("沒有任何 [regimen.*] 區段", reader.path)
    return regimens


def regimen_doses(spec: RegimenSpec, grid: TimeGrid, body_surface: Optional[float] = None) -> np.ndarray:
    """依方案排出每步給藥量 (g)，長度 S+1"""
    if grid.horizon_days < spec.horizon_days:
        raise CalibrationError(f"{spec.drug}: 網格僅 {grid.horizon_days} 天，方案需要 {spec.horizon_days} 天")
    bsa = grid.body_surface if body_surface is None else body_surface
    doses = np.zeros(grid.n_steps + 1)
    offsets = sorted({int(math.floor(h / grid.step_hours + 1e-9)) for h in spec.admin_hours})
    for day in spec.admin_days():
        for offset in offsets:
            doses[day * grid.steps_per_day + offset] += spec.dose_per_admin * bsa
    return doses


def regimen_to_effective_concentration(spec: RegimenSpec, drug: DrugParams, grid: TimeGrid) -> Trajectory:
    """
    方案給藥經 PK 模擬後的有效濃度

    異常:
        CalibrationError: 網格短於試驗期間
    """
    if spec.drug != drug.name:
        raise CalibrationError(f"方案藥物 {spec.drug} 與參數藥物 {drug.name} 不符")
    conc = simulate_pk(drug, regimen_doses(spec, grid), grid)
    return Trajectory(conc.times, effective_concentration(conc.values, drug.beta_eff),
                      unit='g/m^3', label=f'E[{drug.name}]')
