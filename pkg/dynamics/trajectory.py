from dataclasses import dataclass

import numpy as np
import pandas as pd


@dataclass(frozen=True, eq=False)
class Trajectory:
    """時間網格上的狀態序列 (濃度、對數細胞數或白血球數)"""
    times: np.ndarray   # t(s) (day)
    values: np.ndarray
    unit: str = ''
    label: str = 'value'

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise ValueError(f"時間長度 {times.shape} 與數值長度 {values.shape} 不符")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("時間必須嚴格遞增")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size

    def to_frame(self) -> pd.DataFrame:
        """輸出為 t,value 兩欄，欄名帶單位"""
        value_col = f"{self.label} ({self.unit})" if self.unit else self.label
        return pd.DataFrame({'t (day)': self.times, value_col: self.values})
