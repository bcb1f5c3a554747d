"""與求解後端無關的解可行性檢查"""
from typing import List, Mapping

import numpy as np

from config.constants import FEASIBILITY_TOL, INTEGRALITY_TOL
from transcription.model import MilpModel


def check_feasibility(model: MilpModel, assignment: Mapping[str, float],
                      tol: float = FEASIBILITY_TOL) -> List[str]:
    """
    檢查解是否滿足所有界限、整數性與約束

    參數:
        model: 模型
        assignment: 變數名稱→值
        tol: 絕對容差

    返回:
        違反項目的描述列表，空列表表示可行
    """
    missing = [v.name for v in model.variables if v.name not in assignment]
    if missing:
        return [f"缺少變數 {name}" for name in missing]

    arrays = model.to_arrays()
    x = np.array([float(assignment[v.name]) for v in model.variables])
    violations = []
    for j in np.flatnonzero((x < arrays.lower - tol) | (x > arrays.upper + tol)):
        var = model.variables[j]
        violations.append(f"變數 {var.name} = {x[j]:.9g} 超出界限 [{var.lower:.9g}, {var.upper:.9g}]")
    integral = arrays.integrality.astype(bool)
    for j in np.flatnonzero(integral & (np.abs(x - np.round(x)) > INTEGRALITY_TOL)):
        violations.append(f"整數變數 {model.variables[j].name} = {x[j]:.9g} 不是整數")

    activity = arrays.A @ x if model.n_constraints else np.zeros(0)
    bad = (activity < arrays.row_lower - tol) | (activity > arrays.row_upper + tol)
    for i in np.flatnonzero(bad):
        row = model.constraints[i]
        violations.append(f"約束 {row.name}: 活動值 {activity[i]:.9g} 不在 "
                          f"[{arrays.row_lower[i]:.9g}, {arrays.row_upper[i]:.9g}] 內")
    return violations
