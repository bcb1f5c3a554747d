"""Gompertz 形狀參數"""
import math

from core.errors import CalibrationError


def gompertz_shape(n0: float, n_inf: float, doubling_time_days: float) -> float:
    """
    由倍增時間估計 Λ

    Λ = (1/τ)·ln( ln(N_∞/N_0) / ln(N_∞/(2N_0)) )

    參數:
        n0: 初始細胞數
        n_inf: 漸近上限
        doubling_time_days: 由 n0 倍增所需天數 τ

    異常:
        CalibrationError: n0 ≤ 0、n_inf ≤ 2·n0 或 τ ≤ 0
    """
    if not n0 > 0:
        raise CalibrationError(f"初始細胞數必須大於 0，實際為 {n0}")
    if not n_inf > 2.0 * n0:
        raise CalibrationError(f"漸近上限 {n_inf:.4g} 必須大於 2·n0 = {2.0 * n0:.4g}")
    if not doubling_time_days > 0:
        raise CalibrationError(f"倍增時間必須大於 0，實際為 {doubling_time_days}")
    return math.log(math.log(n_inf / n0) / math.log(n_inf / (2.0 * n0))) / doubling_time_days
