"""MILP 變數命名規則，建模與解讀共用"""
from typing import Optional


def dose(drug: str, s: int) -> str:
    return f"U[{drug},{s}]"


def conc(drug: str, s: int) -> str:
    return f"C[{drug},{s}]"


def effective(drug: str, s: int) -> str:
    return f"E[{drug},{s}]"


def effective_on(drug: str, s: int) -> str:
    return f"ZE[{drug},{s}]"


def pills(drug: str, s: int) -> str:
    return f"NP[{drug},{s}]"


def rest(drug: str, day: int) -> str:
    return f"ZR[{drug},{day}]"


def log_pop(cell_type: str, s: int, scenario: Optional[int] = None) -> str:
    if scenario is None:
        return f"P[{cell_type},{s}]"
    return f"P[{scenario},{cell_type},{s}]"


def wbc(day: int) -> str:
    return f"NW[{day}]"


def neutrophils(day: int) -> str:
    return f"NNEU[{day}]"


def lymphocytes(day: int) -> str:
    return f"NLYM[{day}]"


def lagged(drug: str, day: int) -> str:
    return f"L[{drug},{day}]"


def bilinear(drug: str, day: int) -> str:
    return f"B[{drug},{day}]"


def level(day: int, k: int) -> str:
    return f"ZW[{day},{k}]"


def mirror(drug: str, day: int, k: int) -> str:
    return f"V[{drug},{day},{k}]"


def surgical(scenario: int) -> str:
    return f"ZS[{scenario}]"
