"""
MILP 約束區塊：PK、有效濃度、給藥操作、PD、白血球

每個函數把一組變數與約束加入模型；白血球相關數量以 WBC_UNIT (1e12 cells/m³) 為單位。
"""
import math
from typing import Optional, Sequence

import numpy as np

from config.constants import WBC_UNIT
from core.domain import DrugParams, TimeGrid, TumorParams, WbcParams
from core.enums import BilinearMode, Sense, VarKind, WbcSampling
from core.errors import UnstableStepError
from dynamics.stability import check_stability
from transcription import naming
from transcription.model import MilpModel
from transcription.options import BuildOptions


def check_model_stability(drugs: Sequence[DrugParams], tumor: TumorParams, wbc: WbcParams,
                          grid: TimeGrid) -> None:
    """Euler 遞推的絕對穩定條件，不滿足時拒絕建模"""
    for drug in drugs:
        if not check_stability(grid.h, drug.xi, 'pk'):
            raise UnstableStepError(f"{drug.name}: h = {grid.h:.4g} 天不滿足 h < 2/ξ = {2 / drug.xi:.4g}")
    if not check_stability(grid.h, tumor.lam, 'pd'):
        raise UnstableStepError(f"腫瘤: h = {grid.h:.4g} 天不滿足 h < 2/Λ = {2 / tumor.lam:.4g}")
    if not check_stability(1.0, wbc.turnover, 'wbc'):
        raise UnstableStepError(f"白血球: 日步長不滿足 1 < 2/ν = {2 / wbc.turnover:.4g}")


def add_pk_block(model: MilpModel, drug: DrugParams, grid: TimeGrid) -> None:
    """給藥量 U、濃度 C 與濃度上限"""
    name, S = drug.name, grid.n_steps
    cap = drug.conc_cap(grid.compartment_volume)
    for s in range(S):
        model.add_var(naming.dose(name, s))
    for s in range(S + 1):
        model.add_var(naming.conc(name, s))
    model.fix(naming.conc(name, 0), 0.0)

    decay = 1.0 - grid.h * drug.xi
    inv_volume = 1.0 / grid.compartment_volume
    for s in range(S):
        model.add_constraint(f"PK[{name},{s}]",
                             [(naming.conc(name, s + 1), 1.0), (naming.conc(name, s), -decay),
                              (naming.dose(name, s), -inv_volume)], Sense.EQ, 0.0)
    for s in range(1, S + 1):
        model.add_constraint(f"Conc.Max[{name},{s}]", [(naming.conc(name, s), 1.0)], Sense.LE, cap)


def add_effective_block(model: MilpModel, drug: DrugParams, grid: TimeGrid) -> None:
    """
    有效濃度 E = max(0, C − β_eff)

    β_eff = 0 時直接 E = C；否則以二元變數 ZE 與 big-M = β_conc/𝒱 線性化
    """
    name = drug.name
    big_m = drug.conc_cap(grid.compartment_volume)
    beta = drug.beta_eff
    for s in range(grid.n_steps):
        e, c = naming.effective(name, s), naming.conc(name, s)
        model.add_var(e)
        if beta == 0:
            model.add_constraint(f"Eff.Def[{name},{s}]", [(e, 1.0), (c, -1.0)], Sense.EQ, -beta)
            continue
        z = naming.effective_on(name, s)
        model.add_var(z, VarKind.BINARY)
        model.add_constraint(f"Eff.Lo[{name},{s}]", [(e, 1.0), (c, -1.0)], Sense.GE, -beta)
        model.add_constraint(f"Eff.On[{name},{s}]", [(e, 1.0), (z, -big_m)], Sense.LE, 0.0)
        model.add_constraint(f"Eff.Hi[{name},{s}]", [(e, 1.0), (c, -1.0), (z, big_m)], Sense.LE, big_m - beta)
        model.add_constraint(f"Eff.NonNeg[{name},{s}]", [(e, 1.0)], Sense.GE, 0.0)


def add_dosing_block(model: MilpModel, drug: DrugParams, grid: TimeGrid) -> None:
    """口服藥丸整數性與用餐時點、靜脈注射速率、每日上限與休息日"""
    name, bsa = drug.name, grid.body_surface
    if drug.is_oral:
        meal = grid.meal_mask()
        per_admin = drug.rate_cap_grams(bsa, grid.step_hours)
        max_pills = drug.max_pills_per_admin(bsa)
        for s in range(grid.n_steps):
            u = naming.dose(name, s)
            if not meal[s]:
                model.add_constraint(f"Pill.NoMeal[{name},{s}]", [(u, 1.0)], Sense.EQ, 0.0)
                continue
            n = naming.pills(name, s)
            model.add_var(n, VarKind.INTEGER, 0.0, float(max_pills))
            model.add_constraint(f"Pill.Admin[{name},{s}]", [(u, 1.0), (n, -drug.pill_mass)], Sense.EQ, 0.0)
            model.add_constraint(f"Rate.Max[{name},{s}]", [(u, 1.0)], Sense.LE, per_admin)
    else:
        per_step = drug.rate_cap_grams(bsa, grid.step_hours)
        for s in range(grid.n_steps):
            model.add_constraint(f"Rate.Max[{name},{s}]", [(naming.dose(name, s), 1.0)], Sense.LE, per_step)

    daily = drug.daily_cap_grams(bsa)
    has_rest = bool(drug.rest_days)
    days = grid.horizon_days
    for m in range(days):
        terms = [(naming.dose(name, s), 1.0) for s in grid.day_steps(m)]
        if has_rest:
            z = naming.rest(name, m)
            model.add_var(z, VarKind.BINARY)
            terms.append((z, daily))
        model.add_constraint(f"Daily.Max[{name},{m}]", terms, Sense.LE, daily)

    if has_rest:
        # 任何 α+1 天的視窗內至多一個給藥日
        alpha = drug.rest_days
        for m in range(days):
            window = range(m, min(m + alpha, days - 1) + 1)
            if len(window) < 2:
                continue
            model.add_constraint(f"Rest.Window[{name},{m}]", [(naming.rest(name, l), 1.0) for l in window],
                                 Sense.GE, len(window) - 1)


def add_pd_block(model: MilpModel, tumor: TumorParams, drugs: Sequence[DrugParams], grid: TimeGrid,
                 p0: Sequence[float], scenario: Optional[int] = None) -> None:
    """各細胞類型的對數細胞數 Gompertz 遞推，P_0 以上下界固定"""
    S, h = grid.n_steps, grid.h
    times = grid.times_days()
    decay = 1.0 - h * tumor.lam
    p_inf = tumor.p_inf
    tag = '' if scenario is None else f"{scenario},"
    for q, cell in enumerate(tumor.cell_types):
        for s in range(S + 1):
            model.add_var(naming.log_pop(cell.name, s, scenario), lower=-math.inf, upper=math.inf)
        model.fix(naming.log_pop(cell.name, 0, scenario), float(p0[q]))
        for s in range(S):
            terms = [(naming.log_pop(cell.name, s + 1, scenario), 1.0),
                     (naming.log_pop(cell.name, s, scenario), -decay)]
            for drug in drugs:
                coef = h * drug.eta_by_celltype[q] * math.exp(-drug.rho * times[s])
                if coef != 0.0:
                    terms.append((naming.effective(drug.name, s), coef))
            model.add_constraint(f"PD[{tag}{cell.name},{s}]", terms, Sense.EQ, h * tumor.lam * p_inf[q])


def add_wbc_block(model: MilpModel, wbc: WbcParams, drugs: Sequence[DrugParams], grid: TimeGrid,
                  options: BuildOptions) -> None:
    """
    日步長白血球遞推，雙線性項 N_w·C_{s−τ} 以 McCormick 或離散化近似

    L[d,m] 為延遲 τ 天的日濃度 (m < τ 時固定為 0)，B[d,m] 近似 N_w[m]·L[d,m]
    """
    days, spd = grid.horizon_days, grid.steps_per_day
    tau = grid.wbc_lag_days
    n_lo, n_hi = wbc.beta_w / WBC_UNIT, wbc.n_w0 / WBC_UNIT

    for m in range(days + 1):
        model.add_var(naming.wbc(m), lower=n_lo, upper=n_hi)
        model.add_var(naming.neutrophils(m), lower=wbc.beta_neu / WBC_UNIT)
        model.add_var(naming.lymphocytes(m), lower=wbc.beta_lym / WBC_UNIT)
        model.add_constraint(f"Neu.Def[{m}]", [(naming.neutrophils(m), 1.0), (naming.wbc(m), -wbc.theta_neu)],
                             Sense.EQ, 0.0)
        model.add_constraint(f"Lym.Def[{m}]", [(naming.lymphocytes(m), 1.0), (naming.wbc(m), -wbc.theta_lym)],
                             Sense.EQ, 0.0)
    model.fix(naming.wbc(0), n_hi)

    for drug in drugs:
        l_max = drug.conc_cap(grid.compartment_volume)
        for m in range(days):
            lag = naming.lagged(drug.name, m)
            model.add_var(lag, lower=0.0, upper=l_max)
            model.add_var(naming.bilinear(drug.name, m))
            if m < tau:
                model.fix(lag, 0.0)
                continue
            source = m - tau
            if options.wbc_sampling is WbcSampling.DAY_AVERAGE:
                terms = [(naming.conc(drug.name, s), -1.0 / spd) for s in grid.day_steps(source)]
            else:
                terms = [(naming.conc(drug.name, source * spd), -1.0)]
            model.add_constraint(f"Lag[{drug.name},{m}]", [(lag, 1.0)] + terms, Sense.EQ, 0.0)

    for m in range(days):
        terms = [(naming.wbc(m + 1), 1.0), (naming.wbc(m), -(1.0 - wbc.turnover))]
        terms += [(naming.bilinear(d.name, m), d.eta_wbc) for d in drugs]
        model.add_constraint(f"WBC[{m}]", terms, Sense.EQ, wbc.production / WBC_UNIT)

    if options.bilinear is BilinearMode.MCCORMICK:
        _add_mccormick(model, drugs, grid, n_lo, n_hi)
    else:
        _add_discretized(model, wbc, drugs, grid, options)


def _add_mccormick(model: MilpModel, drugs: Sequence[DrugParams], grid: TimeGrid,
                   n_lo: float, n_hi: float) -> None:
    for drug in drugs:
        l_max = drug.conc_cap(grid.compartment_volume)
        for m in range(grid.horizon_days):
            b, lag, n = naming.bilinear(drug.name, m), naming.lagged(drug.name, m), naming.wbc(m)
            model.add_constraint(f"McC.Lo1[{drug.name},{m}]", [(b, 1.0), (lag, -n_lo)], Sense.GE, 0.0)
            model.add_constraint(f"McC.Lo2[{drug.name},{m}]", [(b, 1.0), (lag, -n_hi), (n, -l_max)],
                                 Sense.GE, -n_hi * l_max)
            model.add_constraint(f"McC.Hi1[{drug.name},{m}]", [(b, 1.0), (lag, -n_hi)], Sense.LE, 0.0)
            model.add_constraint(f"McC.Hi2[{drug.name},{m}]", [(b, 1.0), (lag, -n_lo), (n, -l_max)],
                                 Sense.LE, -n_lo * l_max)


def _add_discretized(model: MilpModel, wbc: WbcParams, drugs: Sequence[DrugParams], grid: TimeGrid,
                     options: BuildOptions) -> None:
    """N_w 以 β_w + kΔ (k = 0..K) 近似，誤差不超過 Δ/2"""
    delta = options.resolve_delta(wbc)
    K = options.levels
    base, step = wbc.beta_w / WBC_UNIT, delta / WBC_UNIT
    level_values = base + step * np.arange(K + 1)
    for m in range(grid.horizon_days):
        for k in range(K + 1):
            model.add_var(naming.level(m, k), VarKind.BINARY)
        model.add_constraint(f"Level.One[{m}]", [(naming.level(m, k), 1.0) for k in range(K + 1)], Sense.EQ, 1.0)
        model.add_constraint(f"Level.Pick[{m}]",
                             [(naming.wbc(m), 1.0)] + [(naming.level(m, k), -k * step) for k in range(1, K + 1)],
                             Sense.GE, base - step / 2.0, range=step)
        for drug in drugs:
            l_max = drug.conc_cap(grid.compartment_volume)
            lag = naming.lagged(drug.name, m)
            b = naming.bilinear(drug.name, m)
            for k in range(K + 1):
                model.add_var(naming.mirror(drug.name, m, k))
            model.add_constraint(f"Level.Bilinear[{drug.name},{m}]",
                                 [(b, 1.0)] + [(naming.mirror(drug.name, m, k), -float(level_values[k]))
                                               for k in range(K + 1)], Sense.EQ, 0.0)
            for k in range(K + 1):
                v, z = naming.mirror(drug.name, m, k), naming.level(m, k)
                tag = f"{drug.name},{m},{k}"
                model.add_constraint(f"Mirror.On[{tag}]", [(v, 1.0), (z, -l_max)], Sense.LE, 0.0)
                model.add_constraint(f"Mirror.Hi[{tag}]", [(v, 1.0), (lag, -1.0)], Sense.LE, 0.0)
                model.add_constraint(f"Mirror.Lo[{tag}]", [(v, 1.0), (lag, -1.0), (z, -l_max)], Sense.GE, -l_max)
                model.add_constraint(f"Mirror.NonNeg[{tag}]", [(v, 1.0)], Sense.GE, 0.0)
