import math

import numpy as np
import pytest

from core.domain import CellType, DrugParams, TimeGrid, TumorParams
from core.enums import Route, WbcSampling
from dynamics.pd import gompertz_recursion, simulate_pd, simulate_pd_effective
from dynamics.pk import effective_concentration, simulate_pk
from dynamics.reference import rk4_reference, rk4_reference_pd
from dynamics.simulation import simulate_all
from dynamics.stability import check_stability, estimate_curvature, euler_error_bound
from dynamics.wbc import day_concentrations, simulate_wbc


def iv_drug(xi=0.2, eta=(8e-3,), beta_eff=0.0):
    return DrugParams(id=0, name='iv', xi=xi, eta_by_celltype=eta, eta_wbc=8e-3, rho=0.0, beta_eff=beta_eff,
                      beta_conc=0.17, beta_rate=0.1, beta_cum=0.1, route=Route.INTRAVENOUS)


def single_tumor(lam=7e-4):
    return TumorParams(cell_types=(CellType(0, 'sensitive'),), n0_by_type=(1e9,), n_inf_by_type=(1e12,), lam=lam)


def test_pk_zero_doses():
    grid = TimeGrid(horizon_days=3, step_hours=6.0)
    conc = simulate_pk(iv_drug(), np.zeros(grid.n_steps + 1), grid).values
    assert not conc.any()


def test_pk_one_step_decay(day_grid):
    doses = np.zeros(day_grid.n_steps + 1)
    doses[0] = 10.0 * day_grid.compartment_volume
    conc = simulate_pk(iv_drug(xi=0.2), doses, day_grid).values
    assert conc[1] == pytest.approx(10.0)
    assert conc[2] == pytest.approx(8.0)


def test_pk_impulse_geometric_decay():
    grid = TimeGrid(horizon_days=2, step_hours=1.0)
    doses = np.zeros(grid.n_steps + 1)
    doses[0] = 0.17
    conc = simulate_pk(iv_drug(), doses, grid).values
    assert conc[1] == pytest.approx(11.3333, abs=1e-4)
    ratios = conc[2:] / conc[1:-1]
    assert ratios == pytest.approx(np.full(ratios.size, 1 - grid.h * 0.2))


def test_pk_rejects_wrong_length(day_grid):
    with pytest.raises(ValueError):
        simulate_pk(iv_drug(), np.zeros(day_grid.n_steps), day_grid)


@pytest.mark.parametrize("c, beta, expected", [(0.5, 0.5, 0.0), (8.0, 0.5, 7.5), (0.2, 0.5, 0.0)])
def test_effective_concentration(c, beta, expected):
    assert effective_concentration(c, beta) == pytest.approx(expected)


def test_gompertz_one_step():
    p0 = math.log(1e9)
    out = gompertz_recursion(np.array([p0]), np.array([math.log(1e12)]), 7e-4, 1.0, np.zeros((1, 2)))
    assert out[0, 1] == pytest.approx(20.7281, abs=1e-4)


def test_zero_kill_matches_drug_free():
    grid = TimeGrid(horizon_days=5, step_hours=4.0)
    tumor = single_tumor()
    drug = iv_drug(eta=(0.0,))
    doses = np.zeros(grid.n_steps + 1)
    doses[3] = 0.5
    conc = simulate_pk(drug, doses, grid)
    with_drug = simulate_pd(tumor, [drug], [conc], grid)[0].values
    free = simulate_pd_effective(tumor, [], np.zeros((0, grid.n_steps + 1)), grid)[0]
    assert with_drug == pytest.approx(free)


def test_drug_free_growth_monotone_and_bounded(shipped, zero_doses):
    bundle = shipped.with_drugs([])
    result = simulate_all(bundle, zero_doses(bundle))
    assert np.all(np.diff(result.log_pops, axis=1) > 0)
    assert np.all(result.log_pops < shipped.tumor.p_inf[:, None])
    assert np.all(np.diff(result.log_pops.sum(axis=0)) > 0)


def test_wbc_constant_without_drugs(shipped):
    days = 21
    counts = simulate_wbc(shipped.wbc, shipped.drugs, np.zeros((3, days + 1)), days).values
    assert counts == pytest.approx(np.full(days + 1, 8e12))


def test_wbc_delay_and_decline(shipped):
    days = 21
    capecitabine = shipped.with_drugs(['capecitabine'])
    conc = np.full((1, days + 1), 473.0)
    counts = simulate_wbc(capecitabine.wbc, capecitabine.drugs, conc, days).values
    assert counts[:6] == pytest.approx(np.full(6, 8e12))
    assert np.all(np.diff(counts[5:]) < 0)


def test_day_concentrations_sampling():
    grid = TimeGrid(horizon_days=2, step_hours=12.0)
    conc = np.array([0.0, 2.0, 4.0, 6.0, 8.0])
    assert day_concentrations(conc, grid, WbcSampling.DAY_START) == pytest.approx([0.0, 4.0, 8.0])
    assert day_concentrations(conc, grid, WbcSampling.DAY_AVERAGE) == pytest.approx([1.0, 5.0, 8.0])


@pytest.mark.parametrize("h, rate, stable", [(1 / 24, 0.8, True), (3.0, 0.8, False), (4.0, 7e-4, True)])
def test_check_stability(h, rate, stable):
    assert check_stability(h, rate) is stable


def test_reference_matches_gompertz_closed_form():
    grid = TimeGrid(horizon_days=10, step_hours=24.0)
    tumor = single_tumor(lam=0.05)
    ref = rk4_reference_pd(tumor, [], np.zeros((0, grid.n_steps + 1)), grid, grid.h / 16)
    t = grid.times_days()
    exact = tumor.p_inf[0] + (tumor.p0[0] - tumor.p_inf[0]) * np.exp(-tumor.lam * t)
    assert ref.log_pops[0] == pytest.approx(exact, rel=1e-8)


def test_reference_matches_pk_closed_form():
    grid = TimeGrid(horizon_days=4, step_hours=6.0)
    drug = iv_drug()
    doses = np.zeros(grid.n_steps + 1)
    doses[0] = 0.17
    ref = rk4_reference(drug, doses, grid, grid.h / 32).values
    t = grid.times_days()
    exact = np.where(t >= grid.h - 1e-12, 0.17 / grid.compartment_volume * np.exp(-drug.xi * (t - grid.h)), 0.0)
    assert ref == pytest.approx(exact, rel=1e-8, abs=1e-12)


def test_reference_converged():
    grid = TimeGrid(horizon_days=3, step_hours=6.0)
    drug = iv_drug()
    doses = np.zeros(grid.n_steps + 1)
    doses[2] = 0.1
    coarse = rk4_reference(drug, doses, grid, grid.h / 16).values
    fine = rk4_reference(drug, doses, grid, grid.h / 32).values
    assert np.max(np.abs(coarse - fine)) < 1e-10


def test_error_bound_limits():
    grid = TimeGrid(horizon_days=21, step_hours=1.0)
    assert euler_error_bound(grid, 0.2, 0.01, 0.0, 0.0) == (0.0, 0.0)
    coarse = euler_error_bound(grid, 0.2, 0.01, 1.0, 1.0)
    fine = euler_error_bound(grid.with_step(0.25), 0.2, 0.01, 1.0, 1.0)
    assert fine.pk == pytest.approx(coarse.pk / 4)
    assert fine.pd == pytest.approx(coarse.pd / 4)


def test_observed_error_within_bound():
    grid = TimeGrid(horizon_days=21, step_hours=1.0)
    tumor = single_tumor()
    drug = iv_drug()
    doses = np.zeros((1, grid.n_steps + 1))
    doses[0, 8] = 0.17
    doses[0, 8 + 21 * 24 // 3] = 0.17
    conc = simulate_pk(drug, doses[0], grid).values
    euler = simulate_pd_effective(tumor, [drug], conc[None, :], grid)
    ref = rk4_reference_pd(tumor, [drug], doses, grid, grid.h / 64)
    bound = euler_error_bound(grid, drug.xi, max(drug.eta_by_celltype[0], tumor.lam),
                              estimate_curvature(ref.fine_conc[0], ref.fine_step, ref.breaks),
                              estimate_curvature(ref.fine_log_pops[0], ref.fine_step, ref.breaks))
    assert np.max(np.abs(conc - ref.conc[0])) <= bound.pk
    assert np.max(np.abs(euler - ref.log_pops)) <= bound.pd


def test_dominance_random_schedules():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(5, 40))
        h = float(rng.uniform(0.01, 1.0))
        lam = float(rng.uniform(0.0, 1.0 / h))
        low = rng.uniform(0.0, 3.0, size=(2, n + 1))
        high = low + rng.uniform(0.0, 1.0, size=(2, n + 1))
        p0, p_inf = np.array([20.0, 18.0]), np.array([27.6, 27.6])
        eta = 0.02
        p_high = gompertz_recursion(p0, p_inf, lam, h, eta * high)
        p_low = gompertz_recursion(p0, p_inf, lam, h, eta * low)
        assert np.all(p_high <= p_low + 1e-12)
