import math

import numpy as np
import pytest

from calibration.gompertz import gompertz_shape
from calibration.kill_effect import (CalibrationResult, DriftModel, apply_calibration, calibrate_kill_effect,
                                     response_threshold, solve_eta_for_delta)
from calibration.regimens import RegimenSpec, load_regimens, regimen_doses, regimen_to_effective_concentration
from core.errors import CalibrationError


# ---- Gompertz 形狀 ----

def test_gompertz_shape_from_doubling_time():
    assert gompertz_shape(1e9, 1e12, 150.0) == pytest.approx(7.05e-4, rel=1e-3)


def test_gompertz_shape_scales_with_doubling_time():
    assert gompertz_shape(1e9, 1e12, 75.0) == pytest.approx(2.0 * gompertz_shape(1e9, 1e12, 150.0))


def test_gompertz_shape_decreases_with_ceiling():
    assert gompertz_shape(1e9, 1e13, 150.0) < gompertz_shape(1e9, 1e12, 150.0)


@pytest.mark.parametrize("n0, n_inf, tau", [(0.0, 1e12, 150.0), (1e9, 1.5e9, 150.0), (1e9, 1e12, 0.0)])
def test_gompertz_shape_rejects_bad_inputs(n0, n_inf, tau):
    with pytest.raises(CalibrationError):
        gompertz_shape(n0, n_inf, tau)


# ---- η 的閉式解 ----

def test_response_threshold():
    assert response_threshold(8e9) == pytest.approx(math.log(1e9))


def test_eta_closed_form_without_growth():
    drift = DriftModel(p0=20.0, p_inf=27.0, lam=0.0, h=0.5)
    effective = np.full(5, 2.0)
    # b = h·Σ E = 0.5·4·2 = 4
    assert solve_eta_for_delta(effective, [], 18.0, drift) == pytest.approx(0.5)
    assert solve_eta_for_delta(effective, [0.1, -0.3], 18.0, drift) == pytest.approx(0.6)
    assert drift.simulate_finals(effective, np.array([0.5]))[0] == pytest.approx(18.0)


def test_eta_reaches_target_mean_with_growth():
    drift = DriftModel(p0=21.0, p_inf=27.6, lam=0.01, h=1.0 / 24.0)
    effective = np.concatenate([np.linspace(0.0, 5.0, 50), np.linspace(5.0, 0.0, 50)])
    eps = 0.02 * np.random.default_rng(4).standard_normal(200)
    eta = solve_eta_for_delta(effective, eps, 20.5, drift)
    finals = drift.simulate_finals(effective, eta + eps)
    assert finals.mean() == pytest.approx(20.5, abs=1e-9)


def test_kill_weight_with_unit_decay():
    drift = DriftModel(p0=20.0, p_inf=27.0, lam=0.0, h=0.25)
    assert drift.kill_weight(np.array([1.0, 2.0, 3.0, 99.0])) == pytest.approx(1.5)


def test_zero_effective_concentration_is_unidentifiable():
    drift = DriftModel(p0=20.0, p_inf=27.0, lam=0.0, h=1.0)
    with pytest.raises(CalibrationError):
        solve_eta_for_delta(np.zeros(10), [], 19.0, drift)


# ---- 給藥方案 ----

def test_shipped_regimens():
    regimens = load_regimens()
    assert set(regimens) == {'capecitabine', 'docetaxel', 'etoposide'}
    docetaxel = regimens['docetaxel']
    assert docetaxel.cycle_days == 21
    assert docetaxel.horizon_days == 147
    assert regimens['etoposide'].admin_days()[:11] == tuple(range(10)) + (21,)


def test_docetaxel_regimen_doses(shipped):
    spec = load_regimens()['docetaxel']
    grid = spec.trial_grid(shipped.grid)
    doses = regimen_doses(spec, grid)
    steps = np.flatnonzero(doses)
    assert steps.tolist() == [day * 24 + 8 for day in range(0, 147, 21)]
    np.testing.assert_allclose(doses[steps], 0.17)


def test_regimen_grid_too_short(shipped):
    spec = load_regimens()['docetaxel']
    with pytest.raises(CalibrationError):
        regimen_doses(spec, shipped.grid)


def test_regimen_drug_mismatch(shipped):
    spec = load_regimens()['docetaxel']
    with pytest.raises(CalibrationError):
        regimen_to_effective_concentration(spec, shipped.drug('etoposide'), spec.trial_grid(shipped.grid))


@pytest.mark.parametrize("field, value", [('target_prr', 1.0), ('cycles', 0), ('admin_hours', (25.0,))])
def test_regimen_spec_validation(field, value):
    kwargs = dict(drug='x', dose_per_admin=0.1, admin_hours=(8.0,), on_days=1, rest_days=20, cycles=7,
                  target_prr=0.47)
    kwargs[field] = value
    with pytest.raises(CalibrationError):
        RegimenSpec(**kwargs)


def test_apply_calibration_scales_resistant_types(shipped):
    result = CalibrationResult('docetaxel', eta=0.02, delta=0.0, prr=0.47, target_prr=0.47, iterations=1)
    calibrated = apply_calibration(shipped, {'docetaxel': result})
    drug = calibrated.drug('docetaxel')
    for ct, eta in zip(calibrated.tumor.cell_types, drug.eta_by_celltype):
        expected = 0.005 if ct.resistant_to == drug.id else 0.02
        assert eta == pytest.approx(expected)
    assert calibrated.drug('etoposide') == shipped.drug('etoposide')


@pytest.mark.slow
@pytest.mark.parametrize("drug", ['docetaxel', 'etoposide'])
def test_calibration_hits_trial_response_rate(shipped, drug):
    spec = load_regimens()[drug]
    result = calibrate_kill_effect(spec, shipped.drug(drug), shipped.tumor, spec.trial_grid(shipped.grid),
                                   trials=1000, rng_seed=0)
    assert result.eta > 0
    assert abs(result.prr - spec.target_prr) <= 0.05
