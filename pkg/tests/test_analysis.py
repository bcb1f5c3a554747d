import numpy as np
import pytest

from analysis.compare import compare_bilinear, compare_step_sizes
from analysis.metrics import operational_violations, plan_metrics
from analysis.regularize import dominant_pattern, fit_pattern, regularize_plan, report_frame
from analysis.sensitivity import (apply_selector, max_dose_beta_conc, remap_pill_regimen, scale_max_dose,
                                  sensitivity_sweep)
from calibration.regimens import load_regimens
from core.context import PlanningContext
from dynamics.simulation import simulate_all
from transcription.options import BuildOptions
from transcription.plan import plan_from_doses


@pytest.fixture
def oral_micro(shipped):
    """capecitabine、2 天、6 小時步長 (用餐步長 1, 2, 3)"""
    return shipped.with_drugs(['capecitabine']).with_grid(shipped.grid.with_step(6.0).with_horizon(2))


def pill_doses(bundle, pills_by_step):
    doses = np.zeros((1, bundle.grid.n_steps + 1))
    for step, count in pills_by_step.items():
        doses[0, step] = count * bundle.drugs[0].pill_mass
    return doses


# ---- 參數縮放 ----

@pytest.mark.parametrize("drug, fraction, expected", [
    ('capecitabine', 1.25, (10, 5)),
    ('capecitabine', 0.75, (6, 3)),
    ('etoposide', 1.25, (3, 2)),
    ('etoposide', 0.75, (1, 1)),
    ('etoposide', 1.5, (3, 2)),
    ('etoposide', 0.5, (1, 1)),
    ('capecitabine', 1.1, (9, 5)),
    ('capecitabine', 0.9, (7, 4)),
])
def test_remap_pill_regimen(shipped, drug, fraction, expected):
    assert remap_pill_regimen(shipped.drug(drug), shipped.grid.body_surface, fraction) == expected


def test_identity_fraction_returns_same_bundle(shipped):
    for selector in ('xi:docetaxel', 'eta0:capecitabine', 'neutropenia', 'maxdose:etoposide'):
        assert apply_selector(shipped, selector, 1.0) is shipped


def test_nonpositive_fraction_rejected(shipped):
    with pytest.raises(ValueError):
        apply_selector(shipped, 'xi:docetaxel', 0.0)


def test_max_dose_scaling_oral(shipped):
    scaled = scale_max_dose(shipped, 'capecitabine', 1.25)
    drug = scaled.drug('capecitabine')
    bsa = shipped.grid.body_surface
    assert drug.max_pills_per_admin(bsa) == 5
    assert drug.max_pills_per_day(bsa) == 10
    assert drug.beta_conc > 0
    assert scaled.drug('docetaxel') == shipped.drug('docetaxel')


@pytest.mark.parametrize("name", ['capecitabine', 'etoposide'])
def test_base_regimen_reproduces_beta_conc(shipped, name):
    drug = shipped.drug(name)
    bsa = shipped.grid.body_surface
    regimen = load_regimens()[name]
    per_day, per_admin = drug.max_pills_per_day(bsa), drug.max_pills_per_admin(bsa)
    assert max_dose_beta_conc(drug, shipped.grid, per_day, per_admin, regimen) == pytest.approx(drug.beta_conc)
    assert max_dose_beta_conc(drug, shipped.grid, per_day, per_admin) == pytest.approx(drug.beta_conc)


def test_max_dose_beta_conc_follows_regimen(shipped):
    base = shipped.drug('etoposide')
    up = scale_max_dose(shipped, 'etoposide', 1.25).drug('etoposide')
    down = scale_max_dose(shipped, 'etoposide', 0.75).drug('etoposide')
    assert down.beta_conc < base.beta_conc < up.beta_conc
    bsa = shipped.grid.body_surface
    assert (up.max_pills_per_day(bsa), up.max_pills_per_admin(bsa)) == (3, 2)
    assert (down.max_pills_per_day(bsa), down.max_pills_per_admin(bsa)) == (1, 1)


def test_max_dose_scaling_intravenous(shipped):
    drug = scale_max_dose(shipped, 'docetaxel', 0.5).drug('docetaxel')
    base = shipped.drug('docetaxel')
    assert drug.beta_rate == pytest.approx(0.5 * base.beta_rate)
    assert drug.beta_cum == pytest.approx(0.5 * base.beta_cum)
    assert drug.beta_conc == pytest.approx(0.5 * base.beta_conc)


# ---- 指標與操作限制 ----

def test_plan_metrics_without_drugs(micro):
    doses = np.zeros((1, micro.grid.n_steps + 1))
    result = simulate_all(micro, doses)
    metrics = plan_metrics(micro, doses, result)
    assert metrics['objective'] == pytest.approx(result.objective)
    assert metrics['dose[docetaxel]'] == 0.0
    assert metrics['rest_days[docetaxel]'] == 2
    assert metrics['nadir_wbc'] == pytest.approx(micro.wbc.n_w0)


def test_no_violations_for_empty_plan(micro):
    doses = np.zeros((1, micro.grid.n_steps + 1))
    assert operational_violations(micro, doses, simulate_all(micro, doses)) == []


def test_oral_violations(oral_micro):
    cases = [
        pill_doses(oral_micro, {0: 1}),      # 非用餐時點
        pill_doses(oral_micro, {1: 0.5}),    # 半顆
        pill_doses(oral_micro, {1: 5}),      # 超過每次 4 顆
        pill_doses(oral_micro, {1: 4, 2: 4, 3: 1}),  # 超過每日 8 顆
    ]
    for doses in cases:
        assert operational_violations(oral_micro, doses, simulate_all(oral_micro, doses))


def test_rest_day_violation(shipped):
    bundle = shipped.with_drugs(['docetaxel']).with_grid(shipped.grid.with_step(6.0).with_horizon(4))
    doses = np.zeros((1, bundle.grid.n_steps + 1))
    doses[0, 0] = doses[0, 8] = 0.1
    violations = operational_violations(bundle, doses, simulate_all(bundle, doses))
    assert any('休息' in v for v in violations)


# ---- 規則化 ----

def test_regular_plan_is_a_fixed_point(oral_micro):
    doses = pill_doses(oral_micro, {1: 2, 2: 1, 3: 1, 5: 2, 6: 1, 7: 1})
    plan = plan_from_doses(oral_micro, doses)
    report = regularize_plan(plan, oral_micro)
    np.testing.assert_allclose(report.doses, doses)
    assert report.pills_per_day == {'capecitabine': 4}
    assert report.objective_delta == pytest.approx(0.0)
    assert report.feasible


def test_constant_uneven_pattern_is_a_fixed_point(oral_micro):
    doses = pill_doses(oral_micro, {1: 4, 2: 4, 5: 4, 6: 4})
    report = regularize_plan(plan_from_doses(oral_micro, doses), oral_micro)
    np.testing.assert_allclose(report.doses, doses)
    assert report.pills_per_day == {'capecitabine': 8}
    assert report.objective_delta == pytest.approx(0.0)


def test_meal_pattern_selection(oral_micro):
    doses = pill_doses(oral_micro, {1: 4, 2: 4, 5: 4, 6: 3})
    plan = plan_from_doses(oral_micro, doses)
    # 沒有唯一最常見模式時平均分配；(8 + 7) // 2 = 7
    np.testing.assert_allclose(regularize_plan(plan, oral_micro).doses,
                               pill_doses(oral_micro, {1: 3, 2: 2, 3: 2, 5: 3, 6: 2, 7: 2}))
    assert fit_pattern((4, 4, 0), 7, 4) == [4, 3, 0]
    assert fit_pattern((2, 0, 0), 5, 4) == [4, 1, 0]
    assert dominant_pattern(np.array([[4, 4, 0], [4, 4, 0], [3, 3, 1], [0, 0, 0]])) == (4, 4, 0)
    assert dominant_pattern(np.array([[4, 4, 0], [3, 3, 1]])) is None


def test_regularization_averages_active_days(oral_micro):
    plan = plan_from_doses(oral_micro, pill_doses(oral_micro, {1: 4, 2: 1, 5: 1, 6: 1, 7: 1}))
    report = regularize_plan(plan, oral_micro)
    # (5 + 3) // 2 = 4 顆，分成 2/1/1
    expected = pill_doses(oral_micro, {1: 2, 2: 1, 3: 1, 5: 2, 6: 1, 7: 1})
    np.testing.assert_allclose(report.doses, expected)


def test_regularization_rest_days(oral_micro):
    plan = plan_from_doses(oral_micro, pill_doses(oral_micro, {1: 2, 2: 1, 3: 1}))
    kept = regularize_plan(plan, oral_micro, preserve_rest_days=True)
    np.testing.assert_allclose(kept.doses, plan.doses)
    assert kept.feasible
    spread = regularize_plan(plan, oral_micro, preserve_rest_days=False)
    np.testing.assert_allclose(spread.doses, pill_doses(oral_micro, {1: 1, 2: 1, 5: 1, 6: 1}))


def test_dropping_binding_rest_days_reports_neutropenia(shipped):
    # 無延遲、門檻略低於穩態：最後一天的給藥不影響白血球，提前給藥則跌破門檻
    wbc = shipped.wbc
    bundle = (shipped.with_drugs(['capecitabine'])
              .with_grid(shipped.grid.with_step(6.0).with_horizon(4))
              .with_wbc(delay_days=0, beta_neu=wbc.theta_neu * wbc.n_w0 * (1 - 1e-5)))
    plan = plan_from_doses(bundle, pill_doses(bundle, {13: 2, 14: 1, 15: 1}))

    kept = regularize_plan(plan, bundle, preserve_rest_days=True)
    assert kept.feasible
    np.testing.assert_allclose(kept.doses, plan.doses)

    spread = regularize_plan(plan, bundle, preserve_rest_days=False)
    np.testing.assert_allclose(spread.doses, pill_doses(bundle, {1: 1, 5: 1, 9: 1, 13: 1}))
    assert not spread.feasible
    assert any('嗜中性球' in v for v in spread.violations)


def test_regularization_keeps_intravenous_doses(micro):
    doses = np.zeros((1, micro.grid.n_steps + 1))
    doses[0, 0] = 0.17
    plan = plan_from_doses(micro, doses)
    report = regularize_plan(plan, micro)
    np.testing.assert_allclose(report.doses, doses)
    frame = report_frame(report, micro, plan)
    assert list(frame.columns) == ['metric', 'optimal', 'regulated']


# ---- 掃描與比較 ----

def test_kill_effect_sweep_is_monotone(micro):
    frame = sensitivity_sweep(micro, 'eta0:docetaxel', (0.9, 1.0, 1.1), BuildOptions(levels=2))
    assert frame['fraction'].tolist() == [0.9, 1.0, 1.1]
    assert (frame['status'] == 'optimal').all()
    objectives = frame['objective'].to_numpy()
    assert objectives[0] >= objectives[1] - 1e-9 >= objectives[2] - 2e-9


def test_neutropenia_threshold_not_binding(micro):
    frame = sensitivity_sweep(micro, 'neutropenia', (0.8, 0.9), BuildOptions(levels=2))
    assert frame['objective'].iloc[0] == pytest.approx(frame['objective'].iloc[1], abs=1e-9)


def test_sweep_records_scaling_errors(micro):
    context = PlanningContext()
    frame = sensitivity_sweep(micro, 'xi:unknown', (0.9, 1.1), BuildOptions(levels=2), context=context)
    assert (frame['status'] == 'error').all()
    assert frame['error'].str.contains('KeyError').all()
    assert context.stats.summary()['errors'] == 2


def test_compare_bilinear_on_micro(micro):
    configs = (('mccormick', BuildOptions.mccormick()), ('discrete 1/2', BuildOptions.discrete(1 / 2)))
    frame = compare_bilinear(micro, configs)
    assert frame['config'].tolist() == ['mccormick', 'discrete 1/2']
    assert (frame['status'] == 'optimal').all()
    assert frame['objective'].iloc[0] <= frame['objective'].iloc[1] + 1e-9
    assert frame['binaries'].iloc[0] < frame['binaries'].iloc[1]


def test_compare_step_sizes_on_micro(micro):
    frame = compare_step_sizes(micro, [720, 360], BuildOptions(levels=2))
    assert frame['config'].tolist() == ['h=720', 'h=360']
    assert frame['h (minute)'].tolist() == [720.0, 360.0]
    assert (frame['status'] == 'optimal').all()
    assert frame['variables'].iloc[0] < frame['variables'].iloc[1]
