import math

import numpy as np
import pytest

from config.constants import DEFAULT_SCENARIOS_PATH
from config.loader import load_scenarios
from core.domain import ScenarioSet
from core.enums import Sense, VarKind
from core.errors import ModelBuildError, PlanExtractionError, UnstableStepError
from dynamics.simulation import simulate_all
from solver.builtin import solve_builtin
from transcription import naming
from transcription.chance import build_chance_constrained, build_model, surgical_big_m
from transcription.deterministic import build_deterministic
from transcription.model import MilpModel
from transcription.options import BuildOptions
from transcription.plan import extract_plan, resimulate, state_deviation


def _within(actual: int, target: int, tol: float = 0.15) -> bool:
    return abs(actual - target) <= tol * target


# ---- 模型容器 ----

def test_duplicate_names_rejected():
    model = MilpModel()
    model.add_var('x')
    with pytest.raises(ModelBuildError):
        model.add_var('x')
    model.add_constraint('R', [('x', 1.0)], Sense.LE, 1.0)
    with pytest.raises(ModelBuildError):
        model.add_constraint('R', [('x', 2.0)], Sense.LE, 1.0)
    with pytest.raises(ModelBuildError):
        model.add_constraint('R2', [('y', 1.0)], Sense.LE, 1.0)


def test_terms_are_merged_and_zero_dropped():
    model = MilpModel()
    model.add_var('x')
    model.add_var('y')
    model.add_constraint('R', [('x', 1.0), ('y', 2.0), ('x', -1.0)], Sense.GE, 0.0)
    assert model.constraints[0].terms == ((1, 2.0),)


def test_binary_bounds_clamped():
    model = MilpModel()
    model.add_var('z', VarKind.BINARY, -3.0, 5.0)
    var = model.variables[0]
    assert (var.lower, var.upper) == (0.0, 1.0)
    assert model.stats().binaries == 1


def test_ranged_row_bounds():
    model = MilpModel()
    model.add_var('x')
    model.add_constraint('G', [('x', 1.0)], Sense.GE, 2.0, range=3.0)
    model.add_constraint('L', [('x', 1.0)], Sense.LE, 2.0, range=3.0)
    model.add_constraint('E', [('x', 1.0)], Sense.EQ, 2.0, range=-3.0)
    assert [row.bounds() for row in model.constraints] == [(2.0, 5.0), (-1.0, 2.0), (-1.0, 2.0)]


# ---- 模型規模 ----

@pytest.mark.parametrize("step_minutes, n_vars, n_rows", [(240, 3759, 8547), (60, 9051, 17619)])
def test_deterministic_size(shipped, step_minutes, n_vars, n_rows):
    bundle = shipped.with_step_minutes(step_minutes)
    model = build_deterministic(bundle)
    stats = model.stats()
    assert _within(stats.variables, n_vars)
    assert _within(stats.constraints, n_rows)
    model.validate()


def test_deterministic_binaries_at_one_hour(shipped):
    model = build_deterministic(shipped.with_step_minutes(60))
    assert model.stats().binaries == 966


@pytest.mark.slow
def test_chance_constrained_size(shipped):
    scenarios = load_scenarios(DEFAULT_SCENARIOS_PATH)
    model = build_chance_constrained(shipped.with_step_minutes(60),
                                     options=BuildOptions().with_scenarios(scenarios))
    stats = model.stats()
    assert _within(stats.variables, 27205)
    assert _within(stats.constraints, 35804)
    assert stats.binaries == 976


def test_meta_describes_model(shipped, micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    assert model.meta['kind'] == 'deterministic'
    assert model.meta['drugs'] == ('docetaxel',)
    assert model.meta['types'] == tuple(ct.name for ct in shipped.tumor.cell_types)
    assert model.meta['grid'] == micro.grid


def test_objective_is_sum_of_final_log_pops(micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    S = micro.grid.n_steps
    expected = {model.var_index[naming.log_pop(ct.name, S)] for ct in micro.tumor.cell_types}
    assert set(model.objective) == expected
    assert all(coef == 1.0 for coef in model.objective.values())


def test_oral_drug_gets_pill_integers_only_at_meals(shipped):
    bundle = shipped.with_drugs(['capecitabine']).with_grid(shipped.grid.with_step(6.0).with_horizon(2))
    model = build_deterministic(bundle, options=BuildOptions(levels=2))
    pill_steps = [s for s in range(bundle.grid.n_steps) if naming.pills('capecitabine', s) in model.var_index]
    assert pill_steps == list(bundle.grid.meal_steps())
    assert all(model.variables[model.var_index[naming.pills('capecitabine', s)]].kind is VarKind.INTEGER
               for s in pill_steps)


# ---- 建模錯誤 ----

def test_unstable_step_rejected(shipped):
    fast = shipped.with_drug('docetaxel', xi=10.0)
    with pytest.raises(UnstableStepError):
        build_deterministic(fast.with_grid(fast.grid.with_step(6.0)))


def test_inconsistent_delta_rejected(micro):
    with pytest.raises(ModelBuildError):
        build_deterministic(micro, options=BuildOptions(levels=20, delta=1.0))


def test_discrete_fraction_must_be_reciprocal():
    assert BuildOptions.discrete(0.25).levels == 4
    with pytest.raises(ModelBuildError):
        BuildOptions.discrete(0.3)


def test_chance_requires_scenarios(micro):
    with pytest.raises(ModelBuildError):
        build_chance_constrained(micro, options=BuildOptions())


@pytest.mark.parametrize("epsilon", [-0.1, 1.0])
def test_chance_rejects_epsilon_out_of_range(micro, epsilon):
    scenarios = ScenarioSet.from_arrays([micro.tumor.p0], [1.0])
    with pytest.raises(ModelBuildError):
        build_chance_constrained(micro, options=BuildOptions(epsilon=epsilon).with_scenarios(scenarios))


def test_chance_rejects_n_surg_above_initial(micro):
    scenarios = ScenarioSet.from_arrays([micro.tumor.p0], [1.0])
    options = BuildOptions(n_surg=2.0 * micro.tumor.total_n0).with_scenarios(scenarios)
    with pytest.raises(ModelBuildError):
        build_chance_constrained(micro, options=options)


def test_build_model_dispatches_on_scenarios(micro):
    assert build_model(micro, options=BuildOptions(levels=2)).meta['kind'] == 'deterministic'
    scenarios = ScenarioSet.from_arrays([micro.tumor.p0], [1.0])
    options = BuildOptions(levels=2, n_surg=0.5 * micro.tumor.total_n0).with_scenarios(scenarios)
    assert build_model(micro, options=options).meta['kind'] == 'chance'


def test_surgical_big_m():
    assert surgical_big_m(27.6, 19.8, -1.0) == pytest.approx(8.8)
    assert surgical_big_m(10.0, 19.8, 0.0) == 0.0


# ---- 求解與重新模擬 ----

def test_zero_drug_optimum_equals_drug_free_simulation(micro):
    bundle = micro.with_drugs([])
    result = solve_builtin(build_deterministic(bundle, options=BuildOptions(levels=2)))
    assert result.is_optimal
    free = simulate_all(bundle, np.zeros((0, bundle.grid.n_steps + 1)))
    assert result.objective == pytest.approx(free.objective, abs=1e-6)


def test_extracted_plan_matches_resimulation(micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    result = solve_builtin(model)
    assert result.is_optimal
    plan = extract_plan(model, result.assignment)
    assert plan.doses.shape == (1, micro.grid.n_steps + 1)
    assert plan.doses[0, -1] == 0.0
    replay = resimulate(plan, micro)
    deviation = state_deviation(plan, replay)
    assert deviation['conc'] <= 1e-6
    assert deviation['log_pops'] <= 1e-6
    assert deviation['wbc_rel'] <= 1e-6
    # 最優計畫至少不劣於不給藥
    free = simulate_all(micro, np.zeros_like(plan.doses))
    assert replay.objective <= free.objective + 1e-9


def test_extract_plan_reports_missing_variables(micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    with pytest.raises(PlanExtractionError):
        extract_plan(model, {})


def test_single_scenario_chance_model_reaches_surgical_size(shipped, micro):
    total = micro.tumor.total_n0
    n_surg = 0.99 * total
    scenarios = ScenarioSet.from_arrays([shipped.tumor.p0], [1.0])
    options = BuildOptions(levels=2, epsilon=0.0, n_surg=n_surg).with_scenarios(scenarios)
    model = build_chance_constrained(micro, options=options)
    result = solve_builtin(model)
    assert result.is_optimal
    plan = extract_plan(model, result.assignment)
    assert plan.surgical.tolist() == [1]
    replay = resimulate(plan, micro)
    assert replay.final_total_cells <= n_surg * (1.0 + 1e-6)


def test_mccormick_bound_not_above_discrete(micro):
    mcc = solve_builtin(build_deterministic(micro, options=BuildOptions.mccormick()))
    disc = solve_builtin(build_deterministic(micro, options=BuildOptions(levels=2)))
    assert mcc.is_optimal and disc.is_optimal
    assert mcc.objective <= disc.objective + 1e-9
    assert math.isfinite(mcc.objective)
