import os

import numpy as np
import pandas as pd
import pytest

from config.loader import load_scenarios, scenarios_to_frame
from core.context import PlanningContext
from core.domain import ScenarioSet
from core.errors import InfeasibleModelError
from main import EXIT_FAILURE, EXIT_INFEASIBLE, EXIT_OK, build_parser, main
from orchestration.orchestrator import PlanningOrchestrator
from orchestration.validation import results_frame, run_validation
from solver.mps import read_mps
from transcription.options import BuildOptions
from transcription.plan import plan_from_doses

SMALL_GRID = ['--h-minutes', '360', '--days', '2']


def test_simulate_without_drugs(tmp_path):
    assert main(['--out', str(tmp_path), '--quiet', 'simulate', '--no-drugs',
                 '--h-minutes', '240', '--days', '3']) == EXIT_OK
    trajectories = pd.read_csv(tmp_path / 'trajectories.csv')
    assert len(trajectories) == 3 * 6 + 1
    metrics = pd.read_csv(tmp_path / 'simulation_metrics.csv')
    assert metrics['objective'].iloc[0] > 0


def test_build_writes_mps(tmp_path):
    assert main(['--out', str(tmp_path), 'build', *SMALL_GRID, '--levels', '2', '--output', 'small.mps']) == EXIT_OK
    model = read_mps(str(tmp_path / 'small.mps'))
    assert model.stats().binaries > 0
    assert model.n_constraints > 0


def test_missing_parameter_file(tmp_path, capsys):
    code = main(['--params', str(tmp_path / 'missing.ini'), '--out', str(tmp_path), 'simulate'])
    assert code == EXIT_FAILURE
    assert capsys.readouterr().err.startswith('error:')


def test_infeasible_chance_model_exit_code(tmp_path, shipped, capsys):
    scenario_path = tmp_path / 'one.csv'
    scenarios_to_frame(ScenarioSet.from_arrays([shipped.tumor.p0], [1.0])).to_csv(scenario_path, index=False)
    # 兩天內不可能讓每一型都減半
    n_surg = 0.5 * shipped.tumor.total_n0
    code = main(['--out', str(tmp_path), 'solve', *SMALL_GRID, '--levels', '2',
                 '--scenarios-file', str(scenario_path), '--epsilon', '0', '--n-surg', repr(n_surg)])
    assert code == EXIT_INFEASIBLE
    assert capsys.readouterr().err.startswith('infeasible:')


def test_scenarios_command(tmp_path):
    assert main(['--out', str(tmp_path), '--seed', '1', 'scenarios', '--k', '3', '--replications', '200',
                 '--generations', '10', '--inertia', '4']) == EXIT_OK
    scenarios = load_scenarios(str(tmp_path / 'scenarios.csv'))
    assert 1 <= len(scenarios) <= 3
    assert len(pd.read_csv(tmp_path / 'inertia.csv')) == 4


def test_regularize_command(tmp_path, shipped):
    bundle = shipped.with_grid(shipped.grid.with_step(6.0).with_horizon(2))
    plan = plan_from_doses(bundle.with_drugs(['capecitabine']),
                           np.array([[0.0, 2.0, 0.5, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0]]))
    plan_path = tmp_path / 'plan.csv'
    plan.dose_frame().to_csv(plan_path, index=False)
    assert main(['--out', str(tmp_path), 'regularize', *SMALL_GRID, '--plan', str(plan_path)]) == EXIT_OK
    regulated = pd.read_csv(tmp_path / 'regulated_doses.csv')
    assert 'U[capecitabine] (g)' in regulated.columns
    assert regulated['U[etoposide] (g)'].sum() == 0.0
    assert os.path.exists(tmp_path / 'regularization.csv')


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


# ---- 協調器 ----

def test_orchestrator_solve_writes_plan(tmp_path, micro):
    orchestrator = PlanningOrchestrator(PlanningContext(out_dir=str(tmp_path)))
    paths = orchestrator.run('solve', bundle=micro, options=BuildOptions(levels=2))
    names = {os.path.basename(p) for p in paths}
    assert {'solve_summary.csv', 'solution.csv', 'plan_doses.csv', 'plan_states.csv',
            'plan_metrics.csv', 'feasibility_report.csv'} <= names
    summary = pd.read_csv(tmp_path / 'solve_summary.csv')
    assert summary['status'].iloc[0] == 'optimal'
    report = pd.read_csv(tmp_path / 'feasibility_report.csv')
    assert set(report['source']) == {'deviation'}
    assert orchestrator.context.stats.summary()['artifacts_written'] == len(paths)


def test_orchestrator_raises_on_infeasible(tmp_path, micro):
    scenarios = ScenarioSet.from_arrays([micro.tumor.p0], [1.0])
    options = BuildOptions(levels=2, epsilon=0.0, n_surg=0.5 * micro.tumor.total_n0).with_scenarios(scenarios)
    orchestrator = PlanningOrchestrator(PlanningContext(out_dir=str(tmp_path)))
    with pytest.raises(InfeasibleModelError):
        orchestrator.run('solve', bundle=micro, options=options)


def test_orchestrator_rejects_unknown_command():
    with pytest.raises(ValueError):
        PlanningOrchestrator().run('_write')
    with pytest.raises(ValueError):
        PlanningOrchestrator().run('optimize')


@pytest.mark.slow
def test_validation_suites(shipped):
    results = run_validation(shipped)
    frame = results_frame(results)
    assert frame['suite'].tolist() == ['stability', 'error_bound', 'dominance', 'oracle', 'relaxation', 'branching']
    passed = {r.name: r.passed for r in results}
    for name in ('stability', 'dominance', 'oracle', 'relaxation', 'branching'):
        assert passed[name], frame.set_index('suite').loc[name, 'detail']
