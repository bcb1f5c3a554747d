import os
import sys
import textwrap

import numpy as np
import pytest

from core.enums import Sense, SolveStatus, VarKind
from core.errors import SolverError, SolverLimitError
from orchestration.validation import random_micro_model
from solver import builtin
from solver.backends import ExternalBackend, get_backend
from solver.builtin import solve_builtin, solve_enumeration, solve_lp
from solver.external import read_solution, solve_external
from solver.feasibility import check_feasibility
from solver.mps import read_mps, write_mps
from tests.conftest import requires_milp
from transcription.deterministic import build_deterministic
from transcription.model import MilpModel
from transcription.options import BuildOptions

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def integer_toy(upper: float = 2.5) -> MilpModel:
    """min −x, x ≤ upper, x 為整數"""
    model = MilpModel(name='toy')
    model.add_var('x', VarKind.INTEGER, 0.0, 10.0)
    model.add_constraint('Cap', [('x', 1.0)], Sense.LE, upper)
    model.set_objective({'x': -1.0})
    return model


def infeasible_toy() -> MilpModel:
    model = MilpModel(name='infeasible')
    model.add_var('x')
    model.add_constraint('Lo', [('x', 1.0)], Sense.GE, 3.0)
    model.add_constraint('Hi', [('x', 1.0)], Sense.LE, 2.0)
    model.set_objective({'x': 1.0})
    return model


def fake_solver(tmp_path, body: str) -> str:
    """寫出一個把固定內容寫到解檔的求解器腳本，回傳命令模板"""
    script = tmp_path / 'fake_solver.py'
    script.write_text(textwrap.dedent(f"""
        import sys
        with open(sys.argv[2], 'w') as handle:
            handle.write({body!r})
    """))
    return f"{sys.executable} {script} {{mps}} {{sol}} {{time_limit}}"


# ---- 內建求解器 ----

def test_builtin_integer_rounding_down():
    result = solve_builtin(integer_toy())
    assert result.is_optimal
    assert result.objective == pytest.approx(-2.0)
    assert result.assignment['x'] == 2.0


def test_builtin_infeasible():
    result = solve_builtin(infeasible_toy())
    assert result.status is SolveStatus.INFEASIBLE
    assert not result.has_solution


def test_builtin_unbounded():
    model = MilpModel()
    model.add_var('x')
    model.set_objective({'x': -1.0})
    assert solve_builtin(model).status is SolveStatus.UNBOUNDED


def test_builtin_unbounded_child_node_not_optimal(monkeypatch):
    calls = []

    def relax(c, A, row_lower, row_upper, lower, upper, max_pivots):
        calls.append((lower.copy(), upper.copy()))
        if len(calls) == 1:
            return builtin.LpSolution(SolveStatus.OPTIMAL, np.array([2.5]), -2.5)
        return builtin.LpSolution(SolveStatus.UNBOUNDED)

    monkeypatch.setattr(builtin, 'solve_lp_arrays', relax)
    result = solve_builtin(integer_toy())
    assert result.status is SolveStatus.UNBOUNDED
    assert not result.is_optimal
    assert '無界' in result.message
    assert len(calls) == 3


def test_lp_relaxation():
    model = MilpModel()
    model.add_var('x', upper=3.0)
    model.add_var('y')
    model.add_constraint('Sum', [('x', 1.0), ('y', 1.0)], Sense.LE, 4.0)
    model.set_objective({'x': -1.0, 'y': -1.0})
    result = solve_lp(model)
    assert result.is_optimal
    assert result.objective == pytest.approx(-4.0)
    assert solve_lp(integer_toy()).objective == pytest.approx(-2.5)


def test_ranged_rows_respected():
    model = MilpModel()
    model.add_var('x', VarKind.INTEGER, 0.0, 10.0)
    model.add_constraint('Band', [('x', 1.0)], Sense.GE, 2.5, range=3.0)
    model.set_objective({'x': -1.0})
    assert solve_builtin(model).objective == pytest.approx(-5.0)


def test_builtin_size_limit():
    model = MilpModel()
    for j in range(61):
        model.add_var(f"z{j}", VarKind.BINARY)
    with pytest.raises(SolverLimitError):
        solve_builtin(model)


def test_enumeration_requires_finite_bounds():
    model = MilpModel()
    model.add_var('n', VarKind.INTEGER)
    with pytest.raises(SolverLimitError):
        solve_enumeration(model)


@pytest.mark.parametrize("seed", range(20))
def test_builtin_matches_enumeration(seed):
    model = random_micro_model(np.random.default_rng(seed))
    bnb, oracle = solve_builtin(model), solve_enumeration(model)
    assert bnb.status is oracle.status is SolveStatus.OPTIMAL
    assert bnb.objective == pytest.approx(oracle.objective, abs=1e-7)
    assert check_feasibility(model, bnb.assignment) == []


def test_builtin_matches_enumeration_on_chemo_micro(micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    bnb, oracle = solve_builtin(model), solve_enumeration(model)
    assert bnb.is_optimal and oracle.is_optimal
    assert bnb.objective == pytest.approx(oracle.objective, abs=1e-7)


def test_feasibility_check_reports_violations():
    model = integer_toy()
    assert check_feasibility(model, {'x': 2.0}) == []
    assert len(check_feasibility(model, {'x': 3.0})) == 1
    assert len(check_feasibility(model, {'x': 1.5})) == 1
    assert check_feasibility(model, {}) == ["缺少變數 x"]


# ---- MPS ----

def test_mps_round_trip(tmp_path, micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    path = write_mps(model, str(tmp_path / 'micro.mps'))
    assert read_mps(path) == model


def test_mps_marks_binaries_and_integers(tmp_path):
    model = MilpModel(name='kinds')
    model.add_var('z', VarKind.BINARY)
    model.add_var('n', VarKind.INTEGER, 0.0, 4.0)
    model.add_var('p', lower=-np.inf, upper=np.inf)
    model.add_var('f', lower=1.5, upper=1.5)
    model.add_constraint('R', [('z', 1.0), ('n', 1.0), ('p', 1.0), ('f', 1.0)], Sense.LE, 3.0)
    path = write_mps(model, str(tmp_path / 'kinds.mps'))
    text = open(path, encoding='utf-8').read()
    assert ' BV BND  z' in text
    assert "'INTORG'" in text and "'INTEND'" in text
    assert ' FR BND  p' in text
    assert ' FX BND  f  1.5' in text
    restored = read_mps(path)
    assert [v.kind for v in restored.variables] == [VarKind.BINARY, VarKind.INTEGER,
                                                    VarKind.CONTINUOUS, VarKind.CONTINUOUS]
    assert restored == model


def test_read_mps_reports_bad_file(tmp_path):
    path = tmp_path / 'bad.mps'
    path.write_text("NAME bad\nROWS\n N  OBJ\nCOLUMNS\n    x  NOPE  1.0\nENDATA\n")
    with pytest.raises(SolverError):
        read_mps(str(path))


# ---- 外部求解器 ----

def test_read_solution(tmp_path):
    path = tmp_path / 'toy.sol'
    path.write_text("=status= optimal\n=obj= -5\n=gap= 0.001\n# comment\nx 5\n")
    status, objective, gap, assignment = read_solution(str(path))
    assert status is SolveStatus.OPTIMAL
    assert objective == -5.0
    assert gap == pytest.approx(0.001)
    assert assignment == {'x': 5.0}


def test_external_backend_plumbing(tmp_path):
    template = fake_solver(tmp_path, "=status= optimal\n=obj= -5\nx 5\n")
    result = ExternalBackend(template, str(tmp_path / 'work')).solve(integer_toy(upper=5.0), time_limit=10)
    assert result.is_optimal
    assert result.objective == pytest.approx(-5.0)
    assert result.assignment == {'x': 5.0}
    assert result.violations == []
    assert os.path.exists(tmp_path / 'work' / 'toy.mps')


def test_external_infeasible(tmp_path):
    template = fake_solver(tmp_path, "=status= infeasible\n")
    result = solve_external(infeasible_toy(), template, time_limit=10)
    assert result.status is SolveStatus.INFEASIBLE
    assert not result.has_solution


def test_external_incomplete_optimal_solution_rejected(tmp_path):
    template = fake_solver(tmp_path, "=status= optimal\n")
    with pytest.raises(SolverError):
        solve_external(integer_toy(), template, time_limit=10)


def test_external_requires_placeholders(monkeypatch):
    monkeypatch.delenv('CHEMO_SOLVER_CMD', raising=False)
    with pytest.raises(SolverError):
        solve_external(integer_toy())
    with pytest.raises(SolverError):
        solve_external(integer_toy(), 'solver --model model.mps')


def test_external_nonzero_exit(tmp_path):
    script = tmp_path / 'failing.py'
    script.write_text("import sys\nsys.stderr.write('license expired')\nsys.exit(3)\n")
    with pytest.raises(SolverError, match='license expired'):
        solve_external(integer_toy(), f"{sys.executable} {script} {{mps}} {{sol}}", time_limit=10)


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend('cplex')


# ---- scipy / HiGHS ----

@requires_milp
def test_scipy_backend_matches_builtin(micro):
    model = build_deterministic(micro, options=BuildOptions(levels=2))
    scipy_result = get_backend('scipy').solve(model)
    assert scipy_result.is_optimal
    assert scipy_result.objective == pytest.approx(solve_builtin(model).objective, abs=1e-6)


@requires_milp
def test_scipy_backend_infeasible():
    assert get_backend('scipy').solve(infeasible_toy()).status is SolveStatus.INFEASIBLE


@requires_milp
def test_highs_adapter_as_external_command(tmp_path):
    adapter = os.path.join(PROJECT_ROOT, 'solver', 'adapters', 'highs.py')
    template = f"{sys.executable} {adapter} {{mps}} {{sol}} {{time_limit}}"
    result = solve_external(integer_toy(upper=5.0), template, time_limit=30)
    assert result.is_optimal
    assert result.assignment['x'] == pytest.approx(5.0)
