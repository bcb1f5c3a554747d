import math

import pytest

from config.constants import DEFAULT_PARAMS_PATH, DEFAULT_SCENARIOS_PATH
from config.loader import initial_objective, load_params, load_scenarios, save_params, save_scenarios
from core.errors import InvariantViolation, ParameterFileError


def test_shipped_values(shipped):
    assert tuple(d.xi for d in shipped.drugs) == pytest.approx((0.6, 0.2, 0.8))
    assert shipped.drug_names == ('capecitabine', 'docetaxel', 'etoposide')
    assert shipped.wbc.beta_neu == pytest.approx(2.5e12)
    assert shipped.tumor.n_types == 4
    assert shipped.grid.n_steps == 21 * 24


def test_resistant_types_get_reduced_kill(shipped):
    docetaxel = shipped.drug('docetaxel')
    resistant = [q for q, ct in enumerate(shipped.tumor.cell_types) if ct.resistant_to == docetaxel.id]
    assert resistant == [2]
    assert docetaxel.eta_by_celltype[2] == pytest.approx(0.25 * docetaxel.eta_by_celltype[0])


def test_initial_objective_from_scenarios(shipped):
    assert initial_objective(shipped) == pytest.approx(74.34, abs=0.3)


def test_round_trip(shipped, tmp_path):
    path = save_params(shipped, str(tmp_path / 'params.ini'))
    assert load_params(path) == shipped


def test_celltype_ceilings_are_per_type(shipped, tmp_path):
    # 每個類型都以整個腫瘤的上限為自己的 Gompertz 上限
    assert shipped.tumor.n_inf_by_type == (1e12,) * 4
    assert shipped.tumor.p_inf == pytest.approx([math.log(1e12)] * 4)
    text = open(save_params(shipped, str(tmp_path / 'params.ini')), encoding='utf-8').read()
    assert text.count('該類型自己的 Gompertz 上限') == 4


def _rewrite(tmp_path, old, new):
    with open(DEFAULT_PARAMS_PATH, encoding='utf-8') as f:
        text = f.read()
    assert old in text
    path = tmp_path / 'default.ini'
    path.write_text(text.replace(old, new), encoding='utf-8')
    # 情境檔以相對路徑引用
    (tmp_path / 'scenarios_default.csv').write_text(open(DEFAULT_SCENARIOS_PATH, encoding='utf-8').read())
    return str(path)


def test_zero_lambda_rejected(tmp_path):
    path = _rewrite(tmp_path, 'lambda = 7e-4', 'lambda = 0')
    with pytest.raises(InvariantViolation):
        load_params(path)


def test_bad_number_reports_line(tmp_path):
    path = _rewrite(tmp_path, 'xi = 0.2', 'xi = fast')
    with pytest.raises(ParameterFileError) as info:
        load_params(path)
    lines = open(path, encoding='utf-8').read().splitlines()
    assert info.value.line is not None
    assert lines[info.value.line - 1].strip() == 'xi = fast'


def test_unknown_resistance_drug(tmp_path):
    path = _rewrite(tmp_path, 'resistant_to = etoposide', 'resistant_to = cisplatin')
    with pytest.raises(ParameterFileError):
        load_params(path)


def test_scenarios_round_trip(tmp_path):
    scenarios = load_scenarios(DEFAULT_SCENARIOS_PATH)
    assert len(scenarios) == 10
    assert scenarios.most_likely.prob == pytest.approx(0.7705)
    again = load_scenarios(save_scenarios(scenarios, str(tmp_path / 's.csv')))
    assert again == scenarios


def test_scenario_probabilities_must_sum_to_one(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text("logpop_0,prob\n20.0,0.5\n19.0,0.4\n")
    with pytest.raises(ParameterFileError):
        load_scenarios(str(path))
