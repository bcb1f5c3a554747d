import pytest

from core.domain import TimeGrid, cells_to_diameter, diameter_to_cells
from core.errors import InvariantViolation


@pytest.mark.parametrize("cells, diameter", [(1e9, 25.0), (0.4e9, 18.42), (8e9, 50.0)])
def test_cells_to_diameter(cells, diameter):
    assert cells_to_diameter(cells) == pytest.approx(diameter, abs=0.01)


def test_diameter_inverts_cells():
    assert diameter_to_cells(cells_to_diameter(3.3e10)) == pytest.approx(3.3e10)


def test_non_positive_cells_rejected():
    with pytest.raises(InvariantViolation):
        cells_to_diameter(0.0)


def test_grid_counts():
    grid = TimeGrid(horizon_days=21, step_hours=1.0)
    assert grid.steps_per_day == 24
    assert grid.n_steps == 504
    assert grid.h == pytest.approx(1 / 24)
    assert grid.times_days()[-1] == pytest.approx(21.0)


def test_step_must_divide_day():
    with pytest.raises(InvariantViolation) as info:
        TimeGrid(horizon_days=1, step_hours=5.0)
    assert info.value.field == 'step_hours'


def test_meal_steps_snap_down_and_dedupe():
    grid = TimeGrid(horizon_days=2, step_hours=6.0, meal_offsets=(8.0, 13.0, 19.0))
    # 8h → 1, 13h → 2, 19h → 3
    assert grid.meal_steps_in_day() == (1, 2, 3)
    coarse = grid.with_step(12.0)
    assert coarse.meal_steps_in_day() == (0, 1)
    assert coarse.meal_steps() == (0, 1, 2, 3)
    assert coarse.meal_mask().sum() == 4


def test_drug_caps(shipped):
    capecitabine = shipped.drug('capecitabine')
    assert capecitabine.max_pills_per_admin(1.7) == 4
    assert capecitabine.max_pills_per_day(1.7) == 8
    docetaxel = shipped.drug('docetaxel')
    assert docetaxel.rate_cap_grams(1.7, 1.0) == pytest.approx(0.17)
    assert docetaxel.rate_cap_grams(1.7, 4.0) == pytest.approx(0.68)
    assert docetaxel.max_pills_per_day(1.7) == 0


def test_scaled_selectors(shipped):
    doubled = shipped.scaled('eta0:docetaxel', 2.0)
    before, after = shipped.drug('docetaxel').eta_by_celltype, doubled.drug('docetaxel').eta_by_celltype
    assert after == pytest.approx(tuple(2 * v for v in before))
    assert shipped.scaled('neutropenia', 0.8).wbc.beta_neu == pytest.approx(0.8 * shipped.wbc.beta_neu)
    # 排除速率上限 1.0/day
    assert shipped.scaled('xi:etoposide', 1.5).drug('etoposide').xi == pytest.approx(1.0)
    with pytest.raises(ValueError):
        shipped.scaled('bogus:docetaxel', 1.1)
    with pytest.raises(KeyError):
        shipped.scaled('rho:cisplatin', 1.1)
    with pytest.raises(InvariantViolation):
        shipped.scaled('rho:docetaxel', 0.0)
