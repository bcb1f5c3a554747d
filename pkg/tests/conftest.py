import numpy as np
import pytest

from config.constants import DEFAULT_PARAMS_PATH
from config.loader import load_params
from core.domain import TimeGrid
from orchestration.validation import micro_bundle


def has_scipy_milp() -> bool:
    try:
        from scipy.optimize import milp  # noqa: F401
    except ImportError:
        return False
    return True


requires_milp = pytest.mark.skipif(not has_scipy_milp(), reason="scipy.optimize.milp 不可用")


@pytest.fixture(scope='session')
def shipped():
    """出貨的預設參數組 (21 天、60 分鐘步長、三種藥物、四種細胞類型)"""
    return load_params(DEFAULT_PARAMS_PATH)


@pytest.fixture(scope='session')
def micro(shipped):
    """2 天、6 小時步長、只有 docetaxel 的小實例"""
    return micro_bundle(shipped)


@pytest.fixture
def day_grid():
    return TimeGrid(horizon_days=3, step_hours=24.0, meal_offsets=(8.0,))


@pytest.fixture
def zero_doses():
    def make(bundle):
        return np.zeros((len(bundle.drugs), bundle.grid.n_steps + 1))
    return make
