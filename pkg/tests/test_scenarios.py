import numpy as np
import pytest

from core.enums import ProcessingMode, StudentizeMode
from core.errors import ScenarioError
from scenarios.branching import (BranchingConfig, expected_populations, simulate_branching,
                                 standard_errors)
from scenarios.clustering import KMeans, Studentizer, cluster_scenarios, inertia_curve


def test_zero_mutation_gives_pure_doubling():
    config = BranchingConfig(generations=30, replications=7, mutation_probs=(0.0, 0.0, 0.0))
    pops = simulate_branching(config)
    assert pops.shape == (7, 4)
    assert (pops[:, 0] == 2 ** 30).all()
    assert (pops[:, 1:] == 0).all()


@pytest.mark.parametrize("generations", [1, 5, 12])
def test_total_cells_double_every_generation(generations):
    pops = simulate_branching(BranchingConfig(generations=generations, replications=50, rng_seed=3))
    assert (pops.sum(axis=1) == 2 ** generations).all()


def test_same_seed_is_reproducible():
    config = BranchingConfig(generations=10, replications=1200, rng_seed=11)
    np.testing.assert_array_equal(simulate_branching(config), simulate_branching(config))


def test_concurrent_matches_sequential():
    config = BranchingConfig(generations=10, replications=1200, rng_seed=5)
    sequential = simulate_branching(config, ProcessingMode.SEQUENTIAL)
    concurrent = simulate_branching(config, ProcessingMode.CONCURRENT, max_workers=2)
    np.testing.assert_array_equal(sequential, concurrent)


@pytest.mark.parametrize("kwargs", [
    dict(generations=-1),
    dict(generations=63),
    dict(replications=0),
    dict(mutation_probs=(-0.1, 0.0, 0.0)),
    dict(mutation_probs=(0.5, 0.5, 0.1)),
])
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ScenarioError):
        BranchingConfig(**kwargs)


def test_expected_populations_small_t():
    config = BranchingConfig()
    np.testing.assert_allclose(expected_populations(config, 0), [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(expected_populations(config, 1), [1.985, 0.005, 0.005, 0.005])


def test_expected_populations_thirty_generations():
    expected = expected_populations(BranchingConfig(), 30)
    assert expected[0] == pytest.approx(1.985 ** 30)
    assert expected[0] == pytest.approx(8.57e8, rel=1e-2)
    # 每代所有細胞都分裂，期望總數為 2^t
    assert expected.sum() == pytest.approx(2.0 ** 30)


def test_standard_errors_single_row_is_infinite():
    assert np.isinf(standard_errors(np.array([[1, 2]]))).all()


@pytest.mark.slow
def test_monte_carlo_mean_matches_expectation():
    config = BranchingConfig(generations=30, replications=10_000, rng_seed=0)
    pops = simulate_branching(config)
    expected = expected_populations(config, 30)
    se = standard_errors(pops)
    assert abs(pops[:, 0].mean() - expected[0]) <= 3 * se[0]


# ---- 聚類 ----

def test_single_cluster_is_the_mean():
    rng = np.random.default_rng(0)
    pops = rng.integers(1, 1000, size=(40, 3))
    scenarios = cluster_scenarios(pops, k=1)
    assert len(scenarios) == 1
    assert scenarios.most_likely.prob == 1.0
    np.testing.assert_allclose(scenarios.log_pops[0], np.log(pops).mean(axis=0))


def test_identical_replications_collapse_to_one_scenario():
    pops = np.tile([2 ** 20, 300, 0, 12], (25, 1))
    scenarios = cluster_scenarios(pops, k=3)
    assert len(scenarios) == 1
    np.testing.assert_allclose(scenarios.log_pops[0], np.log(np.maximum(pops[0], 1.0)))


def test_two_separated_groups():
    low = np.tile([100, 1, 1], (30, 1))
    high = np.tile([100, 1000, 1], (10, 1))
    scenarios = cluster_scenarios(np.vstack([low, high]), k=2)
    assert scenarios.probs.tolist() == [0.75, 0.25]
    assert scenarios.log_pops[0][1] == pytest.approx(0.0)
    assert scenarios.log_pops[1][1] == pytest.approx(np.log(1000))


def test_raw_studentize_mode():
    pops = np.vstack([np.tile([10, 1], (4, 1)), np.tile([10, 50], (4, 1))])
    scenarios = cluster_scenarios(pops, k=2, mode=StudentizeMode.RAW)
    assert sorted(scenarios.probs.tolist()) == [0.5, 0.5]


def test_cluster_count_must_fit_samples():
    with pytest.raises(ScenarioError):
        cluster_scenarios(np.ones((3, 2)), k=4)
    with pytest.raises(ScenarioError):
        KMeans(0)


def test_studentizer_degenerate_dimension():
    scaler = Studentizer.fit(np.array([[1.0, 5.0], [1.0, 7.0]]), StudentizeMode.RAW)
    assert scaler.scale[0] == 1.0
    np.testing.assert_allclose(scaler.apply(np.array([[1.0, 6.0]])), [[0.0, 0.0]])


def test_inertia_curve_shape():
    rng = np.random.default_rng(1)
    pops = rng.integers(1, 10_000, size=(60, 4))
    curve = inertia_curve(pops, k_max=5)
    assert [k for k, _ in curve] == [1, 2, 3, 4, 5]
    assert curve[-1][1] < curve[0][1]


@pytest.mark.slow
def test_dominant_scenario_probability():
    pops = simulate_branching(BranchingConfig(rng_seed=0))
    scenarios = cluster_scenarios(pops, k=10)
    assert len(scenarios) <= 10
    assert 0.72 <= scenarios.most_likely.prob <= 0.82
