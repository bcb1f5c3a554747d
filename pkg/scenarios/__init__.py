from .branching import BranchingConfig, simulate_branching, simulate_block, expected_populations, standard_errors
from .clustering import Studentizer, KMeans, cluster_scenarios, inertia_curve

__all__ = [
    'BranchingConfig', 'simulate_branching', 'simulate_block', 'expected_populations', 'standard_errors',
    'Studentizer', 'KMeans', 'cluster_scenarios', 'inertia_curve'
]
