from .trajectory import Trajectory
from .pk import simulate_pk, effective_concentration
from .pd import simulate_pd, simulate_pd_effective, kill_rates
from .wbc import simulate_wbc, day_concentrations
from .stability import check_stability, euler_error_bound, estimate_curvature, ErrorBound
from .reference import rk4_reference, rk4_reference_pd
from .simulation import simulate_all, SimulationResult

__all__ = [
    'Trajectory', 'simulate_pk', 'effective_concentration', 'simulate_pd', 'simulate_pd_effective',
    'kill_rates', 'simulate_wbc', 'day_concentrations', 'check_stability', 'euler_error_bound',
    'estimate_curvature', 'ErrorBound', 'rk4_reference', 'rk4_reference_pd', 'simulate_all',
    'SimulationResult'
]
