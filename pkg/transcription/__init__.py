from .model import MilpModel, Variable, Constraint, ModelStats, ModelArrays
from .options import BuildOptions
from .deterministic import build_deterministic
from .chance import build_chance_constrained, build_model
from .plan import TreatmentPlan, extract_plan, resimulate, state_deviation, load_doses, plan_from_doses

__all__ = [
    'MilpModel', 'Variable', 'Constraint', 'ModelStats', 'ModelArrays', 'BuildOptions',
    'build_deterministic', 'build_chance_constrained', 'build_model', 'TreatmentPlan', 'extract_plan',
    'resimulate', 'state_deviation', 'load_doses', 'plan_from_doses'
]
