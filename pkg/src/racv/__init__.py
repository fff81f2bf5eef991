"""Prophetic minimum and maximum reachability for rectangular automata with random clocks."""
from .collect import Mode, collect
from .geometry import Polytope, Region
from .model import QuerySpec, RacModel, load_model, parse_model, validate
from .oracle import DiscretizationSpec, can_avoid, can_reach, oracle_probability
from .probability import DistributionSpec, ProbabilityResult, integrate
from .reach import build_reach_tree
from .transform import modified_tree

__all__ = [
    "DiscretizationSpec", "DistributionSpec", "Mode", "Polytope", "ProbabilityResult", "QuerySpec",
    "RacModel", "Region", "build_reach_tree", "can_avoid", "can_reach", "collect", "integrate",
    "load_model", "modified_tree", "oracle_probability", "parse_model", "validate",
]
__version__ = "0.1.0"
