"""Behavior-tree task orchestration over a simulated robot workcell."""

from .btree import TickStatus
from .geometry import Pose, SymmetryGroup, cube_group, cylinder_group, set_canonical_orientation
from .plan_dsl import PlanDocument, parse, serialize
from .predicates import KnowledgeBase, PredicateStatement, Symbol
from .runner import run_batch, run_plan
from .world import Scene, WorldSim, load_scene

__version__ = "0.1.0"

__all__ = [
    "TickStatus",
    "Pose",
    "SymmetryGroup",
    "cube_group",
    "cylinder_group",
    "set_canonical_orientation",
    "PlanDocument",
    "parse",
    "serialize",
    "KnowledgeBase",
    "PredicateStatement",
    "Symbol",
    "run_batch",
    "run_plan",
    "Scene",
    "WorldSim",
    "load_scene",
    "__version__",
]
