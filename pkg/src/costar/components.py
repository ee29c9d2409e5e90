"""Component framework and the concrete workcell components.

A component bundles continuous input/output topics (never exposed to plans),
the symbols and predicates it produces, and the operations plans may invoke.
Operations start asynchronously and hand back a handle the behavior tree leaf
polls each tick; domain failures (unreachable goal, unsupported gripper mode,
nothing to grasp, no feasible motion goal) surface as FAILURE with an error
string rather than exceptions.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .btree import LeafBinding, TickStatus, UnboundOperationError
from .geometry import Pose, quat_angle_between, quat_mul
from .plan_dsl import SymbolRef
from .predicates import (
    KnowledgeBase,
    PredicateDef,
    PredicateStatement,
    Symbol,
    parse_query,
)
from .spatial_index import NameAllocator, RStarTree, persistence_update
from .world import (
    NothingToGraspError,
    Scene,
    UnreachableError,
    WorldSim,
)

DEFAULT_ROTATION_WEIGHT = 0.1  # m/rad, trades reorientation against travel

GRIPPER_MODES = ("BasicMode", "PinchMode", "WideMode", "ScissorMode")
MODE_GRASP_RADIUS = {
    "BasicMode": 0.020,
    "PinchMode": 0.015,
    "WideMode": 0.030,
    "ScissorMode": 0.010,
}


@dataclass(frozen=True)
class OperationSpec:
    name: str
    params: tuple = ()
    category: str = "action"  # action | knowledge, drives UI leaf coloring


@dataclass(frozen=True)
class ComponentDescriptor:
    name: str
    operations: tuple
    predicates: tuple = ()
    symbol_kinds: tuple = ()
    input_topics: tuple = ()
    output_topics: tuple = ()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "operations": [
                {"name": op.name, "params": list(op.params), "category": op.category}
                for op in self.operations
            ],
            "predicates": list(self.predicates),
            "symbolKinds": list(self.symbol_kinds),
            "inputTopics": list(self.input_topics),
            "outputTopics": list(self.output_topics),
        }


class InstantHandle:
    """Handle for operations that finish within the starting tick."""

    def __init__(self, status: TickStatus, error: Optional[str] = None, result=None):
        self.status = status
        self.error = error
        self.result = result

    def poll(self) -> TickStatus:
        return self.status

    def cancel(self):
        pass


class CallbackHandle:
    def __init__(self, poll: Callable[[], TickStatus], cancel: Callable[[], None] = lambda: None):
        self._poll = poll
        self._cancel = cancel
        self.error: Optional[str] = None

    def poll(self) -> TickStatus:
        return self._poll()

    def cancel(self):
        self._cancel()


class Component(abc.ABC):
    """Base component: subclasses declare OPERATIONS and implement one
    `op_<name>` method per advertised operation."""

    OPERATIONS: tuple = ()
    PREDICATES: tuple = ()
    SYMBOL_KINDS: tuple = ()
    INPUT_TOPICS: tuple = ()
    OUTPUT_TOPICS: tuple = ()

    def __init__(self, name: str):
        self.name = name

    def descriptor(self) -> ComponentDescriptor:
        return ComponentDescriptor(
            self.name, self.OPERATIONS, self.PREDICATES, self.SYMBOL_KINDS,
            self.INPUT_TOPICS, self.OUTPUT_TOPICS)

    def operation_names(self) -> list[str]:
        return [op.name for op in self.OPERATIONS]

    def start(self, operation: str, params: dict):
        impl = getattr(self, f"op_{operation.lower()}", None)
        if operation not in self.operation_names() or impl is None:
            raise UnboundOperationError(f"{self.name} has no operation {operation!r}")
        return impl(dict(params))

    def update_symbols(self):
        """Called once per engine tick to refresh continuously published symbols."""


def _fail(error: str) -> InstantHandle:
    return InstantHandle(TickStatus.FAILURE, error=error)


def _resolve_pose(value, kb: KnowledgeBase) -> Pose:
    """Resolve an operation parameter to a Pose: symbol reference, symbol
    name, or inline 3/7-number list (string form: comma separated)."""
    if isinstance(value, SymbolRef):
        value = value.name
    if isinstance(value, Pose):
        return value
    if isinstance(value, str) and ("," in value):
        parts = [float(p) for p in value.split(",")]
        value = parts
    if isinstance(value, (list, tuple)):
        if len(value) == 3:
            return Pose(list(value))
        return Pose.from_list(list(value))
    if isinstance(value, str):
        sym = kb.get(value)
        if sym is None or sym.pose is None:
            raise KeyError(f"unknown symbol {value!r}")
        return sym.pose
    raise KeyError(f"cannot resolve pose from {value!r}")


# --- arm ----------------------------------------------------------------------


class Arm(Component):
    """Abstract arm contract: motion, kinesthetic waypoint capture, and a
    continuously published endpoint frame symbol."""

    OPERATIONS = (
        OperationSpec("Move", ("goal", "speed"), "action"),
        OperationSpec("Teach", ("name",), "action"),
    )
    SYMBOL_KINDS = ("frame", "waypoint")
    OUTPUT_TOPICS = ("arm/endpoint",)

    @abc.abstractmethod
    def endpoint(self) -> Pose: ...

    @abc.abstractmethod
    def op_move(self, params) -> object: ...

    @abc.abstractmethod
    def op_teach(self, params) -> object: ...


class SimArm(Arm):
    ENDPOINT_SYMBOL = "endpoint"

    def __init__(self, world: WorldSim, kb: KnowledgeBase, name: str = "arm"):
        super().__init__(name)
        self.world = world
        self.kb = kb
        self._taught = 0
        self.update_symbols()

    def endpoint(self) -> Pose:
        return self.world.endpoint

    def update_symbols(self):
        self.kb.upsert(Symbol(self.ENDPOINT_SYMBOL, "frame", pose=self.world.endpoint,
                              source=self.name))

    def op_move(self, params):
        try:
            goal = _resolve_pose(params["goal"], self.kb)
        except KeyError as e:
            return _fail(f"UnknownSymbol: {e.args[0]}")
        speed = float(params.get("speed", 0.5))
        try:
            self.world.start_move(goal, speed)
        except UnreachableError as e:
            return _fail(f"Unreachable: {e}")
        return CallbackHandle(
            lambda: TickStatus.SUCCESS if self.world.move_arrived() else TickStatus.BUSY,
            self.world.cancel_move)

    def op_teach(self, params):
        name = params.get("name")
        if isinstance(name, SymbolRef):
            name = name.name
        if not name:
            self._taught += 1
            name = f"wp_{self._taught}"
        self.kb.upsert(Symbol(str(name), "waypoint", pose=self.world.endpoint,
                              source=self.name))
        return InstantHandle(TickStatus.SUCCESS, result=str(name))


# --- gripper ----------------------------------------------------------------------


class Gripper(Component):
    """Abstract gripper contract: open/close plus mode management."""

    OPERATIONS = (
        OperationSpec("Open", (), "action"),
        OperationSpec("Close", ("require_object",), "action"),
        OperationSpec("SetMode", ("mode",), "action"),
        OperationSpec("GetState", (), "knowledge"),
        OperationSpec("Reset", (), "action"),
    )
    PREDICATES = ("GripperClosed",)
    SYMBOL_KINDS = ("joint-state",)

    @abc.abstractmethod
    def op_open(self, params) -> object: ...

    @abc.abstractmethod
    def op_close(self, params) -> object: ...

    @abc.abstractmethod
    def op_setmode(self, params) -> object: ...


class SimGripper(Gripper):
    def __init__(self, world: WorldSim, kb: KnowledgeBase, name: str = "gripper",
                 supported_modes: tuple = GRIPPER_MODES, default_mode: str = "BasicMode"):
        super().__init__(name)
        self.world = world
        self.kb = kb
        self.supported_modes = tuple(supported_modes)
        self.default_mode = default_mode if default_mode in self.supported_modes \
            else self.supported_modes[0]
        self.mode = self.default_mode
        self.update_symbols()

    @property
    def grasp_radius(self) -> float:
        return MODE_GRASP_RADIUS[self.mode]

    def update_symbols(self):
        self.kb.upsert(Symbol(self.name, "joint-state", source=self.name,
                              meta={"closed": self.world.gripper_closed, "mode": self.mode}))

    def op_open(self, params):
        self.world.execute_release(gripper_id=self.name)
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS)

    def op_close(self, params):
        require_object = params.get("require_object", True)
        try:
            grabbed = self.world.execute_grasp(self.grasp_radius, gripper_id=self.name)
        except NothingToGraspError as e:
            self.update_symbols()
            if require_object:
                return _fail(f"NothingToGrasp: {e}")
            return InstantHandle(TickStatus.SUCCESS)
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS, result=grabbed.id)

    def op_setmode(self, params):
        mode = params.get("mode")
        if isinstance(mode, SymbolRef):
            mode = mode.name
        if mode not in GRIPPER_MODES:
            return _fail(f"UnsupportedMode: unknown mode {mode!r}")
        if mode not in self.supported_modes:
            return _fail(f"UnsupportedMode: {self.name} cannot operate in {mode}")
        self.mode = mode
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS)

    def op_getstate(self, params):
        return InstantHandle(TickStatus.SUCCESS, result={
            "closed": self.world.gripper_closed, "mode": self.mode})

    def op_reset(self, params):
        self.world.execute_release(gripper_id=self.name)
        self.mode = self.default_mode
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS)


def make_gripper(kind: str, world: WorldSim, kb: KnowledgeBase) -> SimGripper:
    """Parallel grippers run pinch-only; the adaptive gripper has all modes."""
    if kind == "parallel":
        return SimGripper(world, kb, supported_modes=("PinchMode",), default_mode="PinchMode")
    if kind == "adaptive":
        return SimGripper(world, kb)
    raise ValueError(f"unknown gripper type {kind!r}")


# --- power tool -------------------------------------------------------------------


class PowerTool(Component):
    OPERATIONS = (
        OperationSpec("ToolOn", (), "action"),
        OperationSpec("ToolOff", (), "action"),
    )
    PREDICATES = ("ToolPowered",)
    SYMBOL_KINDS = ("joint-state",)

    def __init__(self, world: WorldSim, kb: KnowledgeBase, name: str = "powertool"):
        super().__init__(name)
        self.world = world
        self.kb = kb
        kb.register_predicate(PredicateDef(
            "ToolPowered", 1,
            lambda kb_, syms, lits: bool(syms[0].meta.get("powered", False)),
            source=self.name))
        self.update_symbols()

    def update_symbols(self):
        self.kb.upsert(Symbol(self.name, "joint-state", source=self.name,
                              meta={"powered": self.world.tool_powered}))

    def op_toolon(self, params):
        self.world.set_tool_power(True)
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS)

    def op_tooloff(self, params):
        self.world.set_tool_power(False)
        self.update_symbols()
        return InstantHandle(TickStatus.SUCCESS)


# --- perception ---------------------------------------------------------------------


@dataclass(frozen=True)
class GoalCandidate:
    object_name: str
    symmetry_index: int
    pose: Pose
    feasible: bool
    cost: float


@dataclass(frozen=True)
class SmartMovePlan:
    candidates: tuple
    chosen: Optional[GoalCandidate]

    @property
    def generated(self) -> int:
        return len(self.candidates)


def motion_cost(goal: Pose, endpoint: Pose, rotation_weight: float = DEFAULT_ROTATION_WEIGHT,
                ) -> float:
    """Travel distance plus weighted reorientation angle."""
    return (float(np.linalg.norm(goal.position - endpoint.position))
            + rotation_weight * quat_angle_between(goal.orientation, endpoint.orientation))


def plan_smart_move(kb: KnowledgeBase, world: WorldSim,
                    templates: list[PredicateStatement], offset: Pose,
                    rotation_weight: float = DEFAULT_ROTATION_WEIGHT) -> SmartMovePlan:
    """Enumerate and rank motion goals for objects matching the predicates.

    For every matching object o and every element s of its symmetry group the
    goal o*s*offset is generated; infeasible goals (outside the reachable
    shell, or at/below the table plane) are discarded; the survivor with the
    lowest motion cost wins, ties broken by object name then symmetry index.
    """
    endpoint = world.endpoint
    names = kb.query_symbols(templates)
    candidates = []
    for name in names:
        sym = kb.get(name)
        if sym is None or sym.kind != "object" or sym.pose is None:
            continue
        group = sym.meta.get("symmetry")
        elements = list(group.elements) if group is not None else [None]
        for s_idx, element in enumerate(elements):
            oriented = sym.pose if element is None else Pose(
                sym.pose.position, quat_mul(sym.pose.orientation, element))
            goal = oriented.compose(offset)
            feasible = world.reachable(goal) and goal.position[2] > world.scene.table_height
            cost = motion_cost(goal, endpoint, rotation_weight)
            candidates.append(GoalCandidate(name, s_idx, goal, feasible, cost))
    viable = [c for c in candidates if c.feasible]
    chosen = min(viable, key=lambda c: (c.cost, c.object_name, c.symmetry_index), default=None)
    return SmartMovePlan(tuple(candidates), chosen)


class PerceptionComponent(Component):
    """Simulated perception: explicit world-knowledge refresh plus the
    predicate-driven motion-goal operation."""

    OPERATIONS = (
        OperationSpec("DetectObjects", (), "knowledge"),
        OperationSpec("SmartMove", ("query", "offset", "speed", "rotation_weight"), "action"),
    )
    SYMBOL_KINDS = ("object",)
    INPUT_TOPICS = ("camera/points",)
    OUTPUT_TOPICS = ("perception/objects",)

    def __init__(self, world: WorldSim, kb: KnowledgeBase, name: str = "perception",
                 max_match_distance: float = 0.05, canonicalize: bool = True):
        super().__init__(name)
        self.world = world
        self.kb = kb
        self.max_match_distance = max_match_distance
        self.canonicalize = canonicalize
        self.allocator = NameAllocator()
        self._tree = RStarTree()

    def op_detectobjects(self, params):
        detections = self.world.simulate_detection()
        renamed, self._tree = persistence_update(
            self._tree, detections, max_distance=self.max_match_distance,
            canonicalize=self.canonicalize, allocator=self.allocator)
        self.kb.replace_kind("object", [
            Symbol(o.id, "object", pose=o.pose, class_label=o.class_label,
                   source=self.name, meta={"symmetry": o.symmetry})
            for o in renamed
        ])
        return InstantHandle(TickStatus.SUCCESS, result=[o.id for o in renamed])

    def op_smartmove(self, params):
        query = params.get("query")
        if not query:
            return _fail("NoFeasibleGoal: SmartMove requires a predicate query")
        try:
            templates = parse_query(str(query))
            offset = _resolve_pose(params["offset"], self.kb) if "offset" in params \
                else Pose.identity()
        except KeyError as e:
            return _fail(f"UnknownSymbol: {e.args[0]}")
        except Exception as e:
            return _fail(f"NoFeasibleGoal: bad SmartMove parameters ({e})")
        weight = float(params.get("rotation_weight", DEFAULT_ROTATION_WEIGHT))
        plan = plan_smart_move(self.kb, self.world, templates, offset, weight)
        if plan.chosen is None:
            return _fail(f"NoFeasibleGoal: no feasible goal among "
                         f"{plan.generated} candidate(s) for {query!r}")
        speed = float(params.get("speed", 0.5))
        try:
            self.world.start_move(plan.chosen.pose, speed)
        except UnreachableError as e:  # feasibility filter should prevent this
            return _fail(f"Unreachable: {e}")
        return CallbackHandle(
            lambda: TickStatus.SUCCESS if self.world.move_arrived() else TickStatus.BUSY,
            self.world.cancel_move)


# --- knowledge queries -----------------------------------------------------------------


class PredicatorComponent(Component):
    """Exposes predicate checks as plan operations.

    A fully grounded query succeeds iff every statement is true; a query with
    a free variable succeeds iff at least one symbol satisfies all templates.
    """

    OPERATIONS = (
        OperationSpec("Check", ("query",), "knowledge"),
    )

    def __init__(self, kb: KnowledgeBase, name: str = "predicator"):
        super().__init__(name)
        self.kb = kb

    def op_check(self, params):
        query = params.get("query")
        if not query:
            return _fail("UnknownPredicate: Check requires a query")
        try:
            templates = parse_query(str(query))
            has_var = any(str(a).startswith("?") for t in templates for a in t.args)
            if has_var:
                ok = bool(self.kb.query_symbols(templates))
            else:
                ok = all(self.kb.evaluate(t) for t in templates)
        except Exception as e:
            return _fail(f"{type(e).__name__}: {e}")
        return InstantHandle(TickStatus.SUCCESS if ok else TickStatus.FAILURE)


# --- registry / workcell ------------------------------------------------------------------


class ComponentRegistry:
    def __init__(self, components: list[Component]):
        self._components = {c.name: c for c in components}
        if len(self._components) != len(components):
            raise ValueError("component names must be unique")

    def get(self, name: str) -> Component:
        return self._components[name]

    def components(self) -> list[Component]:
        return [self._components[k] for k in sorted(self._components)]

    def descriptors(self) -> list[ComponentDescriptor]:
        return [c.descriptor() for c in self.components()]

    def known_operations(self) -> set:
        return {(c.name, op.name) for c in self.components() for op in c.OPERATIONS}

    def start(self, binding: LeafBinding):
        component = self._components.get(binding.component)
        if component is None:
            raise UnboundOperationError(f"unknown component {binding.component!r}")
        return component.start(binding.operation, binding.params)

    def update_symbols(self):
        for c in self.components():
            c.update_symbols()

    def validate_descriptors(self):
        """Every advertised operation must be invocable on its component."""
        missing = []
        for c in self.components():
            for op in c.OPERATIONS:
                if getattr(c, f"op_{op.name.lower()}", None) is None:
                    missing.append(f"{c.name}.{op.name}")
        if missing:
            raise UnboundOperationError(f"unimplemented operations: {', '.join(missing)}")


@dataclass
class Workcell:
    scene: Scene
    world: WorldSim
    kb: KnowledgeBase
    registry: ComponentRegistry
    perception: PerceptionComponent


def build_workcell(scene: Scene) -> Workcell:
    """Wire a simulated workcell: world, knowledge base, and the standard
    component set, with scene frames/waypoints/regions registered as symbols."""
    world = WorldSim(scene)
    kb = KnowledgeBase()
    for name, pose in scene.frames.items():
        kb.upsert(Symbol(name, "frame", pose=pose, source="scene"))
    for name, pose in scene.waypoints.items():
        kb.upsert(Symbol(name, "waypoint", pose=pose, source="scene"))
    for name, region in scene.regions.items():
        kb.upsert(Symbol(name, "region", pose=Pose(region.center), source="scene",
                         meta={"size": [float(v) for v in region.size]}))
    arm = SimArm(world, kb)
    gripper = make_gripper(scene.gripper_type, world, kb)
    tool = PowerTool(world, kb)
    perception = PerceptionComponent(world, kb)
    predicator = PredicatorComponent(kb)
    registry = ComponentRegistry([arm, gripper, tool, perception, predicator])
    registry.validate_descriptors()
    return Workcell(scene, world, kb, registry, perception)
