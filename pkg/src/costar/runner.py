"""Plan execution: the tick loop binding trees to the simulated workcell, the
batch robustness harness, and content-addressed plan storage.

Runs are fully deterministic: the only randomness comes from the scene seed,
timestamps are simulated (tick index times the tick period), and reports
serialize with sorted keys, so identical arguments produce byte-identical
report JSON.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .btree import ExecutionContext, LeafNode, TickStatus, TransitionRecorder, validate
from .bus import MessageBus
from .components import Workcell, build_workcell
from .plan_dsl import PlanDocument, parse, serialize
from .world import NoiseModel, Scene

TICK_PERIOD = 0.05  # seconds of simulated time per tick (20 Hz)
TICK_BUDGET = 10000

TOPIC_TREE = "bt"
TOPIC_SIM = "sim"
TOPIC_SYMBOLS = "symbols"


class ValidationFailedError(Exception):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    status: str  # success | failure
    tick_count: int
    failure_node: Optional[str] = None
    diagnostic: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "status": self.status,
            "tickCount": self.tick_count,
            "failureNode": self.failure_node,
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True)
class TrialReport:
    plan_id: str
    scene: str
    trials: int
    successes: int
    per_trial: tuple

    def to_json(self) -> dict:
        return {
            "planId": self.plan_id,
            "scene": self.scene,
            "trials": self.trials,
            "successes": self.successes,
            "perTrial": [t.to_json() for t in self.per_trial],
        }

    def json_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @property
    def all_succeeded(self) -> bool:
        return self.successes == self.trials


def plan_id_for(doc: PlanDocument) -> str:
    return hashlib.sha256(serialize(doc).encode()).hexdigest()[:12]


def _with_overrides(scene: Scene, seed: int, noise: Optional[NoiseModel]) -> Scene:
    return dataclasses.replace(scene, rng_seed=seed,
                               noise=noise if noise is not None else scene.noise)


def run_trial(doc: PlanDocument, scene: Scene, seed: int,
              bus: Optional[MessageBus] = None,
              tick_budget: int = TICK_BUDGET,
              noise: Optional[NoiseModel] = None) -> TrialResult:
    """Run one trial: reset the simulation from the scene with the given seed
    and tick the root until a terminal status or the tick budget runs out."""
    cell: Workcell = build_workcell(_with_overrides(scene, seed, noise))
    tree = doc.to_engine_tree()
    diagnostics = validate(tree, cell.registry.known_operations())
    if diagnostics:
        raise ValidationFailedError(diagnostics)

    recorder = TransitionRecorder()
    last_leaf_failure: dict = {"node": None, "error": None}
    ctx = ExecutionContext(cell.registry.start)
    base_observer = recorder.observer(ctx)

    def on_return(node, status):
        if isinstance(node, LeafNode) and status is TickStatus.FAILURE:
            last_leaf_failure["node"] = node.id
            last_leaf_failure["error"] = node.last_error
        base_observer(node, status)

    ctx.on_return = on_return

    published = 0
    last_symbol_names: Optional[tuple] = None

    def flush_events():
        nonlocal published, last_symbol_names
        if bus is None:
            return
        now = ctx.tick_index * TICK_PERIOD
        for event in recorder.events[published:]:
            bus.publish(TOPIC_TREE, event, timestamp=now)
        published = len(recorder.events)
        names = tuple(s.name for s in cell.kb.symbols())
        if names != last_symbol_names:
            last_symbol_names = names
            bus.publish(TOPIC_SYMBOLS,
                        {"symbols": [s.to_json() for s in cell.kb.symbols()]},
                        timestamp=now)
        bus.publish(TOPIC_SIM, {"tickIndex": ctx.tick_index, **cell.world.snapshot()},
                    timestamp=now)

    status = TickStatus.BUSY
    ticks = 0
    while ticks < tick_budget:
        cell.registry.update_symbols()
        status = tree.tick(ctx)
        ticks += 1
        flush_events()
        if status is not TickStatus.BUSY:
            break
        cell.world.step(TICK_PERIOD)
        ctx.tick_index += 1

    if status is TickStatus.SUCCESS:
        return TrialResult(seed, "success", ticks)
    if status is TickStatus.BUSY:
        return TrialResult(seed, "failure", ticks, None, "tick budget exceeded")
    return TrialResult(seed, "failure", ticks,
                       last_leaf_failure["node"], last_leaf_failure["error"])


def run_plan(doc: PlanDocument, scene: Scene, seed: int = 0,
             bus: Optional[MessageBus] = None,
             tick_budget: int = TICK_BUDGET,
             noise: Optional[NoiseModel] = None,
             plan_id: Optional[str] = None) -> TrialReport:
    result = run_trial(doc, scene, seed, bus=bus, tick_budget=tick_budget, noise=noise)
    return TrialReport(plan_id or plan_id_for(doc), scene.name, 1,
                       1 if result.status == "success" else 0, (result,))


def run_batch(doc: PlanDocument, scene: Scene, trials: int, seed_base: int = 100,
              bus: Optional[MessageBus] = None,
              noise: Optional[NoiseModel] = None,
              tick_budget: int = TICK_BUDGET,
              plan_id: Optional[str] = None) -> TrialReport:
    """Independent trials with seeds seed_base..seed_base+trials-1; per-trial
    failures are captured in the report, not raised."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for i in range(trials):
        results.append(run_trial(doc, scene, seed_base + i, bus=bus,
                                 tick_budget=tick_budget, noise=noise))
    successes = sum(1 for r in results if r.status == "success")
    return TrialReport(plan_id or plan_id_for(doc), scene.name, trials, successes,
                       tuple(results))


def override_noise(scene: Scene, pos_sigma: Optional[float] = None,
                   rot_sigma: Optional[float] = None,
                   dropout: Optional[float] = None) -> Optional[NoiseModel]:
    if pos_sigma is None and rot_sigma is None and dropout is None:
        return None
    base = scene.noise
    return NoiseModel(
        pos_sigma=base.pos_sigma if pos_sigma is None else pos_sigma,
        rot_sigma=base.rot_sigma if rot_sigma is None else rot_sigma,
        dropout_prob=base.dropout_prob if dropout is None else dropout,
    )


class PlanStore:
    """Content-addressed plan files under a data directory with a JSON index.

    The id is a hash of the canonical serialized text, so semantically equal
    plans share an id and stored plans are immutable.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"

    def _index(self) -> dict:
        if self._index_path.exists():
            return json.loads(self._index_path.read_text())
        return {}

    def put(self, doc: PlanDocument) -> str:
        plan_id = plan_id_for(doc)
        (self.root / f"{plan_id}.bt").write_text(serialize(doc))
        index = self._index()
        index[plan_id] = {"name": doc.name, "file": f"{plan_id}.bt"}
        self._index_path.write_text(json.dumps(index, indent=2, sort_keys=True))
        return plan_id

    def get(self, plan_id: str) -> PlanDocument:
        entry = self._index().get(plan_id)
        if entry is None:
            raise KeyError(f"unknown plan id {plan_id!r}")
        text = (self.root / entry["file"]).read_text()
        return parse(text, name=entry["name"])

    def list(self) -> list[dict]:
        return [{"id": k, "name": v["name"]} for k, v in sorted(self._index().items())]
