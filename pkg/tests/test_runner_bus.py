import json

import pytest

from costar.bus import MessageBus, UnknownTopicError
from costar.plan_dsl import parse
from costar.runner import (
    PlanStore,
    ValidationFailedError,
    override_noise,
    plan_id_for,
    run_batch,
    run_plan,
    run_trial,
)
from costar.world import Scene, load_scene


@pytest.fixture
def assembly_scene():
    return load_scene("scenes/assembly.yaml")


@pytest.fixture
def assembly_plan():
    from pathlib import Path
    return parse(Path("plans/assembly.bt").read_text(), name="assembly")


class TestBus:
    def test_publish_then_read_in_order(self):
        bus = MessageBus()
        for i in range(3):
            bus.publish("t", {"i": i})
        got = bus.messages("t", 0)
        assert [m.payload["i"] for m in got] == [0, 1, 2]
        assert [m.sequence for m in got] == [0, 1, 2]

    def test_two_subscribers_identical_streams(self):
        bus = MessageBus()
        for i in range(5):
            bus.publish("t", {"i": i})
        a = [m.to_json() for m in bus.messages("t", 0)]
        b = [m.to_json() for m in bus.messages("t", 0)]
        assert a == b

    def test_from_sequence_resume(self):
        bus = MessageBus()
        for i in range(3):
            bus.publish("t", {"i": i})
        got = bus.messages("t", 2)
        assert [m.payload["i"] for m in got] == [2]

    def test_unknown_topic_configurable(self):
        bus = MessageBus(auto_create=False)
        with pytest.raises(UnknownTopicError):
            bus.messages("never", 0)
        lax = MessageBus(auto_create=True)
        assert lax.messages("never", 0) == []

    def test_per_topic_sequences_gap_free(self):
        bus = MessageBus()
        for i in range(10):
            bus.publish("a" if i % 2 else "b", {"i": i})
        for topic in ("a", "b"):
            seqs = [m.sequence for m in bus.messages(topic, 0)]
            assert seqs == list(range(len(seqs)))

    def test_global_stream_merges_in_publish_order(self):
        bus = MessageBus()
        bus.publish("a", {"n": 1})
        bus.publish("b", {"n": 2})
        bus.publish("a", {"n": 3})
        merged = bus.stream(0)
        assert [m.payload["n"] for m in merged] == [1, 2, 3]
        assert [m.global_seq for m in merged] == [0, 1, 2]
        only_a = bus.stream(0, topics={"a"})
        assert [m.payload["n"] for m in only_a] == [1, 3]


class TestRunPlan:
    def test_trivial_teach_plan(self):
        doc = parse("sequence { arm.Teach(name=taught) }")
        report = run_plan(doc, Scene(), seed=0)
        assert report.successes == 1
        assert report.per_trial[0].tick_count == 1

    def test_missing_component_fails_validation_before_any_tick(self):
        doc = parse("sequence { rocket.Launch() }")
        with pytest.raises(ValidationFailedError) as err:
            run_plan(doc, Scene())
        assert "unbound operation" in str(err.value).lower()

    def test_tick_budget_exceeded_reported(self):
        # a move long enough to outlast a tiny budget
        doc = parse('sequence { arm.Move(goal="0.3, 0.2, 0.2", speed=0.01) }')
        result = run_trial(doc, Scene(), seed=0, tick_budget=5)
        assert result.status == "failure"
        assert result.diagnostic == "tick budget exceeded"
        assert result.failure_node is None

    def test_failure_node_identifies_failing_leaf(self):
        doc = parse("sequence { arm.Teach() gripper.Close() }")
        result = run_trial(doc, Scene(), seed=0)  # empty scene: nothing to grasp
        assert result.status == "failure"
        assert result.failure_node == "n2"
        assert "NothingToGrasp" in result.diagnostic

    def test_assembly_single_trial_success(self, assembly_plan, assembly_scene):
        report = run_plan(assembly_plan, assembly_scene, seed=42)
        assert report.successes == 1


class TestRunBatch:
    def test_batch_aggregates(self, assembly_plan, assembly_scene):
        report = run_batch(assembly_plan, assembly_scene, trials=3, seed_base=100)
        assert report.trials == 3
        assert len(report.per_trial) == 3
        assert [t.seed for t in report.per_trial] == [100, 101, 102]

    def test_batch_deterministic_byte_identical(self, assembly_plan, assembly_scene):
        a = run_batch(assembly_plan, assembly_scene, trials=2, seed_base=100)
        b = run_batch(assembly_plan, assembly_scene, trials=2, seed_base=100)
        assert a.json_text() == b.json_text()
        assert a.json_text().encode() == b.json_text().encode()

    def test_single_trial_batch_equals_run_plan(self, assembly_plan, assembly_scene):
        batch = run_batch(assembly_plan, assembly_scene, trials=1, seed_base=7)
        single = run_plan(assembly_plan, assembly_scene, seed=7)
        assert batch.per_trial[0] == single.per_trial[0]

    def test_trials_must_be_positive(self, assembly_plan, assembly_scene):
        with pytest.raises(ValueError):
            run_batch(assembly_plan, assembly_scene, trials=0)

    def test_noise_override_applies(self, assembly_plan, assembly_scene):
        noise = override_noise(assembly_scene, pos_sigma=0.05)
        report = run_batch(assembly_plan, assembly_scene, trials=3, seed_base=100,
                           noise=noise)
        assert report.successes < 3
        failed = [t for t in report.per_trial if t.status == "failure"]
        assert failed and all(t.failure_node for t in failed)

    def test_override_noise_none_when_no_overrides(self, assembly_scene):
        assert override_noise(assembly_scene) is None
        n = override_noise(assembly_scene, rot_sigma=0.2)
        assert n.rot_sigma == 0.2
        assert n.pos_sigma == assembly_scene.noise.pos_sigma


class TestEventTrace:
    def test_every_transition_exactly_once(self, assembly_plan, assembly_scene):
        bus = MessageBus()
        run_plan(assembly_plan, assembly_scene, seed=42, bus=bus)
        events = [m.payload for m in bus.messages("bt", 0)]
        assert len(events) == len({(e["nodeId"], e["status"], e["tickIndex"])
                                   for e in events})
        root_events = [e for e in events if e["nodeId"] == "root"]
        assert root_events[-1]["status"] == "SUCCESS"

    def test_transitions_only_on_change(self):
        bus = MessageBus()
        doc = parse('sequence { arm.Move(goal="0.3, 0.2, 0.2", speed=0.5) }')
        run_plan(doc, Scene(), seed=0, bus=bus)
        events = [m.payload for m in bus.messages("bt", 0)]
        move_events = [e["status"] for e in events if e["nodeId"] == "n1"]
        assert move_events == ["BUSY", "SUCCESS"]

    def test_symbol_updates_published(self, assembly_plan, assembly_scene):
        bus = MessageBus()
        run_plan(assembly_plan, assembly_scene, seed=42, bus=bus)
        symbol_msgs = bus.messages("symbols", 0)
        assert symbol_msgs
        names = {s["name"] for s in symbol_msgs[-1].payload["symbols"]}
        assert "endpoint" in names and "table_center" in names

    def test_sim_snapshots_each_tick(self, assembly_scene):
        bus = MessageBus()
        doc = parse("sequence { arm.Teach() }")
        run_plan(doc, assembly_scene, seed=1, bus=bus)
        snaps = bus.messages("sim", 0)
        assert len(snaps) == 1
        assert "endpoint" in snaps[0].payload


class TestPlanStore:
    def test_put_get_roundtrip(self, tmp_path):
        store = PlanStore(tmp_path)
        doc = parse("sequence { arm.Teach() }", name="t")
        plan_id = store.put(doc)
        assert plan_id == plan_id_for(doc)
        again = store.get(plan_id)
        assert again.root == doc.root
        assert store.list() == [{"id": plan_id, "name": "t"}]

    def test_content_addressing_is_stable(self, tmp_path):
        store = PlanStore(tmp_path)
        a = store.put(parse("sequence { arm.Teach() }"))
        b = store.put(parse("sequence  {  arm.Teach( ) }"))  # same canonical form
        assert a == b

    def test_unknown_id(self, tmp_path):
        with pytest.raises(KeyError):
            PlanStore(tmp_path).get("feedfacecafe")


def test_report_json_shape(assembly_plan, assembly_scene):
    report = run_plan(assembly_plan, assembly_scene, seed=42, plan_id="abc")
    data = json.loads(report.json_text())
    assert data["planId"] == "abc"
    assert data["scene"] == "assembly"
    assert set(data["perTrial"][0]) == {"seed", "status", "tickCount",
                                        "failureNode", "diagnostic"}
