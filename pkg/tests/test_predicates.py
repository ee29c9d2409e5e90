import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from costar.geometry import Pose, rot_z
from costar.predicates import (
    ArityMismatchError,
    KnowledgeBase,
    PredicateStatement,
    Symbol,
    UnknownPredicateError,
    UnknownSymbolError,
    parse_query,
    parse_statement,
)


def stmt(name, *args):
    return PredicateStatement(name, tuple(args))


def object_symbol(name, x, y, z=0.0, label="node", orientation=None):
    return Symbol(name, "object", pose=Pose([x, y, z], orientation or [1, 0, 0, 0]),
                  class_label=label, source="test")


@pytest.fixture
def kb():
    base = KnowledgeBase()
    base.upsert(Symbol("table_center", "frame", pose=Pose([0.45, 0, 0]), source="scene"))
    return base


class TestGeometricPredicates:
    def test_left_of_positive_y_in_ref_frame(self, kb):
        kb.upsert(object_symbol("a", 0.45, 0.3))
        assert kb.evaluate(stmt("LeftOf", "a", "table_center"))
        assert not kb.evaluate(stmt("RightOf", "a", "table_center"))

    def test_boundary_satisfies_neither(self, kb):
        kb.upsert(object_symbol("a", 0.45, 0.0))
        assert not kb.evaluate(stmt("LeftOf", "a", "table_center"))
        assert not kb.evaluate(stmt("RightOf", "a", "table_center"))

    def test_reference_rotation_changes_sides(self, kb):
        # with the reference yawed 180deg, world +y becomes frame -y
        kb.upsert(Symbol("flipped", "frame", pose=Pose([0.45, 0, 0], rot_z(math.pi)),
                         source="test"))
        kb.upsert(object_symbol("a", 0.45, 0.3))
        assert kb.evaluate(stmt("RightOf", "a", "flipped"))

    def test_in_front_of_positive_x(self, kb):
        kb.upsert(object_symbol("a", 0.6, 0.0))
        assert kb.evaluate(stmt("InFrontOf", "a", "table_center"))
        kb.upsert(object_symbol("b", 0.3, 0.0))
        assert not kb.evaluate(stmt("InFrontOf", "b", "table_center"))

    def test_exactly_one_side_off_boundary(self, kb):
        rng = np.random.default_rng(0)
        for i in range(100):
            y = rng.uniform(-0.5, 0.5)
            if abs(y) < 1e-9:
                continue
            kb.upsert(object_symbol("probe", 0.45, y))
            left = kb.evaluate(stmt("LeftOf", "probe", "table_center"))
            right = kb.evaluate(stmt("RightOf", "probe", "table_center"))
            assert left != right

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-math.pi, math.pi))
    @settings(max_examples=100, deadline=None)
    def test_frame_invariance(self, dx, dy, yaw):
        # rigidly transforming every symbol together preserves relations
        base = KnowledgeBase()
        base.upsert(Symbol("ref", "frame", pose=Pose([0.4, 0, 0]), source="t"))
        base.upsert(object_symbol("a", 0.5, 0.2))
        before = (base.evaluate(stmt("LeftOf", "a", "ref")),
                  base.evaluate(stmt("InFrontOf", "a", "ref")),
                  base.evaluate(stmt("Near", "a", "ref")))
        world = Pose([dx, dy, 0.1], rot_z(yaw))
        moved = KnowledgeBase()
        moved.upsert(Symbol("ref", "frame", pose=world.compose(Pose([0.4, 0, 0])), source="t"))
        moved.upsert(Symbol("a", "object", pose=world.compose(Pose([0.5, 0.2, 0.0])),
                            class_label="node", source="t"))
        after = (moved.evaluate(stmt("LeftOf", "a", "ref")),
                 moved.evaluate(stmt("InFrontOf", "a", "ref")),
                 moved.evaluate(stmt("Near", "a", "ref")))
        assert before == after


class TestOtherPredicates:
    def test_is_class(self, kb):
        kb.upsert(object_symbol("node_1", 0.4, 0.0, label="node"))
        assert kb.evaluate(stmt("IsClass", "node_1", "node"))
        assert not kb.evaluate(stmt("IsClass", "node_1", "link"))

    def test_near_default_radius_and_explicit(self, kb):
        kb.upsert(object_symbol("a", 0.40, 0.0))
        kb.upsert(object_symbol("b", 0.45, 0.0))
        assert kb.evaluate(stmt("Near", "a", "b"))  # 5 cm < 0.1 default
        assert not kb.evaluate(stmt("Near", "a", "b", "0.01"))
        assert kb.evaluate(stmt("Near", "b", "a"))  # symmetric

    def test_gripper_closed_reads_meta(self, kb):
        kb.upsert(Symbol("gripper", "joint-state", source="g", meta={"closed": True}))
        assert kb.evaluate(stmt("GripperClosed", "gripper"))
        kb.upsert(Symbol("gripper", "joint-state", source="g", meta={"closed": False}))
        assert not kb.evaluate(stmt("GripperClosed", "gripper"))

    def test_tool_in_position_uses_station_region(self, kb):
        kb.upsert(Symbol("tool_station", "region", pose=Pose([0.4, -0.3, 0.05]),
                         source="scene", meta={"size": [0.1, 0.1, 0.1]}))
        kb.upsert(object_symbol("polisher_1", 0.42, -0.3, 0.05, label="polisher"))
        assert kb.evaluate(stmt("ToolInPosition", "polisher_1"))
        kb.upsert(object_symbol("polisher_1", 0.6, 0.3, 0.05, label="polisher"))
        assert not kb.evaluate(stmt("ToolInPosition", "polisher_1"))

    def test_tool_in_position_without_station_false(self, kb):
        kb.upsert(object_symbol("polisher_1", 0.4, 0.0, label="polisher"))
        assert not kb.evaluate(stmt("ToolInPosition", "polisher_1"))


class TestErrors:
    def test_unknown_predicate(self, kb):
        with pytest.raises(UnknownPredicateError):
            kb.evaluate(stmt("Levitates", "table_center"))

    def test_unknown_symbol(self, kb):
        with pytest.raises(UnknownSymbolError):
            kb.evaluate(stmt("LeftOf", "ghost", "table_center"))

    def test_arity_mismatch(self, kb):
        with pytest.raises(ArityMismatchError):
            kb.evaluate(stmt("LeftOf", "table_center"))
        with pytest.raises(ArityMismatchError):
            kb.evaluate(stmt("Near", "table_center", "table_center", "0.1", "extra"))

    def test_object_symbol_requires_pose_and_label(self):
        with pytest.raises(ValueError):
            Symbol("o", "object", pose=None, class_label="node")
        with pytest.raises(ValueError):
            Symbol("o", "object", pose=Pose(), class_label=None)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            Symbol("o", "blob")


class TestQuerySymbols:
    def fill(self, kb):
        kb.upsert(object_symbol("node_1", 0.45, -0.2))          # right
        kb.upsert(object_symbol("node_2", 0.45, -0.3))          # right
        kb.upsert(object_symbol("node_3", 0.45, 0.25))          # left
        kb.upsert(object_symbol("link_1", 0.45, -0.25, label="link"))

    def test_class_and_side_filter(self, kb):
        self.fill(kb)
        out = kb.query_symbols(parse_query("IsClass(?x, node) & RightOf(?x, @table_center)"))
        assert out == ["node_1", "node_2"]

    def test_empty_kb(self):
        kb = KnowledgeBase()
        assert kb.query_symbols([stmt("IsClass", "?x", "node")]) == []

    def test_single_filter_lexicographic(self, kb):
        self.fill(kb)
        out = kb.query_symbols([stmt("IsClass", "?x", "node")])
        assert out == ["node_1", "node_2", "node_3"]

    def test_requires_exactly_one_variable(self, kb):
        from costar.predicates import PredicateError
        with pytest.raises(PredicateError):
            kb.query_symbols([stmt("Near", "?x", "?y")])
        with pytest.raises(PredicateError):
            kb.query_symbols([stmt("IsClass", "node_1", "node")])

    def test_query_equals_filtered_enumeration(self, kb):
        self.fill(kb)
        templates = parse_query("IsClass(?x, node) & RightOf(?x, @table_center)")
        via_query = kb.query_symbols(templates)
        brute = []
        for sym in kb.symbols():
            grounded = [PredicateStatement(t.name,
                                           tuple(sym.name if a == "?x" else a for a in t.args))
                        for t in templates]
            if all(kb.evaluate(g) for g in grounded):
                brute.append(sym.name)
        assert via_query == brute


class TestListTrue:
    def test_left_object_listed_left_not_right(self, kb):
        kb.upsert(object_symbol("obj", 0.45, 0.3))
        names = {(s.name, s.args) for s in kb.list_true()}
        assert ("LeftOf", ("obj", "table_center")) in names
        assert ("RightOf", ("obj", "table_center")) not in names

    def test_empty_kb_empty_list(self):
        assert KnowledgeBase().list_true() == []

    def test_near_true_both_orders(self, kb):
        kb.upsert(object_symbol("a", 0.45, 0.0))
        kb.upsert(object_symbol("b", 0.48, 0.0))
        names = {(s.name, s.args) for s in kb.list_true()}
        assert ("Near", ("a", "b")) in names
        assert ("Near", ("b", "a")) in names

    def test_is_class_grounded_over_observed_labels(self, kb):
        kb.upsert(object_symbol("node_1", 0.4, 0.0, label="node"))
        kb.upsert(object_symbol("link_1", 0.5, 0.0, label="link"))
        names = {(s.name, s.args) for s in kb.list_true()}
        assert ("IsClass", ("node_1", "node")) in names
        assert ("IsClass", ("node_1", "link")) not in names

    def test_evaluation_pure(self, kb):
        kb.upsert(object_symbol("a", 0.45, 0.2))
        first = kb.list_true()
        second = kb.list_true()
        assert first == second


class TestParsing:
    def test_parse_statement_strips_decorations(self):
        s = parse_statement('IsClass(?x, "node")')
        assert s == stmt("IsClass", "?x", "node")
        s = parse_statement("RightOf(?x, @table_center)")
        assert s == stmt("RightOf", "?x", "table_center")

    def test_parse_query_conjunction(self):
        out = parse_query("IsClass(?x, node) & RightOf(?x, @table_center)")
        assert [t.name for t in out] == ["IsClass", "RightOf"]

    def test_malformed_raises(self):
        from costar.predicates import PredicateError
        with pytest.raises(PredicateError):
            parse_statement("not a predicate")
        with pytest.raises(PredicateError):
            parse_query("   ")


class TestReplaceKind:
    def test_perception_refresh_replaces_objects_only(self, kb):
        kb.upsert(object_symbol("node_1", 0.4, 0.0))
        kb.upsert(object_symbol("node_2", 0.5, 0.0))
        kb.replace_kind("object", [object_symbol("node_3", 0.6, 0.0)])
        names = [s.name for s in kb.symbols(kind="object")]
        assert names == ["node_3"]
        assert kb.get("table_center") is not None
