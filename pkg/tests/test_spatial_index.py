import math

import numpy as np
import pytest

from costar.geometry import Pose, rot_z
from costar.spatial_index import (
    DuplicateIdError,
    IndexEntry,
    NameAllocator,
    RStarTree,
    bulk_load,
    persistence_update,
)
from costar.world import ObjectInstance

from oracles import greedy_persistence, linear_scan_nearest


def random_entries(rng, n, labels=("node", "link")):
    return [IndexEntry(f"e{i:04d}", labels[int(rng.integers(len(labels)))],
                       rng.uniform(-1, 1, 3)) for i in range(n)]


class TestBulkLoad:
    def test_empty(self):
        t = bulk_load([])
        assert t.size() == 0
        assert t.height() == 0
        assert t.query_nearest([0, 0, 0]) is None

    def test_every_entry_findable(self):
        rng = np.random.default_rng(0)
        entries = random_entries(rng, 1000)
        t = bulk_load(entries)
        assert t.size() == 1000
        for e in entries[::37]:
            hit = t.query_nearest(e.position, max_distance=1e-9)
            assert hit is not None and hit.id == e.id
        assert sorted(x.id for x in t.entries()) == sorted(e.id for e in entries)

    def test_str_height_17_entries_fanout_4(self):
        rng = np.random.default_rng(1)
        t = bulk_load(random_entries(rng, 17), max_children=4)
        assert t.height() == 3

    def test_duplicate_id_rejected(self):
        with pytest.raises(DuplicateIdError):
            bulk_load([IndexEntry("a", "c", [0, 0, 0]), IndexEntry("a", "c", [1, 0, 0])])

    def test_bad_fanout_rejected(self):
        with pytest.raises(ValueError):
            RStarTree(max_children=1)


class TestQueryNearest:
    def test_class_filter(self):
        t = bulk_load([IndexEntry("A", "node", [0, 0, 0]),
                       IndexEntry("B", "link", [1, 0, 0])])
        hit = t.query_nearest([0.1, 0, 0], max_distance=2.0, class_label="link")
        assert hit.id == "B"

    def test_max_distance_excludes(self):
        t = bulk_load([IndexEntry("A", "node", [0, 0, 0]),
                       IndexEntry("B", "link", [1, 0, 0])])
        assert t.query_nearest([0.1, 0, 0], max_distance=0.05, class_label="node") is None

    def test_negative_distance_rejected(self):
        t = bulk_load([])
        with pytest.raises(ValueError):
            t.query_nearest([0, 0, 0], max_distance=-1)

    def test_tie_breaks_to_smaller_id(self):
        t = bulk_load([IndexEntry("b", "c", [1, 0, 0]), IndexEntry("a", "c", [-1, 0, 0])])
        assert t.query_nearest([0, 0, 0]).id == "a"

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(2)
        entries = random_entries(rng, 1000)
        t = bulk_load(entries)
        for _ in range(200):
            q = rng.uniform(-1.2, 1.2, 3)
            dmax = float(rng.choice([0.05, 0.3, math.inf]))
            label = ["node", "link", None][int(rng.integers(3))]
            got = t.query_nearest(q, max_distance=dmax, class_label=label)
            want = linear_scan_nearest(entries, q, max_distance=dmax, class_label=label)
            assert (got.id if got else None) == (want.id if want else None)


class TestRemove:
    def test_remove_and_size(self):
        rng = np.random.default_rng(3)
        entries = random_entries(rng, 64)
        t = bulk_load(entries, max_children=4)
        assert t.remove("e0007")
        assert not t.remove("e0007")
        assert t.size() == 63
        assert t.query_nearest(entries[7].position, max_distance=1e-9) is None

    def test_remove_all(self):
        entries = [IndexEntry(f"x{i}", "c", [i, 0, 0]) for i in range(9)]
        t = bulk_load(entries, max_children=2)
        for e in entries:
            assert t.remove(e.id)
        assert t.size() == 0
        assert t.query_nearest([0, 0, 0]) is None


def obj(class_label, x, y=0.0, z=0.0, orientation=None):
    return ObjectInstance("det", class_label, Pose([x, y, z], orientation if orientation is not None else [1, 0, 0, 0]))


class TestPersistenceUpdate:
    def test_all_new(self):
        renamed, t = persistence_update(bulk_load([]), [obj("node", 0), obj("node", 1),
                                                        obj("link", 2)], 0.05)
        assert [o.id for o in renamed] == ["node_1", "node_2", "link_1"]
        assert t.size() == 3

    def test_small_motion_keeps_id(self):
        prior = bulk_load([IndexEntry("node_1", "node", [0, 0, 0])])
        renamed, _ = persistence_update(prior, [obj("node", 0.01)], 0.05)
        assert renamed[0].id == "node_1"

    def test_first_match_blocks_second(self):
        prior = bulk_load([IndexEntry("node_1", "node", [0, 0, 0])])
        renamed, _ = persistence_update(
            prior, [obj("node", 0.01), obj("node", 0.02)], 0.05)
        assert renamed[0].id == "node_1"
        assert renamed[1].id != "node_1"

    def test_class_filter_blocks_match(self):
        prior = bulk_load([IndexEntry("node_1", "node", [0, 0, 0])])
        renamed, _ = persistence_update(prior, [obj("link", 0.0)], 0.05)
        assert renamed[0].id == "link_1"

    def test_output_size_and_uniqueness(self):
        rng = np.random.default_rng(4)
        prior = bulk_load([IndexEntry(f"node_{i}", "node", rng.uniform(-1, 1, 3))
                           for i in range(1, 9)])
        detected = [obj("node", *rng.uniform(-1, 1, 3)) for _ in range(20)]
        renamed, t = persistence_update(prior, detected, 0.2)
        assert len(renamed) == len(detected)
        ids = [o.id for o in renamed]
        assert len(set(ids)) == len(ids)
        assert t.size() == len(detected)

    def test_identity_preserved_under_small_motion(self):
        # spacing > 2*dmax and per-step motion < dmax/2: names never change
        rng = np.random.default_rng(5)
        dmax = 0.05
        centers = [np.array([i * 0.25, j * 0.25, 0.0])
                   for i in range(3) for j in range(3)]
        allocator = NameAllocator()
        tree = bulk_load([])
        names = None
        positions = list(centers)
        for step in range(12):
            detections = [ObjectInstance(f"d{k}", "node", Pose(p))
                          for k, p in enumerate(positions)]
            renamed, tree = persistence_update(tree, detections, dmax,
                                               allocator=allocator)
            got = [o.id for o in renamed]
            if names is None:
                names = got
            assert got == names
            positions = [p + rng.uniform(-1, 1, 3) * (dmax / 2 / math.sqrt(3))
                         for p in positions]

    def test_canonicalize_applies_symmetry(self):
        from costar.geometry import cube_group, quat_angle_between, set_canonical_orientation
        group = cube_group()
        inst = ObjectInstance("d0", "node", Pose([0.3, 0, 0], rot_z(math.radians(93))),
                              symmetry=group)
        renamed, _ = persistence_update(bulk_load([]), [inst], 0.05, canonicalize=True)
        expected = set_canonical_orientation(inst.pose, group)
        assert quat_angle_between(renamed[0].pose.orientation, expected.orientation) < 1e-12

    def test_matches_greedy_oracle_on_random_scenes(self):
        rng = np.random.default_rng(6)
        for scene in range(60):
            n_prior = int(rng.integers(0, 12))
            allocator = NameAllocator()
            prior_entries = []
            for _ in range(n_prior):
                label = ["node", "link"][int(rng.integers(2))]
                prior_entries.append(IndexEntry(allocator.fresh(label), label,
                                                rng.uniform(-0.5, 0.5, 3)))
            dmax = float(rng.choice([0.02, 0.05, 0.15]))
            detections = []
            for k in range(int(rng.integers(0, 16))):
                label = ["node", "link"][int(rng.integers(2))]
                base = prior_entries[int(rng.integers(n_prior))].position \
                    if n_prior and rng.random() < 0.6 else rng.uniform(-0.5, 0.5, 3)
                detections.append(ObjectInstance(
                    f"d{k}", label, Pose(base + rng.normal(0, dmax, 3))))

            seen = {e.id for e in prior_entries}
            counters = {}

            def fresh(label):
                counters[label] = counters.get(label, 0) + 1
                name = f"{label}_{counters[label]}"
                while name in seen:
                    counters[label] += 1
                    name = f"{label}_{counters[label]}"
                seen.add(name)
                return name

            expected = greedy_persistence(
                [(e.id, e.class_label, e.position) for e in prior_entries],
                detections, dmax, fresh)
            renamed, _ = persistence_update(bulk_load(prior_entries), detections,
                                            dmax, allocator=NameAllocator())
            assert [o.id for o in renamed] == expected
