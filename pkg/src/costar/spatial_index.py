"""R*-Tree point index with Sort-Tile-Recursive bulk loading, plus the
persistent-identity update that matches fresh detections to prior objects.

The index stores object positions only; filtering by class label happens at
query time. Trees are rebuilt (bulk loaded) after every perception update
rather than incrementally rebalanced, which is cheap at workcell scale.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .geometry import set_canonical_orientation

if TYPE_CHECKING:
    from .world import ObjectInstance

DEFAULT_MAX_DISTANCE = 0.05  # meters; tabletop object spacing scale


class DuplicateIdError(ValueError):
    pass


@dataclass(frozen=True)
class IndexEntry:
    id: str
    class_label: str
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


class _Node:
    __slots__ = ("children", "entries", "lo", "hi")

    def __init__(self, entries=None, children=None):
        self.entries: list[IndexEntry] = entries or []
        self.children: list[_Node] = children or []
        self.lo = np.zeros(3)
        self.hi = np.zeros(3)
        self.refit()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def refit(self):
        if self.entries:
            pts = np.array([e.position for e in self.entries])
            self.lo = pts.min(axis=0)
            self.hi = pts.max(axis=0)
        elif self.children:
            self.lo = np.min([c.lo for c in self.children], axis=0)
            self.hi = np.max([c.hi for c in self.children], axis=0)
        else:
            self.lo = np.full(3, math.inf)
            self.hi = np.full(3, -math.inf)

    def box_sq_distance(self, pos) -> float:
        d = np.maximum(0.0, np.maximum(self.lo - pos, pos - self.hi))
        return float(np.dot(d, d))


def _str_tile(items: list, key_pos, capacity: int) -> list[list]:
    """Recursive STR tiling: sort by x, slab, then tile (y, z) within slabs.

    Sorts are stable, so the tiling is deterministic for a deterministic
    input order even with coincident coordinates.
    """

    def tile(chunk: list, dims: tuple[int, ...]) -> list[list]:
        if len(chunk) <= capacity:
            return [chunk]
        chunk = sorted(chunk, key=lambda it: float(key_pos(it)[dims[0]]))
        if len(dims) == 1:
            return [chunk[i:i + capacity] for i in range(0, len(chunk), capacity)]
        pages = math.ceil(len(chunk) / capacity)
        slabs = math.ceil(pages ** (1.0 / len(dims)))
        slab_size = math.ceil(len(chunk) / slabs)
        out = []
        for i in range(0, len(chunk), slab_size):
            out.extend(tile(chunk[i:i + slab_size], dims[1:]))
        return out

    return tile(list(items), (0, 1, 2))


class RStarTree:
    """Static point R*-Tree over IndexEntry records.

    Built via STR packing; supports filtered nearest-neighbor queries and
    entry removal (box refit without rebalancing).
    """

    def __init__(self, entries=None, max_children: int = 8, min_children: int = 2):
        if max_children < 2 or min_children < 1 or min_children > max_children:
            raise ValueError("invalid fan-out parameters")
        self.max_children = max_children
        self.min_children = min_children
        self._size = 0
        self._root: Optional[_Node] = None
        if entries:
            self._bulk_load(list(entries))

    def _bulk_load(self, entries: list[IndexEntry]):
        seen = set()
        for e in entries:
            if e.id in seen:
                raise DuplicateIdError(f"duplicate index entry id {e.id!r}")
            seen.add(e.id)
        self._size = len(entries)
        if not entries:
            self._root = None
            return
        leaves = [_Node(entries=chunk)
                  for chunk in _str_tile(entries, lambda e: e.position, self.max_children)]
        level = leaves
        while len(level) > 1:
            groups = _str_tile(level, lambda n: 0.5 * (n.lo + n.hi), self.max_children)
            level = [_Node(children=g) for g in groups]
        self._root = level[0]

    def size(self) -> int:
        return self._size

    def height(self) -> int:
        """Number of levels, counting the leaf level as 1. Empty tree: 0."""
        h, node = 0, self._root
        while node is not None:
            h += 1
            node = node.children[0] if node.children else None
        return h

    def entries(self) -> list[IndexEntry]:
        out = []

        def walk(node):
            if node is None:
                return
            out.extend(node.entries)
            for c in node.children:
                walk(c)

        walk(self._root)
        return out

    def query_nearest(self, position, max_distance: float = math.inf,
                      class_label: Optional[str] = None) -> Optional[IndexEntry]:
        """Nearest entry to `position` among those passing both filters.

        Distance bound is inclusive; exact-distance ties break toward the
        lexicographically smaller id.
        """
        if max_distance < 0:
            raise ValueError("max_distance must be >= 0")
        if self._root is None:
            return None
        pos = np.asarray(position, dtype=float).reshape(3)
        max_sq = max_distance * max_distance if math.isfinite(max_distance) else math.inf
        best: Optional[tuple[float, str, IndexEntry]] = None
        counter = 0
        heap = [(self._root.box_sq_distance(pos), counter, self._root)]
        while heap:
            box_sq, _, node = heapq.heappop(heap)
            if box_sq > max_sq:
                break
            if best is not None and box_sq > best[0]:
                break
            if node.is_leaf:
                for e in node.entries:
                    if class_label is not None and e.class_label != class_label:
                        continue
                    d = pos - e.position
                    sq = float(np.dot(d, d))
                    if sq > max_sq:
                        continue
                    cand = (sq, e.id, e)
                    if best is None or cand[:2] < best[:2]:
                        best = cand
            else:
                for c in node.children:
                    counter += 1
                    heapq.heappush(heap, (c.box_sq_distance(pos), counter, c))
        return best[2] if best else None

    def remove(self, entry_id: str) -> bool:
        """Remove the entry with the given id; prunes emptied nodes and refits
        bounding boxes along the path. Returns False if absent."""

        def recurse(node: _Node) -> bool:
            if node.is_leaf:
                for i, e in enumerate(node.entries):
                    if e.id == entry_id:
                        node.entries.pop(i)
                        node.refit()
                        return True
                return False
            for c in list(node.children):
                if recurse(c):
                    if (not c.entries) and (not c.children):
                        node.children.remove(c)
                    node.refit()
                    return True
            return False

        if self._root is None:
            return False
        removed = recurse(self._root)
        if removed:
            self._size -= 1
            if (not self._root.entries) and (not self._root.children):
                self._root = None
        return removed


def bulk_load(entries, max_children: int = 8, min_children: int = 2) -> RStarTree:
    return RStarTree(entries, max_children=max_children, min_children=min_children)


class NameAllocator:
    """Issues fresh persistent object names `<class>_<n>` with per-class
    monotonic counters. One allocator per engine instance."""

    def __init__(self):
        self._counters: dict[str, int] = {}

    def fresh(self, class_label: str) -> str:
        n = self._counters.get(class_label, 0) + 1
        self._counters[class_label] = n
        return f"{class_label}_{n}"


def persistence_update(tree: RStarTree, detected: list["ObjectInstance"],
                       max_distance: float = DEFAULT_MAX_DISTANCE,
                       canonicalize: bool = False,
                       allocator: Optional[NameAllocator] = None,
                       ) -> tuple[list["ObjectInstance"], RStarTree]:
    """Assign persistent identities to a fresh detection batch.

    Detections are processed in input order. Each one claims at most one prior
    entry: the nearest same-class entry within `max_distance`, which is removed
    from the tree so later detections cannot double-match it. Unmatched
    detections get fresh names from the allocator. Returns the renamed
    detections (same order and length as the input) and a freshly packed tree
    over them. The input tree is consumed (mutated by removals).
    """
    if max_distance < 0:
        raise ValueError("max_distance must be >= 0")
    allocator = allocator or NameAllocator()
    used = {e.id for e in tree.entries()}
    renamed = []
    for obj in detected:
        if canonicalize and obj.symmetry is not None:
            obj = dataclasses.replace(obj, pose=set_canonical_orientation(obj.pose, obj.symmetry))
        prior = tree.query_nearest(obj.pose.position, max_distance=max_distance,
                                   class_label=obj.class_label)
        if prior is not None:
            tree.remove(prior.id)
            renamed.append(dataclasses.replace(obj, id=prior.id))
        else:
            fresh = allocator.fresh(obj.class_label)
            while fresh in used:  # never reuse a name the scene has seen
                fresh = allocator.fresh(obj.class_label)
            used.add(fresh)
            renamed.append(dataclasses.replace(obj, id=fresh))
    new_tree = bulk_load(
        [IndexEntry(o.id, o.class_label, o.pose.position) for o in renamed],
        max_children=tree.max_children, min_children=tree.min_children)
    return renamed, new_tree
