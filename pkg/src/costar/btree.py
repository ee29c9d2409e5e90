"""Behavior tree representation and tick-driven execution.

A root node emits ticks that propagate left to right down the tree; leaves
dispatch operations and report SUCCESS, BUSY, or FAILURE; internal nodes route
ticks by their own rules:

- Sequence: tick children in order, one at a time, resuming at a BUSY child on
  the next tick; fails as soon as a child fails, succeeds once every child has
  succeeded.
- Selector: tick children in order until one succeeds; a failing child passes
  control to the next sibling; fails only when every child has failed.
- Repeat N: tick the child repeatedly, counting terminal results of either
  polarity; succeeds when the count reaches N. The strict flag makes a child
  failure abort the loop with FAILURE instead of counting toward N.
- Reset N: passes the child's status through, except that a child FAILURE with
  reset budget remaining clears the child subtree, consumes one reset, and
  reports FAILURE for that tick; after N resets child results pass through
  untouched.

Sequence and Selector are "with-memory": they record the running child and
resume there instead of re-ticking completed siblings. A node whose last tick
returned a terminal status restarts from scratch when ticked again; restarting
clears routing state but never the Reset node's consumed budget, which only an
explicit subtree reset reclaims.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional


class TickStatus(enum.Enum):
    SUCCESS = "SUCCESS"
    BUSY = "BUSY"
    FAILURE = "FAILURE"


class MalformedTreeError(Exception):
    pass


class UnboundOperationError(Exception):
    pass


@dataclass(frozen=True)
class LeafBinding:
    component: str
    operation: str
    params: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.component, self.operation)


class ExecutionContext:
    """Bridges leaves to components and observers to the tick loop.

    `start_operation(binding)` returns a handle with `poll() -> TickStatus`
    and `cancel()`; `on_return(node, status)` fires for every node return.
    """

    def __init__(self, start_operation: Callable, on_return: Optional[Callable] = None):
        self.start_operation = start_operation
        self.on_return = on_return
        self.tick_index = 0

    def emit(self, node: "BTNode", status: TickStatus):
        if self.on_return is not None:
            self.on_return(node, status)


class BTNode:
    kind = "node"

    def __init__(self, node_id: str, children: Optional[list["BTNode"]] = None):
        self.id = node_id
        self.children: list[BTNode] = children or []
        self._started = False
        self._done: Optional[TickStatus] = None

    @property
    def phase(self) -> str:
        if self._done is not None:
            return f"DONE({self._done.value})"
        return "RUNNING" if self._started else "FRESH"

    def tick(self, ctx: ExecutionContext) -> TickStatus:
        if self._done is not None:
            self._restart()
            self._done = None
        self._started = True
        status = self._tick(ctx)
        if status is not TickStatus.BUSY:
            self._done = status
        ctx.emit(self, status)
        return status

    def _tick(self, ctx: ExecutionContext) -> TickStatus:
        raise NotImplementedError

    def _restart(self):
        """Clear routing state before a fresh pass (after a terminal status)."""

    def _reset_self(self):
        self._started = False
        self._done = None
        self._restart()

    def label(self) -> str:
        return self.kind


class SequenceNode(BTNode):
    kind = "sequence"

    def __init__(self, node_id, children=None):
        super().__init__(node_id, children)
        self._index = 0

    def _restart(self):
        self._index = 0

    def _tick(self, ctx):
        while self._index < len(self.children):
            status = self.children[self._index].tick(ctx)
            if status is TickStatus.BUSY:
                return TickStatus.BUSY
            if status is TickStatus.FAILURE:
                return TickStatus.FAILURE
            self._index += 1
        return TickStatus.SUCCESS


class SelectorNode(BTNode):
    kind = "selector"

    def __init__(self, node_id, children=None):
        super().__init__(node_id, children)
        self._index = 0

    def _restart(self):
        self._index = 0

    def _tick(self, ctx):
        while self._index < len(self.children):
            status = self.children[self._index].tick(ctx)
            if status is TickStatus.BUSY:
                return TickStatus.BUSY
            if status is TickStatus.SUCCESS:
                return TickStatus.SUCCESS
            self._index += 1
        return TickStatus.FAILURE


class RepeatNode(BTNode):
    """Counts terminal child results toward N. strict=True turns a child
    failure into an immediate loop failure instead (not expressible in the
    plan language; engine-level option)."""

    kind = "repeat"

    def __init__(self, node_id, count: int, children=None, strict: bool = False):
        super().__init__(node_id, children)
        if count < 0:
            raise ValueError("repeat count must be >= 0")
        self.count = count
        self.strict = strict
        self._completed = 0

    def _restart(self):
        self._completed = 0

    def label(self):
        return f"repeat {self.count}"

    def _tick(self, ctx):
        if len(self.children) != 1:
            raise MalformedTreeError(f"{self.id}: repeat requires exactly one child")
        if self._completed >= self.count:
            return TickStatus.SUCCESS
        status = self.children[0].tick(ctx)
        if status is TickStatus.BUSY:
            return TickStatus.BUSY
        if self.strict and status is TickStatus.FAILURE:
            return TickStatus.FAILURE
        self._completed += 1
        if self._completed >= self.count:
            return TickStatus.SUCCESS
        return TickStatus.BUSY


class ResetNode(BTNode):
    kind = "reset"

    def __init__(self, node_id, budget: int, children=None):
        super().__init__(node_id, children)
        if budget < 0:
            raise ValueError("reset budget must be >= 0")
        self.budget = budget
        self._used = 0

    def label(self):
        return f"reset {self.budget}"

    def _reset_self(self):
        super()._reset_self()
        self._used = 0

    def _tick(self, ctx):
        if len(self.children) != 1:
            raise MalformedTreeError(f"{self.id}: reset requires exactly one child")
        status = self.children[0].tick(ctx)
        if status is TickStatus.FAILURE and self._used < self.budget:
            self._used += 1
            reset_subtree(self.children[0])
            return TickStatus.FAILURE
        return status


class RootNode(BTNode):
    kind = "root"

    def _tick(self, ctx):
        if len(self.children) != 1:
            raise MalformedTreeError(f"{self.id}: root requires exactly one child")
        return self.children[0].tick(ctx)


class LeafNode(BTNode):
    kind = "leaf"

    def __init__(self, node_id: str, binding: LeafBinding):
        super().__init__(node_id, None)
        self.binding = binding
        self._handle = None
        self.last_error: Optional[str] = None

    def label(self):
        return f"{self.binding.component}.{self.binding.operation}"

    def _reset_self(self):
        super()._reset_self()
        if self._handle is not None:
            self._handle.cancel()
            self._handle = None

    def _tick(self, ctx):
        if self._handle is None:
            self.last_error = None
            self._handle = ctx.start_operation(self.binding)
        status = self._handle.poll()
        if status is not TickStatus.BUSY:
            self.last_error = getattr(self._handle, "error", None)
            self._handle = None
        return status


def reset_subtree(node: BTNode):
    """Return the node and all descendants to FRESH; counters cleared, active
    leaf operations cancelled."""
    node._reset_self()
    for child in node.children:
        reset_subtree(child)


def walk(node: BTNode):
    yield node
    for child in node.children:
        yield from walk(child)


@dataclass(frozen=True)
class Diagnostic:
    node_id: str
    message: str

    def __str__(self):
        return f"{self.node_id}: {self.message}"


def validate(root: BTNode, known_operations: Optional[set] = None) -> list[Diagnostic]:
    """Structural diagnostics; an empty list means the tree is executable."""
    out = []
    seen: set[int] = set()
    ids: set[str] = set()

    def check(node: BTNode):
        if id(node) in seen:
            out.append(Diagnostic(node.id, "node appears more than once in the tree"))
            return
        seen.add(id(node))
        if node.id in ids:
            out.append(Diagnostic(node.id, f"duplicate node id {node.id!r}"))
        ids.add(node.id)
        if isinstance(node, LeafNode):
            if node.children:
                out.append(Diagnostic(node.id, "leaf nodes take no children"))
            if known_operations is not None and node.binding.key not in known_operations:
                out.append(Diagnostic(
                    node.id,
                    f"unbound operation {node.binding.component}.{node.binding.operation}"))
        elif isinstance(node, (RepeatNode, ResetNode)):
            if len(node.children) != 1:
                out.append(Diagnostic(node.id, f"{node.kind} requires exactly one child"))
        elif isinstance(node, RootNode):
            if len(node.children) != 1:
                out.append(Diagnostic(node.id, "root requires exactly one child"))
        for child in node.children:
            check(child)

    check(root)
    return out


class TransitionRecorder:
    """Per-tick node status transitions: one event whenever a node's returned
    status differs from the last one it reported."""

    def __init__(self):
        self.events: list[dict] = []
        self._last: dict[str, TickStatus] = {}

    def observer(self, ctx: ExecutionContext):
        def on_return(node: BTNode, status: TickStatus):
            if self._last.get(node.id) is status:
                return
            self._last[node.id] = status
            self.events.append({
                "nodeId": node.id,
                "status": status.value,
                "tickIndex": ctx.tick_index,
            })
        return on_return
