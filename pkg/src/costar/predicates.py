"""Knowledge base of named world symbols plus boolean predicates over them.

Symbols are the discrete entities task plans reason about: waypoints, detected
objects, regions, reference frames, joint-state style flags. Predicates map
symbols (and the continuous state carried on them) to booleans; the knowledge
base aggregates definitions from every component and answers point queries,
one-free-variable template queries, and full enumeration of the true set.

Geometric conventions: relational predicates are evaluated in the reference
symbol's frame. LeftOf(a, ref) is true iff a's position has a strictly
positive y component in ref's frame; RightOf mirrors it (strictly negative);
InFrontOf uses strictly positive x. A symbol exactly on the dividing plane
satisfies neither side.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Pose

NEAR_DEFAULT_RADIUS = 0.1
TOOL_STATION_SYMBOL = "tool_station"

SYMBOL_KINDS = ("waypoint", "object", "region", "frame", "joint-state")


class PredicateError(Exception):
    pass


class UnknownPredicateError(PredicateError):
    pass


class UnknownSymbolError(PredicateError):
    pass


class ArityMismatchError(PredicateError):
    pass


@dataclass
class Symbol:
    name: str
    kind: str
    pose: Optional[Pose] = None
    class_label: Optional[str] = None
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "object" and (self.pose is None or self.class_label is None):
            raise ValueError("object symbols must carry pose and class label")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "pose": self.pose.to_list() if self.pose else None,
            "classLabel": self.class_label,
            "source": self.source,
        }


@dataclass(frozen=True)
class PredicateStatement:
    name: str
    args: tuple

    def to_json(self) -> dict:
        return {"name": self.name, "args": list(self.args)}

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class PredicateDef:
    """A registered predicate: fixed symbol arity, optional trailing literal
    arguments, and an evaluator closed over the knowledge base."""

    name: str
    symbol_arity: int
    evaluator: Callable  # (kb, symbols, literals) -> bool
    min_literals: int = 0
    max_literals: int = 0
    enumerable: bool = True
    literal_domain: Optional[Callable] = None  # kb -> list of literal tuples
    source: str = "predicator"


def _rel_position(kb: "KnowledgeBase", sym: Symbol, ref: Symbol) -> Optional[np.ndarray]:
    if sym.pose is None or ref.pose is None:
        return None
    return ref.pose.inverse().transform_point(sym.pose.position)


def _left_of(kb, syms, lits):
    v = _rel_position(kb, syms[0], syms[1])
    return v is not None and v[1] > 0.0


def _right_of(kb, syms, lits):
    v = _rel_position(kb, syms[0], syms[1])
    return v is not None and v[1] < 0.0


def _in_front_of(kb, syms, lits):
    v = _rel_position(kb, syms[0], syms[1])
    return v is not None and v[0] > 0.0


def _near(kb, syms, lits):
    a, b = syms
    if a.pose is None or b.pose is None:
        return False
    radius = float(lits[0]) if lits else NEAR_DEFAULT_RADIUS
    return float(np.linalg.norm(a.pose.position - b.pose.position)) < radius


def _is_class(kb, syms, lits):
    return syms[0].class_label == lits[0]


def _gripper_closed(kb, syms, lits):
    return bool(syms[0].meta.get("closed", False))


def _tool_in_position(kb, syms, lits):
    station = kb.get(TOOL_STATION_SYMBOL)
    if station is None or station.pose is None or syms[0].pose is None:
        return False
    size = np.asarray(station.meta.get("size", [0.0, 0.0, 0.0]), dtype=float)
    delta = np.abs(syms[0].pose.position - station.pose.position)
    return bool(np.all(delta <= size / 2.0))


def _class_labels(kb) -> list[tuple]:
    labels = sorted({s.class_label for s in kb.symbols() if s.class_label})
    return [(label,) for label in labels]


BUILTIN_PREDICATES = (
    PredicateDef("LeftOf", 2, _left_of),
    PredicateDef("RightOf", 2, _right_of),
    PredicateDef("InFrontOf", 2, _in_front_of),
    # Near with an explicit radius literal is enumeration-exempt; the default
    # radius form is enumerated.
    PredicateDef("Near", 2, _near, max_literals=1),
    PredicateDef("IsClass", 1, _is_class, min_literals=1, max_literals=1,
                 literal_domain=_class_labels),
    PredicateDef("GripperClosed", 1, _gripper_closed),
    PredicateDef("ToolInPosition", 1, _tool_in_position),
)


class KnowledgeBase:
    """Aggregated symbols and predicate definitions; concurrent reads,
    serialized writes."""

    def __init__(self, register_builtins: bool = True):
        self._symbols: dict[str, Symbol] = {}
        self._defs: dict[str, PredicateDef] = {}
        self._lock = threading.RLock()
        if register_builtins:
            for d in BUILTIN_PREDICATES:
                self.register_predicate(d)

    # -- symbols -------------------------------------------------------------

    def upsert(self, symbol: Symbol):
        with self._lock:
            self._symbols[symbol.name] = symbol

    def remove(self, name: str):
        with self._lock:
            self._symbols.pop(name, None)

    def replace_kind(self, kind: str, symbols: list[Symbol]):
        """Atomically replace every symbol of one kind (perception refresh)."""
        with self._lock:
            for name in [n for n, s in self._symbols.items() if s.kind == kind]:
                del self._symbols[name]
            for s in symbols:
                if s.kind != kind:
                    raise ValueError(f"symbol {s.name} has kind {s.kind}, expected {kind}")
                self._symbols[s.name] = s

    def get(self, name: str) -> Optional[Symbol]:
        with self._lock:
            return self._symbols.get(name)

    def symbols(self, kind: Optional[str] = None) -> list[Symbol]:
        with self._lock:
            out = [s for s in self._symbols.values() if kind is None or s.kind == kind]
        return sorted(out, key=lambda s: s.name)

    # -- predicates ------------------------------------------------------------

    def register_predicate(self, definition: PredicateDef):
        with self._lock:
            self._defs[definition.name] = definition

    def predicate_defs(self) -> list[PredicateDef]:
        with self._lock:
            return sorted(self._defs.values(), key=lambda d: d.name)

    def _resolve(self, definition: PredicateDef, args: tuple) -> tuple[list[Symbol], list]:
        n_sym = definition.symbol_arity
        lo = n_sym + definition.min_literals
        hi = n_sym + definition.max_literals
        if not (lo <= len(args) <= hi):
            raise ArityMismatchError(
                f"{definition.name} takes between {lo} and {hi} argument(s), got {len(args)}")
        symbols = []
        for name in args[:n_sym]:
            sym = self.get(str(name))
            if sym is None:
                raise UnknownSymbolError(f"unknown symbol {name!r}")
            symbols.append(sym)
        return symbols, list(args[n_sym:])

    def evaluate(self, statement: PredicateStatement) -> bool:
        definition = self._defs.get(statement.name)
        if definition is None:
            raise UnknownPredicateError(f"unknown predicate {statement.name!r}")
        symbols, literals = self._resolve(definition, tuple(statement.args))
        return bool(definition.evaluator(self, symbols, literals))

    def query_symbols(self, templates: list[PredicateStatement]) -> list[str]:
        """Names of all symbols the templates' single shared free variable can
        bind to such that every template evaluates true. Free variables are
        arguments spelled `?name`."""
        variables = {a for t in templates for a in t.args
                     if isinstance(a, str) and a.startswith("?")}
        if len(variables) != 1:
            raise PredicateError(f"query requires exactly one free variable, found {sorted(variables)}")
        var = variables.pop()
        matches = []
        for sym in self.symbols():
            grounded = [
                PredicateStatement(t.name, tuple(sym.name if a == var else a for a in t.args))
                for t in templates
            ]
            if all(self.evaluate(g) for g in grounded):
                matches.append(sym.name)
        return matches

    def list_true(self) -> list[PredicateStatement]:
        """Every true grounding of the enumerable predicates over distinct
        symbol tuples, in deterministic order."""
        names = [s.name for s in self.symbols()]
        out = []
        for definition in self.predicate_defs():
            if not definition.enumerable:
                continue
            literal_tuples = definition.literal_domain(self) if definition.literal_domain else [()]
            for combo in _distinct_tuples(names, definition.symbol_arity):
                for lits in literal_tuples:
                    stmt = PredicateStatement(definition.name, combo + tuple(lits))
                    if self.evaluate(stmt):
                        out.append(stmt)
        return out


def _distinct_tuples(names: list[str], arity: int):
    if arity == 0:
        yield ()
        return
    for name in names:
        for rest in _distinct_tuples(names, arity - 1):
            if name not in rest:
                yield (name,) + rest


_STATEMENT_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*")


def parse_statement(text: str) -> PredicateStatement:
    """Parse `Name(arg, arg, ...)`. Arguments keep a leading `?` (free
    variable); a leading `@` (symbol reference) is stripped; quotes around
    literals are stripped."""
    m = _STATEMENT_RE.fullmatch(text)
    if not m:
        raise PredicateError(f"malformed predicate statement {text!r}")
    name, raw = m.group(1), m.group(2).strip()
    args = []
    if raw:
        for piece in raw.split(","):
            piece = piece.strip()
            if piece.startswith("@"):
                piece = piece[1:]
            elif len(piece) >= 2 and piece[0] == piece[-1] and piece[0] in "\"'":
                piece = piece[1:-1]
            args.append(piece)
    return PredicateStatement(name, tuple(args))


def parse_query(text: str) -> list[PredicateStatement]:
    """Parse a conjunction `A(...) & B(...)` into statement templates."""
    parts = [p for p in (piece.strip() for piece in text.split("&")) if p]
    if not parts:
        raise PredicateError("empty predicate query")
    return [parse_statement(p) for p in parts]
