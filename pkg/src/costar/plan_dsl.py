"""Textual task-plan language: parser, canonical serializer, JSON mirror.

Grammar (also in docs/GRAMMAR.md):

    plan     := node
    node     := internal | leaf
    internal := ("sequence" | "selector" | "repeat" INT | "reset" INT) "{" node* "}"
    leaf     := IDENT "." IDENT "(" [kv ("," kv)*] ")"
    kv       := IDENT "=" value
    value    := STRING | NUMBER | "true" | "false" | "@" IDENT | IDENT

Parameter values are scalars (string, number, bool) or symbol references
(`@name`) resolved at run time. `#` starts a line comment. Serialization is
canonical: 2-space indent, parameters sorted by key, so parse o serialize is
the identity on ASTs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .btree import (
    BTNode,
    LeafBinding,
    LeafNode,
    RepeatNode,
    ResetNode,
    RootNode,
    SelectorNode,
    SequenceNode,
)

INTERNAL_KEYWORDS = ("sequence", "selector", "repeat", "reset")
RESERVED = INTERNAL_KEYWORDS + ("true", "false")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"-?(?:\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\.\d+(?:[eE][+-]?\d+)?|\d+)")


class PlanSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SymbolRef:
    name: str


@dataclass
class PlanNode:
    kind: str  # sequence | selector | repeat | reset | leaf
    count: Optional[int] = None
    children: list = field(default_factory=list)
    component: Optional[str] = None
    operation: Optional[str] = None
    params: dict = field(default_factory=dict)
    id: str = field(default="", compare=False)
    span: tuple = field(default=(0, 0), compare=False)  # (line, col), 1-based

    @property
    def is_leaf(self) -> bool:
        return self.kind == "leaf"


@dataclass
class PlanDocument:
    name: str
    root: PlanNode

    def __post_init__(self):
        assign_ids(self.root)

    def spans(self) -> dict[str, tuple]:
        return {n.id: n.span for n in iter_nodes(self.root)}

    def to_engine_tree(self) -> RootNode:
        return RootNode("root", [_build_engine(self.root)])

    def to_json(self) -> dict:
        return {"name": self.name, "tree": node_to_json(self.root)}


def iter_nodes(node: PlanNode):
    yield node
    for child in node.children:
        yield from iter_nodes(child)


def assign_ids(root: PlanNode):
    for i, node in enumerate(iter_nodes(root)):
        node.id = f"n{i}"


def _build_engine(node: PlanNode) -> BTNode:
    if node.kind == "leaf":
        return LeafNode(node.id, LeafBinding(node.component, node.operation, dict(node.params)))
    children = [_build_engine(c) for c in node.children]
    if node.kind == "sequence":
        return SequenceNode(node.id, children)
    if node.kind == "selector":
        return SelectorNode(node.id, children)
    if node.kind == "repeat":
        return RepeatNode(node.id, node.count, children)
    if node.kind == "reset":
        return ResetNode(node.id, node.count, children)
    raise ValueError(f"unknown plan node kind {node.kind!r}")


# --- tokenizer ----------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    type: str  # ident | number | string | punct | eof
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)

    def err(msg):
        raise PlanSyntaxError(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "{}(),=.@":
            tokens.append(_Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise PlanSyntaxError("unterminated string", start_line, start_col)
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise PlanSyntaxError("unterminated escape", line, col)
                    esc = text[i + 1]
                    mapping = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
                    if esc not in mapping:
                        raise PlanSyntaxError(f"unknown escape \\{esc}", line, col)
                    buf.append(mapping[esc])
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            tokens.append(_Token("string", "".join(buf), start_line, start_col))
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            raw = m.group(0)
            value = float(raw) if any(c in raw for c in ".eE") else int(raw)
            tokens.append(_Token("number", value, line, col))
            col += len(raw)
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("ident", m.group(0), line, col))
            col += len(m.group(0))
            i = m.end()
            continue
        err(f"unexpected character {ch!r}")
    last_line = line
    last_col = col
    tokens.append(_Token("eof", None, last_line, last_col))
    return tokens


# --- parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.peek()
        raise PlanSyntaxError(message, tok.line, tok.col)

    def expect_punct(self, ch: str) -> _Token:
        tok = self.peek()
        if tok.type != "punct" or tok.value != ch:
            self.fail(f"expected {ch!r}")
        return self.next()

    def parse_node(self) -> PlanNode:
        tok = self.peek()
        if tok.type != "ident":
            self.fail("expected a node keyword or component name")
        if tok.value in INTERNAL_KEYWORDS:
            return self.parse_internal()
        nxt = self.tokens[self.pos + 1]
        if nxt.type == "punct" and nxt.value == ".":
            return self.parse_leaf()
        self.fail(f"unknown node keyword {tok.value!r}", tok)

    def parse_internal(self) -> PlanNode:
        kw = self.next()
        count = None
        if kw.value in ("repeat", "reset"):
            tok = self.peek()
            if tok.type != "number" or not isinstance(tok.value, int) or tok.value < 0:
                self.fail(f"{kw.value} requires a non-negative integer count")
            count = self.next().value
        self.expect_punct("{")
        children = []
        while True:
            tok = self.peek()
            if tok.type == "punct" and tok.value == "}":
                self.next()
                break
            if tok.type == "eof":
                self.fail("unexpected end of input inside block", tok)
            children.append(self.parse_node())
        return PlanNode(kind=kw.value, count=count, children=children,
                        span=(kw.line, kw.col))

    def parse_leaf(self) -> PlanNode:
        comp = self.next()
        self.expect_punct(".")
        op = self.peek()
        if op.type != "ident":
            self.fail("expected an operation name")
        self.next()
        self.expect_punct("(")
        params: dict = {}
        if not (self.peek().type == "punct" and self.peek().value == ")"):
            while True:
                key_tok = self.peek()
                if key_tok.type != "ident":
                    self.fail("expected a parameter name")
                self.next()
                if key_tok.value in params:
                    self.fail(f"duplicate parameter {key_tok.value!r}", key_tok)
                self.expect_punct("=")
                params[key_tok.value] = self.parse_value()
                tok = self.peek()
                if tok.type == "punct" and tok.value == ",":
                    self.next()
                    continue
                break
        self.expect_punct(")")
        return PlanNode(kind="leaf", component=comp.value, operation=op.value,
                        params=params, span=(comp.line, comp.col))

    def parse_value(self):
        tok = self.peek()
        if tok.type == "string":
            return self.next().value
        if tok.type == "number":
            return self.next().value
        if tok.type == "punct" and tok.value == "@":
            self.next()
            name = self.peek()
            if name.type != "ident":
                self.fail("expected a symbol name after '@'")
            self.next()
            return SymbolRef(name.value)
        if tok.type == "ident":
            if tok.value == "true":
                self.next()
                return True
            if tok.value == "false":
                self.next()
                return False
            return self.next().value  # bare identifier as string
        self.fail("expected a parameter value")


def parse(text: str, name: str = "plan") -> PlanDocument:
    parser = _Parser(_tokenize(text))
    root = parser.parse_node()
    trailing = parser.peek()
    if trailing.type != "eof":
        parser.fail("unexpected trailing input", trailing)
    return PlanDocument(name, root)


# --- serializer ------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, SymbolRef):
        return f"@{value.name}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        if (_IDENT_RE.fullmatch(value) and value not in RESERVED
                and not _NUMBER_RE.fullmatch(value)):
            return value
        escaped = value.replace("\\", "\\\\").replace('"', '\\"') \
            .replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    raise TypeError(f"unsupported parameter value {value!r}")


def _serialize_node(node: PlanNode, indent: int, out: list):
    pad = "  " * indent
    if node.is_leaf:
        params = ", ".join(f"{k}={_format_value(v)}" for k, v in sorted(node.params.items()))
        out.append(f"{pad}{node.component}.{node.operation}({params})")
        return
    header = node.kind if node.count is None else f"{node.kind} {node.count}"
    if not node.children:
        out.append(f"{pad}{header} {{ }}")
        return
    out.append(f"{pad}{header} {{")
    for child in node.children:
        _serialize_node(child, indent + 1, out)
    out.append(f"{pad}}}")


def serialize(doc: PlanDocument) -> str:
    lines: list = []
    _serialize_node(doc.root, 0, lines)
    return "\n".join(lines) + "\n"


# --- JSON mirror ------------------------------------------------------------------

def _param_to_json(value):
    if isinstance(value, SymbolRef):
        return {"$sym": value.name}
    return value


def _param_from_json(value):
    if isinstance(value, dict):
        if set(value.keys()) != {"$sym"}:
            raise ValueError(f"malformed parameter value {value!r}")
        return SymbolRef(value["$sym"])
    return value


def node_to_json(node: PlanNode) -> dict:
    if node.is_leaf:
        return {
            "id": node.id,
            "kind": "leaf",
            "component": node.component,
            "operation": node.operation,
            "params": {k: _param_to_json(v) for k, v in sorted(node.params.items())},
        }
    data = {"id": node.id, "kind": node.kind,
            "children": [node_to_json(c) for c in node.children]}
    if node.count is not None:
        data["count"] = node.count
    return data


def node_from_json(data: dict) -> PlanNode:
    kind = data.get("kind")
    if kind == "leaf":
        return PlanNode(kind="leaf", component=data["component"],
                        operation=data["operation"],
                        params={k: _param_from_json(v)
                                for k, v in (data.get("params") or {}).items()})
    if kind not in INTERNAL_KEYWORDS:
        raise ValueError(f"unknown plan node kind {kind!r}")
    count = data.get("count")
    if kind in ("repeat", "reset"):
        if not isinstance(count, int) or count < 0:
            raise ValueError(f"{kind} requires a non-negative integer count")
    return PlanNode(kind=kind, count=count,
                    children=[node_from_json(c) for c in (data.get("children") or [])])


def document_from_json(data: dict) -> PlanDocument:
    return PlanDocument(data.get("name", "plan"), node_from_json(data["tree"]))


def document_to_json_text(doc: PlanDocument) -> str:
    return json.dumps(doc.to_json(), indent=2, sort_keys=True)
