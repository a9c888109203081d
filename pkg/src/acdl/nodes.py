"""AST node types.

All nodes are immutable dataclasses carrying the span of their source extent.
Structural equality for round-trip and diff purposes goes through ast_equal,
which ignores spans and other non-structural bookkeeping fields.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Iterator, Union

from .diagnostics import EMPTY_SPAN, Span

# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class TimeVar:
    """A @-prefixed time reference: base step plus optional sub-step chain.

    `@T` -> base "T"; `@t.i` -> base "t", parts ("i",); `@1` -> base "1";
    `@t.substeps` -> base "t", substeps_attr True; `@T.*` -> variadic True.
    """

    base: str
    parts: tuple[str, ...] = ()
    substeps_attr: bool = False
    variadic: bool = False
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class PlainVar:
    """Bare identifier in expression position; resolved to a binding or an
    enum-like literal at evaluation time."""

    name: str
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class StrLit:
    value: str
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class InlineLit:
    """A {{...}} literal; text excludes the delimiters."""

    text: str
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / %
    lhs: "Expr"
    rhs: "Expr"
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class PathSeg:
    name: str
    indices: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class ContextVar:
    """namespace.path[indices], optionally agent-qualified: sys[agent].foo."""

    namespace: str  # env | sys | resp
    segments: tuple[PathSeg, ...]
    agent_qual: "Expr | None" = None
    span: Span = EMPTY_SPAN

    def path(self) -> str:
        return self.namespace + "." + ".".join(s.name for s in self.segments)


@dataclass(frozen=True)
class Template:
    """ALL_CAPS placeholder, optionally with arguments."""

    name: str
    args: tuple["Expr", ...] = ()
    has_parens: bool = False
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class FunctionCall:
    name: str
    args: tuple["Expr", ...] = ()
    trailing_indices: tuple["Expr", ...] = ()
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class FieldAccess:
    name: str


@dataclass(frozen=True)
class ElemIndex:
    index: "Expr"


RefPart = Union[FieldAccess, ElemIndex]


@dataclass(frozen=True)
class NameRef:
    """$name reference with optional element indexing and field access."""

    name: str
    parts: tuple[RefPart, ...] = ()
    binding: Span | None = None  # filled by the resolver; not structural
    span: Span = EMPTY_SPAN


Expr = Union[TimeVar, PlainVar, IntLit, StrLit, InlineLit, BinOp, ContextVar,
             Template, FunctionCall, NameRef]

# ----------------------------------------------------------------- conditions


@dataclass(frozen=True)
class Cmp:
    op: str  # == != < > <= >=
    lhs: Expr
    rhs: Expr
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class And:
    lhs: "Condition"
    rhs: "Condition"
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class Or:
    lhs: "Condition"
    rhs: "Condition"
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class AtomCond:
    """A bare expression used as a boolean atom (truth supplied by the
    environment)."""

    expr: Expr
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class AtSubstepZero:
    """`@T.0` used as a condition atom: true when the current time point's
    last coordinate is 0."""

    base: str
    span: Span = EMPTY_SPAN


Condition = Union[Cmp, And, Or, AtomCond, AtSubstepZero]

# -------------------------------------------------------------------- blocks


@dataclass(frozen=True)
class Comment:
    text: str  # without the leading //
    inline: bool = False
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class IndexContent:
    """A bare index/time expression used as a content piece (e.g. `@T`)."""

    expr: Expr
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class BreakStmt:
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class ContinueStmt:
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class ListComp:
    """[expr for binder in iterable] on the right of a name definition."""

    element: Expr
    binder: str
    iterable: Expr
    binder_at: bool = False  # spelled with @; not structural
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class NameDef:
    name: str
    value: Expr | ListComp
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class FragInvoke:
    name: str
    args: tuple[Expr, ...] = ()
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class RoleMessage:
    role: str  # S U A T N
    body: tuple["Node", ...]
    single_line: bool = False
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class ForEach:
    binder: str
    iterable: Expr
    body: tuple["Node", ...]
    binder_at: bool = False  # spelled with @; not structural
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class IfBranch:
    condition: Condition
    body: tuple["Node", ...]


@dataclass(frozen=True)
class If:
    branches: tuple[IfBranch, ...]
    else_body: tuple["Node", ...] | None = None
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class SwitchCase:
    label: Expr  # StrLit or PlainVar
    body: tuple["Node", ...]


@dataclass(frozen=True)
class Switch:
    scrutinee: Expr
    cases: tuple[SwitchCase, ...]
    default: tuple["Node", ...] | None = None
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class Mark:
    number: int
    body: tuple["Node", ...]
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class PromptEndsHere:
    condition: Condition
    span: Span = EMPTY_SPAN


Node = Union[RoleMessage, ForEach, If, Switch, Mark, PromptEndsHere, NameDef,
             FragInvoke, Comment, ContextVar, Template, FunctionCall, NameRef,
             IndexContent, InlineLit, StrLit, BreakStmt, ContinueStmt]

# ------------------------------------------------------------ top-level items


@dataclass(frozen=True)
class ParamDecl:
    name: str
    is_time: bool = False
    sub_names: tuple[str, ...] = ()
    variadic: bool = False


@dataclass(frozen=True)
class ContextDef:
    name: str
    params: tuple[ParamDecl, ...]
    body: tuple[Node, ...]
    span: Span = EMPTY_SPAN


@dataclass(frozen=True)
class FragmentDef:
    kind: str  # "string" | "roles"
    name: str
    params: tuple[ParamDecl, ...]
    body: tuple[Node, ...]
    span: Span = EMPTY_SPAN


Item = Union[ContextDef, FragmentDef, Comment]


@dataclass(frozen=True)
class Document:
    items: tuple[Item, ...]
    span: Span = EMPTY_SPAN


# ------------------------------------------------------------------- helpers

# Fields that do not participate in structural equality. single_line is
# spelling: `U: X` and `U: { X }` denote the same message.
_NON_STRUCTURAL = {"span", "binder_at", "binding", "has_parens", "single_line"}

CONTROL_TYPES = (ForEach, If, Switch, Mark)
LEAF_CONTENT_TYPES = (ContextVar, Template, FunctionCall, NameRef,
                      IndexContent, InlineLit, StrLit, BreakStmt, ContinueStmt)


def ast_equal(a: Any, b: Any, *, ignore_comments: bool = False) -> bool:
    """Structural equality ignoring spans (and comments, when requested)."""
    if ignore_comments:
        a = strip_comments(a)
        b = strip_comments(b)
    return _eq(a, b)


def _eq(a: Any, b: Any) -> bool:
    if type(a) is not type(b):
        return False
    if dataclasses.is_dataclass(a):
        for f in dataclasses.fields(a):
            if f.name in _NON_STRUCTURAL:
                continue
            if not _eq(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_eq(x, y) for x, y in zip(a, b))
    return a == b


def strip_comments(node: Any) -> Any:
    """Return a copy with every Comment node removed from item/body tuples."""
    if isinstance(node, Comment):
        return None
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        changes = {}
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if isinstance(v, tuple):
                new = tuple(x for x in (strip_comments(e) for e in v) if x is not None)
                if new != v:
                    changes[f.name] = new
            elif dataclasses.is_dataclass(v):
                sv = strip_comments(v)
                if sv is not v:
                    changes[f.name] = sv
        return dataclasses.replace(node, **changes) if changes else node
    return node


def node_count(node: Any) -> int:
    """Number of dataclass nodes in a subtree (used as diff cost)."""
    if not dataclasses.is_dataclass(node) or isinstance(node, type):
        return 0
    total = 1
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            total += sum(node_count(x) for x in v)
        elif dataclasses.is_dataclass(v):
            total += node_count(v)
    return total


def walk(node: Any) -> Iterator[Any]:
    """Yield node and every dataclass descendant, in source order."""
    if not dataclasses.is_dataclass(node) or isinstance(node, type):
        return
    yield node
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            for x in v:
                yield from walk(x)
        elif dataclasses.is_dataclass(v):
            yield from walk(v)


def to_json(node: Any) -> Any:
    """JSON-friendly representation: {"type": ..., fields...}."""
    if isinstance(node, Span):
        return [node.start, node.end]
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        out: dict[str, Any] = {"type": type(node).__name__}
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if f.name == "binding":
                continue
            if isinstance(v, tuple):
                out[f.name] = [to_json(x) for x in v]
            elif v is None or isinstance(v, (str, int, bool)):
                out[f.name] = v
            else:
                out[f.name] = to_json(v)
        return out
    return node


def from_json(data: Any) -> Any:
    """Inverse of to_json for AST payloads received over the wire."""
    if isinstance(data, dict) and "type" in data:
        cls = _NODE_CLASSES[data["type"]]
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            if f.name == "span":
                kwargs[f.name] = Span(v[0], v[1], 1, 1) if isinstance(v, list) else EMPTY_SPAN
            elif isinstance(v, list):
                kwargs[f.name] = tuple(from_json(x) for x in v)
            elif isinstance(v, dict):
                kwargs[f.name] = from_json(v)
            else:
                kwargs[f.name] = v
        return cls(**kwargs)
    return data


_NODE_CLASSES = {
    cls.__name__: cls
    for cls in (TimeVar, PlainVar, IntLit, StrLit, InlineLit, BinOp, PathSeg,
                ContextVar, Template, FunctionCall, FieldAccess, ElemIndex,
                NameRef, Cmp, And, Or, AtomCond, AtSubstepZero, Comment,
                IndexContent, BreakStmt, ContinueStmt, ListComp, NameDef,
                FragInvoke, RoleMessage, ForEach, IfBranch, If, SwitchCase,
                Switch, Mark, PromptEndsHere, ParamDecl, ContextDef,
                FragmentDef, Document)
}


def content_elements(body: tuple[Node, ...]) -> list[Node]:
    """Body elements excluding comments (comments never count as content)."""
    return [n for n in body if not isinstance(n, Comment)]
