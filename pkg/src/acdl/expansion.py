"""Instantiate a resolved context at a concrete time point.

The environment document supplies everything the language leaves external:
variable values, collection orderings, sub-step counts, condition truths,
and function/template valuations. Anything the environment does not supply
renders symbolically; only structural gaps (unbound index variables,
undecidable conditions, division by zero) produce diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diagnostics import EMPTY_SPAN, Diagnostic, Span, error
from .formatter import format_condition, format_expression
from .nodes import (
    And,
    AtomCond,
    AtSubstepZero,
    BinOp,
    BreakStmt,
    Cmp,
    Comment,
    Condition,
    ContextDef,
    ContextVar,
    ContinueStmt,
    ElemIndex,
    Expr,
    FieldAccess,
    ForEach,
    FragInvoke,
    FunctionCall,
    If,
    IndexContent,
    InlineLit,
    IntLit,
    ListComp,
    Mark,
    NameDef,
    NameRef,
    Node,
    Or,
    PlainVar,
    PromptEndsHere,
    RoleMessage,
    StrLit,
    Switch,
    Template,
    TimeVar,
    walk,
)

# ------------------------------------------------------------------ env model


@dataclass(frozen=True)
class TimePoint:
    """Hierarchical clock coordinate: (3,) for step 3, (3, 2) for sub-step 2
    of step 3."""

    coords: tuple[int, ...]

    @classmethod
    def of(cls, *coords: int) -> "TimePoint":
        return cls(tuple(coords))


@dataclass(frozen=True)
class EnvironmentDocument:
    """External valuation needed to expand a context at one time point.

    Key formats (documented in docs/environment.md):
      vars:        "env.user_question[2]", "sys.tool[2].tool_response[2]",
                   'env.bomb_location[2,"b1"]', 'sys["a1"].inventory[3]'
      collections: flattened variable path -> ordered key list
      substeps:    "[2]" -> sub-step count of step 2
      conditions:  '<canonical text> | t=1' (bindings sorted by name,
                   omitted when the atom has no bound variables)
      functions:   'summarize(sys.history[3])' -> value (string, number,
                   list, or object); template names key template valuations
      params:      values for plain (non-time) context parameters
    """

    time: TimePoint
    vars: dict[str, str] = field(default_factory=dict)
    collections: dict[str, tuple[str, ...]] = field(default_factory=dict)
    substeps: dict[tuple[int, ...], int] = field(default_factory=dict)
    conditions: dict[str, bool] = field(default_factory=dict)
    functions: dict[str, object] = field(default_factory=dict)
    params: dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "EnvironmentDocument":
        time = TimePoint(tuple(int(c) for c in data.get("time", [1])))
        substeps = {}
        for key, count in data.get("substeps", {}).items():
            coord = tuple(int(p) for p in key.strip("[]").split(",") if p.strip())
            substeps[coord] = int(count)
        return cls(
            time=time,
            vars=dict(data.get("vars", {})),
            collections={k: tuple(v) for k, v in data.get("collections", {}).items()},
            substeps=substeps,
            conditions=dict(data.get("conditions", {})),
            functions=dict(data.get("functions", {})),
            params=dict(data.get("params", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentDocument":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "time": list(self.time.coords),
            "vars": dict(self.vars),
            "collections": {k: list(v) for k, v in self.collections.items()},
            "substeps": {"[" + ",".join(str(c) for c in k) + "]": v
                         for k, v in self.substeps.items()},
            "conditions": dict(self.conditions),
            "functions": dict(self.functions),
            "params": dict(self.params),
        }


# ------------------------------------------------------------------- output


@dataclass(frozen=True)
class Slot:
    kind: str  # template | var | function | literal | unresolved
    text: str
    span: Span
    bound: bool  # True when text is a concrete environment-supplied value
    bindings: tuple[tuple[str, object], ...] = ()

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "text": self.text,
                     "span": [self.span.start, self.span.end], "bound": self.bound}
        if self.bindings:
            out["bindings"] = {k: _json_value(v) for k, v in self.bindings}
        return out


@dataclass(frozen=True)
class Message:
    role: str
    slots: tuple[Slot, ...]

    def to_json(self) -> dict:
        return {"role": self.role, "slots": [s.to_json() for s in self.slots]}


@dataclass(frozen=True)
class MarkExtent:
    number: int
    message_range: tuple[int, int] | None = None  # [a, b) over messages
    message: int | None = None                    # slot-level mark host
    slot_range: tuple[int, int] | None = None     # [a, b) over slots

    def to_json(self) -> dict:
        out: dict = {"number": self.number}
        if self.message_range is not None:
            out["messages"] = list(self.message_range)
        if self.message is not None:
            out["message"] = self.message
            out["slots"] = list(self.slot_range or (0, 0))
        return out


@dataclass(frozen=True)
class ExpandedPrompt:
    messages: tuple[Message, ...]
    marks: tuple[MarkExtent, ...] = ()

    def roles(self) -> list[str]:
        return [m.role for m in self.messages]

    def to_json(self) -> dict:
        return {"messages": [m.to_json() for m in self.messages],
                "marks": [m.to_json() for m in self.marks]}

    def dumps(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json(), indent=indent, ensure_ascii=False)


def _json_value(v: object) -> object:
    if isinstance(v, tuple):
        return ".".join(str(c) for c in v)
    return v


# ---------------------------------------------------------------- rendering


def render_key_value(v: object) -> str:
    """How an evaluated index renders inside a flattened lookup key."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return ".".join(str(c) for c in v)
    return '"' + str(v) + '"'


class _Gap(Exception):
    def __init__(self, code: str, message: str, span: Span):
        super().__init__(message)
        self.code = code
        self.msg = message
        self.span = span


class _LoopBreak(Exception):
    pass


class _LoopContinue(Exception):
    pass


class _Truncate(Exception):
    pass


_UNDECIDED = object()


# ---------------------------------------------------------------- evaluation


class _Evaluator:
    """Shared expression/condition evaluation over bindings + environment."""

    def __init__(self, env: EnvironmentDocument, file: str):
        self.env = env
        self.file = file
        self.bindings: list[dict[str, object]] = [{}]
        self.names: list[dict[str, object]] = [{}]  # $name -> concrete value or None
        self.name_texts: list[dict[str, str]] = [{}]
        self.diags: list[Diagnostic] = []

    # ---- scope helpers

    def push_scope(self) -> None:
        self.bindings.append({})
        self.names.append({})
        self.name_texts.append({})

    def pop_scope(self) -> None:
        self.bindings.pop()
        self.names.pop()
        self.name_texts.pop()

    def bind(self, name: str, value: object) -> None:
        self.bindings[-1][name] = value

    def bind_name(self, name: str, value: object, text: str) -> None:
        self.names[-1][name] = value
        self.name_texts[-1][name] = text

    def lookup(self, name: str) -> object:
        for frame in reversed(self.bindings):
            if name in frame:
                return frame[name]
        lowered = name.lower()
        for frame in reversed(self.bindings):
            for key, value in frame.items():
                if key.lower() == lowered:
                    return value
        return _UNDECIDED

    def lookup_name(self, name: str) -> tuple[object, str | None]:
        for values, texts in zip(reversed(self.names), reversed(self.name_texts)):
            if name in values:
                return values[name], texts[name]
        return _UNDECIDED, None

    def bound_vars(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for frame in self.bindings:
            out.update(frame)
        return out

    def gap(self, code: str, message: str, span: Span) -> _Gap:
        return _Gap(code, message, span)

    def report(self, g: _Gap) -> None:
        self.diags.append(error(g.code, g.msg, g.span, self.file))

    # ---- index arithmetic (exact integers; / truncates toward zero)

    def eval_index(self, expr: Expr) -> object:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, TimeVar):
            return self._eval_time(expr)
        if isinstance(expr, PlainVar):
            v = self.lookup(expr.name)
            if v is _UNDECIDED:
                raise self.gap("X-UNBOUND-IDX",
                               f"unbound index variable '{expr.name}'", expr.span)
            return _int_if_digits(v)
        if isinstance(expr, BinOp):
            lhs = self._int_operand(expr.lhs, expr)
            rhs = self._int_operand(expr.rhs, expr)
            if expr.op == "+":
                return lhs + rhs
            if expr.op == "-":
                return lhs - rhs
            if expr.op == "*":
                return lhs * rhs
            if rhs == 0:
                raise self.gap("X-DIV-ZERO", "division by zero", expr.span)
            q = abs(lhs) // abs(rhs)
            if (lhs < 0) != (rhs < 0):
                q = -q
            return q if expr.op == "/" else lhs - rhs * q
        if isinstance(expr, ContextVar):
            key = self.flatten_key(expr)
            if key in self.env.vars:
                return _int_if_digits(self.env.vars[key])
            raise self.gap("X-UNBOUND-IDX", f"no value for '{key}'", expr.span)
        if isinstance(expr, NameRef):
            v = self._name_value(expr)
            if v is _UNDECIDED:
                raise self.gap("X-UNBOUND-IDX",
                               f"'${expr.name}' has no concrete value", expr.span)
            return _int_if_digits(v)
        if isinstance(expr, FunctionCall):
            fp = self.fingerprint(expr)
            if fp in self.env.functions:
                return _int_if_digits(self.env.functions[fp])
            raise self.gap("X-UNBOUND-IDX", f"no valuation for '{fp}'", expr.span)
        if isinstance(expr, (StrLit, InlineLit)):
            return expr.value if isinstance(expr, StrLit) else expr.text
        raise self.gap("X-BAD-OPERAND",
                       f"cannot use {type(expr).__name__} as an index", expr.span)

    def _int_operand(self, expr: Expr, parent: BinOp) -> int:
        v = self.eval_index(expr)
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.gap("X-BAD-OPERAND",
                           f"arithmetic needs integers, got {v!r}", parent.span)
        return v

    def _eval_time(self, tv: TimeVar) -> object:
        if tv.base.isdigit():
            base: object = int(tv.base)
        else:
            base = self.lookup(tv.base)
            if base is _UNDECIDED:
                raise self.gap("X-UNBOUND-IDX",
                               f"unbound time variable '@{tv.base}'", tv.span)
        coords: list[int] = list(base) if isinstance(base, tuple) else [base]  # type: ignore[list-item]
        for part in tv.parts:
            if part.isdigit():
                coords.append(int(part))
            else:
                v = self.lookup(part)
                if v is _UNDECIDED:
                    raise self.gap("X-UNBOUND-IDX",
                                   f"unbound sub-step variable '{part}'", tv.span)
                if not isinstance(v, int):
                    raise self.gap("X-BAD-OPERAND",
                                   f"sub-step '{part}' is not an integer", tv.span)
                coords.append(v)
        if tv.substeps_attr:
            key = tuple(coords)
            if key not in self.env.substeps:
                pretty = "[" + ",".join(str(c) for c in key) + "]"
                raise self.gap("X-UNBOUND-IDX",
                               f"no sub-step count for {pretty}", tv.span)
            return self.env.substeps[key]
        if len(coords) == 1:
            return coords[0]
        return tuple(coords)

    # ---- flattened keys and fingerprints

    def flatten_key(self, var: ContextVar) -> str:
        out = var.namespace
        if var.agent_qual is not None:
            out += "[" + render_key_value(self.eval_index(var.agent_qual)) + "]"
        for seg in var.segments:
            out += "." + seg.name
            if seg.indices:
                rendered = [render_key_value(self.eval_index(i)) for i in seg.indices]
                out += "[" + ",".join(rendered) + "]"
        return out

    def fingerprint(self, call: FunctionCall | Template) -> str:
        name = call.name
        args = call.args
        if isinstance(call, Template) and not args and not call.has_parens:
            return name
        rendered = [self._render_arg(a) for a in args]
        fp = name + "(" + ",".join(rendered) + ")"
        if isinstance(call, FunctionCall) and call.trailing_indices:
            fp += "[" + ",".join(render_key_value(self.eval_index(i))
                                 for i in call.trailing_indices) + "]"
        return fp

    def _render_arg(self, expr: Expr) -> str:
        if isinstance(expr, ContextVar):
            return self.flatten_key(expr)
        if isinstance(expr, (IntLit, TimeVar, BinOp, PlainVar)):
            try:
                return render_key_value(self.eval_index(expr))
            except _Gap:
                return format_expression(expr)
        if isinstance(expr, (StrLit, InlineLit)):
            text = expr.value if isinstance(expr, StrLit) else expr.text
            return '"' + text + '"'
        if isinstance(expr, FunctionCall):
            return self.fingerprint(expr)
        if isinstance(expr, Template):
            return self.fingerprint(expr)
        if isinstance(expr, NameRef):
            v = self._name_value(expr)
            if v is _UNDECIDED:
                return format_expression(expr)
            if isinstance(v, (list, dict)):
                return json.dumps(v, separators=(",", ":"), ensure_ascii=False)
            return render_key_value(v)
        return format_expression(expr)

    def _name_value(self, ref: NameRef) -> object:
        value, _text = self.lookup_name(ref.name)
        if value is _UNDECIDED or value is None:
            return _UNDECIDED
        for part in ref.parts:
            if value is _UNDECIDED:
                return _UNDECIDED
            if isinstance(part, FieldAccess):
                if part.name == "len" and isinstance(value, (list, tuple)):
                    value = len(value)
                elif isinstance(value, dict) and part.name in value:
                    value = value[part.name]
                else:
                    return _UNDECIDED
            elif isinstance(part, ElemIndex):
                idx = self.eval_index(part.index)
                if isinstance(value, (list, tuple)):
                    if not isinstance(idx, int) or not (1 <= idx <= len(value)):
                        raise self.gap("X-UNBOUND-IDX",
                                       f"index {idx!r} out of range for '${ref.name}' "
                                       f"(length {len(value)})", ref.span)
                    value = value[idx - 1]  # element indices count from 1
                elif isinstance(value, dict) and str(idx) in value:
                    value = value[str(idx)]
                else:
                    return _UNDECIDED
        return value

    # ---- condition evaluation (short-circuit, left to right)

    def eval_operand(self, expr: Expr) -> object:
        if isinstance(expr, (IntLit, TimeVar, BinOp)):
            return self.eval_index(expr)
        if isinstance(expr, PlainVar):
            v = self.lookup(expr.name)
            if v is _UNDECIDED:
                return expr.name  # enum-like literal
            return v
        if isinstance(expr, ContextVar):
            key = self.flatten_key(expr)
            if key in self.env.vars:
                return self.env.vars[key]
            return _UNDECIDED
        if isinstance(expr, (StrLit, InlineLit)):
            return expr.value if isinstance(expr, StrLit) else expr.text
        if isinstance(expr, (FunctionCall, Template)):
            fp = self.fingerprint(expr)
            if fp in self.env.functions:
                return self.env.functions[fp]
            return _UNDECIDED
        if isinstance(expr, NameRef):
            return self._name_value(expr)
        return _UNDECIDED

    def eval_condition(self, cond: Condition) -> bool:
        if isinstance(cond, And):
            return self.eval_condition(cond.lhs) and self.eval_condition(cond.rhs)
        if isinstance(cond, Or):
            return self.eval_condition(cond.lhs) or self.eval_condition(cond.rhs)
        if isinstance(cond, AtSubstepZero):
            return self.env.time.coords[-1] == 0
        if isinstance(cond, Cmp):
            try:
                lhs = self.eval_operand(cond.lhs)
                rhs = self.eval_operand(cond.rhs)
            except _Gap as g:
                if g.code == "X-DIV-ZERO":
                    raise
                lhs = rhs = _UNDECIDED
            if lhs is _UNDECIDED or rhs is _UNDECIDED:
                return self._atom_fallback(cond)
            return _compare(cond.op, lhs, rhs, lambda m: self.gap(
                "X-UNDECIDED-COND", m + self._binding_suffix(cond), cond.span))
        if isinstance(cond, AtomCond):
            key = self.atom_key(cond)
            if key in self.env.conditions:
                return bool(self.env.conditions[key])
            try:
                v = self.eval_operand(cond.expr)
            except _Gap:
                v = _UNDECIDED
            if isinstance(v, bool):
                return v
            if isinstance(v, int):
                return v != 0
            if isinstance(v, str) and v.lower() in ("true", "false"):
                return v.lower() == "true"
            raise self.gap("X-UNDECIDED-COND",
                           f"no truth value for '{key}'", cond.span)
        raise self.gap("X-UNDECIDED-COND", "unsupported condition form",
                       getattr(cond, "span", EMPTY_SPAN))

    def _atom_fallback(self, cond: Condition) -> bool:
        key = self.atom_key(cond)
        if key in self.env.conditions:
            return bool(self.env.conditions[key])
        raise self.gap("X-UNDECIDED-COND", f"cannot decide '{key}'",
                       getattr(cond, "span", EMPTY_SPAN))

    def atom_key(self, cond: Condition) -> str:
        text = format_condition(cond)
        return text + self._binding_suffix(cond)

    def _binding_suffix(self, cond: Condition) -> str:
        free: set[str] = set()
        for sub in walk(cond):
            if isinstance(sub, PlainVar):
                free.add(sub.name)
            elif isinstance(sub, TimeVar) and not sub.base.isdigit():
                free.add(sub.base)
                free.update(p for p in sub.parts if not p.isdigit())
        bound = self.bound_vars()
        pairs = []
        for name in sorted(free):
            if name in bound:
                pairs.append(f"{name}={render_key_value(bound[name])}")
        return " | " + ",".join(pairs) if pairs else ""


def _int_if_digits(v: object) -> object:
    if isinstance(v, str) and v.lstrip("-").isdigit():
        return int(v)
    return v


def _compare(op: str, lhs: object, rhs: object, make_gap) -> bool:
    li = _as_int(lhs)
    ri = _as_int(rhs)
    if op in ("==", "!="):
        if li is not None and ri is not None:
            eq = li == ri
        else:
            eq = _as_text(lhs) == _as_text(rhs)
        return eq if op == "==" else not eq
    if li is None or ri is None:
        raise make_gap(f"ordering comparison needs integers, got "
                       f"{_as_text(lhs)!r} {op} {_as_text(rhs)!r}")
    if op == "<":
        return li < ri
    if op == ">":
        return li > ri
    if op == "<=":
        return li <= ri
    return li >= ri


def _as_int(v: object) -> int | None:
    if isinstance(v, bool):
        return None
    if isinstance(v, int):
        return v
    if isinstance(v, str) and v.lstrip("-").isdigit():
        return int(v)
    return None


def _as_text(v: object) -> str:
    if isinstance(v, tuple):
        return ".".join(str(c) for c in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"), ensure_ascii=False)
    return str(v)


# ----------------------------------------------------------------- expansion


def expand(context: ContextDef, env: EnvironmentDocument,
           file: str = "<memory>") -> tuple[ExpandedPrompt, list[Diagnostic]]:
    """Produce the concrete message sequence for one time point.

    Requires a resolved context (no fragment invocations). Fills as much as
    the environment allows; every gap becomes a diagnostic with provenance.
    """
    ex = _Expander(env, file)
    ex.bind_time_params(context)
    try:
        ex.run_blocks(context.body)
    except _Truncate:
        ex.finish_message()
    ex.close_marks()
    return ExpandedPrompt(tuple(ex.messages), tuple(ex.marks)), ex.ev.diags


def expand_series(context: ContextDef, envs: list[EnvironmentDocument],
                  file: str = "<memory>") -> tuple[list[ExpandedPrompt], list[Diagnostic]]:
    """Expand at each environment in order; time points must strictly increase."""
    diags: list[Diagnostic] = []
    if not envs:
        diags.append(error("X-EMPTY-SERIES", "expansion series needs at least one "
                           "environment", EMPTY_SPAN, file))
        return [], diags
    prev = None
    for e in envs:
        if prev is not None and e.time.coords <= prev:
            diags.append(error("X-SERIES-ORDER",
                               "series time points must strictly increase", EMPTY_SPAN, file))
            break
        prev = e.time.coords
    out = []
    for e in envs:
        prompt, d = expand(context, e, file)
        out.append(prompt)
        diags.extend(d)
    return out, diags


class _OpenMark:
    def __init__(self, number: int, message_start: int, slot_host: int | None,
                 slot_start: int | None):
        self.number = number
        self.message_start = message_start
        self.slot_host = slot_host
        self.slot_start = slot_start


class _Expander:
    def __init__(self, env: EnvironmentDocument, file: str):
        self.ev = _Evaluator(env, file)
        self.env = env
        self.file = file
        self.messages: list[Message] = []
        self.current_role: str | None = None
        self.current_slots: list[Slot] = []
        self.marks: list[MarkExtent] = []
        self.open_marks: list[_OpenMark] = []

    # ---- message assembly

    def finish_message(self) -> None:
        if self.current_role is not None:
            self.messages.append(Message(self.current_role, tuple(self.current_slots)))
            self.current_role = None
            self.current_slots = []

    def add_slot(self, slot: Slot) -> None:
        self.current_slots.append(slot)

    def close_marks(self) -> None:
        while self.open_marks:
            self._close_mark(self.open_marks.pop())

    def _close_mark(self, m: _OpenMark) -> None:
        if m.slot_host is not None:
            self.marks.append(MarkExtent(m.number, None, m.slot_host,
                                         (m.slot_start or 0, len(self.current_slots))))
        else:
            self.marks.append(MarkExtent(m.number, (m.message_start, len(self.messages))))

    # ---- block walking

    def bind_time_params(self, context: ContextDef) -> None:
        coords = self.env.time.coords
        declared = [p for p in context.params if p.is_time]
        if declared:
            p = declared[0]
            depth = 1 + len(p.sub_names)
            if not p.variadic and len(coords) != depth:
                self.ev.diags.append(error(
                    "X-TIME-DEPTH",
                    f"context expects a depth-{depth} time point, got {list(coords)}",
                    EMPTY_SPAN, self.file))
            self.ev.bind(p.name, coords[0])
            for i, sub in enumerate(p.sub_names):
                if 1 + i < len(coords):
                    self.ev.bind(sub, coords[1 + i])
        for p in context.params:
            if not p.is_time:
                if p.name in self.env.params:
                    self.ev.bind(p.name, self.env.params[p.name])
        # additional time params beyond the first (e.g. X[@T, @u]) bind nothing

    def run_blocks(self, body: tuple[Node, ...]) -> None:
        self.ev.push_scope()
        try:
            for node in body:
                self.run_block(node)
        finally:
            self.ev.pop_scope()

    def run_block(self, node: Node) -> None:
        if isinstance(node, Comment):
            return
        if isinstance(node, RoleMessage):
            self.finish_message()
            self.current_role = node.role
            self.current_slots = []
            self.run_blocks(node.body)
            self.finish_message()
            return
        if isinstance(node, ForEach):
            self.run_foreach(node)
            return
        if isinstance(node, If):
            self.run_if(node)
            return
        if isinstance(node, Switch):
            self.run_switch(node)
            return
        if isinstance(node, Mark):
            self.run_mark(node)
            return
        if isinstance(node, PromptEndsHere):
            try:
                if self.ev.eval_condition(node.condition):
                    raise _Truncate()
            except _Gap as g:
                self.ev.report(g)
            return
        if isinstance(node, NameDef):
            self.run_name_def(node)
            return
        if isinstance(node, BreakStmt):
            raise _LoopBreak()
        if isinstance(node, ContinueStmt):
            raise _LoopContinue()
        if isinstance(node, FragInvoke):
            self.ev.diags.append(error(
                "X-UNRESOLVED-FRAG",
                f"fragment '{node.name}' was not resolved before expansion",
                node.span, self.file))
            return
        # leaf content element
        self.add_slot(self.make_slot(node))

    def run_foreach(self, loop: ForEach) -> None:
        values = self.iterate(loop)
        if values is None:
            return
        for value in values:
            self.ev.push_scope()
            self.ev.bind(loop.binder, value)
            broke = False
            try:
                for sub in loop.body:
                    self.run_block(sub)
            except _LoopContinue:
                pass
            except _LoopBreak:
                broke = True
            finally:
                self.ev.pop_scope()
            if broke:
                break

    def iterate(self, loop: ForEach) -> list[object] | None:
        it = loop.iterable
        if isinstance(it, FunctionCall) and it.name == "range":
            return self.range_values(it)
        if isinstance(it, ContextVar):
            try:
                key = self.ev.flatten_key(it)
            except _Gap as g:
                self.ev.report(g)
                return None
            if key in self.env.collections:
                return list(self.env.collections[key])
            self.ev.diags.append(error("X-NO-COLLECTION",
                                       f"no collection '{key}' in the environment",
                                       it.span, self.file))
            return None
        if isinstance(it, (NameRef, FunctionCall)):
            try:
                v = self.ev.eval_operand(it)
            except _Gap as g:
                self.ev.report(g)
                return None
            if isinstance(v, (list, tuple)):
                return list(v)
            self.ev.diags.append(error("X-NO-COLLECTION",
                                       f"'{format_expression(it)}' is not iterable",
                                       it.span, self.file))
            return None
        self.ev.diags.append(error("X-NO-COLLECTION",
                                   f"cannot iterate '{format_expression(it)}'",
                                   it.span, self.file))
        return None

    def range_values(self, call: FunctionCall) -> list[object] | None:
        if len(call.args) not in (2, 3):
            self.ev.diags.append(error("X-BAD-RANGE",
                                       "range takes (start, stop[, step])",
                                       call.span, self.file))
            return None
        try:
            start = self.ev.eval_index(call.args[0])
            stop = self.ev.eval_index(call.args[1])
            step = self.ev.eval_index(call.args[2]) if len(call.args) == 3 else 1
        except _Gap as g:
            self.ev.report(g)
            return None
        if not all(isinstance(v, int) and not isinstance(v, bool)
                   for v in (start, stop, step)):
            self.ev.diags.append(error("X-BAD-RANGE", "range bounds must be integers",
                                       call.span, self.file))
            return None
        if step <= 0:
            self.ev.diags.append(error("X-BAD-STEP",
                                       f"range step must be positive, got {step}",
                                       call.span, self.file))
            return None
        return list(range(start, stop, step))  # exclusive stop

    def run_scoped(self, body: tuple[Node, ...]) -> None:
        self.ev.push_scope()
        try:
            for sub in body:
                self.run_block(sub)
        finally:
            self.ev.pop_scope()

    def run_if(self, node: If) -> None:
        for branch in node.branches:
            try:
                taken = self.ev.eval_condition(branch.condition)
            except _Gap as g:
                self.ev.report(g)
                return  # undecidable: skip the whole construct
            if taken:
                self.run_scoped(branch.body)
                return
        if node.else_body is not None:
            self.run_scoped(node.else_body)

    def run_switch(self, node: Switch) -> None:
        try:
            value = self.ev.eval_operand(node.scrutinee)
        except _Gap as g:
            self.ev.report(g)
            return
        if value is _UNDECIDED:
            self.ev.diags.append(error(
                "X-UNDECIDED-COND",
                f"no value for switch scrutinee "
                f"'{format_expression(node.scrutinee)}'",
                node.scrutinee.span, self.file))
            return
        for case in node.cases:
            label: object
            if isinstance(case.label, StrLit):
                label = case.label.value
            elif isinstance(case.label, IntLit):
                label = case.label.value
            else:
                label = case.label.name  # bare identifier label
            li, vi = _as_int(label), _as_int(value)
            matched = (li == vi) if (li is not None and vi is not None) \
                else (_as_text(label) == _as_text(value))
            if matched:
                self.run_scoped(case.body)
                return
        if node.default is not None:
            self.run_scoped(node.default)

    def run_mark(self, node: Mark) -> None:
        in_message = self.current_role is not None
        m = _OpenMark(node.number,
                      len(self.messages),
                      len(self.messages) if in_message else None,
                      len(self.current_slots) if in_message else None)
        self.open_marks.append(m)
        try:
            for sub in node.body:
                self.run_block(sub)
        finally:
            self.open_marks.remove(m)
            self._close_mark(m)

    def run_name_def(self, node: NameDef) -> None:
        if isinstance(node.value, ListComp):
            comp = node.value
            values = self.comp_values(comp)
            self.ev.bind_name(node.name, values, format_expression(comp))
            return
        try:
            v = self.ev.eval_operand(node.value)
        except _Gap as g:
            self.ev.report(g)
            v = _UNDECIDED
        text = format_expression(node.value)
        self.ev.bind_name(node.name, None if v is _UNDECIDED else v, text)

    def comp_values(self, comp: ListComp) -> list[object] | None:
        pseudo = ForEach(comp.binder, comp.iterable, (), comp.binder_at, comp.span)
        values = self.iterate(pseudo)
        if values is None:
            return None
        out: list[object] = []
        for v in values:
            self.ev.push_scope()
            self.ev.bind(comp.binder, v)
            try:
                ev = self.ev.eval_operand(comp.element)
            except _Gap as g:
                self.ev.report(g)
                ev = _UNDECIDED
            finally:
                self.ev.pop_scope()
            out.append(None if ev is _UNDECIDED else ev)
        return out

    # ---- slots

    def make_slot(self, node: Node) -> Slot:
        bindings = tuple(sorted(self.ev.bound_vars().items()))
        if isinstance(node, (Template, FunctionCall)):
            kind = "template" if isinstance(node, Template) else "function"
            try:
                fp = self.ev.fingerprint(node)
            except _Gap as g:
                self.ev.report(g)
                return Slot("unresolved", format_expression(node), node.span,
                            False, bindings)
            if fp in self.env.functions:
                return Slot(kind, _as_text(self.env.functions[fp]),
                            node.span, True, bindings)
            return Slot(kind, fp, node.span, False, bindings)
        if isinstance(node, ContextVar):
            try:
                key = self.ev.flatten_key(node)
            except _Gap as g:
                self.ev.report(g)
                return Slot("unresolved", format_expression(node), node.span,
                            False, bindings)
            if key in self.env.vars:
                return Slot("var", self.env.vars[key], node.span, True, bindings)
            return Slot("unresolved", key, node.span, False, bindings)
        if isinstance(node, NameRef):
            try:
                v = self.ev._name_value(node)
            except _Gap as g:
                self.ev.report(g)
                v = _UNDECIDED
            if v is _UNDECIDED:
                return Slot("unresolved", format_expression(node), node.span,
                            False, bindings)
            return Slot("var", _as_text(v), node.span, True, bindings)
        if isinstance(node, IndexContent):
            try:
                v = self.ev.eval_index(node.expr)
            except _Gap as g:
                self.ev.report(g)
                return Slot("unresolved", format_expression(node.expr), node.span,
                            False, bindings)
            return Slot("literal", _as_text(v), node.span, True, bindings)
        if isinstance(node, InlineLit):
            return Slot("literal", node.text, node.span, True, bindings)
        if isinstance(node, StrLit):
            return Slot("literal", node.value, node.span, True, bindings)
        return Slot("unresolved", format_expression(node),
                    getattr(node, "span", EMPTY_SPAN), False, bindings)
