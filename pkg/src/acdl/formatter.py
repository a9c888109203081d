"""Canonical pretty-printer.

Style: 2-space indent, one content element or statement per line, opening
brace on the header line, closing brace on its own line. Canonicalizations:
`RoleFrag` -> `RolesFrag`, `&&`/`||` -> `&`/`|`, and time-classified loop
binders gain the `@` prefix.
"""

from __future__ import annotations

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
    Document,
    ElemIndex,
    Expr,
    FieldAccess,
    ForEach,
    FragInvoke,
    FragmentDef,
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
    ParamDecl,
    PlainVar,
    PromptEndsHere,
    RoleMessage,
    StrLit,
    Switch,
    Template,
    TimeVar,
    walk,
)

INDENT = "  "


def format_document(doc: Document) -> str:
    """Render a document in canonical style. Total on well-formed ASTs."""
    w = _Writer()
    prev_was_comment = False
    for i, item in enumerate(doc.items):
        if i > 0 and not prev_was_comment:
            w.blank()
        _fmt_item(w, item)
        prev_was_comment = isinstance(item, Comment)
    return w.text()


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def line(self, indent: int, text: str) -> None:
        self.lines.append(INDENT * indent + text)

    def append(self, text: str) -> None:
        self.lines[-1] += text

    def blank(self) -> None:
        self.lines.append("")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""


def _fmt_item(w: _Writer, item) -> None:
    if isinstance(item, Comment):
        w.line(0, "//" + item.text)
    elif isinstance(item, ContextDef):
        w.line(0, f"{item.name}{_fmt_params(item.params)}: {{")
        _fmt_body(w, item.body, 1)
        w.line(0, "}")
    elif isinstance(item, FragmentDef):
        kw = "StrFrag" if item.kind == "string" else "RolesFrag"
        w.line(0, f"{kw} {item.name}{_fmt_params(item.params)}: {{")
        _fmt_body(w, item.body, 1)
        w.line(0, "}")
    else:
        raise TypeError(f"not a document item: {type(item).__name__}")


def _fmt_params(params: tuple[ParamDecl, ...]) -> str:
    if not params:
        return ""
    return "[" + ", ".join(_fmt_param(p) for p in params) + "]"


def _fmt_param(p: ParamDecl) -> str:
    if not p.is_time:
        return p.name
    out = "@" + p.name + "".join("." + s for s in p.sub_names)
    if p.variadic:
        out += ".*"
    return out


def _fmt_body(w: _Writer, body: tuple[Node, ...], indent: int) -> None:
    at_header = True  # an inline comment before any element attaches to the header
    for node in body:
        if isinstance(node, Comment):
            if node.inline and w.lines:
                w.append("  //" + node.text)
            else:
                w.line(indent, "//" + node.text)
                at_header = False
            continue
        _fmt_block(w, node, indent)
        at_header = False
    del at_header


def _fmt_block(w: _Writer, node: Node, indent: int) -> None:
    if isinstance(node, RoleMessage):
        if node.single_line:
            elems = [n for n in node.body if not isinstance(n, Comment)]
            text = _fmt_expr(elems[0]) if elems else ""
            w.line(indent, f"{node.role}: {text}".rstrip())
            for c in node.body:
                if isinstance(c, Comment):
                    w.append("  //" + c.text)
        else:
            w.line(indent, f"{node.role}: {{")
            _fmt_body(w, node.body, indent + 1)
            w.line(indent, "}")
    elif isinstance(node, ForEach):
        at = "@" if node.binder_at or is_time_binder(node) else ""
        w.line(indent, f"ForEach({at}{node.binder}: {_fmt_expr(node.iterable)}) {{")
        _fmt_body(w, node.body, indent + 1)
        w.line(indent, "}")
    elif isinstance(node, If):
        first = node.branches[0]
        w.line(indent, f"If {_fmt_cond(first.condition)} {{")
        _fmt_body(w, first.body, indent + 1)
        w.line(indent, "}")
        for branch in node.branches[1:]:
            w.line(indent, f"ElseIf {_fmt_cond(branch.condition)} {{")
            _fmt_body(w, branch.body, indent + 1)
            w.line(indent, "}")
        if node.else_body is not None:
            w.line(indent, "Else {")
            _fmt_body(w, node.else_body, indent + 1)
            w.line(indent, "}")
    elif isinstance(node, Switch):
        w.line(indent, f"Switch {_fmt_expr(node.scrutinee)} {{")
        for case in node.cases:
            w.line(indent + 1, f"Case {_fmt_expr(case.label)} {{")
            _fmt_body(w, case.body, indent + 2)
            w.line(indent + 1, "}")
        if node.default is not None:
            w.line(indent + 1, "Default {")
            _fmt_body(w, node.default, indent + 2)
            w.line(indent + 1, "}")
        w.line(indent, "}")
    elif isinstance(node, Mark):
        w.line(indent, f"Mark {node.number} {{")
        _fmt_body(w, node.body, indent + 1)
        w.line(indent, "}")
    elif isinstance(node, PromptEndsHere):
        w.line(indent, f"PromptEndsHere when ({_fmt_cond(node.condition)})")
    elif isinstance(node, NameDef):
        w.line(indent, f"Name {node.name} := {_fmt_expr(node.value)}")
    elif isinstance(node, BreakStmt):
        w.line(indent, "break")
    elif isinstance(node, ContinueStmt):
        w.line(indent, "continue")
    else:
        w.line(indent, _fmt_expr(node))


def is_time_binder(loop: ForEach) -> bool:
    """A binder iterating a range whose bounds mention a time variable counts
    as a time binder (and is printed with the @ prefix)."""
    it = loop.iterable
    if not (isinstance(it, FunctionCall) and it.name == "range"):
        return False
    for arg in it.args:
        for n in walk(arg):
            if isinstance(n, TimeVar):
                return True
            if isinstance(n, PlainVar) and len(n.name) == 1 and n.name.isupper():
                return True
    return False


# ------------------------------------------------------------ expressions

_TIGHT_OPS = {"+", "-", "*", "/"}


def _fmt_expr(e: Expr | Node) -> str:
    return _fmt_prec(e, 0)


def _fmt_prec(e, parent_prec: int) -> str:
    if isinstance(e, BinOp):
        prec = 2 if e.op in ("*", "/", "%") else 1
        lhs = _fmt_prec(e.lhs, prec)
        rhs = _fmt_prec(e.rhs, prec + 1)
        text = f"{lhs}{e.op}{rhs}" if e.op in _TIGHT_OPS else f"{lhs} {e.op} {rhs}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, TimeVar):
        out = "@" + e.base + "".join("." + p for p in e.parts)
        if e.substeps_attr:
            out += ".substeps"
        if e.variadic:
            out += ".*"
        return out
    if isinstance(e, PlainVar):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return f'"{e.value}"'
    if isinstance(e, InlineLit):
        return "{{" + e.text + "}}"
    if isinstance(e, ContextVar):
        out = e.namespace
        if e.agent_qual is not None:
            out += "[" + _fmt_expr(e.agent_qual) + "]"
        for seg in e.segments:
            out += "." + seg.name
            if seg.indices:
                out += "[" + ", ".join(_fmt_expr(i) for i in seg.indices) + "]"
        return out
    if isinstance(e, Template):
        if e.args or e.has_parens:
            return e.name + "(" + ", ".join(_fmt_expr(a) for a in e.args) + ")"
        return e.name
    if isinstance(e, FunctionCall):
        out = e.name + "(" + ", ".join(_fmt_expr(a) for a in e.args) + ")"
        if e.trailing_indices:
            out += "[" + ", ".join(_fmt_expr(i) for i in e.trailing_indices) + "]"
        return out
    if isinstance(e, NameRef):
        out = "$" + e.name
        for part in e.parts:
            if isinstance(part, FieldAccess):
                out += "." + part.name
            elif isinstance(part, ElemIndex):
                out += "[" + _fmt_expr(part.index) + "]"
        return out
    if isinstance(e, IndexContent):
        return _fmt_prec(e.expr, parent_prec)
    if isinstance(e, ListComp):
        at = "@" if e.binder_at else ""
        return (f"[{_fmt_expr(e.element)} for {at}{e.binder} "
                f"in {_fmt_expr(e.iterable)}]")
    if isinstance(e, FragInvoke):
        return f"Frag {e.name}[" + ", ".join(_fmt_expr(a) for a in e.args) + "]"
    raise TypeError(f"cannot format {type(e).__name__}")


# ------------------------------------------------------------- conditions

def _fmt_cond(c: Condition) -> str:
    return _fmt_cond_prec(c, 0)


def _fmt_cond_prec(c: Condition, parent_prec: int) -> str:
    if isinstance(c, Or):
        text = f"{_fmt_cond_prec(c.lhs, 1)} | {_fmt_cond_prec(c.rhs, 2)}"
        return f"({text})" if parent_prec > 1 else text
    if isinstance(c, And):
        text = f"{_fmt_cond_prec(c.lhs, 2)} & {_fmt_cond_prec(c.rhs, 3)}"
        return f"({text})" if parent_prec > 2 else text
    if isinstance(c, Cmp):
        return f"{_fmt_expr(c.lhs)} {c.op} {_fmt_expr(c.rhs)}"
    if isinstance(c, AtomCond):
        return _fmt_expr(c.expr)
    if isinstance(c, AtSubstepZero):
        return "@" + c.base + ".0"
    raise TypeError(f"cannot format condition {type(c).__name__}")


def format_block(node: Node) -> str:
    """Canonical text of a single block or content element (for headers,
    diff listings, and layout labels)."""
    w = _Writer()
    _fmt_block(w, node, 0)
    return w.text().rstrip("\n")


def format_condition(c: Condition) -> str:
    return _fmt_cond(c)


def format_expression(e: Expr | Node) -> str:
    return _fmt_expr(e)
