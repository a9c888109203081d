"""Scoping validation, symbol collection, and fragment resolution."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Span, error, info, warning
from .formatter import format_expression
from .nodes import (
    AtSubstepZero,
    BreakStmt,
    Comment,
    ContextDef,
    ContextVar,
    ContinueStmt,
    Document,
    ForEach,
    FragInvoke,
    FragmentDef,
    FunctionCall,
    If,
    IntLit,
    ListComp,
    Mark,
    NameDef,
    NameRef,
    Node,
    PlainVar,
    RoleMessage,
    Switch,
    Template,
    TimeVar,
    walk,
)

ResolvedContext = ContextDef

_CAMEL_RE = re.compile(r"[a-z][A-Za-z0-9]*\Z")
_PATH_SEG_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")

CHAT_ROLES = frozenset("SUAT")


# ------------------------------------------------------------- symbol table


@dataclass
class SymbolTable:
    templates: dict[str, set[int]] = field(default_factory=dict)
    functions: dict[str, set[int]] = field(default_factory=dict)
    context_vars: dict[str, set[tuple[int, ...]]] = field(default_factory=dict)
    names: dict[str, list[str]] = field(default_factory=dict)
    fragments: dict[str, tuple[str, int]] = field(default_factory=dict)
    contexts: dict[str, list[str]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "templates": {k: sorted(v) for k, v in sorted(self.templates.items())},
            "functions": {k: sorted(v) for k, v in sorted(self.functions.items())},
            "context_vars": {k: sorted(list(sig) for sig in v)
                             for k, v in sorted(self.context_vars.items())},
            "names": {k: v for k, v in sorted(self.names.items())},
            "fragments": {k: {"kind": v[0], "params": v[1]}
                          for k, v in sorted(self.fragments.items())},
            "contexts": dict(sorted(self.contexts.items())),
        }


def build_symbols(document: Document) -> SymbolTable:
    """Collect every symbol occurring in the document. Deterministic."""
    table = SymbolTable()
    for item in document.items:
        if isinstance(item, FragmentDef):
            table.fragments.setdefault(item.name, (item.kind, len(item.params)))
        elif isinstance(item, ContextDef):
            table.contexts.setdefault(
                item.name,
                [("@" + p.name + "".join("." + s for s in p.sub_names)
                  + (".*" if p.variadic else "")) if p.is_time else p.name
                 for p in item.params])
    for node in walk(document):
        if isinstance(node, Template):
            table.templates.setdefault(node.name, set()).add(len(node.args))
        elif isinstance(node, FunctionCall):
            table.functions.setdefault(node.name, set()).add(len(node.args))
        elif isinstance(node, ContextVar) and node.segments:
            sig = tuple(len(seg.indices) for seg in node.segments)
            table.context_vars.setdefault(node.path(), set()).add(sig)
        elif isinstance(node, NameDef):
            table.names.setdefault(node.name, []).append(
                format_expression(node.value))
    return table


# --------------------------------------------------------------- validation


def validate(document: Document, *, strict: bool = False,
             file: str = "<memory>") -> list[Diagnostic]:
    """Check scoping and role rules; returns diagnostics, never raises."""
    v = _Validator(document, strict, file)
    v.run()
    return v.diags


class _Validator:
    def __init__(self, document: Document, strict: bool, file: str):
        self.doc = document
        self.strict = strict
        self.file = file
        self.diags: list[Diagnostic] = []
        self.fragments: dict[str, FragmentDef] = {}

    def err(self, code: str, message: str, span: Span) -> None:
        self.diags.append(error(code, message, span, self.file))

    def warn(self, code: str, message: str, span: Span) -> None:
        self.diags.append(warning(code, message, span, self.file))

    def run(self) -> None:
        seen_contexts: dict[str, Span] = {}
        seen_fragments: dict[str, Span] = {}
        for item in self.doc.items:
            if isinstance(item, FragmentDef):
                if item.name in seen_fragments:
                    self.err("E-DUP-DEF", f"fragment '{item.name}' is defined more than once",
                             item.span)
                else:
                    seen_fragments[item.name] = item.span
                    self.fragments[item.name] = item
            elif isinstance(item, ContextDef):
                if item.name in seen_contexts:
                    self.err("E-DUP-DEF", f"context '{item.name}' is defined more than once",
                             item.span)
                else:
                    seen_contexts[item.name] = item.span
        for item in self.doc.items:
            if isinstance(item, ContextDef):
                self.check_context(item)
            elif isinstance(item, FragmentDef):
                scope = _Scope(None)
                for p in item.params:
                    scope.define(p.name)  # fragment params are referable
                self.check_body(item.body, in_role=(item.kind == "string"),
                                in_loop=False, scope=_Scope(scope))
        self.check_symbols_wide()

    def check_context(self, ctx: ContextDef) -> None:
        n_blocks = [b for b in walk(ctx) if isinstance(b, RoleMessage) and b.role == "N"]
        chat_blocks = [b for b in walk(ctx)
                       if isinstance(b, RoleMessage) and b.role in CHAT_ROLES]
        for extra in n_blocks[1:]:
            self.err("E-N-MULTI", "exactly one N: block may appear per prompt", extra.span)
        if n_blocks and chat_blocks:
            self.err("E-N-MIXED",
                     "chat roles (S:, U:, A:, T:) may not appear in a completion prompt",
                     chat_blocks[0].span)
        if n_blocks:
            for block in ctx.body:
                # chat-role siblings are already covered by E-N-MIXED
                if isinstance(block, (Comment, RoleMessage)):
                    continue
                self.err("E-N-TOPLEVEL",
                         "the top level of a completion prompt may contain only "
                         "the single N: block", block.span)
        self.check_body(ctx.body, in_role=False, in_loop=False, scope=_Scope(None))

    def check_body(self, body: tuple[Node, ...], *, in_role: bool,
                   in_loop: bool, scope: "_Scope") -> None:
        for node in body:
            self.check_node(node, in_role=in_role, in_loop=in_loop, scope=scope)

    def check_node(self, node: Node, *, in_role: bool, in_loop: bool,
                   scope: "_Scope") -> None:
        if isinstance(node, Comment):
            return
        if isinstance(node, RoleMessage):
            if in_role:
                self.err("E-NESTED-ROLE",
                         "role messages may not appear inside other role messages",
                         node.span)
            self.check_body(node.body, in_role=True, in_loop=in_loop,
                            scope=_Scope(scope))
            return
        if isinstance(node, ForEach):
            self.check_expr(node.iterable, scope)
            inner = _Scope(scope)
            inner.define(node.binder)
            self.check_body(node.body, in_role=in_role, in_loop=True, scope=inner)
            return
        if isinstance(node, If):
            for branch in node.branches:
                for sub in walk(branch.condition):
                    self.check_leaf(sub, scope)
                self.check_body(branch.body, in_role=in_role, in_loop=in_loop,
                                scope=_Scope(scope))
            if node.else_body is not None:
                self.check_body(node.else_body, in_role=in_role, in_loop=in_loop,
                                scope=_Scope(scope))
            return
        if isinstance(node, Switch):
            self.check_expr(node.scrutinee, scope)
            for case in node.cases:
                self.check_body(case.body, in_role=in_role, in_loop=in_loop,
                                scope=_Scope(scope))
            if node.default is not None:
                self.check_body(node.default, in_role=in_role, in_loop=in_loop,
                                scope=_Scope(scope))
            return
        if isinstance(node, Mark):
            self.check_body(node.body, in_role=in_role, in_loop=in_loop, scope=scope)
            return
        if isinstance(node, (BreakStmt, ContinueStmt)):
            if not in_loop:
                kw = "break" if isinstance(node, BreakStmt) else "continue"
                self.err("E-LOOPCTL", f"'{kw}' is only available inside loops", node.span)
            return
        if isinstance(node, NameDef):
            if isinstance(node.value, ListComp):
                comp_scope = _Scope(scope)
                comp_scope.define(node.value.binder)
                self.check_expr(node.value.element, comp_scope)
                self.check_expr(node.value.iterable, scope)
            else:
                self.check_expr(node.value, scope)
            if scope.lookup("$" + node.name):
                self.warn("W-NAME-SHADOW",
                          f"name '{node.name}' shadows an earlier definition", node.span)
            scope.define("$" + node.name)
            return
        if isinstance(node, FragInvoke):
            self.check_frag_invoke(node, in_role)
            for arg in node.args:
                self.check_expr(arg, scope)
            return
        # leaf content element
        self.check_expr(node, scope)

    def check_frag_invoke(self, node: FragInvoke, in_role: bool) -> None:
        frag = self.fragments.get(node.name)
        if frag is None:
            self.err("E-FRAG-UNKNOWN", f"unknown fragment '{node.name}'", node.span)
            return
        if in_role and frag.kind == "roles":
            self.err("E-FRAG-POSITION",
                     f"roles fragment '{node.name}' may not be invoked inside a role message",
                     node.span)
        if not in_role and frag.kind == "string":
            self.err("E-FRAG-POSITION",
                     f"string fragment '{node.name}' may only be invoked inside a role message",
                     node.span)
        if len(node.args) != len(frag.params):
            self.err("E-FRAG-ARITY",
                     f"fragment '{node.name}' takes {len(frag.params)} argument(s), "
                     f"got {len(node.args)}", node.span)

    def check_expr(self, expr, scope: "_Scope") -> None:
        for sub in walk(expr):
            self.check_leaf(sub, scope)

    def check_leaf(self, sub, scope: "_Scope") -> None:
        if isinstance(sub, NameRef):
            if not scope.lookup("$" + sub.name):
                self.err("E-NAME-UNBOUND", f"'${sub.name}' is not bound by any "
                         "Name definition in scope", sub.span)
        elif isinstance(sub, FunctionCall):
            if not _CAMEL_RE.match(sub.name):
                self.warn("W-NAMING",
                          f"function '{sub.name}' should be camelCase", sub.span)
        elif isinstance(sub, ContextVar):
            for seg in sub.segments:
                if not _PATH_SEG_RE.match(seg.name):
                    self.warn("W-NAMING",
                              f"context-variable segment '{seg.name}' should be "
                              "lower_case", sub.span)
                    break
        elif isinstance(sub, AtSubstepZero):
            self.diags.append(info(
                "I-SUBSTEP-ATOM",
                f"@{sub.base}.0 reads as 'the current time point's last coordinate is 0'",
                sub.span, self.file))

    def check_symbols_wide(self) -> None:
        for item in self.doc.items:
            seen: set[int] = set()
            for node in walk(item):
                if isinstance(node, Mark):
                    if node.number in seen:
                        self.warn("W-DUP-MARK",
                                  f"mark number {node.number} is used more than once",
                                  node.span)
                    seen.add(node.number)
        if self.strict:
            table = build_symbols(self.doc)
            for name, arities in sorted(table.templates.items()):
                if len(arities) > 1:
                    self.warn("W-ARITY-VARIES",
                              f"template '{name}' is used with varying arities "
                              f"{sorted(arities)}", Span(0, 0, 1, 1))
            for name, arities in sorted(table.functions.items()):
                if len(arities) > 1:
                    self.warn("W-ARITY-VARIES",
                              f"function '{name}' is used with varying arities "
                              f"{sorted(arities)}", Span(0, 0, 1, 1))


class _Scope:
    """Lexical scope chain for $names (keys prefixed '$') and loop binders."""

    def __init__(self, parent: "_Scope | None"):
        self.parent = parent
        self.names: set[str] = set()

    def define(self, name: str) -> None:
        self.names.add(name)

    def lookup(self, name: str) -> bool:
        s: _Scope | None = self
        while s is not None:
            if name in s.names:
                return True
            s = s.parent
        return False


# --------------------------------------------------------------- resolution


def resolve(document: Document, context_name: str,
            file: str = "<memory>") -> tuple[ResolvedContext | None, list[Diagnostic]]:
    """Inline every fragment invocation of the named context.

    Arguments bind positionally; fragment-local binders are renamed when they
    would capture a free name of an argument. Fragment recursion is rejected.
    """
    diags: list[Diagnostic] = []
    target: ContextDef | None = None
    fragments: dict[str, FragmentDef] = {}
    for item in document.items:
        if isinstance(item, FragmentDef) and item.name not in fragments:
            fragments[item.name] = item
        elif isinstance(item, ContextDef) and item.name == context_name:
            target = target or item
    if target is None:
        diags.append(error("E-NO-CONTEXT", f"no context named '{context_name}'",
                           Span(0, 0, 1, 1), file))
        return None, diags

    r = _Resolver(fragments, diags, file)
    body = r.resolve_body(target.body, active=())
    resolved = dataclasses.replace(target, body=body)
    resolved = _annotate_name_refs(resolved)
    return resolved, diags


class _Resolver:
    def __init__(self, fragments: dict[str, FragmentDef],
                 diags: list[Diagnostic], file: str):
        self.fragments = fragments
        self.diags = diags
        self.file = file
        self._fresh = 0

    def resolve_body(self, body: tuple[Node, ...], active: tuple[str, ...]) -> tuple[Node, ...]:
        out: list[Node] = []
        for node in body:
            out.extend(self.resolve_node(node, active))
        return tuple(out)

    def resolve_node(self, node: Node, active: tuple[str, ...]) -> list[Node]:
        if isinstance(node, FragInvoke):
            return self.inline(node, active)
        if isinstance(node, RoleMessage):
            return [dataclasses.replace(node, body=self.resolve_body(node.body, active))]
        if isinstance(node, ForEach):
            return [dataclasses.replace(node, body=self.resolve_body(node.body, active))]
        if isinstance(node, If):
            branches = tuple(
                dataclasses.replace(b, body=self.resolve_body(b.body, active))
                for b in node.branches)
            else_body = (self.resolve_body(node.else_body, active)
                         if node.else_body is not None else None)
            return [dataclasses.replace(node, branches=branches, else_body=else_body)]
        if isinstance(node, Switch):
            cases = tuple(dataclasses.replace(c, body=self.resolve_body(c.body, active))
                          for c in node.cases)
            default = (self.resolve_body(node.default, active)
                       if node.default is not None else None)
            return [dataclasses.replace(node, cases=cases, default=default)]
        if isinstance(node, Mark):
            return [dataclasses.replace(node, body=self.resolve_body(node.body, active))]
        return [node]

    def inline(self, inv: FragInvoke, active: tuple[str, ...]) -> list[Node]:
        frag = self.fragments.get(inv.name)
        if frag is None:
            self.diags.append(error("E-FRAG-UNKNOWN",
                                    f"unknown fragment '{inv.name}'", inv.span, self.file))
            return []
        if inv.name in active:
            chain = " -> ".join(active + (inv.name,))
            self.diags.append(error("E-FRAG-CYCLE",
                                    f"fragment invocation cycle: {chain}",
                                    inv.span, self.file))
            return []
        if len(inv.args) != len(frag.params):
            self.diags.append(error(
                "E-FRAG-ARITY",
                f"fragment '{inv.name}' takes {len(frag.params)} argument(s), "
                f"got {len(inv.args)}", inv.span, self.file))
            return []
        mapping = {p.name: arg for p, arg in zip(frag.params, inv.args)}
        free = set()
        for arg in inv.args:
            free |= _free_names(arg)
        body = _rename_captured(frag.body, free, self)
        body = _substitute(body, mapping)
        return list(self.resolve_body(body, active + (inv.name,)))

    def fresh(self, base: str, taken: set[str]) -> str:
        n = 2
        while f"{base}_{n}" in taken:
            n += 1
        return f"{base}_{n}"


def _free_names(expr) -> set[str]:
    names: set[str] = set()
    for sub in walk(expr):
        if isinstance(sub, PlainVar):
            names.add(sub.name)
        elif isinstance(sub, TimeVar) and not sub.base.isdigit():
            names.add(sub.base)
        elif isinstance(sub, NameRef):
            names.add("$" + sub.name)
    return names


def _rename_captured(body: tuple[Node, ...], free: set[str],
                     resolver: _Resolver) -> tuple[Node, ...]:
    """Rename fragment-local binders that collide with free names of the
    arguments being substituted in."""
    renames: dict[str, str] = {}
    taken = set(free)
    for node in body:
        for sub in walk(node):
            if isinstance(sub, ForEach) and sub.binder in free:
                renames.setdefault(sub.binder, resolver.fresh(sub.binder, taken))
            elif isinstance(sub, NameDef):
                if isinstance(sub.value, ListComp) and sub.value.binder in free:
                    renames.setdefault(sub.value.binder,
                                       resolver.fresh(sub.value.binder, taken))
                if "$" + sub.name in free:
                    renames.setdefault("$" + sub.name,
                                       "$" + resolver.fresh(sub.name, taken))
    if not renames:
        return body
    return tuple(_apply_renames(n, renames) for n in body)


def _apply_renames(node, renames: dict[str, str]):
    if isinstance(node, tuple):
        return tuple(_apply_renames(x, renames) for x in node)
    if not dataclasses.is_dataclass(node) or isinstance(node, type):
        return node
    changes = {}
    if isinstance(node, ForEach) and node.binder in renames:
        changes["binder"] = renames[node.binder]
    if isinstance(node, ListComp) and node.binder in renames:
        changes["binder"] = renames[node.binder]
    if isinstance(node, NameDef) and "$" + node.name in renames:
        changes["name"] = renames["$" + node.name][1:]
    if isinstance(node, NameRef) and "$" + node.name in renames:
        changes["name"] = renames["$" + node.name][1:]
    if isinstance(node, PlainVar) and node.name in renames:
        changes["name"] = renames[node.name]
    if isinstance(node, TimeVar) and node.base in renames:
        changes["base"] = renames[node.base]
    for f in dataclasses.fields(node):
        if f.name in changes:
            continue
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            nv = _apply_renames(v, renames)
            if nv != v:
                changes[f.name] = nv
        elif dataclasses.is_dataclass(v):
            nv = _apply_renames(v, renames)
            if nv is not v:
                changes[f.name] = nv
    return dataclasses.replace(node, **changes) if changes else node


def _substitute(node, mapping: dict):
    """Replace parameter references with argument expressions."""
    if isinstance(node, tuple):
        return tuple(_substitute(x, mapping) for x in node)
    if not dataclasses.is_dataclass(node) or isinstance(node, type):
        return node
    if isinstance(node, PlainVar) and node.name in mapping:
        return mapping[node.name]
    if isinstance(node, TimeVar) and node.base in mapping:
        arg = mapping[node.base]
        if isinstance(arg, TimeVar):
            return dataclasses.replace(
                arg, parts=arg.parts + node.parts,
                substeps_attr=arg.substeps_attr or node.substeps_attr,
                variadic=arg.variadic or node.variadic)
        if isinstance(arg, IntLit):
            return dataclasses.replace(node, base=str(arg.value))
        return arg  # non-time argument bound to a time parameter
    # inner loops over the same letter shadow the parameter
    if isinstance(node, ForEach) and node.binder in mapping:
        inner = {k: v for k, v in mapping.items() if k != node.binder}
        changes = {"iterable": _substitute(node.iterable, mapping),
                   "body": _substitute(node.body, inner)}
        return dataclasses.replace(node, **changes)
    changes = {}
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if isinstance(v, tuple):
            nv = _substitute(v, mapping)
            if nv != v:
                changes[f.name] = nv
        elif dataclasses.is_dataclass(v):
            nv = _substitute(v, mapping)
            if nv is not v:
                changes[f.name] = nv
    return dataclasses.replace(node, **changes) if changes else node


def _annotate_name_refs(ctx: ContextDef) -> ContextDef:
    """Record on each NameRef the span of the Name definition that binds it."""

    def annotate_body(body: tuple[Node, ...], scope: dict[str, Span]) -> tuple[Node, ...]:
        local = dict(scope)
        out = []
        for node in body:
            node = annotate(node, local)
            if isinstance(node, NameDef):
                local[node.name] = node.span
            out.append(node)
        return tuple(out)

    def annotate(node, scope: dict[str, Span]):
        if isinstance(node, tuple):
            return annotate_body(node, scope)
        if not dataclasses.is_dataclass(node) or isinstance(node, type):
            return node
        if isinstance(node, NameRef):
            binding = scope.get(node.name)
            node = dataclasses.replace(node, binding=binding)
        changes = {}
        for f in dataclasses.fields(node):
            if f.name == "binding":
                continue
            v = getattr(node, f.name)
            if isinstance(v, tuple):
                nv = (annotate_body(v, scope)
                      if f.name in ("body", "items", "else_body", "default")
                      else tuple(annotate(x, scope) for x in v))
                if nv != v:
                    changes[f.name] = nv
            elif dataclasses.is_dataclass(v):
                nv = annotate(v, scope)
                if nv is not v:
                    changes[f.name] = nv
        return dataclasses.replace(node, **changes) if changes else node

    return dataclasses.replace(ctx, body=annotate_body(ctx.body, {}))
