"""Structural diff between two context definitions.

The differ aligns ordered children level by level (edit-distance DP with
subtree-sized insert/delete costs), so a variant that deletes one line or
flips one role yields exactly one edit. Comments are ignored; mark wrappers
are presentational and are spliced out before comparison, with mark
differences reported separately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .formatter import format_block, format_condition, format_expression, is_time_binder
from .nodes import (
    ContextDef,
    ForEach,
    If,
    IfBranch,
    Mark,
    NameDef,
    Node,
    PromptEndsHere,
    RoleMessage,
    Switch,
    SwitchCase,
    ast_equal,
    node_count,
    strip_comments,
    to_json,
)

_INF = 10 ** 9


# -------------------------------------------------------------------- edits


@dataclass(frozen=True)
class Insert:
    path: tuple[int, ...]
    node: object  # Node | IfBranch | SwitchCase
    in_role: str | None = None


@dataclass(frozen=True)
class Delete:
    path: tuple[int, ...]
    node: object  # snapshot for reporting; application only needs the path
    in_role: str | None = None


@dataclass(frozen=True)
class ReplaceRole:
    path: tuple[int, ...]
    old: str
    new: str


@dataclass(frozen=True)
class Move:
    from_path: tuple[int, ...]
    to_path: tuple[int, ...]


@dataclass(frozen=True)
class ModifyContent:
    path: tuple[int, ...]
    old: object
    new: object
    in_role: str | None = None


Edit = Insert | Delete | ReplaceRole | Move | ModifyContent


@dataclass
class EditScript:
    edits: list[Edit] = field(default_factory=list)
    mark_changes: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.edits)

    def to_json(self) -> dict:
        out = []
        for e in self.edits:
            if isinstance(e, Insert):
                out.append({"op": "insert", "path": list(e.path), "node": to_json(e.node)})
            elif isinstance(e, Delete):
                out.append({"op": "delete", "path": list(e.path), "node": to_json(e.node)})
            elif isinstance(e, ReplaceRole):
                out.append({"op": "replace-role", "path": list(e.path),
                            "old": e.old, "new": e.new})
            elif isinstance(e, Move):
                out.append({"op": "move", "from": list(e.from_path),
                            "to": list(e.to_path)})
            else:
                out.append({"op": "modify", "path": list(e.path),
                            "old": to_json(e.old), "new": to_json(e.new)})
        return {"edits": out, "mark_changes": list(self.mark_changes),
                "warnings": list(self.warnings)}

    def dumps(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json(), indent=indent, ensure_ascii=False)


# ------------------------------------------------------------ normalization


def normalize(ctx: ContextDef) -> tuple[Node, ...]:
    """Comment-free, mark-spliced body: the structure diffs run on."""
    return _splice_marks(strip_comments(ctx).body)


def _splice_marks(body: tuple[Node, ...]) -> tuple[Node, ...]:
    out: list[Node] = []
    for node in body:
        if isinstance(node, Mark):
            out.extend(_splice_marks(node.body))
            continue
        out.append(_splice_in(node))
    return tuple(out)


def _splice_in(node: Node) -> Node:
    if isinstance(node, (RoleMessage, ForEach)):
        return replace(node, body=_splice_marks(node.body))
    if isinstance(node, If):
        return replace(
            node,
            branches=tuple(IfBranch(b.condition, _splice_marks(b.body))
                           for b in node.branches),
            else_body=_splice_marks(node.else_body) if node.else_body is not None else None)
    if isinstance(node, Switch):
        return replace(
            node,
            cases=tuple(SwitchCase(c.label, _splice_marks(c.body)) for c in node.cases),
            default=_splice_marks(node.default) if node.default is not None else None)
    return node


def mark_signature(ctx: ContextDef) -> list[tuple[int, int]]:
    """(number, covered node count) per mark, in document order."""
    out: list[tuple[int, int]] = []
    for node in _walk_blocks(ctx.body):
        if isinstance(node, Mark):
            out.append((node.number, sum(node_count(n) for n in node.body)))
    return out


def _walk_blocks(body):
    for node in body:
        yield node
        for attr in ("body", "else_body", "default"):
            v = getattr(node, attr, None)
            if isinstance(v, tuple):
                yield from _walk_blocks(v)
        for attr in ("branches", "cases"):
            v = getattr(node, attr, None)
            if isinstance(v, tuple):
                for sub in v:
                    yield from _walk_blocks(sub.body)


# ------------------------------------------------------------- wrapper tree


@dataclass
class _DNode:
    kind: str  # role | loop | cond | branch | else | switch | case | default | leaf | root
    header: str
    role: str | None
    payload: object  # source node (If/Switch keep theirs; branch wrappers keep IfBranch)
    children: list["_DNode"]
    in_role: str | None = None

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def _wrap_body(body, in_role: str | None) -> list[_DNode]:
    return [_wrap(n, in_role) for n in body]


def _wrap(node, in_role: str | None) -> _DNode:
    if isinstance(node, IfBranch):
        return _DNode("branch", format_condition(node.condition), None, node,
                      _wrap_body(node.body, in_role), in_role)
    if isinstance(node, SwitchCase):
        return _DNode("case", format_expression(node.label), None, node,
                      _wrap_body(node.body, in_role), in_role)
    if isinstance(node, RoleMessage):
        return _DNode("role", node.role, node.role, node,
                      _wrap_body(node.body, node.role), in_role)
    if isinstance(node, ForEach):
        at = "@" if node.binder_at or is_time_binder(node) else ""
        header = f"ForEach({at}{node.binder}: {format_expression(node.iterable)})"
        return _DNode("loop", header, None, node,
                      _wrap_body(node.body, in_role), in_role)
    if isinstance(node, If):
        children = [_wrap(b, in_role) for b in node.branches]
        if node.else_body is not None:
            children.append(_DNode("else", "", None, None,
                                   _wrap_body(node.else_body, in_role), in_role))
        return _DNode("cond", "If", None, node, children, in_role)
    if isinstance(node, Switch):
        children = [_wrap(c, in_role) for c in node.cases]
        if node.default is not None:
            children.append(_DNode("default", "", None, None,
                                   _wrap_body(node.default, in_role), in_role))
        return _DNode("switch", f"Switch {format_expression(node.scrutinee)}",
                      None, node, children, in_role)
    if isinstance(node, PromptEndsHere):
        return _DNode("leaf", f"PromptEndsHere when ({format_condition(node.condition)})",
                      None, node, [], in_role)
    if isinstance(node, NameDef):
        return _DNode("leaf", f"Name {node.name} := {format_expression(node.value)}",
                      None, node, [], in_role)
    return _DNode("leaf", format_expression(node), None, node, [], in_role)


def _unwrap(d: _DNode):
    if d.kind == "role":
        return replace(d.payload, role=d.role,
                       body=tuple(_unwrap(c) for c in d.children))
    if d.kind == "loop":
        return replace(d.payload, body=tuple(_unwrap(c) for c in d.children))
    if d.kind == "branch":
        return IfBranch(d.payload.condition, tuple(_unwrap(c) for c in d.children))
    if d.kind == "case":
        return SwitchCase(d.payload.label, tuple(_unwrap(c) for c in d.children))
    if d.kind == "cond":
        branches = []
        else_body = None
        for c in d.children:
            if c.kind == "branch":
                branches.append(_unwrap(c))
            else:
                else_body = tuple(_unwrap(x) for x in c.children)
        return replace(d.payload, branches=tuple(branches), else_body=else_body)
    if d.kind == "switch":
        cases = []
        default = None
        for c in d.children:
            if c.kind == "case":
                cases.append(_unwrap(c))
            else:
                default = tuple(_unwrap(x) for x in c.children)
        return replace(d.payload, cases=tuple(cases), default=default)
    return d.payload


# --------------------------------------------------------------------- diff


def diff(a: ContextDef, b: ContextDef) -> EditScript:
    """Minimal edit script (under the documented cost model) turning a's
    structure into b's. Deterministic; comments and marks excluded."""
    script = EditScript()
    na, nb = normalize(a), normalize(b)
    total = sum(node_count(n) for n in na) + sum(node_count(n) for n in nb)
    if total > 200:
        script.warnings.append("W-DIFF-APPROX")
    d = _Differ()
    d.diff_children(_wrap_body(na, None), _wrap_body(nb, None), ())
    script.edits = d.edits
    ma, mb = mark_signature(a), mark_signature(b)
    if ma != mb:
        script.mark_changes.append(f"marks changed: {_fmt_marks(ma)} -> {_fmt_marks(mb)}")
    _fuse_moves(script, a, b)
    return script


def _fmt_marks(sig: list[tuple[int, int]]) -> str:
    if not sig:
        return "none"
    return ", ".join(f"]{n} over {c} node(s)" for n, c in sig)


class _Differ:
    def __init__(self) -> None:
        self.edits: list[Edit] = []
        self._memo: dict[tuple[int, int], int] = {}

    def match_cost(self, x: _DNode, y: _DNode) -> int:
        key = (id(x), id(y))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if x.kind != y.kind:
            cost = _INF
        elif x.kind == "leaf":
            cost = 0 if x.header == y.header else 1
        else:
            base = 0
            if x.kind == "role":
                base = 0 if x.role == y.role else 1
            elif x.header != y.header:
                base = 1
            cost = base + self.seq_cost(x.children, y.children)
        self._memo[key] = cost
        return cost

    def seq_cost(self, xs: list[_DNode], ys: list[_DNode]) -> int:
        return self._table(xs, ys)[len(xs)][len(ys)]

    def _table(self, xs: list[_DNode], ys: list[_DNode]) -> list[list[int]]:
        n, m = len(xs), len(ys)
        dp = [[0] * (m + 1) for _ in range(n + 1)]
        for i in range(1, n + 1):
            dp[i][0] = dp[i - 1][0] + xs[i - 1].size()
        for j in range(1, m + 1):
            dp[0][j] = dp[0][j - 1] + ys[j - 1].size()
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                sub = self.match_cost(xs[i - 1], ys[j - 1])
                dp[i][j] = min(
                    dp[i - 1][j - 1] + sub,
                    dp[i - 1][j] + xs[i - 1].size(),
                    dp[i][j - 1] + ys[j - 1].size(),
                )
        return dp

    def diff_children(self, xs: list[_DNode], ys: list[_DNode],
                      path: tuple[int, ...]) -> None:
        dp = self._table(xs, ys)
        ops: list[tuple[str, _DNode | None, _DNode | None]] = []
        i, j = len(xs), len(ys)
        # ties prefer substitution, then delete, then insert: reading the
        # script forward, edits land at the earliest possible positions
        while i > 0 or j > 0:
            sub = self.match_cost(xs[i - 1], ys[j - 1]) if i > 0 and j > 0 else _INF
            if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + sub:
                ops.append(("sub", xs[i - 1], ys[j - 1]))
                i -= 1
                j -= 1
            elif i > 0 and dp[i][j] == dp[i - 1][j] + xs[i - 1].size():
                ops.append(("del", xs[i - 1], None))
                i -= 1
            else:
                ops.append(("ins", None, ys[j - 1]))
                j -= 1
        ops.reverse()
        cur = 0
        for op, x, y in ops:
            if op == "sub":
                self.emit_sub(x, y, path + (cur,))
                cur += 1
            elif op == "del":
                self.edits.append(Delete(path + (cur,), _unwrap(x), x.in_role))
            else:
                self.edits.append(Insert(path + (cur,), _unwrap(y), y.in_role))
                cur += 1

    def emit_sub(self, x: _DNode, y: _DNode, path: tuple[int, ...]) -> None:
        if self.match_cost(x, y) == 0:
            return
        if x.kind == "leaf":
            self.edits.append(ModifyContent(path, x.payload, y.payload, x.in_role))
            return
        if x.kind == "role":
            if x.role != y.role:
                self.edits.append(ReplaceRole(path, x.role, y.role))
        elif x.header != y.header:
            self.edits.append(ModifyContent(path, _shell(x), _shell(y), x.in_role))
        self.diff_children(x.children, y.children, path)


def _shell(d: _DNode):
    """The construct with child sequences emptied (header-only edit payload)."""
    node = d.payload
    if isinstance(node, IfBranch):
        return IfBranch(node.condition, ())
    if isinstance(node, SwitchCase):
        return SwitchCase(node.label, ())
    if isinstance(node, (RoleMessage, ForEach)):
        return replace(node, body=())
    if isinstance(node, If):
        return replace(node,
                       branches=tuple(IfBranch(b.condition, ()) for b in node.branches),
                       else_body=() if node.else_body is not None else None)
    if isinstance(node, Switch):
        return replace(node, cases=tuple(SwitchCase(c.label, ()) for c in node.cases),
                       default=() if node.default is not None else None)
    return node


# -------------------------------------------------------------------- apply


def apply_script(script: EditScript, a: ContextDef) -> ContextDef:
    """Apply edits to a's normalized body; the result is AST-equal to the
    diff target's normalized form."""
    root = _DNode("root", "", None, None, _wrap_body(normalize(a), None))
    for e in script.edits:
        _apply_edit(root, e)
    body = tuple(_unwrap(c) for c in root.children)
    return replace(strip_comments(a), body=body)


def _locate(root: _DNode, path: tuple[int, ...]) -> tuple[_DNode, int]:
    node = root
    for idx in path[:-1]:
        node = node.children[idx]
    return node, path[-1]


def _apply_edit(root: _DNode, e: Edit) -> None:
    if isinstance(e, Delete):
        parent, idx = _locate(root, e.path)
        del parent.children[idx]
    elif isinstance(e, Insert):
        parent, idx = _locate(root, e.path)
        parent.children.insert(idx, _wrap(e.node, parent.role or parent.in_role))
    elif isinstance(e, ReplaceRole):
        parent, idx = _locate(root, e.path)
        target = parent.children[idx]
        target.role = e.new
        target.header = e.new
    elif isinstance(e, Move):
        parent, idx = _locate(root, e.from_path)
        node = parent.children.pop(idx)
        dest, didx = _locate(root, e.to_path)
        dest.children.insert(didx, node)
    elif isinstance(e, ModifyContent):
        parent, idx = _locate(root, e.path)
        target = parent.children[idx]
        fresh = _wrap(e.new, target.in_role)
        if target.kind != "leaf":
            fresh.children = target.children
        parent.children[idx] = fresh


# --------------------------------------------------------------- move fusion


def _fuse_moves(script: EditScript, a: ContextDef, b: ContextDef) -> None:
    """Fold a Delete+Insert of one identical subtree into a Move when that is
    cheaper under the cost model (subtree size > 2) and stays sound, which is
    verified by applying the fused script."""
    edits = script.edits
    target = normalize(b)
    for di, d in enumerate(edits):
        # a single-node subtree costs 1+1 either way: keep delete+insert
        if not isinstance(d, Delete) or node_count(d.node) < 2:
            continue
        for ii, ins in enumerate(edits):
            if ii == di or not isinstance(ins, Insert):
                continue
            if not ast_equal(d.node, ins.node):
                continue
            for from_path in _shift_variants(d.path):
                for to_path in _shift_variants(ins.path):
                    candidate = list(edits)
                    lo, hi = sorted((di, ii))
                    candidate[lo] = Move(from_path, to_path)
                    del candidate[hi]
                    try:
                        result = apply_script(EditScript(candidate), a)
                    except (IndexError, AttributeError, TypeError):
                        continue
                    if ast_equal(result.body, target):
                        script.edits = candidate
                        return


def _shift_variants(path: tuple[int, ...]):
    """The recorded path plus its neighbors: fusing reorders the script, so
    sibling indices may be off by one. Verification picks the sound one."""
    yield path
    if path[-1] > 0:
        yield path[:-1] + (path[-1] - 1,)
    yield path[:-1] + (path[-1] + 1,)


# ------------------------------------------------------------------ reports


def format_diff(script: EditScript, mode: str = "text") -> str:
    """Edit listing with source spans; empty scripts report no differences."""
    if mode != "text":
        raise ValueError("format_diff handles mode='text'; "
                         "use render_diff_svg for the annotated drawing")
    if not script.edits and not script.mark_changes:
        return "no structural differences\n"
    lines = []
    for e in script.edits:
        if isinstance(e, Delete):
            lines.append(f"- {_report_node(e.node, e.in_role)}{_at(e.node)}")
        elif isinstance(e, Insert):
            lines.append(f"+ {_report_node(e.node, e.in_role)}{_at(e.node)}")
        elif isinstance(e, ReplaceRole):
            lines.append(f"~ role {e.old} -> {e.new} at {_path_text(e.path)}")
        elif isinstance(e, Move):
            lines.append(f"> move {_path_text(e.from_path)} -> {_path_text(e.to_path)}")
        else:
            lines.append(f"* {_report_node(e.old, e.in_role)} -> "
                         f"{_report_node(e.new, e.in_role)}")
    for note in script.mark_changes:
        lines.append(f"# {note}")
    return "\n".join(lines) + "\n"


def _report_node(node, in_role: str | None) -> str:
    if isinstance(node, IfBranch):
        text = f"ElseIf {format_condition(node.condition)} {{...}}"
    elif isinstance(node, SwitchCase):
        text = f"Case {format_expression(node.label)} {{...}}"
    else:
        text = format_block(node).replace("\n", " ")
    if len(text) > 72:
        text = text[:69] + "..."
    prefix = f"{in_role}: " if in_role and not isinstance(node, RoleMessage) else ""
    return prefix + text


def _at(node) -> str:
    span = getattr(node, "span", None)
    if span is None or (span.start == 0 and span.end == 0):
        return ""
    return f"  @ {span.start}..{span.end}"


def _path_text(path: tuple[int, ...]) -> str:
    return "/" + "/".join(str(p) for p in path)


# ---------------------------------------------------------------- annotated


def render_diff_svg(a: ContextDef, b: ContextDef, script: EditScript,
                    theme=None) -> str:
    """Render b with inserted/changed nodes color-tagged and deleted nodes
    kept in place as ghosts in the deleted style."""
    from .render import LayoutTree, LNode, Theme, _MARGIN, _Builder, _shift, render_svg

    theme = theme or Theme()
    root = _DNode("root", "", None, None, _wrap_body(normalize(a), None))
    tags: dict[int, str] = {}
    for e in script.edits:
        if isinstance(e, Delete):
            parent, idx = _locate(root, _live_path(root, e.path))
            ghost = parent.children[idx]
            _tag_all(ghost, "deleted", tags)
            ghost.kind = "ghost-" + ghost.kind
        elif isinstance(e, Insert):
            parent, idx = _locate(root, _live_path(root, e.path[:-1]) + (e.path[-1],))
            idx = _live_index(parent, idx)
            node = _wrap(e.node, parent.role or parent.in_role)
            _tag_all(node, "inserted", tags)
            parent.children.insert(idx, node)
        elif isinstance(e, ReplaceRole):
            parent, idx = _locate(root, _live_path(root, e.path))
            target = parent.children[idx]
            target.role = e.new
            tags[id(target)] = "changed"
        elif isinstance(e, ModifyContent):
            parent, idx = _locate(root, _live_path(root, e.path))
            target = parent.children[idx]
            fresh = _wrap(e.new, target.in_role)
            if target.kind != "leaf":
                fresh.children = target.children
            tags[id(fresh)] = "changed"
            parent.children[idx] = fresh
        elif isinstance(e, Move):
            parent, idx = _locate(root, _live_path(root, e.from_path))
            node = parent.children.pop(idx)
            dest, didx = _locate(root, _live_path(root, e.to_path[:-1]) + (e.to_path[-1],))
            tags[id(node)] = "changed"
            dest.children.insert(_live_index(dest, didx), node)

    builder = _Builder(theme)
    rows = builder.stack([[_render_dnode(c, builder, tags)] for c in root.children])
    frame = builder.frame(b.name, "context", rows)
    _shift(frame, _MARGIN, _MARGIN)
    canvas = LNode("canvas", 0, 0, frame.w + 2 * _MARGIN, frame.h + 2 * _MARGIN,
                   children=[frame])
    return render_svg(LayoutTree(canvas, theme))


def _tag_all(d: _DNode, tag: str, tags: dict[int, str]) -> None:
    tags[id(d)] = tag
    for c in d.children:
        _tag_all(c, tag, tags)


def _live_index(parent: _DNode, idx: int) -> int:
    """Map an index over live children onto the ghost-bearing child list."""
    live = 0
    for pos, child in enumerate(parent.children):
        if live == idx:
            return pos
        if not child.kind.startswith("ghost-"):
            live += 1
    return len(parent.children)


def _live_path(root: _DNode, path: tuple[int, ...]) -> tuple[int, ...]:
    node = root
    out: list[int] = []
    for idx in path:
        pos = _live_index(node, idx)
        out.append(pos)
        node = node.children[pos]
    return tuple(out)


def _render_dnode(d: _DNode, builder, tags: dict[int, str]):
    from .render import LNode, _PAD, _shift

    tag = tags.get(id(d), "")
    kind = d.kind.removeprefix("ghost-")
    if kind == "role":
        rows = builder.stack([[_render_dnode(c, builder, tags)] for c in d.children])
        if not rows:
            rows = [builder.text_node(" ", "content")]
        chip = builder.t.char_w + 10
        for r in rows:
            _shift(r, chip + _PAD, _PAD)
        right = builder.equalize(rows)
        w = right + _PAD
        h = max(r.y + r.h for r in rows) + _PAD
        h = max(h, builder.t.line_h + 2 * _PAD)
        return LNode("box", 0, 0, w, h, role=d.role, children=rows, style=tag)
    if kind in ("loop", "switch"):
        rows = builder.stack([[_render_dnode(c, builder, tags)] for c in d.children])
        frame = builder.frame(d.header, kind + (" " + tag if tag else ""), rows)
        return frame
    if kind == "cond":
        groups = []
        header = "If"
        for i, c in enumerate(d.children):
            ckind = c.kind.removeprefix("ghost-")
            ctag = tags.get(id(c), "")
            if ckind == "branch" and i == 0:
                header = f"If {c.header}"
            elif ckind == "branch":
                groups.append([builder.text_node(f"ElseIf {c.header}",
                                                 ("header " + ctag).strip())])
            else:
                groups.append([builder.text_node("Else", ("header " + ctag).strip())])
            for sub in c.children:
                groups.append([_render_dnode(sub, builder, tags)])
        rows = builder.stack(groups)
        return builder.frame(header, "cond" + (" " + tag if tag else ""), rows)
    if kind in ("branch", "case", "else", "default"):
        rows = builder.stack([[_render_dnode(c, builder, tags)] for c in d.children])
        label = {"branch": f"ElseIf {d.header}", "case": f"Case {d.header}",
                 "else": "Else", "default": "Default"}[kind]
        return builder.frame(label, "cond" + (" " + tag if tag else ""), rows)
    style = "muted deleted" if tag == "deleted" else ("content " + tag).strip()
    return builder.text_node(d.header, style)
