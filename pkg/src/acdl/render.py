"""Deterministic layout and SVG rendering.

Text is measured with a fixed character-advance table (monospace metrics),
never system fonts, so output bytes are identical across platforms. All
coordinates are integers. Sibling role boxes and frames are equalized to a
common right edge; mark brackets sit in a gutter along that edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .expansion import ExpandedPrompt
from .formatter import format_condition, format_expression, is_time_binder
from .nodes import (
    BreakStmt,
    Comment,
    ContextDef,
    ContinueStmt,
    Document,
    ForEach,
    FragInvoke,
    FragmentDef,
    If,
    Mark,
    NameDef,
    PromptEndsHere,
    RoleMessage,
    Switch,
)


@dataclass(frozen=True)
class RoleStyle:
    fill: str
    stroke: str


_DEFAULT_ROLES = {
    "S": RoleStyle("#fef3c7", "#d97706"),  # amber
    "U": RoleStyle("#dbeafe", "#2563eb"),  # blue
    "A": RoleStyle("#dcfce7", "#16a34a"),  # green
    "T": RoleStyle("#ede9fe", "#7c3aed"),  # violet
    "N": RoleStyle("#f3f4f6", "#6b7280"),  # gray
}

DIFF_COLORS = {
    "inserted": "#15803d",
    "deleted": "#dc2626",
    "changed": "#ea580c",
}


@dataclass(frozen=True)
class Theme:
    roles: dict[str, RoleStyle] = field(default_factory=lambda: dict(_DEFAULT_ROLES))
    font_size: int = 12
    wrap_col: int = 48
    frame_dash: str = "4 3"

    @property
    def char_w(self) -> int:
        return max(1, (self.font_size * 3 + 2) // 5)

    @property
    def line_h(self) -> int:
        return self.font_size + 6

    @classmethod
    def from_dict(cls, data: dict) -> "Theme":
        roles = dict(_DEFAULT_ROLES)
        for role, style in data.get("roles", {}).items():
            base = roles.get(role, _DEFAULT_ROLES["N"])
            roles[role] = RoleStyle(style.get("fill", base.fill),
                                    style.get("stroke", base.stroke))
        return cls(roles=roles,
                   font_size=int(data.get("font_size", 12)),
                   wrap_col=int(data.get("wrap_col", 48)),
                   frame_dash=str(data.get("frame_dash", "4 3")))

    @classmethod
    def from_json(cls, text: str) -> "Theme":
        return cls.from_dict(json.loads(text))


@dataclass
class LNode:
    """One layout element: role box, dashed frame, mark bracket, or text run.
    Coordinates are absolute within the finished tree."""

    kind: str  # canvas | box | frame | bracket | text
    x: int = 0
    y: int = 0
    w: int = 0
    h: int = 0
    role: str | None = None
    label: str = ""
    style: str = ""  # frames: context|loop|cond|switch; text: content|comment|header|muted; diff tags
    number: int | None = None
    children: list["LNode"] = field(default_factory=list)

    def iter_all(self):
        yield self
        for c in self.children:
            yield from c.iter_all()


@dataclass
class LayoutTree:
    root: LNode
    theme: Theme


_PAD = 6
_FRAME_PAD = 8
_GAP = 6
_BRACKET_W = 6
_MARGIN = 12


def layout(source: Document | ExpandedPrompt, theme: Theme | None = None) -> LayoutTree:
    """Arrange a document (structural view) or an expanded prompt (instance
    view). Pure: identical inputs produce an identical tree."""
    theme = theme or Theme()
    b = _Builder(theme)
    if isinstance(source, ExpandedPrompt):
        root = b.build_expanded(source)
    else:
        root = b.build_document(source)
    return LayoutTree(root, theme)


def _shift(node: LNode, dx: int, dy: int) -> None:
    node.x += dx
    node.y += dy
    for c in node.children:
        _shift(c, dx, dy)


def _grow(node: LNode, amount: int) -> None:
    """Widen a box/frame and everything glued to its right edge."""
    node.w += amount
    for c in node.children:
        if c.kind == "bracket":
            c.x += amount
        elif c.kind in ("box", "frame"):
            _grow(c, amount)


class _Builder:
    def __init__(self, theme: Theme):
        self.t = theme

    # ---- primitives

    def wrap(self, text: str) -> list[str]:
        col = self.t.wrap_col
        if len(text) <= col:
            return [text]
        out = [text[:col]]
        rest = text[col:]
        while rest:
            out.append("↪ " + rest[:col - 2])
            rest = rest[col - 2:]
        return out

    def text_node(self, text: str, style: str) -> LNode:
        lines = self.wrap(text)
        w = max((len(line) for line in lines), default=0) * self.t.char_w
        return LNode("text", 0, 0, w, self.t.line_h * len(lines),
                     label="\n".join(lines), style=style)

    def bracket_gutter(self) -> int:
        return 4 + _BRACKET_W + 2 * self.t.char_w

    # ---- generic stacking

    def stack(self, groups: list[list[LNode]]) -> list[LNode]:
        """Stack pre-built groups vertically from y=0; brackets keep their
        vertical extent within their group."""
        out: list[LNode] = []
        y = 0
        for group in groups:
            if not group:
                continue
            top = min(n.y for n in group)
            for n in group:
                _shift(n, 0, y - top)
            y = max(n.y + n.h for n in group) + _GAP
            out.extend(group)
        return out

    def equalize(self, nodes: list[LNode], min_right: int = 0) -> int:
        """Grow sibling boxes/frames to a shared right edge; park sibling
        brackets in the gutter beyond it. Returns the overall right extent."""
        blocks = [n for n in nodes if n.kind in ("box", "frame")]
        texts = [n for n in nodes if n.kind == "text"]
        brackets = [n for n in nodes if n.kind == "bracket"]
        right = max((n.x + n.w for n in blocks + texts), default=0)
        right = max(right, min_right)
        for n in blocks:
            delta = right - (n.x + n.w)
            if delta > 0:
                _grow(n, delta)
        for n in brackets:
            n.x = right + 4
        if brackets:
            right += self.bracket_gutter()
        return right

    # ---- document view

    def build_document(self, doc: Document) -> LNode:
        groups: list[list[LNode]] = []
        for item in doc.items:
            if isinstance(item, Comment):
                groups.append([self.text_node("//" + item.text, "comment")])
            elif isinstance(item, (ContextDef, FragmentDef)):
                groups.append([self.build_def(item)])
        children = self.stack(groups)
        for c in children:
            _shift(c, _MARGIN, _MARGIN)
        w = max((c.x + c.w for c in children), default=0) + _MARGIN
        h = max((c.y + c.h for c in children), default=0) + _MARGIN
        return LNode("canvas", 0, 0, max(w, 2 * _MARGIN), max(h, 2 * _MARGIN),
                     children=children)

    def build_def(self, item: ContextDef | FragmentDef) -> LNode:
        if isinstance(item, ContextDef):
            kw = ""
        else:
            kw = "StrFrag " if item.kind == "string" else "RolesFrag "
        params = ""
        if item.params:
            from .formatter import _fmt_params
            params = _fmt_params(item.params)
        rows = self.stack([self.build_block(n) for n in item.body])
        return self.frame(f"{kw}{item.name}{params}", "context", rows)

    def build_block(self, node) -> list[LNode]:
        """Build one prompt block or content element as a group rooted at (0,0)."""
        if isinstance(node, Comment):
            return [self.text_node("//" + node.text, "comment")]
        if isinstance(node, RoleMessage):
            return [self.build_box(node)]
        if isinstance(node, ForEach):
            at = "@" if node.binder_at or is_time_binder(node) else ""
            header = f"ForEach({at}{node.binder}: {format_expression(node.iterable)})"
            rows = self.stack([self.build_block(n) for n in node.body])
            return [self.frame(header, "loop", rows)]
        if isinstance(node, If):
            groups: list[list[LNode]] = []
            for n in node.branches[0].body:
                groups.append(self.build_block(n))
            for branch in node.branches[1:]:
                groups.append([self.text_node(
                    f"ElseIf {format_condition(branch.condition)}", "header")])
                for n in branch.body:
                    groups.append(self.build_block(n))
            if node.else_body is not None:
                groups.append([self.text_node("Else", "header")])
                for n in node.else_body:
                    groups.append(self.build_block(n))
            rows = self.stack(groups)
            header = f"If {format_condition(node.branches[0].condition)}"
            return [self.frame(header, "cond", rows)]
        if isinstance(node, Switch):
            groups = []
            for case in node.cases:
                groups.append([self.text_node(
                    f"Case {format_expression(case.label)}", "header")])
                for n in case.body:
                    groups.append(self.build_block(n))
            if node.default is not None:
                groups.append([self.text_node("Default", "header")])
                for n in node.default:
                    groups.append(self.build_block(n))
            rows = self.stack(groups)
            header = f"Switch {format_expression(node.scrutinee)}"
            return [self.frame(header, "switch", rows)]
        if isinstance(node, Mark):
            rows = self.stack([self.build_block(n) for n in node.body])
            if not rows:
                return []
            top = min(r.y for r in rows)
            bottom = max(r.y + r.h for r in rows)
            bracket = LNode("bracket", 0, top, _BRACKET_W, bottom - top,
                            number=node.number)
            return rows + [bracket]
        if isinstance(node, PromptEndsHere):
            return [self.text_node(
                f"PromptEndsHere when ({format_condition(node.condition)})", "header")]
        if isinstance(node, NameDef):
            return [self.text_node(
                f"Name {node.name} := {format_expression(node.value)}", "content")]
        if isinstance(node, FragInvoke):
            return [self.text_node(format_expression(node), "content")]
        if isinstance(node, BreakStmt):
            return [self.text_node("break", "content")]
        if isinstance(node, ContinueStmt):
            return [self.text_node("continue", "content")]
        return [self.text_node(format_expression(node), "content")]

    def build_box(self, msg: RoleMessage) -> LNode:
        rows = self.stack([self.build_block(n) for n in msg.body])
        if not rows:
            rows = [self.text_node(" ", "content")]
        chip = self.t.char_w + 10
        for r in rows:
            _shift(r, chip + _PAD, _PAD)
        right = self.equalize(rows)
        w = right + _PAD
        h = max(r.y + r.h for r in rows) + _PAD
        h = max(h, self.t.line_h + 2 * _PAD)
        return LNode("box", 0, 0, w, h, role=msg.role, children=rows)

    def frame(self, header: str, style: str, rows: list[LNode]) -> LNode:
        head = self.text_node(header, "header")
        _shift(head, _FRAME_PAD, _FRAME_PAD)
        y = head.y + head.h + _GAP
        top = min((r.y for r in rows), default=0)
        for r in rows:
            _shift(r, _FRAME_PAD, y - top)
        right = self.equalize(rows, min_right=head.x + head.w)
        w = max(head.x + head.w, right) + _FRAME_PAD
        bottom = max((r.y + r.h for r in rows), default=head.y + head.h)
        return LNode("frame", 0, 0, w, bottom + _FRAME_PAD, label=header,
                     style=style, children=[head] + rows)

    # ---- instance view

    def build_expanded(self, prompt: ExpandedPrompt) -> LNode:
        chip = self.t.char_w + 10
        boxes: list[LNode] = []
        for msg in prompt.messages:
            rows = []
            for slot in msg.slots:
                style = "muted" if slot.kind == "unresolved" else "content"
                rows.append([self.text_node(slot.text, style)])
            stacked = self.stack(rows) if rows else [self.text_node(" ", "content")]
            for r in stacked:
                _shift(r, chip + _PAD, _PAD)
            w = max(r.x + r.w for r in stacked) + _PAD
            h = max(r.y + r.h for r in stacked) + _PAD
            h = max(h, self.t.line_h + 2 * _PAD)
            boxes.append(LNode("box", 0, 0, w, h, role=msg.role, children=stacked))
        stacked_boxes = self.stack([[b] for b in boxes])
        right = self.equalize(stacked_boxes)
        brackets: list[LNode] = []
        for mark in prompt.marks:
            node = self._expanded_bracket(mark, boxes, right)
            if node is not None:
                brackets.append(node)
        children = stacked_boxes + brackets
        for c in children:
            _shift(c, _MARGIN, _MARGIN)
        w = max((c.x + c.w + (2 * self.t.char_w if c.kind == "bracket" else 0)
                 for c in children), default=0) + _MARGIN
        h = max((c.y + c.h for c in children), default=0) + _MARGIN
        return LNode("canvas", 0, 0, max(w, 2 * _MARGIN), max(h, 2 * _MARGIN),
                     children=children)

    def _expanded_bracket(self, mark, boxes: list[LNode], right: int) -> LNode | None:
        if mark.message_range is not None:
            a, b = mark.message_range
            if a >= len(boxes) or b <= a:
                return None
            top = boxes[a].y
            bottom = boxes[min(b, len(boxes)) - 1].y + boxes[min(b, len(boxes)) - 1].h
            return LNode("bracket", right + 4, top, _BRACKET_W, bottom - top,
                         number=mark.number)
        if mark.message is not None and mark.message < len(boxes):
            host = boxes[mark.message]
            a, b = mark.slot_range or (0, 0)
            rows = host.children
            if not rows or a >= len(rows) or b <= a:
                return None
            top = rows[a].y
            bottom = rows[min(b, len(rows)) - 1].y + rows[min(b, len(rows)) - 1].h
            return LNode("bracket", right + 4, top, _BRACKET_W, bottom - top,
                         number=mark.number)
        return None


# ------------------------------------------------------------------------ SVG


def render_svg(tree: LayoutTree) -> str:
    """Standalone SVG 1.1 text: stable element order, no ids, no timestamps."""
    t = tree.theme
    root = tree.root
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{root.w}" height="{root.h}" viewBox="0 0 {root.w} {root.h}">',
        f'<rect x="0" y="0" width="{root.w}" height="{root.h}" fill="#ffffff"/>',
    ]
    for node in root.children:
        _emit(node, out, t)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _emit(node: LNode, out: list[str], t: Theme) -> None:
    tags = node.style.split()
    diff_tag = next((d for d in DIFF_COLORS if d in tags), None)
    if node.kind == "frame":
        color = DIFF_COLORS.get(diff_tag or "", "#94a3b8" if "context" in tags else "#64748b")
        width = 2 if diff_tag else 1
        out.append(
            f'<rect x="{node.x}" y="{node.y}" width="{node.w}" height="{node.h}" '
            f'rx="6" fill="none" stroke="{color}" stroke-width="{width}" '
            f'stroke-dasharray="{t.frame_dash}"/>'
        )
        for c in node.children:
            _emit(c, out, t)
        return
    if node.kind == "box":
        style = t.roles.get(node.role or "N", _DEFAULT_ROLES["N"])
        stroke = DIFF_COLORS.get(diff_tag or "", style.stroke)
        width = 2 if diff_tag else 1
        out.append(
            f'<rect x="{node.x}" y="{node.y}" width="{node.w}" height="{node.h}" '
            f'rx="3" fill="{style.fill}" stroke="{stroke}" stroke-width="{width}"/>'
        )
        out.append(
            f'<text x="{node.x + 5}" y="{node.y + _PAD + t.font_size}" '
            f'font-family="monospace" font-size="{t.font_size}" '
            f'font-weight="bold" fill="{style.stroke}">{node.role}</text>'
        )
        for c in node.children:
            _emit(c, out, t)
        return
    if node.kind == "text":
        color = {"comment": "#9ca3af", "muted": "#9ca3af",
                 "header": "#475569"}.get(node.style, "#111827")
        if diff_tag:
            color = DIFF_COLORS[diff_tag]
        italic = ' font-style="italic"' if node.style in ("comment", "muted") else ""
        weight = ' font-weight="bold"' if node.style == "header" else ""
        for i, line in enumerate(node.label.split("\n")):
            ty = node.y + t.font_size + i * t.line_h
            out.append(
                f'<text x="{node.x}" y="{ty}" font-family="monospace" '
                f'font-size="{t.font_size}"{weight}{italic} '
                f'fill="{color}">{_escape(line)}</text>'
            )
        return
    if node.kind == "bracket":
        x, y1, y2 = node.x, node.y, node.y + node.h
        out.append(
            f'<path d="M {x} {y1} h {_BRACKET_W} V {y2} h -{_BRACKET_W}" '
            f'fill="none" stroke="#334155" stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{x + _BRACKET_W + 4}" y="{(y1 + y2) // 2 + t.font_size // 2}" '
            f'font-family="monospace" font-size="{t.font_size}" '
            f'fill="#334155">{node.number}</text>'
        )
        return
    for c in node.children:
        _emit(c, out, t)


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
