import re

import acdl
from acdl.expansion import EnvironmentDocument, expand
from acdl.parser import parse
from acdl.render import LayoutTree, Theme, layout, render_svg
from acdl.semantics import resolve

from conftest import GOLDENS, parse_clean, resolved


def boxes_of(node):
    return [c for c in node.children if c.kind == "box"]


def frames_of(node):
    return [c for c in node.children if c.kind == "frame"]


def test_tool_agent_layout_counts(corpus):
    tree = layout(parse_clean(corpus["tool_agent"]))
    ctx = tree.root.children[0]
    assert ctx.kind == "frame" and ctx.style == "context"
    top_boxes = boxes_of(ctx)
    assert [b.role for b in top_boxes] == ["S", "U", "S"]
    top_frames = frames_of(ctx)
    assert len(top_frames) == 1 and top_frames[0].style == "cond"
    loops = frames_of(top_frames[0])
    assert len(loops) == 1 and loops[0].style == "loop"
    inner = frames_of(loops[0])
    assert len(inner) == 1 and inner[0].style == "cond"
    # the two-branch conditional holds one U and one A box
    assert sorted(b.role for b in boxes_of(inner[0])) == ["A", "U"]


def test_tool_agent_s_fill_rects(corpus):
    theme = Theme()
    svg = render_svg(layout(parse_clean(corpus["tool_agent"]), theme))
    s_fill = theme.roles["S"].fill
    s_rects = [m for m in re.findall(r"<rect[^>]*/>", svg) if s_fill in m]
    assert len(s_rects) == 2  # both top-level; no S message sits inside a frame


def test_empty_context_titled_frame():
    tree = layout(parse_clean("Empty[@T]: {\n}\n"))
    ctx = tree.root.children[0]
    assert ctx.kind == "frame"
    assert ctx.children[0].kind == "text" and "Empty[@T]" in ctx.children[0].label


def test_mark_brackets(corpus):
    tree = layout(parse_clean(corpus["mark_blocks"]))
    brackets = [n for n in tree.root.iter_all() if n.kind == "bracket"]
    assert sorted(b.number for b in brackets) == [1, 2, 3]
    svg = render_svg(tree)
    for n in (1, 2, 3):
        assert f">{n}</text>" in svg


def test_mark_bracket_extent_matches_body(corpus):
    tree = layout(parse_clean(corpus["mark_blocks"]))
    ctx = tree.root.children[0]
    by_number = {n.number: n for n in ctx.children if n.kind == "bracket"}
    rows = [c for c in ctx.children if c.kind in ("box", "frame")]
    # mark 1 covers the first S box, mark 2 the loop frame, mark 3 the last U
    assert by_number[1].y == rows[0].y and by_number[1].h == rows[0].h
    assert by_number[2].y == rows[1].y and by_number[2].h == rows[1].h
    assert by_number[3].y == rows[2].y and by_number[3].h == rows[2].h


def test_vertical_order_follows_source(corpus):
    for name, source in corpus.items():
        tree = layout(parse_clean(source, name))
        for node in tree.root.iter_all():
            kids = [c for c in node.children if c.kind in ("box", "frame")]
            ys = [c.y for c in kids]
            assert ys == sorted(ys), name


def test_no_sibling_overlap(corpus):
    import itertools
    for name, source in corpus.items():
        tree = layout(parse_clean(source, name))
        for node in tree.root.iter_all():
            kids = [c for c in node.children if c.kind in ("box", "frame")]
            for a, b in itertools.combinations(kids, 2):
                assert a.y + a.h <= b.y or b.y + b.h <= a.y, name


def test_children_contained_in_parent(corpus):
    for name, source in corpus.items():
        tree = layout(parse_clean(source, name))
        for node in tree.root.iter_all():
            if node.kind not in ("frame", "box", "canvas"):
                continue
            for c in node.children:
                if c.kind == "bracket":
                    continue
                assert c.x >= node.x and c.y >= node.y, name
                assert c.x + c.w <= node.x + node.w, name
                assert c.y + c.h <= node.y + node.h, name


def test_comment_text_runs_muted(corpus):
    tree = layout(parse_clean(corpus["comments"]))
    from acdl.nodes import Comment, walk
    doc = parse_clean(corpus["comments"])
    n_comments = sum(1 for n in walk(doc) if isinstance(n, Comment))
    runs = [n for n in tree.root.iter_all()
            if n.kind == "text" and n.style == "comment"]
    assert len(runs) == n_comments


def test_render_deterministic(corpus):
    doc = parse_clean(corpus["game_agent"])
    outs = {render_svg(layout(doc)) for _ in range(3)}
    assert len(outs) == 1


def test_goldens(corpus):
    for name, source in corpus.items():
        svg = render_svg(layout(parse_clean(source, name)))
        golden = (GOLDENS / f"{name}.svg").read_text()
        assert svg == golden, f"{name} drifted from its golden"


def test_expanded_golden(corpus):
    ctx = resolved(corpus["mark_blocks"], "Prompt")
    p, _ = expand(ctx, EnvironmentDocument.from_dict({"time": [3]}))
    svg = render_svg(layout(p))
    assert svg == (GOLDENS / "mark_blocks__expanded_t3.svg").read_text()


def test_expanded_view_order(corpus):
    ctx = resolved(corpus["tool_agent"], "ToolAgent")
    p, _ = expand(ctx, EnvironmentDocument.from_dict({"time": [1]}))
    tree = layout(p)
    roles = [b.role for b in tree.root.children if b.kind == "box"]
    assert roles == [m.role for m in p.messages]


def test_theme_file_roundtrip():
    theme = Theme.from_json('{"roles":{"S":{"fill":"#ffffff","stroke":"#000000"}},'
                            '"font_size":14,"wrap_col":40}')
    assert theme.roles["S"].fill == "#ffffff"
    assert theme.font_size == 14 and theme.wrap_col == 40
    assert theme.roles["U"].fill  # untouched roles keep defaults
    svg = render_svg(layout(parse_clean("X[@T]: {\n  S: A_B\n}\n"), theme))
    assert 'fill="#ffffff"' in svg and 'font-size="14"' in svg


def test_long_lines_wrap():
    long_seg = "x" * 80
    doc = parse_clean(f"X[@T]: {{\n  U: env.{long_seg}[@T]\n}}\n")
    tree = layout(doc)
    wrapped = [n for n in tree.root.iter_all()
               if n.kind == "text" and "\n" in n.label]
    assert wrapped and "↪" in wrapped[0].label


def test_svg_is_self_contained(corpus):
    svg = render_svg(layout(parse_clean(corpus["tool_agent"])))
    assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" version="1.1"')
    assert "id=" not in svg
    assert svg.rstrip().endswith("</svg>")
    # special characters in labels are escaped
    doc = parse_clean('X[@T]: {\n  If @T < 2 & @T > 0 {\n    U: env.q[@T]\n  }\n}\n')
    svg = render_svg(layout(doc))
    assert "&lt;" in svg and "&amp;" in svg
