import acdl
from acdl.nodes import (
    ContextDef,
    ContextVar,
    ForEach,
    FragmentDef,
    FunctionCall,
    If,
    NameDef,
    NameRef,
    RoleMessage,
    Template,
    ast_equal,
    content_elements,
    walk,
)
from acdl.parser import parse, parse_block_text, parse_expression

from conftest import errors_of, parse_clean


def roles_of(body):
    return [b.role for b in body if isinstance(b, RoleMessage)]


def test_tool_agent_shape(corpus):
    doc = parse_clean(corpus["tool_agent"])
    assert len(doc.items) == 1
    ctx = doc.items[0]
    assert isinstance(ctx, ContextDef) and ctx.name == "ToolAgent"
    kinds = [type(b).__name__ for b in ctx.body]
    assert kinds == ["RoleMessage", "RoleMessage", "If", "RoleMessage"]
    assert roles_of(ctx.body) == ["S", "U", "S"]


def test_nested_role_is_single_error():
    src = "Bad[@T]: {\n  U: {\n    S: INSTRUCTIONS   // ERROR: nested role\n  }\n}\n"
    _, diags = parse(src)
    errs = errors_of(diags)
    assert [d.code for d in errs] == ["E-NESTED-ROLE"]
    assert errs[0].span.line == 3


def test_basic_rag_shape(corpus):
    doc = parse_clean(corpus["basic_rag"])
    ctx = doc.items[0]
    u_msg = ctx.body[1]
    assert isinstance(u_msg, RoleMessage) and u_msg.role == "U"
    body = content_elements(u_msg.body)
    assert isinstance(body[0], NameDef) and body[0].name == "docs"
    loop = body[1]
    assert isinstance(loop, ForEach)
    assert isinstance(loop.iterable, FunctionCall) and loop.iterable.name == "range"
    refs = [n for n in walk(loop) if isinstance(n, NameRef)]
    assert len(refs) == 3  # $docs.len bound plus two field accesses
    assert isinstance(body[2], Template)
    assert isinstance(body[3], ContextVar)


def test_single_line_restriction():
    _, diags = parse("X[@T]: {\n  U: ForEach(t: range(1, @T)) {\n    env.q[@t]\n  }\n}\n")
    assert any(d.code == "E-SINGLELINE-CTRL" for d in diags)
    # the three permitted kinds parse clean
    for elem in ("env.q[@T]", "INSTRUCTIONS", "summarize(sys.h[@T])"):
        doc = parse_clean(f"X[@T]: {{\n  U: {elem}\n}}\n")
        msg = doc.items[0].body[0]
        assert msg.single_line
        assert len(content_elements(msg.body)) == 1


def test_single_line_accepts_only_three_kinds(corpus):
    for source in corpus.values():
        doc, diags = parse(source)
        if errors_of(diags):
            continue
        for node in walk(doc):
            if isinstance(node, RoleMessage) and node.single_line:
                elems = content_elements(node.body)
                assert len(elems) == 1
                assert isinstance(elems[0], (ContextVar, Template, FunctionCall))


def test_unbalanced_braces():
    _, diags = parse("X[@T]: {\n  U: env.q[@T]\n")
    assert any(d.code == "E-UNBALANCED" for d in diags)
    _, diags = parse("}\n")
    assert any(d.code == "E-UNBALANCED" for d in diags)


def test_error_recovery_reports_multiple():
    src = ("One[@T]: {\n"
           "  U: { S: X }\n"
           "}\n"
           "\n"
           "Two[@T]: {\n"
           "  U: ForEach(t: range(1, @T)) {\n"
           "    env.q[@t]\n"
           "  }\n"
           "}\n")
    _, diags = parse(src)
    errs = errors_of(diags)
    assert len(errs) >= 2
    codes = {d.code for d in errs}
    assert "E-NESTED-ROLE" in codes and "E-SINGLELINE-CTRL" in codes


def test_both_fragment_spellings(corpus):
    doc = parse_clean(corpus["structure_skeletons"])
    frags = [i for i in doc.items if isinstance(i, FragmentDef)]
    assert {f.kind for f in frags} == {"string", "roles"}


def test_connective_spellings_equal():
    a = parse_clean("X[@T.I]: {\n  PromptEndsHere when (@T == @t && @T.0)\n}\n")
    b = parse_clean("X[@T.I]: {\n  PromptEndsHere when (@T == @t & @T.0)\n}\n")
    assert ast_equal(a, b)


def test_nonstandard_comparison_flagged_info():
    _, diags = parse("X[@T]: {\n  If @T <= 3 {\n    U: env.q[@T]\n  }\n}\n")
    assert errors_of(diags) == []
    assert any(d.code == "I-NONSTD-CMP" and d.severity.value == "info" for d in diags)


def test_expression_entry_rule():
    expr, diags = parse_expression("@t % 25")
    assert errors_of(diags) == []
    expr2, _ = parse_expression("(@t-1) * 2")
    assert expr2.op == "*"


def test_span_soundness_blocks(corpus):
    from acdl.nodes import Comment, Node, PromptEndsHere

    checked = 0
    for name, source in corpus.items():
        doc, diags = parse(source, name)
        if errors_of(diags):
            continue
        for item in doc.items:
            if isinstance(item, Comment) or not hasattr(item, "body"):
                continue
            in_role = getattr(item, "kind", None) == "string"
            for block in item.body:
                if isinstance(block, Comment):
                    continue
                snippet = source[block.span.start:block.span.end]
                reparsed, rdiags = parse_block_text(snippet, in_role=in_role)
                assert errors_of(rdiags) == [], (name, snippet)
                assert reparsed is not None and ast_equal(reparsed, block), (name, snippet)
                checked += 1
    assert checked > 40


def test_comment_attachment():
    doc = parse_clean("X[@T]: {\n  U: {\n    // standalone\n    INSTRUCTIONS  // inline\n  }\n}\n")
    body = doc.items[0].body[0].body
    from acdl.nodes import Comment
    comments = [c for c in body if isinstance(c, Comment)]
    assert [c.inline for c in comments] == [False, True]


def test_duplicate_names_do_not_fail_parse():
    src = "Twin[@T]: {\n  S: A_B\n}\n\nTwin[@T]: {\n  S: A_B\n}\n"
    doc, diags = parse(src)
    assert errors_of(diags) == []
    assert [i.name for i in doc.items] == ["Twin", "Twin"]


def test_agent_qualified_variables(corpus):
    doc = parse_clean(corpus["multi_agent"])
    quals = [n for n in walk(doc) if isinstance(n, ContextVar) and n.agent_qual]
    assert len(quals) >= 4
