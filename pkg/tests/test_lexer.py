from acdl.lexer import TokenKind, tokenize

from conftest import errors_of


def kinds(source):
    toks, _ = tokenize(source)
    return [t.kind.value for t in toks if t.kind not in (TokenKind.EOF,)]


def test_role_message_tokens():
    toks, diags = tokenize("U: env.user_question[@t]")
    assert diags == []
    got = [(t.kind.value, t.lexeme) for t in toks[:-1]]
    assert got == [
        ("role-marker", "U:"),
        ("identifier", "env"),
        ("punctuation", "."),
        ("identifier", "user_question"),
        ("punctuation", "["),
        ("time-ref", "@t"),
        ("punctuation", "]"),
    ]


def test_empty_input():
    toks, diags = tokenize("")
    assert diags == []
    assert [t.kind for t in toks] == [TokenKind.EOF]


def test_comment_spans_line():
    toks, diags = tokenize("// only a comment")
    assert diags == []
    assert toks[0].kind is TokenKind.COMMENT
    assert toks[0].lexeme == "// only a comment"
    assert (toks[0].span.start, toks[0].span.end) == (0, 17)


def test_time_refs_and_name_refs_prefixes():
    toks, _ = tokenize("@T @t.i @t.substeps @1 @T.* $docs")
    lexemes = [t.lexeme for t in toks if t.kind is TokenKind.TIME_REF]
    assert lexemes == ["@T", "@t.i", "@t.substeps", "@1", "@T.*"]
    refs = [t.lexeme for t in toks if t.kind is TokenKind.NAME_REF]
    assert refs == ["$docs"]
    for t in toks[:-1]:
        if t.kind is TokenKind.TIME_REF:
            assert t.lexeme.startswith("@")
        if t.kind is TokenKind.NAME_REF:
            assert t.lexeme.startswith("$")


def test_inline_literal_and_string():
    toks, diags = tokenize('INSTRUCTIONS({{an expert coder}}, "search")')
    assert diags == []
    lits = [t.lexeme for t in toks if t.kind is TokenKind.INLINE_LITERAL]
    assert lits == ["{{an expert coder}}", '"search"']


def test_operators():
    toks, _ = tokenize("== != <= >= && || := + - * / % < > & |")
    ops = [t.lexeme for t in toks if t.kind is TokenKind.OPERATOR]
    assert ops == ["==", "!=", "<=", ">=", "&&", "||", ":=",
                   "+", "-", "*", "/", "%", "<", ">", "&", "|"]


def test_illegal_character_recovers():
    toks, diags = tokenize("S: INSTRUCTIONS\n# ??\nU: env.x[@t]")
    assert any(d.code == "E-BAD-CHAR" for d in diags)
    # lexing continued past the bad character
    assert any(t.lexeme == "U:" for t in toks)


def test_spans_reconstruct_source(corpus):
    for name, source in corpus.items():
        toks, diags = tokenize(source, name)
        assert errors_of(diags) == []
        prev_end = 0
        for t in toks:
            assert t.span.start >= prev_end, name
            assert source[t.span.start:t.span.end] == t.lexeme, name
            # gaps between tokens hold only whitespace
            assert source[prev_end:t.span.start].strip() == "", name
            prev_end = t.span.end
        assert source[prev_end:].strip() == ""


def test_role_marker_needs_adjacent_colon():
    toks, _ = tokenize("S INSTRUCTIONS")
    assert toks[0].kind is TokenKind.ALL_CAPS  # bare S is not a marker


def test_crlf_newlines():
    toks, diags = tokenize("S: A_B\r\nU: env.q[@t]\r\n")
    assert diags == []
    newlines = [t for t in toks if t.kind is TokenKind.NEWLINE]
    assert all(t.lexeme == "\r\n" for t in newlines)
