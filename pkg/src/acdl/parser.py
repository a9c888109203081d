"""Recursive-descent parser with error recovery.

Parsing is line-oriented inside blocks: a newline ends a statement or content
element unless braces keep a construct open. All errors become diagnostics;
the parser recovers at line and block boundaries so one run can report
several independent problems.
"""

from __future__ import annotations

from .diagnostics import Diagnostic, Span, error, info
from .lexer import Token, TokenKind, tokenize
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
    IfBranch,
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
    PathSeg,
    PlainVar,
    PromptEndsHere,
    RoleMessage,
    StrLit,
    Switch,
    SwitchCase,
    Template,
    TimeVar,
)

NAMESPACES = ("env", "sys", "resp")
CMP_OPS = ("==", "!=", "<", ">", "<=", ">=")
_SINGLE_LINE_OK = (ContextVar, Template, FunctionCall)


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.toks = tokens
        self.i = 0
        self.file = file
        self.diags: list[Diagnostic] = []

    # ------------------------------------------------------------ token access

    def cur(self) -> Token:
        return self.toks[self.i]

    def peek(self, off: int = 1) -> Token:
        j = min(self.i + off, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind is not TokenKind.EOF:
            self.i += 1
        return tok

    def at(self, kind: TokenKind, lexeme: str | None = None) -> bool:
        tok = self.cur()
        return tok.kind is kind and (lexeme is None or tok.lexeme == lexeme)

    def at_kw(self, *names: str) -> bool:
        tok = self.cur()
        return tok.kind is TokenKind.KEYWORD and tok.lexeme in names

    def at_punct(self, ch: str) -> bool:
        return self.at(TokenKind.PUNCT, ch)

    def at_op(self, *ops: str) -> bool:
        tok = self.cur()
        return tok.kind is TokenKind.OPERATOR and tok.lexeme in ops

    def err(self, code: str, message: str, span: Span | None = None) -> None:
        self.diags.append(error(code, message, span or self.cur().span, self.file))

    def expect_punct(self, ch: str, what: str) -> Token | None:
        if self.at_punct(ch):
            return self.advance()
        self.err("E-EXPECTED", f"expected '{ch}' {what}, found {self._describe()}")
        return None

    def _describe(self) -> str:
        tok = self.cur()
        if tok.kind is TokenKind.EOF:
            return "end of file"
        if tok.kind is TokenKind.NEWLINE:
            return "end of line"
        return repr(tok.lexeme)

    def span_from(self, start_tok: Token) -> Span:
        end = self.toks[self.i - 1].span.end if self.i > 0 else start_tok.span.end
        end = max(end, start_tok.span.start)
        return Span(start_tok.span.start, end, start_tok.span.line, start_tok.span.col)

    # -------------------------------------------------------------- skipping

    def skip_newlines(self) -> None:
        while self.at(TokenKind.NEWLINE):
            self.advance()

    def sync_line(self) -> None:
        """Skip to the end of the current line (or a closing brace)."""
        while not (self.at(TokenKind.NEWLINE) or self.at(TokenKind.EOF)
                   or self.at_punct("}")):
            self.advance()

    def at_line_end(self) -> bool:
        return (self.at(TokenKind.NEWLINE) or self.at(TokenKind.EOF)
                or self.at_punct("}"))

    def end_line(self, context: str) -> None:
        if self.at(TokenKind.COMMENT):
            return  # caller collects it
        if not self.at_line_end():
            self.err("E-TRAILING", f"unexpected tokens after {context}")
            self.sync_line()

    # ------------------------------------------------------------- document

    def parse_document(self) -> Document:
        items: list = []
        while not self.at(TokenKind.EOF):
            self.skip_newlines()
            if self.at(TokenKind.EOF):
                break
            before = self.i
            if self.at(TokenKind.COMMENT):
                items.append(self._comment())
            elif self.at_kw("StrFrag", "RolesFrag", "RoleFrag"):
                items.append(self.parse_fragment_def())
            elif self.cur().kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
                item = self.parse_context_def()
                if item is not None:
                    items.append(item)
            elif self.at_punct("}"):
                self.err("E-UNBALANCED", "unmatched '}' at top level")
                self.advance()
            else:
                self.err("E-EXPECTED",
                         f"expected a context or fragment definition, found {self._describe()}")
                self.sync_line()
            if self.i == before:  # safety against non-advancing loops
                self.advance()
        end = self.toks[-1].span.end if self.toks else 0
        return Document(tuple(items), Span(0, end, 1, 1))

    def parse_context_def(self) -> ContextDef | None:
        start = self.cur()
        name = self.advance().lexeme
        params = self.parse_params() if self.at_punct("[") else ()
        if not self.at_punct(":"):
            self.err("E-EXPECTED", f"expected ':' after context signature, found {self._describe()}")
            self.sync_line()
            return None
        self.advance()
        self.expect_punct("{", "to open the context body")
        body = self.parse_blocks(in_role=False)
        self._close_brace(start)
        return ContextDef(name, params, body, self.span_from(start))

    def parse_fragment_def(self) -> FragmentDef:
        start = self.advance()
        kind = "string" if start.lexeme == "StrFrag" else "roles"
        if self.cur().kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            name = self.advance().lexeme
        else:
            self.err("E-EXPECTED", f"expected a fragment name, found {self._describe()}")
            name = "<error>"
        params = self.parse_params() if self.at_punct("[") else ()
        if self.at_punct(":"):
            self.advance()
        else:
            self.err("E-EXPECTED", "expected ':' after fragment signature")
        self.expect_punct("{", "to open the fragment body")
        body = self.parse_blocks(in_role=(kind == "string"))
        self._close_brace(start)
        return FragmentDef(kind, name, params, body, self.span_from(start))

    def _close_brace(self, opener: Token) -> None:
        self.skip_newlines()
        if self.at_punct("}"):
            self.advance()
        else:
            self.err("E-UNBALANCED", "unclosed '{'", opener.span)

    def parse_params(self) -> tuple[ParamDecl, ...]:
        self.advance()  # [
        params: list[ParamDecl] = []
        while not (self.at_punct("]") or self.at(TokenKind.EOF)
                   or self.at(TokenKind.NEWLINE)):
            tok = self.cur()
            if tok.kind is TokenKind.TIME_REF:
                self.advance()
                tv = _time_var_from_lexeme(tok.lexeme, tok.span)
                params.append(ParamDecl(tv.base, True, tv.parts, tv.variadic))
            elif tok.kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
                self.advance()
                params.append(ParamDecl(tok.lexeme, False))
            else:
                self.err("E-EXPECTED", f"expected a parameter, found {self._describe()}")
                self.sync_line()
                return tuple(params)
            if self.at_punct(","):
                self.advance()
        self.expect_punct("]", "to close the parameter list")
        return tuple(params)

    # ---------------------------------------------------------------- blocks

    def parse_blocks(self, in_role: bool) -> tuple[Node, ...]:
        out: list[Node] = []
        while True:
            if self.at(TokenKind.COMMENT):
                out.append(self._comment())
                continue
            if self.at(TokenKind.NEWLINE):
                self.advance()
                continue
            if self.at(TokenKind.EOF) or self.at_punct("}"):
                return tuple(out)
            before = self.i
            node = self.parse_block(in_role)
            if node is not None:
                out.append(node)
            if self.i == before:
                self.advance()

    def parse_block(self, in_role: bool) -> Node | None:
        tok = self.cur()
        if tok.kind is TokenKind.ROLE_MARKER:
            if in_role:
                self.err("E-NESTED-ROLE",
                         "role messages may not appear inside other role messages",
                         tok.span)
                self.parse_role_message()  # consume for recovery, drop the node
                return None
            return self.parse_role_message()
        if tok.kind is TokenKind.KEYWORD:
            kw = tok.lexeme
            if kw == "ForEach":
                return self.parse_foreach(in_role)
            if kw == "If":
                return self.parse_if(in_role)
            if kw == "Switch":
                return self.parse_switch(in_role)
            if kw == "Mark":
                return self.parse_mark(in_role)
            if kw == "PromptEndsHere":
                return self.parse_prompt_ends_here()
            if kw == "Name":
                return self.parse_name_def()
            if kw == "Frag":
                node = self.parse_frag_invoke()
                self.end_line("fragment invocation")
                return node
            if kw in ("break", "continue"):
                self.advance()
                node = (BreakStmt(tok.span) if kw == "break"
                        else ContinueStmt(tok.span))
                self.end_line(kw)
                return node
            if kw in ("ElseIf", "Else", "Case", "Default"):
                self.err("E-DANGLING", f"'{kw}' without a matching construct")
                self.sync_line()
                return None
            self.err("E-EXPECTED", f"unexpected keyword '{kw}' here")
            self.sync_line()
            return None
        if tok.kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS, TokenKind.TIME_REF,
                        TokenKind.NAME_REF, TokenKind.NUMBER, TokenKind.INLINE_LITERAL):
            if not in_role:
                self.err("E-TOPLEVEL-CONTENT",
                         "content elements are only valid inside a role message",
                         tok.span)
            elem = self.parse_content_element()
            self.end_line("content element")
            return elem
        self.err("E-EXPECTED", f"unexpected {self._describe()}")
        self.sync_line()
        return None

    def _comment(self) -> Comment:
        tok = self.advance()
        inline = False
        idx = self.i - 2
        if idx >= 0 and self.toks[idx].kind is not TokenKind.NEWLINE:
            inline = True
        return Comment(tok.lexeme[2:], inline, tok.span)

    # ----------------------------------------------------------- role message

    def parse_role_message(self) -> RoleMessage:
        marker = self.advance()
        role = marker.lexeme[0]
        if self.at_punct("{"):
            self.advance()
            body = self.parse_blocks(in_role=True)
            self._close_brace(marker)
            return RoleMessage(role, body, False, self.span_from(marker))
        # single-line form
        if self.at_kw("ForEach", "If", "Switch", "Mark"):
            self.err("E-SINGLELINE-CTRL",
                     "control flow is not permitted in single-line role messages; "
                     "use the braced form")
            inner = self.parse_block(in_role=True)
            body = (inner,) if inner is not None else ()
            return RoleMessage(role, body, False, self.span_from(marker))
        if self.at_line_end():
            self.err("E-EXPECTED", "single-line role message needs one content element")
            return RoleMessage(role, (), True, self.span_from(marker))
        elem = self.parse_content_element()
        body: list[Node] = [elem] if elem is not None else []
        if elem is not None and not isinstance(elem, _SINGLE_LINE_OK):
            self.err("E-SINGLELINE-CTRL",
                     "a single-line role message accepts exactly one context variable, "
                     "template, or function call",
                     elem.span)
        self.end_line("role message")
        if self.at(TokenKind.COMMENT):
            body.append(self._comment())
        return RoleMessage(role, tuple(body), True, self.span_from(marker))

    # -------------------------------------------------------------- constructs

    def parse_foreach(self, in_role: bool) -> ForEach | None:
        start = self.advance()
        self.expect_punct("(", "after ForEach")
        binder, binder_at = self._parse_binder()
        iterable = self.parse_expr()
        self.expect_punct(")", "to close the loop header")
        self.expect_punct("{", "to open the loop body")
        body = self.parse_blocks(in_role)
        self._close_brace(start)
        return ForEach(binder, iterable, body, binder_at, self.span_from(start))

    def _parse_binder(self) -> tuple[str, bool]:
        tok = self.cur()
        if tok.kind is TokenKind.TIME_REF:
            self.advance()
            tv = _time_var_from_lexeme(tok.lexeme, tok.span)
            binder, binder_at = tv.base, True
            self.expect_punct(":", "after the loop variable")
        elif tok.kind is TokenKind.ROLE_MARKER:  # e.g. `T:` lexed as a marker
            self.advance()
            binder, binder_at = tok.lexeme[0], False
        elif tok.kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            self.advance()
            binder, binder_at = tok.lexeme, False
            self.expect_punct(":", "after the loop variable")
        else:
            self.err("E-EXPECTED", f"expected a loop variable, found {self._describe()}")
            binder, binder_at = "<error>", False
        return binder, binder_at

    def parse_if(self, in_role: bool) -> If:
        start = self.advance()
        branches: list[IfBranch] = []
        cond = self.parse_condition()
        self.expect_punct("{", "to open the If body")
        body = self.parse_blocks(in_role)
        self._close_brace(start)
        branches.append(IfBranch(cond, body))
        else_body: tuple[Node, ...] | None = None
        while True:
            save = self.i
            self.skip_newlines()
            if self.at_kw("ElseIf"):
                self.advance()
                cond = self.parse_condition()
                self.expect_punct("{", "to open the ElseIf body")
                body = self.parse_blocks(in_role)
                self._close_brace(start)
                branches.append(IfBranch(cond, body))
                continue
            if self.at_kw("Else"):
                self.advance()
                self.expect_punct("{", "to open the Else body")
                else_body = self.parse_blocks(in_role)
                self._close_brace(start)
            else:
                self.i = save
            break
        return If(tuple(branches), else_body, self.span_from(start))

    def parse_switch(self, in_role: bool) -> Switch:
        start = self.advance()
        scrutinee = self.parse_expr()
        self.expect_punct("{", "to open the Switch body")
        cases: list[SwitchCase] = []
        default: tuple[Node, ...] | None = None
        while True:
            self.skip_newlines()
            if self.at_punct("}") or self.at(TokenKind.EOF):
                break
            if self.at(TokenKind.COMMENT):
                self.advance()  # comments between cases are dropped from the AST
                continue
            if self.at_kw("Case"):
                case_tok = self.advance()
                label = self._parse_case_label()
                self.expect_punct("{", "to open the Case body")
                body = self.parse_blocks(in_role)
                self._close_brace(case_tok)
                cases.append(SwitchCase(label, body))
            elif self.at_kw("Default"):
                d_tok = self.advance()
                self.expect_punct("{", "to open the Default body")
                default = self.parse_blocks(in_role)
                self._close_brace(d_tok)
            else:
                self.err("E-EXPECTED",
                         f"expected 'Case' or 'Default' in Switch, found {self._describe()}")
                self.sync_line()
        self._close_brace(start)
        return Switch(scrutinee, tuple(cases), default, self.span_from(start))

    def _parse_case_label(self) -> Expr:
        tok = self.cur()
        if tok.kind is TokenKind.INLINE_LITERAL and tok.lexeme.startswith('"'):
            self.advance()
            return StrLit(tok.lexeme[1:-1], tok.span)
        if tok.kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            self.advance()
            return PlainVar(tok.lexeme, tok.span)
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            return IntLit(int(tok.lexeme), tok.span)
        self.err("E-EXPECTED", f"expected a case label, found {self._describe()}")
        return PlainVar("<error>", tok.span)

    def parse_mark(self, in_role: bool) -> Mark | None:
        start = self.advance()
        if self.at(TokenKind.NUMBER):
            number = int(self.advance().lexeme)
        else:
            self.err("E-EXPECTED", f"expected a mark number, found {self._describe()}")
            number = 0
        self.expect_punct("{", "to open the Mark body")
        body = self.parse_blocks(in_role)
        self._close_brace(start)
        return Mark(number, body, self.span_from(start))

    def parse_prompt_ends_here(self) -> PromptEndsHere:
        start = self.advance()
        if self.at_kw("when"):
            self.advance()
        else:
            self.err("E-EXPECTED", "expected 'when' after PromptEndsHere")
        cond = self.parse_condition()
        self.end_line("PromptEndsHere")
        return PromptEndsHere(cond, self.span_from(start))

    def parse_name_def(self) -> NameDef:
        start = self.advance()
        if self.cur().kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            name = self.advance().lexeme
        else:
            self.err("E-EXPECTED", f"expected a name, found {self._describe()}")
            name = "<error>"
        if self.at_op(":="):
            self.advance()
        else:
            self.err("E-EXPECTED", "expected ':=' in name definition")
        if self.at(TokenKind.NEWLINE):  # the bound expression may continue below
            self.advance()
        if self.at_punct("["):
            value: Expr | ListComp = self._parse_comprehension()
        else:
            value = self.parse_expr()
        self.end_line("name definition")
        return NameDef(name, value, self.span_from(start))

    def _parse_comprehension(self) -> ListComp:
        start = self.advance()  # [
        element = self.parse_expr()
        if self.at_kw("for"):
            self.advance()
        else:
            self.err("E-EXPECTED", "expected 'for' in list comprehension")
        binder, binder_at = "<error>", False
        tok = self.cur()
        if tok.kind is TokenKind.TIME_REF:
            self.advance()
            binder, binder_at = _time_var_from_lexeme(tok.lexeme, tok.span).base, True
        elif tok.kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            self.advance()
            binder = tok.lexeme
        else:
            self.err("E-EXPECTED", f"expected a comprehension variable, found {self._describe()}")
        if self.at_kw("in"):
            self.advance()
        else:
            self.err("E-EXPECTED", "expected 'in' in list comprehension")
        iterable = self.parse_expr()
        self.expect_punct("]", "to close the list comprehension")
        return ListComp(element, binder, iterable, binder_at, self.span_from(start))

    def parse_frag_invoke(self) -> FragInvoke:
        start = self.advance()
        if self.cur().kind in (TokenKind.IDENTIFIER, TokenKind.ALL_CAPS):
            name = self.advance().lexeme
        else:
            self.err("E-EXPECTED", f"expected a fragment name, found {self._describe()}")
            name = "<error>"
        args: list[Expr] = []
        if self.at_punct("["):
            self.advance()
            while not (self.at_punct("]") or self.at(TokenKind.NEWLINE)
                       or self.at(TokenKind.EOF)):
                args.append(self.parse_expr())
                if self.at_punct(","):
                    self.advance()
            self.expect_punct("]", "to close the fragment arguments")
        return FragInvoke(name, tuple(args), self.span_from(start))

    # ---------------------------------------------------------------- content

    def parse_content_element(self) -> Node | None:
        tok = self.cur()
        if tok.kind is TokenKind.KEYWORD:
            if tok.lexeme == "Frag":
                return self.parse_frag_invoke()
            if tok.lexeme == "Name":
                return self.parse_name_def()
            if tok.lexeme in ("break", "continue"):
                self.advance()
                return BreakStmt(tok.span) if tok.lexeme == "break" else ContinueStmt(tok.span)
            self.err("E-EXPECTED", f"unexpected keyword '{tok.lexeme}' in content position")
            self.sync_line()
            return None
        if tok.kind in (TokenKind.TIME_REF, TokenKind.NUMBER):
            expr = self.parse_expr()
            return IndexContent(expr, expr.span)
        if tok.kind is TokenKind.NAME_REF:
            return self._parse_name_ref()
        if tok.kind is TokenKind.INLINE_LITERAL:
            self.advance()
            if tok.lexeme.startswith('"'):
                return StrLit(tok.lexeme[1:-1], tok.span)
            return InlineLit(tok.lexeme[2:-2], tok.span)
        if tok.kind is TokenKind.ALL_CAPS:
            return self._parse_template()
        if tok.kind is TokenKind.IDENTIFIER:
            if tok.lexeme in NAMESPACES:
                return self.parse_context_var()
            if self.peek().kind is TokenKind.PUNCT and self.peek().lexeme == "(":
                return self._parse_call()
            if self.peek().kind is TokenKind.PUNCT and self.peek().lexeme in (".", "["):
                self.err("E-NAMESPACE",
                         f"'{tok.lexeme}' is not a context-variable namespace "
                         "(expected env, sys, or resp)", tok.span)
                return self.parse_context_var()
            self.advance()
            return IndexContent(PlainVar(tok.lexeme, tok.span), tok.span)
        self.err("E-EXPECTED", f"unexpected {self._describe()} in content position")
        self.sync_line()
        return None

    def parse_context_var(self) -> ContextVar:
        ns_tok = self.advance()
        agent_qual: Expr | None = None
        if self.at_punct("["):
            self.advance()
            agent_qual = self.parse_expr()
            self.expect_punct("]", "to close the agent qualifier")
        segments: list[PathSeg] = []
        while self.at_punct(".") and self.peek().kind in (TokenKind.IDENTIFIER,
                                                          TokenKind.ALL_CAPS):
            self.advance()
            seg_name = self.advance().lexeme
            indices: tuple[Expr, ...] = ()
            if self.at_punct("["):
                indices = self._parse_index_list()
            segments.append(PathSeg(seg_name, indices))
        if not segments:
            self.err("E-EXPECTED", "expected '.field' after the namespace", ns_tok.span)
        return ContextVar(ns_tok.lexeme, tuple(segments), agent_qual,
                          self.span_from(ns_tok))

    def _parse_index_list(self) -> tuple[Expr, ...]:
        self.advance()  # [
        indices: list[Expr] = []
        while not (self.at_punct("]") or self.at(TokenKind.NEWLINE)
                   or self.at(TokenKind.EOF)):
            indices.append(self.parse_expr())
            if self.at_punct(","):
                self.advance()
        self.expect_punct("]", "to close the index list")
        return tuple(indices)

    def _parse_template(self) -> Template:
        tok = self.advance()
        args: tuple[Expr, ...] = ()
        has_parens = False
        if self.at_punct("("):
            has_parens = True
            args = self._parse_arg_list()
        return Template(tok.lexeme, args, has_parens, self.span_from(tok))

    def _parse_call(self) -> FunctionCall:
        tok = self.advance()
        args = self._parse_arg_list()
        trailing: tuple[Expr, ...] = ()
        if self.at_punct("["):
            trailing = self._parse_index_list()
        return FunctionCall(tok.lexeme, args, trailing, self.span_from(tok))

    def _parse_arg_list(self) -> tuple[Expr, ...]:
        self.advance()  # (
        args: list[Expr] = []
        while not (self.at_punct(")") or self.at(TokenKind.NEWLINE)
                   or self.at(TokenKind.EOF)):
            args.append(self.parse_expr())
            if self.at_punct(","):
                self.advance()
        self.expect_punct(")", "to close the argument list")
        return tuple(args)

    def _parse_name_ref(self) -> NameRef:
        tok = self.advance()
        parts: list = []
        while True:
            if self.at_punct("["):
                self.advance()
                idx = self.parse_expr()
                self.expect_punct("]", "to close the element index")
                parts.append(ElemIndex(idx))
            elif self.at_punct(".") and self.peek().kind in (TokenKind.IDENTIFIER,
                                                             TokenKind.ALL_CAPS):
                self.advance()
                parts.append(FieldAccess(self.advance().lexeme))
            else:
                break
        return NameRef(tok.lexeme[1:], tuple(parts), None, self.span_from(tok))

    # ------------------------------------------------------------ expressions

    def parse_expr(self) -> Expr:
        return self._parse_add()

    def _parse_add(self, lhs: Expr | None = None) -> Expr:
        if lhs is None:
            lhs = self._parse_mul()
        while self.at_op("+", "-"):
            op_tok = self.advance()
            rhs = self._parse_mul()
            lhs = BinOp(op_tok.lexeme, lhs, rhs,
                        Span(lhs.span.start, rhs.span.end, lhs.span.line, lhs.span.col))
        return lhs

    def _parse_mul(self) -> Expr:
        lhs = self._parse_primary()
        while self.at_op("*", "/", "%"):
            op_tok = self.advance()
            rhs = self._parse_primary()
            lhs = BinOp(op_tok.lexeme, lhs, rhs,
                        Span(lhs.span.start, rhs.span.end, lhs.span.line, lhs.span.col))
        return lhs

    def _parse_primary(self) -> Expr:
        tok = self.cur()
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            return IntLit(int(tok.lexeme), tok.span)
        if tok.kind is TokenKind.TIME_REF:
            self.advance()
            return _time_var_from_lexeme(tok.lexeme, tok.span)
        if tok.kind is TokenKind.NAME_REF:
            return self._parse_name_ref()
        if tok.kind is TokenKind.INLINE_LITERAL:
            self.advance()
            if tok.lexeme.startswith('"'):
                return StrLit(tok.lexeme[1:-1], tok.span)
            return InlineLit(tok.lexeme[2:-2], tok.span)
        if tok.kind is TokenKind.IDENTIFIER:
            if tok.lexeme in NAMESPACES:
                return self.parse_context_var()
            if self.peek().kind is TokenKind.PUNCT and self.peek().lexeme == "(":
                return self._parse_call()
            self.advance()
            return PlainVar(tok.lexeme, tok.span)
        if tok.kind is TokenKind.ALL_CAPS:
            if self.peek().kind is TokenKind.PUNCT and self.peek().lexeme == "(":
                return self._parse_template()
            self.advance()
            return PlainVar(tok.lexeme, tok.span)
        if tok.kind is TokenKind.PUNCT and tok.lexeme == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect_punct(")", "to close the expression")
            return inner
        self.err("E-EXPECTED", f"expected an expression, found {self._describe()}")
        if not self.at_line_end():
            self.advance()
        return PlainVar("<error>", tok.span)

    # ------------------------------------------------------------- conditions

    def parse_condition(self) -> Condition:
        return self._parse_or()

    def _parse_or(self) -> Condition:
        lhs = self._parse_and()
        while self.at_op("|", "||"):
            self.advance()
            rhs = self._parse_and()
            lhs = Or(lhs, rhs, Span(lhs.span.start, rhs.span.end,
                                    lhs.span.line, lhs.span.col))
        return lhs

    def _parse_and(self) -> Condition:
        lhs = self._parse_cond_atom()
        while self.at_op("&", "&&"):
            self.advance()
            rhs = self._parse_cond_atom()
            lhs = And(lhs, rhs, Span(lhs.span.start, rhs.span.end,
                                     lhs.span.line, lhs.span.col))
        return lhs

    def _parse_cond_atom(self) -> Condition:
        if self.at_punct("("):
            open_tok = self.advance()
            inner = self.parse_condition()
            self.expect_punct(")", "to close the condition")
            # `(1+2) < x`: the parentheses grouped an arithmetic operand
            if isinstance(inner, AtomCond) and (self.at_op(*CMP_OPS)
                                                or self.at_op("+", "-", "*", "/", "%")):
                expr = self._parse_add(inner.expr) if self.at_op("+", "-", "*", "/", "%") \
                    else inner.expr
                return self._finish_cmp(expr, open_tok)
            return inner
        start = self.cur()
        expr = self.parse_expr()
        return self._finish_cmp(expr, start)

    def _finish_cmp(self, expr: Expr, start: Token) -> Condition:
        if self.at_op(*CMP_OPS):
            op_tok = self.advance()
            if op_tok.lexeme in ("<=", ">="):
                self.diags.append(info(
                    "I-NONSTD-CMP",
                    f"'{op_tok.lexeme}' is accepted but outside the core comparison set",
                    op_tok.span, self.file))
            rhs = self.parse_expr()
            return Cmp(op_tok.lexeme, expr, rhs, self.span_from(start))
        if isinstance(expr, TimeVar) and expr.parts == ("0",) and not expr.substeps_attr:
            return AtSubstepZero(expr.base, expr.span)
        return AtomCond(expr, expr.span)


def _time_var_from_lexeme(lexeme: str, span: Span) -> TimeVar:
    body = lexeme[1:]
    pieces = body.split(".")
    base = pieces[0]
    parts = pieces[1:]
    variadic = "*" in parts
    parts = [p for p in parts if p != "*"]
    substeps_attr = bool(parts) and parts[-1] == "substeps"
    if substeps_attr:
        parts = parts[:-1]
    return TimeVar(base, tuple(parts), substeps_attr, variadic, span)


# -------------------------------------------------------------- entry points


def parse(source: str, file: str = "<memory>") -> tuple[Document, list[Diagnostic]]:
    """Parse a whole .acdl file. Never raises; problems come back as diagnostics."""
    tokens, lex_diags = tokenize(source, file)
    p = _Parser(tokens, file)
    doc = p.parse_document()
    return doc, lex_diags + p.diags


def parse_expression(source: str, file: str = "<memory>") -> tuple[Expr, list[Diagnostic]]:
    tokens, lex_diags = tokenize(source, file)
    p = _Parser(tokens, file)
    expr = p.parse_expr()
    return expr, lex_diags + p.diags


def parse_condition_text(source: str, file: str = "<memory>") -> tuple[Condition, list[Diagnostic]]:
    tokens, lex_diags = tokenize(source, file)
    p = _Parser(tokens, file)
    cond = p.parse_condition()
    return cond, lex_diags + p.diags


def parse_block_text(source: str, in_role: bool = False,
                     file: str = "<memory>") -> tuple[Node | None, list[Diagnostic]]:
    tokens, lex_diags = tokenize(source, file)
    p = _Parser(tokens, file)
    p.skip_newlines()
    node = p.parse_block(in_role)
    return node, lex_diags + p.diags
