"""Seeded random generator of valid documents for round-trip fuzzing."""

from __future__ import annotations

import random

from acdl.nodes import (
    BinOp,
    BreakStmt,
    Comment,
    ContextDef,
    ContextVar,
    ContinueStmt,
    Document,
    ElemIndex,
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
    Mark,
    NameDef,
    NameRef,
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
    Cmp,
    And,
    Or,
    AtomCond,
    AtSubstepZero,
)

_WORDS = ["question", "answer", "tool", "history", "doc", "memory", "goal",
          "step", "state", "input", "result", "log", "turn", "plan"]
_TEMPLATES = ["INSTRUCTIONS", "TASK_DESCRIPTION", "AVAILABLE_TOOLS", "PERSONA",
              "RULES", "EXAMPLES", "HEADER"]
_FUNCS = ["summarize", "retrieve", "formatList", "rankDocs", "compress"]
_NS = ["env", "sys", "resp"]


class DocGen:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.names: list[str] = []
        self.in_loop = 0

    def pick(self, xs):
        return self.rng.choice(xs)

    def word(self) -> str:
        return self.pick(_WORDS)

    def document(self) -> Document:
        items = []
        frag = None
        if self.rng.random() < 0.4:
            frag = FragmentDef(
                "string", "Shared" + str(self.rng.randrange(10)),
                (ParamDecl("item"),),
                tuple(self.content_elem(allow_ref=False) for _ in range(2)))
            items.append(frag)
        for i in range(self.rng.randrange(1, 3)):
            items.append(self.context(i, frag))
        return Document(tuple(items))

    def context(self, i: int, frag: FragmentDef | None) -> ContextDef:
        params: tuple[ParamDecl, ...]
        if self.rng.random() < 0.3:
            params = (ParamDecl("T", True, ("I",)),)
        else:
            params = (ParamDecl("T", True),)
        if self.rng.random() < 0.2:
            params = params + (ParamDecl("agent"),)
        self.names = []
        body = tuple(self.block(depth=0, frag=frag)
                     for _ in range(self.rng.randrange(2, 5)))
        return ContextDef(f"Gen{i}_{self.rng.randrange(1000)}", params, body)

    def block(self, depth: int, frag: FragmentDef | None):
        roll = self.rng.random()
        if depth < 2 and roll < 0.22:
            return self.loop(depth, frag)
        if depth < 2 and roll < 0.36:
            return self.conditional(depth, frag)
        if depth < 2 and roll < 0.42:
            return self.switch(depth, frag)
        if depth < 2 and roll < 0.48:
            return Mark(self.rng.randrange(1, 9),
                        (self.message(depth, frag),))
        if roll < 0.52:
            return PromptEndsHere(self.condition())
        if roll < 0.56:
            return Comment(" " + self.word() + " note")
        return self.message(depth, frag)

    def loop(self, depth: int, frag) -> ForEach:
        if self.rng.random() < 0.6:
            iterable = FunctionCall("range", (IntLit(1), TimeVar("T")))
            binder, at = "t", True
        else:
            iterable = ContextVar(self.pick(_NS), (PathSeg(self.word() + "s"),))
            binder, at = "item", False
        self.in_loop += 1
        body = [self.message(depth + 1, frag)]
        if self.rng.random() < 0.3:
            body.append(self.message(depth + 1, frag))
        self.in_loop -= 1
        return ForEach(binder, iterable, tuple(body), at)

    def conditional(self, depth: int, frag) -> If:
        branches = [IfBranch(self.condition(), (self.message(depth + 1, frag),))]
        if self.rng.random() < 0.5:
            branches.append(IfBranch(self.condition(),
                                     (self.message(depth + 1, frag),)))
        else_body = (self.message(depth + 1, frag),) if self.rng.random() < 0.5 else None
        return If(tuple(branches), else_body)

    def switch(self, depth: int, frag) -> Switch:
        scrutinee = ContextVar(self.pick(_NS),
                               (PathSeg(self.word(), (TimeVar("T"),)),))
        cases = tuple(
            SwitchCase(StrLit(self.word()), (self.message(depth + 1, frag),))
            for _ in range(self.rng.randrange(1, 3)))
        default = (self.message(depth + 1, frag),) if self.rng.random() < 0.5 else None
        return Switch(scrutinee, cases, default)

    def message(self, depth: int, frag) -> RoleMessage:
        role = self.pick("SUAT")
        if self.rng.random() < 0.35:
            elem = self.pick([
                ContextVar(self.pick(_NS), (PathSeg(self.word(), (TimeVar("T"),)),)),
                Template(self.pick(_TEMPLATES)),
                FunctionCall(self.pick(_FUNCS),
                             (ContextVar(self.pick(_NS), (PathSeg(self.word()),)),)),
            ])
            return RoleMessage(role, (elem,), True)
        n = self.rng.randrange(1, 4)
        body = []
        defined_before = list(self.names)
        for _ in range(n):
            body.append(self.content_block(depth, frag, defined_before))
        self.names = []
        return RoleMessage(role, tuple(body), False)

    def content_block(self, depth: int, frag, defined: list[str]):
        roll = self.rng.random()
        if roll < 0.1 and depth < 2:
            self.in_loop += 1
            inner = tuple(self.content_elem() for _ in range(2))
            if self.rng.random() < 0.3:
                inner = inner + (self.pick([BreakStmt(), ContinueStmt()]),)
            self.in_loop -= 1
            return ForEach("k", FunctionCall("range", (IntLit(1), TimeVar("T"))),
                           inner, self.rng.random() < 0.5)
        if roll < 0.16:
            name = "bound_" + self.word()
            self.names.append(name)
            defined.append(name)
            return NameDef(name, FunctionCall(self.pick(_FUNCS),
                                              (TimeVar("T"),)))
        if roll < 0.2 and defined:
            return NameRef(self.pick(defined), (FieldAccess("len"),))
        if roll < 0.26 and frag is not None:
            return FragInvoke(frag.name, (IntLit(self.rng.randrange(1, 5)),))
        if roll < 0.3:
            return Comment(" inline note", inline=False)
        return self.content_elem()

    def content_elem(self, allow_ref: bool = True):
        roll = self.rng.random()
        if roll < 0.3:
            seg = PathSeg(self.word(), self.indices())
            return ContextVar(self.pick(_NS), (seg,))
        if roll < 0.5:
            args = ()
            if self.rng.random() < 0.4:
                args = (InlineLit("an expert " + self.word()),)
            return Template(self.pick(_TEMPLATES), args, bool(args))
        if roll < 0.7:
            return FunctionCall(
                self.pick(_FUNCS),
                (ContextVar(self.pick(_NS), (PathSeg(self.word(), (TimeVar("T"),)),)),))
        if roll < 0.85:
            return IndexContent(self.index_expr())
        return ContextVar(self.pick(_NS),
                          (PathSeg(self.word()), PathSeg(self.word(), self.indices())))

    def indices(self) -> tuple:
        n = self.rng.randrange(0, 3)
        return tuple(self.index_expr() for _ in range(n))

    def index_expr(self):
        roll = self.rng.random()
        if roll < 0.4:
            return TimeVar("T")
        if roll < 0.55:
            return BinOp("-", TimeVar("T"), IntLit(self.rng.randrange(1, 4)))
        if roll < 0.7:
            return BinOp("%", TimeVar("T"), IntLit(self.rng.randrange(2, 30)))
        if roll < 0.85:
            return IntLit(self.rng.randrange(0, 9))
        return PlainVar(self.word())

    def condition(self):
        roll = self.rng.random()
        if roll < 0.3:
            return Cmp(self.pick(["==", "!=", "<", ">"]),
                       TimeVar("T"), IntLit(self.rng.randrange(1, 5)))
        if roll < 0.5:
            return Cmp("==",
                       ContextVar(self.pick(_NS), (PathSeg(self.word(), (TimeVar("T"),)),)),
                       PlainVar(self.word()))
        if roll < 0.65:
            return And(Cmp("==", TimeVar("T"), TimeVar("T")), AtSubstepZero("T"))
        if roll < 0.8:
            return Or(Cmp(">", TimeVar("T"), IntLit(1)),
                      AtomCond(ContextVar("sys", (PathSeg("flag", (TimeVar("T"),)),))))
        return AtomCond(ContextVar("sys", (PathSeg(self.word(), (TimeVar("T"),)),)))


def generate(seed: int) -> Document:
    return DocGen(seed).document()
