"""Parser for the concrete assertion syntax.

    formula  := disjunct ('|' disjunct)*
    disjunct := '(' disjunct ')' | ['exists' x,y '.'] conj
    conj     := item (('&' | '*') item)*
    item     := 'emp' | 'true' | 'false' | x '|->' T(args) | P(args) | pure
    pure     := x '=' 'null' | x '!=' 'null' | lin cmp lin
"""

from __future__ import annotations

import re
from typing import Optional

from ..predicates import REGISTRY, Registry
from .ast import (
    WILDCARD,
    ArithAtom,
    Formula,
    IsNullAtom,
    Lin,
    PointsTo,
    PredApp,
    SymHeap,
)


class FormulaSyntaxError(Exception):
    def __init__(self, message: str, pos: int = -1):
        super().__init__(message if pos < 0 else f"{message} (at offset {pos})")
        self.pos = pos


_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\|->|!=|<=|>=|[|*&(),.=<>+\-]))"
)
_CMP = ("=", "!=", "<", "<=", ">", ">=")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos:pos + 1]!r}", pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _P:
    def __init__(self, text: str, registry: Registry):
        self.toks = _tokenize(text)
        self.i = 0
        self.registry = registry

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k: int = 1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str) -> bool:
        kind, v, _ = self.tok
        return v == value and kind in ("op", "id")

    def eat(self, value: str) -> None:
        if not self.at(value):
            kind, v, pos = self.tok
            raise FormulaSyntaxError(f"expected {value!r} but found {v or 'end of input'!r}", pos)
        self.i += 1

    def ident(self) -> str:
        kind, v, pos = self.tok
        if kind != "id":
            raise FormulaSyntaxError(f"expected a name but found {v or 'end of input'!r}", pos)
        self.i += 1
        return v

    # -- grammar --
    def formula(self) -> Formula:
        out = []
        d = self.disjunct()
        if d is not None:
            out.append(d)
        while self.at("|"):
            self.i += 1
            d = self.disjunct()
            if d is not None:
                out.append(d)
        return Formula(tuple(out))

    def disjunct(self) -> Optional[SymHeap]:
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                d = self.disjunct()
                self.eat(")")
                if self.tok[0] == "eof" or self.at("|") or self.at(")"):
                    return d
            except FormulaSyntaxError:
                pass
            self.i = save
        exists: list[str] = []
        if self.at("exists"):
            self.i += 1
            exists.append(self.ident())
            while self.at(","):
                self.i += 1
                exists.append(self.ident())
            self.eat(".")
            if len(set(exists)) != len(exists):
                raise FormulaSyntaxError("existential variable bound twice", self.tok[2])
        spatial: Optional[list] = None
        pure: list = []
        false = False
        while True:
            kind, v, pos = self.tok
            if v == "emp" and kind == "id":
                self.i += 1
                spatial = spatial if spatial is not None else []
            elif v == "true" and kind == "id":
                self.i += 1
            elif v == "false" and kind == "id":
                self.i += 1
                false = True
            elif kind == "id" and self.peek()[1] == "|->":
                spatial = spatial if spatial is not None else []
                spatial.append(self.points_to())
            elif kind == "id" and self.peek()[1] == "(" and v not in ("null",):
                spatial = spatial if spatial is not None else []
                spatial.append(self.pred_app())
            else:
                pure.append(self.pure())
            if self.at("&") or self.at("*"):
                self.i += 1
                continue
            break
        if false:
            return None
        for a in pure:
            for name in a.vars():
                if name in (WILDCARD,):
                    raise FormulaSyntaxError("wildcard is only allowed as a spatial argument")
        return SymHeap(tuple(exists), None if spatial is None else tuple(spatial), tuple(pure))

    def arg(self):
        kind, v, pos = self.tok
        if kind == "int":
            self.i += 1
            return int(v)
        if v == "-" and self.peek()[0] == "int":
            self.i += 2
            return -int(self.toks[self.i - 1][1])
        if kind == "id":
            self.i += 1
            return v
        raise FormulaSyntaxError(f"bad argument {v!r}", pos)

    def args(self) -> tuple:
        self.eat("(")
        out = []
        if not self.at(")"):
            out.append(self.arg())
            while self.at(","):
                self.i += 1
                out.append(self.arg())
        self.eat(")")
        return tuple(out)

    def points_to(self) -> PointsTo:
        root = self.ident()
        self.eat("|->")
        rec = self.ident()
        return PointsTo(root, rec, self.args())

    def pred_app(self) -> PredApp:
        pos = self.tok[2]
        name = self.ident()
        args = self.args()
        if name not in self.registry:
            raise FormulaSyntaxError(f"unknown predicate {name}", pos)
        pred = self.registry.get(name)
        if len(args) != pred.arity:
            raise FormulaSyntaxError(f"{name} takes {pred.arity} arguments, got {len(args)}", pos)
        return PredApp(name, args)

    def pure(self):
        kind, v, pos = self.tok
        if kind == "id" and v != "null" and self.peek()[1] in ("=", "!=") and self.peek(2)[1] == "null":
            self.i += 3
            return IsNullAtom(v, self.toks[self.i - 2][1] == "=")
        if v == "null" and self.peek()[1] in ("=", "!=") and self.peek(2)[0] == "id":
            self.i += 3
            return IsNullAtom(self.toks[self.i - 1][1], self.toks[self.i - 2][1] == "=")
        left = self.lin()
        kind, op, pos = self.tok
        if op not in _CMP:
            raise FormulaSyntaxError(f"expected a comparison but found {op or 'end of input'!r}", pos)
        self.i += 1
        right = self.lin()
        return ArithAtom.make(left - right, op)

    def lin(self) -> Lin:
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        acc = self.term(sign)
        while self.at("+") or self.at("-"):
            s = 1 if self.tok[1] == "+" else -1
            self.i += 1
            acc = acc + self.term(s)
        return acc

    def term(self, sign: int) -> Lin:
        kind, v, pos = self.tok
        if kind == "int":
            self.i += 1
            if self.at("*"):
                # only a coefficient if a name follows; otherwise it is a separator
                if self.peek()[0] == "id" and self.peek(2)[1] not in ("(", "|->"):
                    self.i += 1
                    name = self.ident()
                    return Lin.make({name: sign * int(v)})
            return Lin((), sign * int(v))
        if kind == "id" and v not in ("null", "emp", "true", "false", "exists", WILDCARD):
            self.i += 1
            return Lin.make({v: sign})
        if v == "(":
            self.i += 1
            inner = self.lin()
            self.eat(")")
            return inner if sign > 0 else -inner
        raise FormulaSyntaxError(f"unexpected {v or 'end of input'!r} in arithmetic", pos)


def parse_formula(text: str, registry: Registry = REGISTRY) -> Formula:
    p = _P(text, registry)
    if p.tok[0] == "eof":
        raise FormulaSyntaxError("empty formula", 0)
    f = p.formula()
    if p.tok[0] != "eof":
        raise FormulaSyntaxError(f"unexpected {p.tok[1]!r}", p.tok[2])
    return f
