"""Recursive-descent parser and type checker for ``.hl`` sources."""

from __future__ import annotations

import re
from typing import Optional

from .syntax import (
    BOOL,
    INT,
    PRIMITIVES,
    VOID,
    Assert,
    Assign,
    Assume,
    Binary,
    BoolLit,
    Call,
    FieldRead,
    FieldWrite,
    FunctionDef,
    If,
    IntLit,
    Loc,
    New,
    NullLit,
    Param,
    Program,
    RecordDecl,
    Return,
    Stmt,
    Unary,
    Var,
    VarDecl,
    While,
)


class HeapLangError(Exception):
    def __init__(self, message: str, loc: Optional[Loc] = None):
        self.message = message
        self.loc = loc
        where = f"{loc.line}:{loc.col}: " if loc is not None and loc.line else ""
        super().__init__(where + message)


class ParseError(HeapLangError):
    pass


class TypeCheckError(HeapLangError):
    pass


KEYWORDS = {
    "type", "fn", "var", "if", "else", "while", "return", "new", "null",
    "true", "false", "requires", "ensures", "ref", "assert", "assume",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|->|->|==|!=|<=|>=|&&|\|\||[{}();:,.=<>+\-*!&|])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "loc", "pos", "end")

    def __init__(self, kind: str, text: str, loc: Loc, pos: int, end: int):
        self.kind = kind
        self.text = text
        self.loc = loc
        self.pos = pos
        self.end = end

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.loc})"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", Loc(line, pos - line_start + 1))
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, Loc(line, pos - line_start + 1), pos, m.end()))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Loc(line, pos - line_start + 1), pos, pos))
    return tokens


_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*",),
]


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.i = 0
        self.next_sid = 1

    # -- token plumbing --
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.loc)
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise ParseError(f"expected identifier, found {self.tok.text or 'end of input'!r}", self.tok.loc)
        return self.advance()

    def sid(self) -> int:
        s = self.next_sid
        self.next_sid += 1
        return s

    def raw_until(self, stops: set[str]) -> str:
        """Collect source text up to (not including) the first stop token."""
        start = self.tok.pos
        depth = 0
        while self.tok.kind != "eof":
            if depth == 0 and self.tok.text in stops and self.tok.kind in ("op", "kw"):
                break
            if self.tok.text == "(":
                depth += 1
            elif self.tok.text == ")":
                depth -= 1
            self.advance()
        end = self.toks[self.i - 1].end if self.i > 0 else start
        text = self.source[start:end].strip()
        if not text:
            raise ParseError("empty formula", self.tok.loc)
        return " ".join(text.split())

    # -- declarations --
    def program(self, entry: str) -> Program:
        records: list[RecordDecl] = []
        functions: list[FunctionDef] = []
        while self.tok.kind != "eof":
            if self.at("type"):
                records.append(self.record())
            elif self.at("fn"):
                functions.append(self.function())
            else:
                raise ParseError(f"expected 'type' or 'fn', found {self.tok.text!r}", self.tok.loc)
        return Program(tuple(records), tuple(functions), entry)

    def type_name(self) -> str:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return t.text
        raise ParseError(f"expected type, found {t.text or 'end of input'!r}", t.loc)

    def record(self) -> RecordDecl:
        self.expect("type")
        name = self.ident().text
        self.expect("{")
        fields: list[tuple[str, str]] = []
        while not self.at("}"):
            fname = self.ident()
            self.expect(":")
            ftype = self.type_name()
            self.expect(";")
            if any(f == fname.text for f, _ in fields):
                raise ParseError(f"duplicate field {fname.text!r} in type {name}", fname.loc)
            fields.append((fname.text, ftype))
        self.expect("}")
        return RecordDecl(name, tuple(fields))

    def function(self) -> FunctionDef:
        start = self.expect("fn")
        name = self.ident().text
        self.expect("(")
        params: list[Param] = []
        while not self.at(")"):
            by_ref = False
            if self.at("ref"):
                self.advance()
                by_ref = True
            pname = self.ident().text
            self.expect(":")
            params.append(Param(pname, self.type_name(), by_ref))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        ret = VOID
        if self.at("->"):
            self.advance()
            ret = self.type_name()
        requires = ensures = None
        if self.at("requires"):
            self.advance()
            requires = self.raw_until({"ensures", "{"})
        if self.at("ensures"):
            self.advance()
            ensures = self.raw_until({"{"})
        body = self.block()
        return FunctionDef(name, tuple(params), ret, body, requires, ensures, start.loc)

    # -- statements --
    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        out: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise ParseError("unterminated block", self.tok.loc)
            out.append(self.statement())
        self.expect("}")
        return tuple(out)

    def call_tail(self, func: Token, target: Optional[str], declare: Optional[str], sid: int, loc: Loc) -> Call:
        self.expect("(")
        args = self.args(")")
        self.expect(";")
        return Call(func.text, args, target, declare, sid, False, loc)

    def args(self, close: str) -> tuple:
        out = []
        while not self.at(close):
            out.append(self.expr())
            if not self.at(close):
                self.expect(",")
        self.expect(close)
        return tuple(out)

    def statement(self) -> Stmt:
        t = self.tok
        loc = t.loc
        if self.at("var"):
            self.advance()
            name = self.ident().text
            self.expect(":")
            vtype = self.type_name()
            sid = self.sid()
            if self.at(";"):
                self.advance()
                return VarDecl(name, vtype, None, sid, loc)
            self.expect("=")
            if self.tok.kind == "ident" and self.peek().text == "(":
                return self.call_tail(self.advance(), name, vtype, sid, loc)
            init = self.expr()
            self.expect(";")
            return VarDecl(name, vtype, init, sid, loc)
        if self.at("if"):
            return self.if_stmt()
        if self.at("while"):
            self.advance()
            sid = self.sid()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block(), sid, loc)
        if self.at("return"):
            self.advance()
            sid = self.sid()
            if self.at(";"):
                self.advance()
                return Return(None, sid, loc)
            value = self.expr()
            self.expect(";")
            return Return(value, sid, loc)
        if self.at("assert") or self.at("assume"):
            kw = self.advance().text
            sid = self.sid()
            text = self.raw_until({";"})
            self.expect(";")
            return (Assert if kw == "assert" else Assume)(text, sid, loc)
        if t.kind == "ident":
            if self.peek().text == "(":
                sid = self.sid()
                return self.call_tail(self.advance(), None, None, sid, loc)
            if self.peek().text == "=":
                name = self.advance().text
                self.advance()
                sid = self.sid()
                if self.tok.kind == "ident" and self.peek().text == "(":
                    return self.call_tail(self.advance(), name, None, sid, loc)
                value = self.expr()
                self.expect(";")
                return Assign(name, value, sid, loc)
            lhs = self.postfix()
            if not isinstance(lhs, FieldRead):
                raise ParseError("expected assignment or call", loc)
            self.expect("=")
            sid = self.sid()
            value = self.expr()
            self.expect(";")
            return FieldWrite(lhs.obj, lhs.name, value, sid, loc)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", loc)

    def if_stmt(self) -> If:
        loc = self.expect("if").loc
        sid = self.sid()
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse: tuple[Stmt, ...] = ()
        if self.at("else"):
            self.advance()
            orelse = (self.if_stmt(),) if self.at("if") else self.block()
        return If(cond, then, orelse, sid, loc)

    # -- expressions --
    def expr(self, level: int = 0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.advance()
            right = self.expr(level + 1)
            left = Binary(op.text, left, right, op.loc)
        return left

    def unary(self):
        if self.at("-") or self.at("!"):
            op = self.advance()
            return Unary(op.text, self.unary(), op.loc)
        return self.postfix()

    def postfix(self):
        start = self.tok.loc
        e = self.primary()
        while self.at("."):
            self.advance()
            e = FieldRead(e, self.ident().text, start)
        return e

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return IntLit(int(t.text), t.loc)
        if self.at("true") or self.at("false"):
            self.advance()
            return BoolLit(t.text == "true", t.loc)
        if self.at("null"):
            self.advance()
            return NullLit(t.loc)
        if self.at("new"):
            self.advance()
            rec = self.ident().text
            self.expect("(")
            return New(rec, self.args(")"), t.loc)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            return Var(t.text, t.loc)
        raise ParseError(f"unexpected {t.text or 'end of input'!r} in expression", t.loc)


def parse(source: str, entry: str = "main", check: bool = True) -> Program:
    """Parse and type-check a heap-language program.

    Raises ParseError or TypeCheckError carrying a line/column.
    """
    program = _Parser(source).program(entry)
    if check:
        typecheck(program)
    return program


# -- type checking -----------------------------------------------------------


def _formula_check(text: Optional[str], where: str, loc: Loc) -> None:
    if text is None:
        return
    from ..speclang.parser import FormulaSyntaxError, parse_formula

    try:
        parse_formula(text)
    except FormulaSyntaxError as exc:
        raise TypeCheckError(f"{where}: {exc}", loc) from None


class _Checker:
    def __init__(self, program: Program):
        self.p = program
        self.records = {r.name: r for r in program.records}
        self.funcs = {f.name: f for f in program.functions}

    def check_type(self, t: str, loc: Loc, allow_void: bool = False) -> None:
        if t in PRIMITIVES or (allow_void and t == VOID):
            return
        if t not in self.records:
            raise TypeCheckError(f"unknown type {t}", loc)

    def run(self) -> None:
        seen: set[str] = set()
        for r in self.p.records:
            if r.name in seen or r.name in PRIMITIVES:
                raise TypeCheckError(f"duplicate declaration of type {r.name}")
            seen.add(r.name)
        for r in self.p.records:
            for _, ft in r.fields:
                self.check_type(ft, Loc())
        names: set[str] = set()
        for f in self.p.functions:
            if f.name in names:
                raise TypeCheckError(f"duplicate declaration of function {f.name}", f.loc)
            names.add(f.name)
        if self.p.entry not in names:
            raise TypeCheckError("no entry function")
        for f in self.p.functions:
            self.function(f)

    def function(self, f: FunctionDef) -> None:
        self.check_type(f.ret, f.loc, allow_void=True)
        scope: dict[str, str] = {}
        for prm in f.params:
            self.check_type(prm.type, f.loc)
            if prm.name in scope:
                raise TypeCheckError(f"duplicate parameter {prm.name}", f.loc)
            scope[prm.name] = prm.type
        _formula_check(f.requires, f"requires of {f.name}", f.loc)
        _formula_check(f.ensures, f"ensures of {f.name}", f.loc)
        self.fn = f
        self.block(f.body, [scope])

    def lookup(self, scopes: list[dict[str, str]], name: str, loc: Loc) -> str:
        for s in reversed(scopes):
            if name in s:
                return s[name]
        raise TypeCheckError(f"undeclared variable {name}", loc)

    def declare(self, scopes: list[dict[str, str]], name: str, t: str, loc: Loc) -> None:
        for s in scopes:
            if name in s:
                raise TypeCheckError(f"redeclaration of variable {name}", loc)
        scopes[-1][name] = t

    def assignable(self, target: str, value: str) -> bool:
        if value == "null":
            return target in self.records
        return target == value

    def block(self, stmts, scopes) -> None:
        scopes = scopes + [{}]
        for s in stmts:
            self.stmt(s, scopes)

    def stmt(self, s: Stmt, scopes) -> None:
        if isinstance(s, VarDecl):
            self.check_type(s.type, s.loc)
            if s.init is not None:
                t = self.expr(s.init, scopes)
                if not self.assignable(s.type, t):
                    raise TypeCheckError(f"cannot initialise {s.name}: {s.type} with {t}", s.loc)
            self.declare(scopes, s.name, s.type, s.loc)
        elif isinstance(s, Assign):
            vt = self.lookup(scopes, s.name, s.loc)
            t = self.expr(s.value, scopes)
            if not self.assignable(vt, t):
                raise TypeCheckError(f"cannot assign {t} to {s.name}: {vt}", s.loc)
        elif isinstance(s, FieldWrite):
            rt = self.expr(s.obj, scopes)
            ft = self.field(rt, s.name, s.loc)
            t = self.expr(s.value, scopes)
            if not self.assignable(ft, t):
                raise TypeCheckError(f"cannot store {t} into field {s.name}: {ft}", s.loc)
        elif isinstance(s, If):
            if self.expr(s.cond, scopes) != BOOL:
                raise TypeCheckError("condition must be bool", s.loc)
            self.block(s.then, scopes)
            self.block(s.orelse, scopes)
        elif isinstance(s, While):
            if self.expr(s.cond, scopes) != BOOL:
                raise TypeCheckError("loop condition must be bool", s.loc)
            self.block(s.body, scopes)
        elif isinstance(s, Call):
            callee = self.funcs.get(s.func)
            if callee is None:
                raise TypeCheckError(f"unknown function {s.func}", s.loc)
            if len(s.args) != len(callee.params):
                raise TypeCheckError(f"{s.func} expects {len(callee.params)} arguments", s.loc)
            for a, prm in zip(s.args, callee.params):
                t = self.expr(a, scopes)
                if not self.assignable(prm.type, t):
                    raise TypeCheckError(f"argument {prm.name} of {s.func}: expected {prm.type}, got {t}", s.loc)
                if prm.by_ref and not isinstance(a, Var):
                    raise TypeCheckError(f"ref argument {prm.name} of {s.func} must be a variable", s.loc)
            if s.target is not None:
                if callee.ret == VOID:
                    raise TypeCheckError(f"{s.func} returns no value", s.loc)
                if s.declare is not None:
                    self.check_type(s.declare, s.loc)
                    if not self.assignable(s.declare, callee.ret):
                        raise TypeCheckError(f"cannot bind {callee.ret} to {s.target}: {s.declare}", s.loc)
                    self.declare(scopes, s.target, s.declare, s.loc)
                else:
                    vt = self.lookup(scopes, s.target, s.loc)
                    if not self.assignable(vt, callee.ret):
                        raise TypeCheckError(f"cannot assign {callee.ret} to {s.target}: {vt}", s.loc)
        elif isinstance(s, Return):
            if s.value is None:
                if self.fn.ret != VOID:
                    raise TypeCheckError(f"{self.fn.name} must return {self.fn.ret}", s.loc)
            else:
                t = self.expr(s.value, scopes)
                if not self.assignable(self.fn.ret, t):
                    raise TypeCheckError(f"{self.fn.name} returns {self.fn.ret}, not {t}", s.loc)
        elif isinstance(s, (Assert, Assume)):
            _formula_check(s.formula, "instrumented formula", s.loc)

    def field(self, rt: str, name: str, loc: Loc) -> str:
        rec = self.records.get(rt)
        if rec is None:
            raise TypeCheckError(f"field access .{name} on non-record {rt}", loc)
        ft = rec.field_type(name)
        if ft is None:
            raise TypeCheckError(f"type {rt} has no field {name}", loc)
        return ft

    def expr(self, e, scopes) -> str:
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, NullLit):
            return "null"
        if isinstance(e, Var):
            return self.lookup(scopes, e.name, e.loc)
        if isinstance(e, FieldRead):
            return self.field(self.expr(e.obj, scopes), e.name, e.loc)
        if isinstance(e, New):
            rec = self.records.get(e.record)
            if rec is None:
                raise TypeCheckError(f"unknown type {e.record}", e.loc)
            if len(e.args) != len(rec.fields):
                raise TypeCheckError(f"new {e.record} expects {len(rec.fields)} arguments", e.loc)
            for a, (fname, ftype) in zip(e.args, rec.fields):
                if not self.assignable(ftype, self.expr(a, scopes)):
                    raise TypeCheckError(f"bad initialiser for field {fname} of {e.record}", e.loc)
            return e.record
        if isinstance(e, Unary):
            t = self.expr(e.operand, scopes)
            want = INT if e.op == "-" else BOOL
            if t != want:
                raise TypeCheckError(f"operator {e.op} expects {want}", e.loc)
            return want
        if isinstance(e, Binary):
            lt = self.expr(e.left, scopes)
            rt = self.expr(e.right, scopes)
            if e.op in ("+", "-", "*"):
                if lt != INT or rt != INT:
                    raise TypeCheckError(f"operator {e.op} expects int operands", e.loc)
                return INT
            if e.op in ("<", "<=", ">", ">="):
                if lt != INT or rt != INT:
                    raise TypeCheckError(f"operator {e.op} expects int operands", e.loc)
                return BOOL
            if e.op in ("&&", "||"):
                if lt != BOOL or rt != BOOL:
                    raise TypeCheckError(f"operator {e.op} expects bool operands", e.loc)
                return BOOL
            if e.op in ("==", "!="):
                ok = lt == rt or (lt == "null" and rt in self.records) or (rt == "null" and lt in self.records)
                if not ok:
                    raise TypeCheckError(f"cannot compare {lt} with {rt}", e.loc)
                return BOOL
        raise TypeCheckError(f"malformed expression {e!r}")


def typecheck(program: Program) -> None:
    _Checker(program).run()
