"""AST for the heap language.

Nodes are frozen dataclasses so that programs can be shared between the
interpreter, the loop transformer and the verifier without defensive
copies.  Every statement carries a ``sid`` that is unique within a program;
learning points refer to call statements by it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

INT = "int"
BOOL = "bool"
VOID = "void"
PRIMITIVES = (INT, BOOL)


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class NullLit:
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class FieldRead:
    obj: "Expr"
    name: str
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: "Expr"
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class New:
    record: str
    args: tuple["Expr", ...]
    loc: Loc = field(default=Loc(), compare=False)


Expr = Union[IntLit, BoolLit, NullLit, Var, FieldRead, Unary, Binary, New]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str
    init: Optional[Expr]
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class FieldWrite:
    obj: Expr
    name: str
    value: Expr
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...]
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple["Stmt", ...]
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Call:
    """``f(args);``, ``x = f(args);`` or ``var x: T = f(args);``.

    ``declare`` holds the declared type when the call also introduces the
    target variable.  ``tail`` marks the self call emitted by the loop
    transformer; the interpreter runs it without growing the call stack.
    """

    func: str
    args: tuple[Expr, ...]
    target: Optional[str] = None
    declare: Optional[str] = None
    sid: int = 0
    tail: bool = False
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Assert:
    """Instrumentation only; ``formula`` is kept as speclang text."""

    formula: str
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Assume:
    formula: str
    sid: int = 0
    loc: Loc = field(default=Loc(), compare=False)


Stmt = Union[VarDecl, Assign, FieldWrite, If, While, Call, Return, Assert, Assume]


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class RecordDecl:
    name: str
    fields: tuple[tuple[str, str], ...]

    def field_type(self, name: str) -> Optional[str]:
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f for f, _ in self.fields)


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    by_ref: bool = False


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[Param, ...]
    ret: str
    body: tuple[Stmt, ...]
    requires: Optional[str] = None
    ensures: Optional[str] = None
    loc: Loc = field(default=Loc(), compare=False)


@dataclass(frozen=True)
class Program:
    records: tuple[RecordDecl, ...]
    functions: tuple[FunctionDef, ...]
    entry: str

    def record(self, name: str) -> Optional[RecordDecl]:
        for r in self.records:
            if r.name == name:
                return r
        return None

    def function(self, name: str) -> Optional[FunctionDef]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    @property
    def entry_function(self) -> FunctionDef:
        fn = self.function(self.entry)
        assert fn is not None
        return fn

    @property
    def schema(self) -> dict[str, tuple[tuple[str, str], ...]]:
        return {r.name: r.fields for r in self.records}

    def is_ref_type(self, t: str) -> bool:
        return t not in PRIMITIVES and t != VOID


# -- traversal helpers -------------------------------------------------------


def iter_stmts(stmts: tuple[Stmt, ...]):
    """Pre-order walk over a statement list, descending into blocks."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from iter_stmts(s.then)
            yield from iter_stmts(s.orelse)
        elif isinstance(s, While):
            yield from iter_stmts(s.body)


def expr_vars(e: Optional[Expr]) -> set[str]:
    if e is None:
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, FieldRead):
        return expr_vars(e.obj)
    if isinstance(e, Unary):
        return expr_vars(e.operand)
    if isinstance(e, Binary):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, New):
        out: set[str] = set()
        for a in e.args:
            out |= expr_vars(a)
        return out
    return set()


def deref_bases(e: Optional[Expr]) -> set[str]:
    """Variables that are dereferenced somewhere inside ``e``."""
    if e is None:
        return set()
    if isinstance(e, FieldRead):
        return expr_vars(e.obj) | deref_bases(e.obj)
    if isinstance(e, Unary):
        return deref_bases(e.operand)
    if isinstance(e, Binary):
        return deref_bases(e.left) | deref_bases(e.right)
    if isinstance(e, New):
        out: set[str] = set()
        for a in e.args:
            out |= deref_bases(a)
        return out
    return set()


def callees(fn: FunctionDef) -> set[str]:
    return {s.func for s in iter_stmts(fn.body) if isinstance(s, Call)}


def call_graph_reaches(program: Program, start: str, goal: str) -> bool:
    """True if ``goal`` is reachable from ``start`` in one or more calls."""
    seen: set[str] = set()
    stack = list(callees(program.function(start))) if program.function(start) else []
    while stack:
        f = stack.pop()
        if f == goal:
            return True
        if f in seen or program.function(f) is None:
            continue
        seen.add(f)
        stack.extend(callees(program.function(f)))
    return False
