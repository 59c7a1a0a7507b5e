"""Loop elimination and program printing.

``loops_to_tailrec`` turns every ``while`` loop into a fresh function::

    fn f_loop1(ref v1: T1, ..) { if (cond) { body; f_loop1(v1, ..); } }

The captured variables are passed by reference so that assignments inside
the loop stay visible after it.  The self call is marked as a tail call and
runs without growing the call stack.  Inner loops are rewritten first, so
the function for an outer loop calls the one for its inner loop.
"""

from __future__ import annotations

from dataclasses import replace

from .parser import HeapLangError
from .syntax import (
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
    New,
    NullLit,
    Param,
    Program,
    Return,
    Unary,
    Var,
    VarDecl,
    While,
    expr_vars,
    iter_stmts,
)


class UnsupportedLoop(HeapLangError):
    pass


def _stmt_vars(s) -> set[str]:
    """Variables read or written by one statement (not descending)."""
    if isinstance(s, VarDecl):
        return {s.name} | expr_vars(s.init)
    if isinstance(s, Assign):
        return {s.name} | expr_vars(s.value)
    if isinstance(s, FieldWrite):
        return expr_vars(s.obj) | expr_vars(s.value)
    if isinstance(s, If):
        return expr_vars(s.cond)
    if isinstance(s, While):
        return expr_vars(s.cond)
    if isinstance(s, Call):
        out: set[str] = set()
        for a in s.args:
            out |= expr_vars(a)
        if s.target:
            out.add(s.target)
        return out
    if isinstance(s, Return):
        return expr_vars(s.value)
    return set()


def _used(stmts) -> set[str]:
    out: set[str] = set()
    for s in iter_stmts(stmts):
        out |= _stmt_vars(s)
    return out


def _declared(stmts) -> set[str]:
    out: set[str] = set()
    for s in iter_stmts(stmts):
        if isinstance(s, VarDecl) or (isinstance(s, Call) and s.declare):
            out.add(s.name if isinstance(s, VarDecl) else s.target)
    return out


class _Rewriter:
    def __init__(self, program: Program):
        self.program = program
        self.names = {f.name for f in program.functions}
        self.next_sid = 1 + max((s.sid for f in program.functions for s in iter_stmts(f.body)), default=0)
        self.counter = 0
        self.new_funcs: list[FunctionDef] = []

    def sid(self) -> int:
        s = self.next_sid
        self.next_sid += 1
        return s

    def fresh(self, base: str) -> str:
        while True:
            self.counter += 1
            name = f"{base}_loop{self.counter}"
            if name not in self.names:
                self.names.add(name)
                return name

    def function(self, f: FunctionDef) -> FunctionDef:
        scope = {p.name: p.type for p in f.params}
        body = self.block(f.body, scope, f.name)
        return replace(f, body=body)

    def block(self, stmts, scope: dict[str, str], owner: str) -> tuple:
        scope = dict(scope)
        out = []
        for s in stmts:
            if isinstance(s, VarDecl):
                scope[s.name] = s.type
                out.append(s)
            elif isinstance(s, Call) and s.declare:
                scope[s.target] = s.declare
                out.append(s)
            elif isinstance(s, If):
                out.append(replace(s, then=self.block(s.then, scope, owner),
                                   orelse=self.block(s.orelse, scope, owner)))
            elif isinstance(s, While):
                out.append(self.loop(s, scope, owner))
            else:
                out.append(s)
        return tuple(out)

    def loop(self, w: While, scope: dict[str, str], owner: str) -> Call:
        if any(isinstance(s, Return) for s in iter_stmts(w.body)):
            raise UnsupportedLoop("loops containing return cannot be turned into functions", w.loc)
        name = self.fresh(owner)
        body = self.block(w.body, scope, name)
        captured = sorted(v for v in (_used(body) | expr_vars(w.cond)) if v in scope and v not in _declared(w.body))
        params = tuple(Param(v, scope[v], True) for v in captured)
        args = tuple(Var(v, w.loc) for v in captured)
        rec = Call(name, args, None, None, self.sid(), True, w.loc)
        fn = FunctionDef(name, params, "void", (If(w.cond, body + (rec,), (), self.sid(), w.loc),), None, None, w.loc)
        self.new_funcs.append(fn)
        return Call(name, args, None, None, w.sid, False, w.loc)


def loops_to_tailrec(program: Program) -> Program:
    """Equivalent program without while statements."""
    if not any(isinstance(s, While) for f in program.functions for s in iter_stmts(f.body)):
        return program
    rw = _Rewriter(program)
    funcs = [rw.function(f) for f in program.functions]
    return Program(program.records, tuple(funcs) + tuple(rw.new_funcs), program.entry)


# -- printing ----------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6}


def format_expr(e, outer: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, FieldRead):
        return f"{format_expr(e.obj, 9)}.{e.name}"
    if isinstance(e, Unary):
        return f"{e.op}{format_expr(e.operand, 8)}"
    if isinstance(e, New):
        return f"new {e.record}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        text = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({text})" if p < outer else text
    raise TypeError(f"not an expression: {e!r}")


def _format_stmt(s, ind: str) -> list[str]:
    if isinstance(s, VarDecl):
        init = "" if s.init is None else f" = {format_expr(s.init)}"
        return [f"{ind}var {s.name}: {s.type}{init};"]
    if isinstance(s, Assign):
        return [f"{ind}{s.name} = {format_expr(s.value)};"]
    if isinstance(s, FieldWrite):
        return [f"{ind}{format_expr(s.obj, 9)}.{s.name} = {format_expr(s.value)};"]
    if isinstance(s, Call):
        call = f"{s.func}({', '.join(format_expr(a) for a in s.args)});"
        if s.declare:
            return [f"{ind}var {s.target}: {s.declare} = {call}"]
        if s.target:
            return [f"{ind}{s.target} = {call}"]
        return [f"{ind}{call}"]
    if isinstance(s, Return):
        return [f"{ind}return;" if s.value is None else f"{ind}return {format_expr(s.value)};"]
    if isinstance(s, If):
        lines = [f"{ind}if ({format_expr(s.cond)}) {{"]
        for t in s.then:
            lines += _format_stmt(t, ind + "  ")
        if s.orelse:
            lines.append(f"{ind}}} else {{")
            for t in s.orelse:
                lines += _format_stmt(t, ind + "  ")
        lines.append(f"{ind}}}")
        return lines
    if isinstance(s, While):
        lines = [f"{ind}while ({format_expr(s.cond)}) {{"]
        for t in s.body:
            lines += _format_stmt(t, ind + "  ")
        return lines + [f"{ind}}}"]
    if isinstance(s, Assert):
        return [f"{ind}assert {s.formula};"]
    if isinstance(s, Assume):
        return [f"{ind}assume {s.formula};"]
    raise TypeError(f"not a statement: {s!r}")


def format_function(f: FunctionDef) -> str:
    params = ", ".join(f"{'ref ' if p.by_ref else ''}{p.name}: {p.type}" for p in f.params)
    head = f"fn {f.name}({params})"
    if f.ret != "void":
        head += f" -> {f.ret}"
    lines = [head]
    if f.requires is not None:
        lines.append(f"  requires {f.requires}")
    if f.ensures is not None:
        lines.append(f"  ensures {f.ensures}")
    lines.append("{")
    for s in f.body:
        lines += _format_stmt(s, "  ")
    lines.append("}")
    return "\n".join(lines)


def format_program(p: Program) -> str:
    parts = []
    for r in p.records:
        fields = " ".join(f"{n}: {t};" for n, t in r.fields)
        parts.append(f"type {r.name} {{ {fields} }}")
    parts += [format_function(f) for f in p.functions]
    return "\n\n".join(parts) + "\n"

