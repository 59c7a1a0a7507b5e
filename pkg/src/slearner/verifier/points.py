"""Learning points, relevant variables and harvested constants.

Learning points sit before and after each top-level call statement of the
entry function whose callee is not the entry function itself.  The entry
body is split into segments between these calls; when a segment is empty
the point after one call and the point before the next coincide.  A point
at the very start is described by ``requires`` and one at the very end by
``ensures``, so neither is learned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..heaplang.syntax import (
    INT,
    Assert,
    Assign,
    Binary,
    Call,
    FieldWrite,
    If,
    IntLit,
    Program,
    Return,
    Stmt,
    Unary,
    VarDecl,
    While,
    deref_bases,
    expr_vars,
    iter_stmts,
)
from ..memgraph import Path
from ..speclang.parser import parse_formula


@dataclass(frozen=True)
class LearningPoint:
    """``keys`` are the (call sid, side) locations where snapshots are taken.

    ``index`` counts points from 0 (the start) to the number of calls plus
    segments; ``kind`` is "start", "end" or "learned".
    """

    id: str
    index: int
    kind: str
    keys: tuple[tuple[int, str], ...]
    stmt_index: int  # entry-body position the point precedes
    relevant: tuple[tuple[Path, str], ...] = ()

    @property
    def resume(self) -> tuple[int, str]:
        return self.keys[0]

    @property
    def learned(self) -> bool:
        return self.kind == "learned"

    def ref_paths(self, program: Program) -> list[tuple[Path, str]]:
        return [(p, t) for p, t in self.relevant if program.is_ref_type(t)]

    def num_paths(self) -> list[Path]:
        return [p for p, t in self.relevant if t == INT]


@dataclass(frozen=True)
class Layout:
    """Entry body split into calls and the segments between them."""

    calls: tuple[tuple[int, Call], ...]  # (position in entry body, call)
    segments: tuple[tuple[Stmt, ...], ...]  # len(calls) + 1
    points: tuple[LearningPoint, ...]
    # for each call i: (index of point before, index of point after)
    around: tuple[tuple[int, int], ...] = field(default=())


def entry_var_types(program: Program) -> dict[str, str]:
    fn = program.entry_function
    types = {p.name: p.type for p in fn.params}
    for s in iter_stmts(fn.body):
        if isinstance(s, VarDecl):
            types.setdefault(s.name, s.type)
        elif isinstance(s, Call) and s.declare:
            types.setdefault(s.target, s.declare)
    if fn.ret != "void":
        types["res"] = fn.ret
    return types


def _visible_before(program: Program, pos: int) -> set[str]:
    fn = program.entry_function
    out = {p.name for p in fn.params}
    for s in iter_stmts(fn.body[:pos]):
        if isinstance(s, VarDecl):
            out.add(s.name)
        elif isinstance(s, Call) and s.declare:
            out.add(s.target)
    return out


def _formula_vars(text: Optional[str]) -> set[str]:
    if text is None:
        return set()
    return parse_formula(text).free_vars()


def relevant_names(program: Program, pos: int) -> list[str]:
    """Variables visible before entry statement ``pos`` that the rest of the
    body needs: the postcondition's variables, closed backwards under data
    dependence, dereferences, call arguments and branch conditions."""
    fn = program.entry_function
    rest = fn.body[pos:]
    need = _formula_vars(fn.ensures) - {"res"}
    stmts = list(iter_stmts(rest))
    changed = True
    while changed:
        before = set(need)
        for s in stmts:
            if isinstance(s, (VarDecl, Assign)):
                e = s.init if isinstance(s, VarDecl) else s.value
                if s.name in need:
                    need |= expr_vars(e)
                need |= deref_bases(e)
            elif isinstance(s, FieldWrite):
                need |= expr_vars(s.obj) | expr_vars(s.value)
            elif isinstance(s, Call):
                for a in s.args:
                    need |= expr_vars(a)
            elif isinstance(s, (If, While)):
                body = (s.then + s.orelse) if isinstance(s, If) else s.body
                if body:
                    need |= expr_vars(s.cond)
                need |= deref_bases(s.cond)
            elif isinstance(s, Return):
                need |= expr_vars(s.value)
            elif isinstance(s, Assert):
                need |= _formula_vars(s.formula)
        changed = need != before
    return sorted(need & _visible_before(program, pos))


def expand_paths(program: Program, names: list[str], k: int) -> list[tuple[Path, str]]:
    """Type-directed paths of at most ``k`` labels, breadth-first in name order."""
    types = entry_var_types(program)
    level = [((n,), types[n]) for n in sorted(names)]
    out = list(level)
    for _ in range(k - 1):
        nxt = []
        for path, t in level:
            rec = program.record(t)
            if rec is None:
                continue
            for fname, ftype in sorted(rec.fields):
                nxt.append((path + (fname,), ftype))
        out += nxt
        level = nxt
    return out


def layout(program: Program, deref_bound: int = 1) -> Layout:
    fn = program.entry_function
    calls = [(i, s) for i, s in enumerate(fn.body) if isinstance(s, Call) and s.func != fn.name]
    bounds = [-1] + [i for i, _ in calls] + [len(fn.body)]
    segments = tuple(tuple(fn.body[bounds[j] + 1:bounds[j + 1]]) for j in range(len(calls) + 1))
    points: list[LearningPoint] = []
    around: list[tuple[int, int]] = []

    def add(kind: str, keys, pos: int) -> int:
        idx = len(points)
        if kind == "learned":
            rel = tuple(expand_paths(program, relevant_names(program, pos), deref_bound))
            pid = f"p{sum(1 for p in points if p.learned) + 1}"
        else:
            rel = ()
            pid = kind
        points.append(LearningPoint(pid, idx, kind, tuple(keys), pos, rel))
        return idx

    # point before the first call
    if not calls:
        return Layout((), segments, (LearningPoint("start", 0, "start", (), 0),
                                     LearningPoint("end", 1, "end", (), len(fn.body))), ())
    first_pos, first = calls[0]
    if segments[0]:
        add("start", (), 0)
        cur = add("learned", [(first.sid, "before")], first_pos)
    else:
        cur = add("start", [(first.sid, "before")], 0)
    for j, (pos, c) in enumerate(calls):
        seg = segments[j + 1]
        last = j == len(calls) - 1
        if last and not seg:
            after = add("end", [(c.sid, "after")], pos + 1)
        elif not seg:
            nxt = calls[j + 1][1]
            after = add("learned", [(c.sid, "after"), (nxt.sid, "before")], pos + 1)
        else:
            after = add("learned", [(c.sid, "after")], pos + 1)
        around.append((cur, after))
        cur = after
        if seg:
            if last:
                add("end", (), len(fn.body))
            else:
                npos, nxt = calls[j + 1]
                cur = add("learned", [(nxt.sid, "before")], npos)
    return Layout(tuple(calls), segments, tuple(points), tuple(around))


def snapshot_keys(lay: Layout) -> dict[tuple[int, str], str]:
    """Map from snapshot location to learned point id (first key only)."""
    out = {}
    for p in lay.points:
        if p.learned:
            out[p.keys[0]] = p.id
    return out


def harvest_constants(program: Program) -> list[int]:
    """0 plus every integer literal in a branch or loop condition."""
    found = {0}

    def walk(e, neg=False):
        if isinstance(e, IntLit):
            found.add(-e.value if neg else e.value)
        elif isinstance(e, Unary):
            walk(e.operand, neg ^ (e.op == "-"))
        elif isinstance(e, Binary):
            walk(e.left)
            walk(e.right)

    for f in program.functions:
        for s in iter_stmts(f.body):
            if isinstance(s, (If, While)):
                walk(s.cond)
    return sorted(found)


def formula_predicates(program: Program) -> list[str]:
    """Shape predicates named in the entry function's contract, in order of appearance."""
    from ..speclang.ast import PredApp

    fn = program.entry_function
    out: list[str] = []
    for text in (fn.requires, fn.ensures):
        if text is None:
            continue
        for d in parse_formula(text).disjuncts:
            for a in d.spatial or ():
                if isinstance(a, PredApp) and a.name not in out:
                    out.append(a.name)
    return out


def describe_point(program: Program, point: LearningPoint) -> str:
    """Source location of a point, e.g. "after line 8, before line 9"."""
    lines = {s.sid: s.loc.line for s in iter_stmts(program.entry_function.body)}
    return ", ".join(f"{side} line {lines.get(sid, '?')}" for sid, side in point.keys)
