"""Hoare obligations: decomposition, frame elision, bounded checking, emission."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ..config import Config
from ..heaplang.interpreter import NORMAL, ExecutionOutcome, Interpreter
from ..heaplang.syntax import Assert, Assume, Call, Program, Stmt, VarDecl, expr_vars
from ..heaplang.transform import _format_stmt, _used, format_expr, format_program
from ..memgraph import MemoryGraph, enumerate_graphs
from ..speclang.ast import TRUE, WILDCARD, Formula, PointsTo, PredApp, SymHeap, is_var_arg
from ..speclang.parser import parse_formula
from ..speclang.printer import print_formula
from ..speclang.semantics import models
from ..speclang.transform import simplify, substitute
from .points import Layout, entry_var_types

PENDING = "Pending"
PASSED = "Passed"
COUNTEREXAMPLE = "CounterExample"
BUDGET_EXHAUSTED = "BudgetExhausted"


@dataclass
class HoareObligation:
    index: int
    kind: str  # "call" or "segment"
    pre: Formula
    post: Formula
    call: Optional[Call] = None
    stmts: tuple[Stmt, ...] = ()
    pre_point: int = 0
    post_point: int = 0
    status: str = PENDING
    counterexample: Optional[MemoryGraph] = None
    outcome: Optional[ExecutionOutcome] = None
    states: int = 0
    detail: str = ""
    elided: bool = False

    def code(self) -> str:
        if self.call is not None:
            return f"{self.call.func}({', '.join(format_expr(a) for a in self.call.args)})"
        return " ".join(line.strip() for s in self.stmts for line in _format_stmt(s, ""))

    def triple(self) -> str:
        return f"{{{print_formula(self.pre)}}} {self.code()} {{{print_formula(self.post)}}}"


def point_formula(program: Program, lay: Layout, idx: int, invariants: dict[str, Formula]) -> Formula:
    p = lay.points[idx]
    fn = program.entry_function
    if p.kind == "start":
        return parse_formula(fn.requires) if fn.requires else TRUE
    if p.kind == "end":
        return parse_formula(fn.ensures) if fn.ensures else TRUE
    return invariants[p.id]


def decompose(
    program: Program, lay: Layout, invariants: dict[str, Formula]
) -> tuple[list[HoareObligation], Program]:
    """Chain of obligations from ``requires`` through the learned invariants
    to ``ensures``, plus the entry function with calls replaced by
    assert/assume pairs."""
    obs: list[HoareObligation] = []
    fn = program.entry_function
    f = lambda i: point_formula(program, lay, i, invariants)  # noqa: E731
    if not lay.calls:
        obs.append(HoareObligation(1, "segment", f(0), f(len(lay.points) - 1), None, lay.segments[0], 0,
                                   len(lay.points) - 1))
        return obs, program
    if lay.segments[0]:
        obs.append(HoareObligation(0, "segment", f(0), f(1), None, lay.segments[0], 0, 1))
    for j, ((pos, c), (a, b)) in enumerate(zip(lay.calls, lay.around)):
        post = f(b)
        if c.target is not None:
            post = substitute(post, c.target, "res")
        obs.append(HoareObligation(0, "call", f(a), post, c, (), a, b))
        seg = lay.segments[j + 1]
        if seg:
            nxt = lay.around[j + 1][0] if j + 1 < len(lay.around) else len(lay.points) - 1
            obs.append(HoareObligation(0, "segment", f(b), f(nxt), None, seg, b, nxt))
    for i, ob in enumerate(obs):
        ob.index = i + 1

    body: list[Stmt] = []
    call_pos = {pos: j for j, (pos, _) in enumerate(lay.calls)}
    for i, s in enumerate(fn.body):
        if i in call_pos:
            j = call_pos[i]
            a, b = lay.around[j]
            body.append(Assert(print_formula(f(a)), s.sid, s.loc))
            if isinstance(s, Call) and s.declare:
                body.append(VarDecl(s.target, s.declare, None, s.sid, s.loc))
            body.append(Assume(print_formula(f(b)), s.sid, s.loc))
        else:
            body.append(s)
    inst_fn = replace(fn, body=tuple(body))
    inst = Program(program.records, tuple(inst_fn if g.name == fn.name else g for g in program.functions),
                   program.entry)
    return obs, inst


# -- frame elision -----------------------------------------------------------


def _tidy(h: SymHeap) -> SymHeap:
    """Drop unused existentials; existentials used once in a spatial argument become ``_``."""
    uses: dict[str, int] = {}
    for a in h.spatial or ():
        for v in a.vars():
            uses[v] = uses.get(v, 0) + (1 if not isinstance(a, PointsTo) or v != a.root else 1)
    pure_vars = set()
    for p in h.pure:
        pure_vars |= p.vars()
    wild = {v for v in h.exists if uses.get(v, 0) == 1 and v not in pure_vars
            and not any(isinstance(a, PointsTo) and a.root == v for a in h.spatial or ())}
    m = {v: WILDCARD for v in wild}

    def fix(a):
        if isinstance(a, PointsTo):
            return PointsTo(a.root, a.record, tuple(m.get(x, x) if is_var_arg(x) else x for x in a.args))
        return PredApp(a.name, tuple(m.get(x, x) if is_var_arg(x) else x for x in a.args))

    spatial = None if h.spatial is None else tuple(fix(a) for a in h.spatial)
    used = set()
    for a in spatial or ():
        used |= a.vars()
    used |= pure_vars
    return SymHeap(tuple(v for v in h.exists if v in used), spatial, h.pure)


def elide_formula(f: Formula, keep: set[str], ref_vars: set[str]) -> Formula:
    """Remove the frame: spatial atoms not rooted (transitively) at ``keep``
    and pure atoms over reference variables outside ``keep`` or over
    existentials bound only by removed atoms."""
    out = []
    for h in f.disjuncts:
        if h.spatial is None:
            kept_sp = None
            dropped: list = []
        else:
            live = set(keep)
            kept_sp = []
            pending = list(h.spatial)
            changed = True
            while changed:
                changed = False
                for a in list(pending):
                    root = a.root
                    if isinstance(root, str) and root in live:
                        kept_sp.append(a)
                        pending.remove(a)
                        live |= a.vars()
                        changed = True
            kept_sp = [a for a in h.spatial if a in kept_sp]
            dropped = pending
        kept_vars = set()
        for a in kept_sp or ():
            kept_vars |= a.vars()
        removed = {v for v in ref_vars if v not in keep and v not in h.exists}
        for a in dropped:
            removed |= {v for v in a.vars() if v not in kept_vars and v not in keep}
        pure = tuple(p for p in h.pure if not (p.vars() & removed))
        if h.spatial is not None and not kept_sp and h.spatial:
            spatial = None  # only frame was described; the rest of the heap is unconstrained
        else:
            spatial = None if kept_sp is None else tuple(kept_sp)
        out.append(_tidy(SymHeap(h.exists, spatial, pure)))
    return simplify(Formula(tuple(out)))


def frame_elide(ob: HoareObligation, program: Program) -> HoareObligation:
    """Drop conjuncts about variables the callee cannot reach (it only sees its arguments)."""
    if ob.kind != "call" or ob.call is None:
        return ob
    keep: set[str] = set()
    for a in ob.call.args:
        keep |= expr_vars(a)
    types = entry_var_types(program)
    refs = {v for v, t in types.items() if program.is_ref_type(t)}
    pre = elide_formula(ob.pre, keep, refs)
    post = elide_formula(ob.post, keep | {"res"}, refs - {"res"})
    return replace(ob, pre=pre, post=post, elided=(pre != ob.pre or post != ob.post), status=PENDING,
                   counterexample=None, outcome=None, states=0, detail="")


# -- bounded checking ----------------------------------------------------------


@dataclass
class CheckResult:
    status: str
    states: int
    checked: int
    counterexample: Optional[MemoryGraph] = None
    outcome: Optional[ExecutionOutcome] = None
    detail: str = ""


def obligation_vars(ob: HoareObligation, program: Program) -> list[tuple[str, str]]:
    types = entry_var_types(program)
    names = (ob.pre.free_vars() | ob.post.free_vars()) - {"res"}
    if ob.call is not None:
        for a in ob.call.args:
            names |= expr_vars(a)
    else:
        declared = {s.name for s in ob.stmts if isinstance(s, VarDecl)} | {
            s.target for s in ob.stmts if isinstance(s, Call) and s.declare}
        names |= (_used(ob.stmts) - declared)
        names -= declared - (ob.pre.free_vars())
    missing = [n for n in names if n not in types]
    if missing:
        raise ValueError(f"obligation mentions unknown variables {sorted(missing)}")
    return sorted((n, types[n]) for n in names)


def check_bounded(ob: HoareObligation, program: Program, config: Config) -> CheckResult:
    """Exhaustively check ``ob`` on every state within the bounds.

    Pre-states are all graphs over the obligation's variables with at most
    ``max_nodes`` records, integer variables in ``[-num_bound, num_bound]``
    and record integer fields in ``field_values``.  The verdict is bounded.
    """
    variables = obligation_vars(ob, program)
    nums = tuple(range(-config.num_bound, config.num_bound + 1))
    interp = Interpreter(program, config.check_step_budget, check_post=False)
    states = checked = 0
    for g in enumerate_graphs(program.schema, variables, config.max_nodes, value_domain=config.field_values,
                              num_domain=nums):
        states += 1
        if states > config.max_states:
            return CheckResult(BUDGET_EXHAUSTED, states - 1, checked,
                               detail=f"more than {config.max_states} states")
        if not models(g, ob.pre, config.num_range):
            continue
        checked += 1
        if ob.call is not None:
            out, _ = interp.call_function(g, ob.call)
        else:
            out, _ = interp.run_block(g, ob.stmts)
        if out.tag != NORMAL:
            return CheckResult(COUNTEREXAMPLE, states, checked, g, out,
                               f"{out.tag}{' at ' + out.location if out.location else ''}")
        if not models(out.final, ob.post, config.num_range):
            return CheckResult(COUNTEREXAMPLE, states, checked, g, out, "postcondition does not hold")
    return CheckResult(PASSED, states, checked)


def run_check(ob: HoareObligation, program: Program, config: Config) -> HoareObligation:
    r = check_bounded(ob, program, config)
    return replace(ob, status=r.status, counterexample=r.counterexample, outcome=r.outcome, states=r.states,
                   detail=r.detail)


# -- emission ----------------------------------------------------------------------


def emit_obligation(ob: HoareObligation) -> str:
    """Obligation text in the assertion syntax, one clause per line."""
    return (
        f"// obligation {ob.index} ({ob.kind})\n"
        f"requires {print_formula(ob.pre)}\n"
        f"code {ob.code()}\n"
        f"ensures {print_formula(ob.post)}\n"
    )


def instrumented_text(program: Program) -> str:
    return format_program(program)
