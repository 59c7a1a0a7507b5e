"""End-to-end verification: tests, learning, decomposition, bounded checking."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from ..config import Config
from ..features import POSITIVE, evaluate
from ..heaplang.interpreter import NORMAL, Interpreter, InterpreterError
from ..heaplang.syntax import Program
from ..heaplang.transform import loops_to_tailrec
from ..memgraph import INIT, NULL, MemoryGraph, build_graph, graph_state
from ..mutation import label_of
from ..speclang.printer import print_formula
from .learning import PointResult, learn_point, snapshots_at
from .obligations import (
    BUDGET_EXHAUSTED,
    PASSED,
    HoareObligation,
    decompose,
    frame_elide,
    run_check,
)
from .points import Layout, describe_point, layout, snapshot_keys
from .testgen import TestResult, execute, generate_tests, grid_tests

log = logging.getLogger(__name__)

VERIFIED = "Verified(bounded)"
INCONCLUSIVE = "Inconclusive"
REFUTED = "CounterExample"


def describe_state(g: MemoryGraph) -> str:
    """Compact text for a state: variables, then records numbered in BFS order."""
    order: dict[int, int] = {}
    queue = []
    for name in sorted(g.succ.get(INIT, {})):
        n = g.succ[INIT][name]
        if g.is_record(n) and n not in order:
            order[n] = len(order) + 1
            queue.append(n)
    i = 0
    while i < len(queue):
        n = queue[i]
        i += 1
        for fname in g.field_order(n):
            d = g.succ[n][fname]
            if g.is_record(d) and d not in order:
                order[d] = len(order) + 1
                queue.append(d)

    def val(n: int) -> str:
        if n == NULL:
            return "null"
        if n in order:
            return f"#{order[n]}"
        v = g.values[n]
        return str(v).lower() if isinstance(v, bool) else str(v)

    parts = [f"{name}={val(g.succ[INIT][name])}" for name in sorted(g.succ.get(INIT, {}))]
    for n in queue:
        parts.append(f"#{order[n]}={g.types[n]}({', '.join(val(g.succ[n][f]) for f in g.field_order(n))})")
    return ", ".join(parts)


@dataclass
class Report:
    program: str
    config: Config
    verdict: str
    tests: list[TestResult]
    layout: Layout
    prog: Program
    points: dict[str, PointResult]
    obligations: list[HoareObligation]
    raw_obligations: list[HoareObligation] = field(default_factory=list)
    relearn_rounds: int = 0
    reason: str = ""
    timings: dict[str, float] = field(default_factory=dict)
    check_times: list[float] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return self.verdict == VERIFIED

    def text(self) -> str:
        """Deterministic human-readable report; timings live in the summary only."""
        c = self.config
        pos = sum(1 for t in self.tests if t.label == POSITIVE)
        lines = [
            f"program: {self.program}",
            f"bounds: max nodes {c.max_nodes}, numerics [{-c.num_bound}, {c.num_bound}], "
            f"record fields {list(c.field_values)}",
            f"tests: {len(self.tests)} ({pos} positive, {len(self.tests) - pos} negative)",
            "invariants:",
        ]
        learned = [p for p in self.layout.points if p.learned]
        if not learned:
            lines.append("  (no learning points)")
        for p in learned:
            r = self.points.get(p.id)
            where = describe_point(self.prog, p)
            if r is None:
                lines.append(f"  {p.id} [{where}]: not learned")
            elif r.ok:
                dead = "  (unsatisfiable within bounds: dead code suspect)" if r.dead else ""
                lines.append(f"  {p.id} [{where}]: {print_formula(r.formula)}{dead}")
            else:
                lines.append(f"  {p.id} [{where}]: {r.error}")
        lines.append("obligations:")
        if not self.obligations:
            lines.append("  (none)")
        for ob in self.obligations:
            lines.append(f"  {ob.index}. {ob.triple()}")
            status = f"{ob.status}" + (f" ({ob.states} states)" if ob.status != "Pending" else "")
            if ob.detail:
                status += f": {ob.detail}"
            lines.append(f"     {status}")
            if ob.counterexample is not None:
                lines.append(f"     pre-state: {describe_state(ob.counterexample)}")
        if self.relearn_rounds:
            lines.append(f"relearn rounds: {self.relearn_rounds}")
        lines.append(f"verdict: {self.verdict}" + (f" ({self.reason})" if self.reason else ""))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        """Machine-readable record: one entry per obligation plus timings."""
        return {
            "program": self.program,
            "verdict": self.verdict,
            "reason": self.reason,
            "relearn_rounds": self.relearn_rounds,
            "invariants": {
                pid: (print_formula(r.formula) if r.ok else None) for pid, r in sorted(self.points.items())
            },
            "obligations": [
                {
                    "index": ob.index,
                    "kind": ob.kind,
                    "pre": print_formula(ob.pre),
                    "code": ob.code(),
                    "post": print_formula(ob.post),
                    "verdict": ob.status,
                    "states": ob.states,
                    "time": round(t, 4),
                }
                for ob, t in zip(self.obligations, self.check_times)
            ],
            "timings": {k: round(v, 4) for k, v in self.timings.items()},
        }

    def json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def prepare(program: Program, config: Config) -> tuple[Program, Layout, list[TestResult]]:
    """Loop conversion, layout and labeled test runs."""
    prog = loops_to_tailrec(program)
    lay = layout(prog, config.deref_bound)
    if config.grid is not None:
        tests = grid_tests(prog, config.grid)
    else:
        tests = generate_tests(prog, config.tests, config.seed, config.int_range)
    return prog, lay, execute(prog, tests, snapshot_keys(lay), config.step_budget)


def _rename_res(g: MemoryGraph, target: Optional[str]) -> MemoryGraph:
    env, heap = graph_state(g)
    if "res" in env:
        v = env.pop("res")
        if target is not None:
            env[target] = v
    return build_graph(env.items(), heap, g.schema)


def _is_real_failure(prog: Program, lay: Layout, ob: HoareObligation, config: Config) -> bool:
    """A counterexample starting at the program's own precondition that also
    fails when the whole entry function runs from it."""
    if lay.points[ob.pre_point].kind != "start" or ob.counterexample is None:
        return False
    interp = Interpreter(prog, config.step_budget)
    try:
        out = interp.run_from_graph(ob.counterexample)
    except InterpreterError:
        return False
    return not out.positive


def _counterexample_rows(
    prog: Program, lay: Layout, ob: HoareObligation, config: Config
) -> dict[str, list[tuple[MemoryGraph, str]]]:
    """Label the counterexample's pre- and post-states at the adjacent learned points."""
    rows: dict[str, list[tuple[MemoryGraph, str]]] = {}
    g = ob.counterexample
    interp = Interpreter(prog, config.step_budget)
    before = lay.points[ob.pre_point]
    if before.learned:
        try:
            rows.setdefault(before.id, []).append((g, label_of(interp.run_from_graph(g, resume=before.resume))))
        except InterpreterError as exc:
            log.info("cannot resume counterexample at %s: %s", before.id, exc)
    after = lay.points[ob.post_point]
    if after.learned and ob.outcome is not None and ob.outcome.tag == NORMAL:
        post = ob.outcome.final
        if ob.call is not None:
            post = _rename_res(post, ob.call.target)
        try:
            rows.setdefault(after.id, []).append((post, label_of(interp.run_from_graph(post, resume=after.resume))))
        except InterpreterError as exc:
            log.info("cannot resume counterexample at %s: %s", after.id, exc)
    return rows


def check_all(prog: Program, obs: list[HoareObligation], config: Config):
    checked, raw, times = [], [], []
    for ob in obs:
        raw.append(ob)
        t0 = time.perf_counter()
        checked.append(run_check(frame_elide(ob, prog), prog, config))
        times.append(time.perf_counter() - t0)
    return checked, raw, times


def verify(program: Program, config: Config, name: str = "") -> Report:
    t_start = time.perf_counter()
    timings: dict[str, float] = {}
    prog, lay, tests = prepare(program, config)
    timings["tests"] = time.perf_counter() - t_start

    t0 = time.perf_counter()
    snaps = {p.id: snapshots_at(p, tests) for p in lay.points if p.learned}
    points = {pid: learn_point(prog, lay.points[_index(lay, pid)], s, config) for pid, s in snaps.items()}
    timings["learn"] = time.perf_counter() - t0

    report = Report(name or prog.entry, config, INCONCLUSIVE, tests, lay, prog, points, [])
    t_check = 0.0
    for round_no in range(config.relearn_budget + 1):
        failed = [r for r in points.values() if not r.ok]
        if failed:
            report.reason = failed[0].error
            break
        obs, _ = decompose(prog, lay, {pid: r.formula for pid, r in points.items()})
        t0 = time.perf_counter()
        report.obligations, report.raw_obligations, report.check_times = check_all(prog, obs, config)
        t_check += time.perf_counter() - t0
        bad = next((ob for ob in report.obligations if ob.status != PASSED), None)
        if bad is None:
            report.verdict = VERIFIED
            report.reason = ""
            break
        if bad.status == BUDGET_EXHAUSTED:
            report.reason = f"obligation {bad.index}: state budget exhausted"
            break
        if _is_real_failure(prog, lay, bad, config):
            report.verdict = REFUTED
            report.reason = f"obligation {bad.index} fails from a state satisfying the precondition"
            break
        if round_no == config.relearn_budget:
            report.reason = "relearn budget exhausted"
            break
        rows = _counterexample_rows(prog, lay, bad, config)
        relearned = dict(points)
        grew = False
        for pid, extra in rows.items():
            old = points[pid]
            base = old.refined.matrix if old.refined is not None else old.initial
            trial = base.copy()
            added = [trial.append(evaluate(old.catalog, g), lab) for g, lab in extra]
            if any(added):
                grew = True
                relearned[pid] = learn_point(prog, old.point, old.snapshots, config, base=base, extra=extra)
        report.relearn_rounds = round_no + 1
        if not grew:
            report.reason = f"obligation {bad.index}: counterexample adds no new row"
            break
        points = relearned
    report.points = points
    timings["check"] = t_check
    timings["total"] = time.perf_counter() - t_start
    report.timings = timings
    return report


def _index(lay: Layout, pid: str) -> int:
    for p in lay.points:
        if p.id == pid:
            return p.index
    raise KeyError(pid)
