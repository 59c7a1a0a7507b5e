"""Memory-graph mutation at a learning point and the refinement loop.

Mutants are built from snapshot graphs by rebinding one edge (or swapping
two) and then executed from the learning point to completion.  Each mutant
is labeled by its outcome like an ordinary test, and its feature vector
joins the matrix if it is new.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .features import (
    NEGATIVE,
    POSITIVE,
    Eq,
    FeatureCatalog,
    IsNull,
    LabeledMatrix,
    Neq,
    NonNull,
    NumAtom,
    PredSat,
    SepCombo,
    evaluate,
)
from .learner import FeatureFormula, learn
from .memgraph import INIT, NULL, MemoryGraph, Path, resolve, wrap_int

log = logging.getLogger(__name__)

FRESH = "FreshObject"
REPOINT = "Repoint"
SWAP_REF = "SwapRef"
SET_CONST = "SetConst"
OFFSET = "Offset"
SWAP_NUM = "SwapNum"


class MutationError(Exception):
    pass


@dataclass(frozen=True)
class Mutation:
    target: Path
    action: str
    arg: object = None

    def __str__(self) -> str:
        t = ".".join(self.target)
        if self.action == FRESH:
            return f"{t} := new {self.arg}()"
        if self.action == REPOINT:
            return f"{t} := {'null' if self.arg is None else f'node {self.arg}'}"
        if self.action in (SWAP_REF, SWAP_NUM):
            return f"swap {t} <-> {'.'.join(self.arg)}"
        if self.action == SET_CONST:
            return f"{t} := {self.arg}"
        return f"{t} += {self.arg}"


def _slot(g: MemoryGraph, path: Path) -> Optional[tuple[int, str]]:
    """(source node, label) of the last edge of ``path``, if it exists."""
    src = resolve(g, path[:-1]) if len(path) > 1 else INIT
    if src is None or src == NULL or g.target(src, path[-1]) is None:
        return None
    return src, path[-1]


def feature_paths(formula: FeatureFormula, catalog: FeatureCatalog) -> list[Path]:
    """Paths mentioned by the features of ``formula``, in catalog order."""
    out: list[Path] = []

    def add(p: Path) -> None:
        if p not in out:
            out.append(p)

    for k in formula.features():
        f = catalog[k]
        if isinstance(f, (IsNull, NonNull)):
            add(f.path)
        elif isinstance(f, (Eq, Neq)):
            add(f.left)
            add(f.right)
        elif isinstance(f, PredSat):
            add(f.shape.path)
        elif isinstance(f, SepCombo):
            add(f.left.path)
            add(f.right.path)
        elif isinstance(f, NumAtom):
            for _, t in f.terms:
                add(t.path)
    return out


def targets(
    formula: Optional[FeatureFormula],
    catalog: FeatureCatalog,
    relevant: Sequence[tuple[Path, str]],
    schema: dict,
) -> list[tuple[Path, str]]:
    """Mutation targets: the formula's variables (all relevant ones when the
    formula is true or false) plus their one-step field paths."""
    types = {p: t for p, t in relevant}
    if formula is None or formula.is_true or formula.is_false:
        roots = [p for p, _ in relevant]
    else:
        roots = [p for p in feature_paths(formula, catalog) if p in types]
    out: list[tuple[Path, str]] = []
    for p in roots:
        if (p, types[p]) not in out:
            out.append((p, types[p]))
    for p in list(roots):
        for fname, ftype in sorted(schema.get(types[p], ())):
            q = (p + (fname,), ftype)
            if q not in out:
                out.append(q)
    return out


def plan(
    formula: Optional[FeatureFormula],
    catalog: FeatureCatalog,
    graph: MemoryGraph,
    relevant: Sequence[tuple[Path, str]],
    schema: dict,
    consts: Sequence[int] = (0,),
) -> list[Mutation]:
    """All applicable mutations of ``graph`` for the formula's targets, in a fixed order."""
    tgts = targets(formula, catalog, relevant, schema)
    top_refs = [(p, t) for p, t in relevant if len(p) == 1 and t in schema]
    top_ints = [(p, t) for p, t in relevant if len(p) == 1 and t == "int"]
    nodes_by_type: dict[str, list[int]] = {}
    reach = graph.reach(INIT)
    for n in sorted(reach):
        t = graph.types.get(n)
        if t in schema:
            nodes_by_type.setdefault(t, []).append(n)
    out: list[Mutation] = []
    for path, t in tgts:
        slot = _slot(graph, path)
        if slot is None:
            continue
        cur = graph.target(*slot)
        if t in schema:
            out.append(Mutation(path, FRESH, t))
            if cur != NULL:
                out.append(Mutation(path, REPOINT, None))
            for n in nodes_by_type.get(t, []):
                if n != cur:
                    out.append(Mutation(path, REPOINT, n))
            if len(path) == 1:
                for q, qt in top_refs:
                    if q != path and qt == t and graph.target(INIT, q[0]) != cur:
                        out.append(Mutation(path, SWAP_REF, q))
        elif t == "int":
            val = graph.values.get(cur)
            for c in consts:
                if c != val:
                    out.append(Mutation(path, SET_CONST, c))
            out.append(Mutation(path, OFFSET, 1))
            out.append(Mutation(path, OFFSET, -1))
            if len(path) == 1:
                for q, _ in top_ints:
                    if q != path:
                        out.append(Mutation(path, SWAP_NUM, q))
    return out


def apply(graph: MemoryGraph, m: Mutation) -> MemoryGraph:
    """Mutated copy of ``graph``; the input is never modified."""
    slot = _slot(graph, m.target)
    if slot is None:
        raise MutationError(f"{'.'.join(m.target)} does not resolve")
    src, label = slot
    cur = graph.target(src, label)
    if m.action == FRESH:
        g2, node = graph.with_record(m.arg)
        return g2.with_edge(src, label, node)
    if m.action == REPOINT:
        if m.arg is None:
            return graph.with_edge(src, label, NULL)
        expected = _slot_type(graph, m.target)
        if expected is not None and graph.types.get(m.arg) != expected:
            raise MutationError(f"cannot point {'.'.join(m.target)} at a {graph.types.get(m.arg)} node")
        return graph.with_edge(src, label, m.arg)
    if m.action in (SWAP_REF, SWAP_NUM):
        other = _slot(graph, m.arg)
        if other is None:
            raise MutationError(f"{'.'.join(m.arg)} does not resolve")
        dst = graph.target(*other)
        return graph.with_edge(src, label, dst).with_edge(other[0], other[1], cur)
    if m.action in (SET_CONST, OFFSET):
        if cur not in graph.values:
            raise MutationError(f"{'.'.join(m.target)} is not numeric")
        v = m.arg if m.action == SET_CONST else wrap_int(graph.values[cur] + m.arg)
        return graph.with_value(cur, v)
    raise MutationError(f"unknown mutation {m.action}")


def _slot_type(graph: MemoryGraph, path: Path) -> Optional[str]:
    if len(path) == 1:
        cur = graph.target(INIT, path[0])
        return graph.types.get(cur) if cur not in (None, NULL) else None
    owner = resolve(graph, path[:-1])
    for fname, ftype in graph.schema.get(graph.types.get(owner), ()):
        if fname == path[-1]:
            return ftype
    return None


@dataclass
class RefineResult:
    formula: FeatureFormula
    matrix: LabeledMatrix
    chosen: list[int]
    regions: object
    rounds: int
    history: list[FeatureFormula] = field(default_factory=list)
    mutation_log: list[str] = field(default_factory=list)
    graphs: list[tuple[MemoryGraph, str]] = field(default_factory=list)
    hit_budget: bool = False
    row_counts: list[int] = field(default_factory=list)  # distinct rows before round 1, then after each round


Runner = Callable[[MemoryGraph], str]  # resumes from the point and returns a label


def refine(
    catalog: FeatureCatalog,
    matrix: LabeledMatrix,
    snapshots: Sequence[tuple[MemoryGraph, str]],
    relevant: Sequence[tuple[Path, str]],
    schema: dict,
    runner: Runner,
    consts: Sequence[int] = (0,),
    rounds: int = 10,
    per_round: int = 500,
) -> RefineResult:
    """Learn, mutate, relabel and relearn until the formula stops changing.

    ``snapshots`` are (graph, label) pairs observed at the point; the
    matrix rows must already include their vectors.  ``runner`` executes
    the program from the point on a mutated graph and returns its label.
    """
    matrix = matrix.copy()
    formula, chosen, regions = learn(matrix)
    history = [formula]
    pool: list[MemoryGraph] = []
    seen_graphs: set[MemoryGraph] = set()
    for g, _ in snapshots:
        if g not in seen_graphs:
            seen_graphs.add(g)
            pool.append(g)
    tried: set[tuple] = set()
    graphs = list(snapshots)
    mlog: list[str] = []
    row_counts = [matrix.n_rows]
    done_rounds = 0
    hit_budget = True
    for r in range(rounds):
        done_rounds = r + 1
        added = 0
        produced = 0
        new_pool: list[MemoryGraph] = []
        for g in list(pool):
            if produced >= per_round:
                break
            for m in plan(formula, catalog, g, relevant, schema, consts):
                if produced >= per_round:
                    break
                key = (g, m)
                if key in tried:
                    continue
                tried.add(key)
                mutant = apply(g, m)
                produced += 1
                label = runner(mutant)
                row = evaluate(catalog, mutant)
                fresh = matrix.append(row, label)
                mlog.append(f"round {r + 1}: {m} -> {label}{' new' if fresh else ''}")
                if fresh:
                    added += 1
                    graphs.append((mutant, label))
                    if mutant not in seen_graphs:
                        seen_graphs.add(mutant)
                        new_pool.append(mutant)
        pool.extend(new_pool)
        row_counts.append(matrix.n_rows)
        new_formula, chosen, regions = learn(matrix)
        history.append(new_formula)
        changed = new_formula != formula
        formula = new_formula
        if added == 0 or not changed:
            hit_budget = False
            break
    if hit_budget:
        log.warning("mutation stopped at the round budget (%d) before converging", rounds)
    return RefineResult(formula, matrix, chosen, regions, done_rounds, history, mlog, graphs, hit_budget,
                        row_counts)


def label_of(outcome) -> str:
    return POSITIVE if outcome.positive else NEGATIVE
