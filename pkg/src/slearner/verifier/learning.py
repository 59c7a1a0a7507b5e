"""Per-point invariant learning: catalog, matrix, refinement, translation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..config import Config
from ..features import FeatureCatalog, LabeledMatrix, build_catalog, evaluate
from ..heaplang.interpreter import Interpreter
from ..heaplang.syntax import Program
from ..learner import InsufficientFeatures, normalize
from ..memgraph import MemoryGraph
from ..mutation import RefineResult, label_of, refine
from ..predicates import REGISTRY, lookup
from ..speclang.ast import Formula
from ..speclang.semantics import Unsat, sat_bounded
from ..speclang.transform import simplify
from ..speclang.translate import TranslationError, translate
from .points import LearningPoint, entry_var_types, formula_predicates, harvest_constants
from .testgen import TestResult


@dataclass
class PointResult:
    point: LearningPoint
    catalog: FeatureCatalog
    initial: LabeledMatrix
    snapshots: list[tuple[MemoryGraph, str]]
    refined: Optional[RefineResult] = None
    raw: Optional[Formula] = None
    formula: Optional[Formula] = None
    dead: bool = False
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.formula is not None


def point_predicates(program: Program, point: LearningPoint) -> list:
    """Predicates named by the entry contract; when it names none, every
    registered predicate that fits a relevant record type."""
    named = formula_predicates(program)
    if named:
        return [lookup(n) for n in named]
    records = {t for _, t in point.ref_paths(program)}
    return [d for d in REGISTRY if any(d.applies(program.schema, r) for r in sorted(records))]


def point_catalog(program: Program, point: LearningPoint) -> FeatureCatalog:
    preds = point_predicates(program, point)
    return build_catalog(
        point.ref_paths(program),
        point.num_paths(),
        preds,
        harvest_constants(program),
        program.schema,
    )


def snapshots_at(point: LearningPoint, results: Sequence[TestResult]) -> list[tuple[MemoryGraph, str]]:
    out = []
    for r in results:
        for pid, g in r.outcome.trace:
            if pid == point.id:
                out.append((g, r.label))
    return out


def _runner(program: Program, point: LearningPoint, budget: int):
    interp = Interpreter(program, budget)

    def run(g: MemoryGraph) -> str:
        return label_of(interp.run_from_graph(g, resume=point.resume))

    return run


def learn_point(
    program: Program,
    point: LearningPoint,
    snapshots: Sequence[tuple[MemoryGraph, str]],
    config: Config,
    base: Optional[LabeledMatrix] = None,
    extra: Sequence[tuple[MemoryGraph, str]] = (),
) -> PointResult:
    """Learn the invariant at ``point``.

    ``base`` continues from an earlier matrix (relearning); ``extra`` are
    additional labeled states, such as counterexamples, whose rows join the
    matrix and whose graphs join the mutation pool.
    """
    catalog = point_catalog(program, point)
    if base is None:
        matrix = LabeledMatrix.empty(catalog.displays())
        for g, lab in snapshots:
            matrix.append(evaluate(catalog, g), lab)
        matrix = normalize(matrix)
    else:
        matrix = base.copy()
    for g, lab in extra:
        matrix.append(evaluate(catalog, g), lab)
    res = PointResult(point, catalog, matrix, list(snapshots) + list(extra))
    try:
        res.refined = refine(
            catalog,
            res.initial,
            res.snapshots,
            point.relevant,
            program.schema,
            _runner(program, point, config.step_budget),
            harvest_constants(program),
            config.mutation_rounds,
            config.mutants_per_round,
        )
    except InsufficientFeatures as exc:
        res.error = f"insufficient features at {point.id}: {exc}"
        return res
    try:
        res.raw = translate(res.refined.formula, catalog, matrix=res.refined.matrix)
    except TranslationError as exc:
        res.error = f"cannot translate the invariant at {point.id}: {exc}"
        return res
    res.formula = simplify(res.raw)
    types = entry_var_types(program)
    variables = [(v, types[v]) for v in sorted(res.formula.free_vars()) if v in types]
    witness = sat_bounded(res.formula, program.schema, variables, max_nodes=min(config.max_nodes, 3),
                          num_bound=(-3, 3))
    res.dead = witness is Unsat
    return res


def learn_invariants(
    program: Program,
    points: Sequence[LearningPoint],
    results: Sequence[TestResult],
    config: Config,
) -> dict[str, PointResult]:
    """Learn and translate an invariant at every learned point."""
    out = {}
    for p in points:
        if p.learned:
            out[p.id] = learn_point(program, p, snapshots_at(p, results), config)
    return out
