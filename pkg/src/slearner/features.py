"""Feature catalogs over memory graphs and the labeled {0,1,N} matrix.

A catalog is an ordered list of descriptors built from the reference paths,
numeric paths, shape predicates and constants of a learning point.  The
order is fixed:

1. ``p = null`` for each reference path
2. ``p |-> T(_, ..)`` (non-null) for each reference path
3. ``p = q`` then ``p != q`` for each pair
4. ``is_P(p)`` for each predicate and applicable path
5. shape pairs ``A(p) & B(q) & sep(p,q)`` for each pair p < q, shapes being
   points-to first, then each applicable predicate
6. octagon atoms over the numeric terms (predicate measures first, then
   program numerics), per constant c: unary ``+u > c`` then ``-u > c`` then
   ``u = c``; binary ``±u ±v > c`` then ``±u ±v = c``.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .memgraph import NULL, MemoryGraph, Path, resolve
from .predicates import PredicateDef
from .tri import NA, ONE, ZERO, tri_parse, tri_str

POSITIVE = "positive"
NEGATIVE = "negative"


def path_str(p: Path) -> str:
    return ".".join(p)


@dataclass(frozen=True)
class PointsToShape:
    path: Path
    record: str
    nfields: int

    def display(self) -> str:
        return f"{path_str(self.path)} |-> {self.record}({','.join('_' * self.nfields)})"


@dataclass(frozen=True)
class PredShape:
    pred: str
    path: Path

    def display(self) -> str:
        return f"is_{self.pred}({path_str(self.path)})"


Shape = Union[PointsToShape, PredShape]


@dataclass(frozen=True)
class PredLen:
    """Numeric parameter ``index`` of predicate ``pred`` applied at ``path``."""

    pred: str
    path: Path
    label: str
    index: int = 0

    def display(self) -> str:
        return f"{self.label}({path_str(self.path)})"


@dataclass(frozen=True)
class NumVar:
    path: Path

    def display(self) -> str:
        return path_str(self.path)


Term = Union[PredLen, NumVar]


@dataclass(frozen=True)
class IsNull:
    path: Path

    def display(self) -> str:
        return f"{path_str(self.path)} = null"


@dataclass(frozen=True)
class NonNull:
    shape: PointsToShape

    @property
    def path(self) -> Path:
        return self.shape.path

    def display(self) -> str:
        return self.shape.display()


@dataclass(frozen=True)
class Eq:
    left: Path
    right: Path

    def display(self) -> str:
        return f"{path_str(self.left)} = {path_str(self.right)}"


@dataclass(frozen=True)
class Neq:
    left: Path
    right: Path

    def display(self) -> str:
        return f"{path_str(self.left)} != {path_str(self.right)}"


@dataclass(frozen=True)
class PredSat:
    shape: PredShape

    def display(self) -> str:
        return self.shape.display()


@dataclass(frozen=True)
class SepCombo:
    left: Shape
    right: Shape

    def display(self) -> str:
        a, b = self.left.path, self.right.path
        return f"{self.left.display()} & {self.right.display()} & sep({path_str(a)},{path_str(b)})"


@dataclass(frozen=True)
class NumAtom:
    """``sum(sign * term) op const`` with op in {'>', '='}."""

    terms: tuple[tuple[int, Term], ...]
    op: str
    const: int

    def display(self) -> str:
        if len(self.terms) == 1 and self.terms[0][0] < 0 and self.op == ">":
            # -u > c is shown as u < -c
            return f"{self.terms[0][1].display()} < {-self.const}"
        parts = []
        for i, (s, t) in enumerate(self.terms):
            if i == 0:
                parts.append(("-" if s < 0 else "") + t.display())
            else:
                parts.append(("- " if s < 0 else "+ ") + t.display())
        return f"{' '.join(parts)} {self.op} {self.const}"


Feature = Union[IsNull, NonNull, Eq, Neq, PredSat, SepCombo, NumAtom]


@dataclass(frozen=True)
class FeatureCatalog:
    features: tuple[Feature, ...]
    ref_vars: tuple[tuple[Path, str], ...] = ()
    num_vars: tuple[Path, ...] = ()
    preds: tuple[str, ...] = ()
    consts: tuple[int, ...] = (0,)
    pred_defs: tuple[PredicateDef, ...] = field(default=(), compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.features)

    def __getitem__(self, i: int) -> Feature:
        return self.features[i]

    def __iter__(self):
        return iter(self.features)

    def displays(self) -> list[str]:
        return [f.display() for f in self.features]

    def listing(self) -> str:
        """One line per feature, numbered from 1."""
        return "\n".join(f"{i + 1}. {d}" for i, d in enumerate(self.displays()))


def build_catalog(
    ref_vars: Sequence[tuple[Path, str]],
    num_vars: Sequence[Path],
    preds: Sequence[PredicateDef],
    consts: Iterable[int] = (0,),
    schema: Optional[dict] = None,
) -> FeatureCatalog:
    """Ordered catalog; ``ref_vars`` pairs each path with its record type."""
    schema = schema or {}
    ref_vars = [(tuple(p), t) for p, t in ref_vars]
    num_vars = [tuple(p) for p in num_vars]
    cs = sorted(set(consts) | {0})
    feats: list[Feature] = []

    def pt(path: Path, rec: str) -> PointsToShape:
        return PointsToShape(path, rec, len(schema.get(rec, ())))

    def applicable(pred: PredicateDef, rec: str) -> bool:
        return not schema or pred.applies(schema, rec)

    feats += [IsNull(p) for p, _ in ref_vars]
    feats += [NonNull(pt(p, t)) for p, t in ref_vars]
    for (a, ta), (b, tb) in itertools.combinations(ref_vars, 2):
        if ta == tb:
            feats += [Eq(a, b), Neq(a, b)]
    for pred in preds:
        feats += [PredSat(PredShape(pred.name, p)) for p, t in ref_vars if applicable(pred, t)]

    def shapes(p: Path, t: str) -> list[Shape]:
        return [pt(p, t)] + [PredShape(pr.name, p) for pr in preds if applicable(pr, t)]

    for (a, ta), (b, tb) in itertools.combinations(ref_vars, 2):
        for left in shapes(a, ta):
            for right in shapes(b, tb):
                feats.append(SepCombo(left, right))

    terms: list[Term] = []
    for pred in preds:
        for p, t in ref_vars:
            if applicable(pred, t):
                for i in range(len(pred.num_params)):
                    terms.append(PredLen(pred.name, p, pred.measure_name(i), i))
    terms += [NumVar(p) for p in num_vars]

    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    for c in cs:
        feats += [NumAtom(((1, u),), ">", c) for u in terms]
        feats += [NumAtom(((-1, u),), ">", c) for u in terms]
        feats += [NumAtom(((1, u),), "=", c) for u in terms]
        for op in (">", "="):
            for u, v in itertools.combinations(terms, 2):
                feats += [NumAtom(((su, u), (sv, v)), op, c) for su, sv in signs]

    return FeatureCatalog(
        tuple(feats),
        tuple(ref_vars),
        tuple(num_vars),
        tuple(p.name for p in preds),
        tuple(cs),
        tuple(preds),
    )


class _Eval:
    """Per-graph cache of path resolution and predicate matches."""

    def __init__(self, graph: MemoryGraph, preds: dict[str, PredicateDef]):
        self.g = graph
        self.preds = preds
        self._nodes: dict[Path, Optional[int]] = {}
        self._matches: dict[tuple[str, int], object] = {}

    def node(self, p: Path) -> Optional[int]:
        if p not in self._nodes:
            self._nodes[p] = resolve(self.g, p)
        return self._nodes[p]

    def match(self, pred: str, node: int):
        key = (pred, node)
        if key not in self._matches:
            d = self.preds[pred]
            if node != NULL and not self.g.is_record(node):
                self._matches[key] = None
            else:
                self._matches[key] = d.evaluator(self.g, [node]) or None
        return self._matches[key]

    def shape_footprint(self, s: Shape):
        """(status, footprint): status N when unresolvable, 0 when the shape fails."""
        n = self.node(s.path)
        if n is None:
            return NA, None
        if isinstance(s, PointsToShape):
            if n == NULL or self.g.types.get(n) != s.record:
                return ZERO, None
            return ONE, self.g.cell(n)
        m = self.match(s.pred, n)
        if m is None:
            return ZERO, None
        return ONE, m.footprint

    def term(self, t: Term) -> Optional[int]:
        n = self.node(t.path)
        if n is None:
            return None
        if isinstance(t, NumVar):
            v = self.g.values.get(n)
            return None if v is None else int(v)
        m = self.match(t.pred, n)
        return None if m is None else m.values[t.index]

    def feature(self, f: Feature) -> int:
        if isinstance(f, IsNull):
            n = self.node(f.path)
            return NA if n is None else (ONE if n == NULL else ZERO)
        if isinstance(f, NonNull):
            n = self.node(f.path)
            return NA if n is None else (ZERO if n == NULL else ONE)
        if isinstance(f, (Eq, Neq)):
            a, b = self.node(f.left), self.node(f.right)
            if a is None or b is None:
                return NA
            same = a == b
            return ONE if same == isinstance(f, Eq) else ZERO
        if isinstance(f, PredSat):
            n = self.node(f.shape.path)
            if n is None:
                return NA
            return ONE if self.match(f.shape.pred, n) is not None else ZERO
        if isinstance(f, SepCombo):
            sa, fa = self.shape_footprint(f.left)
            sb, fb = self.shape_footprint(f.right)
            if sa == NA or sb == NA:
                return NA
            if sa == ZERO or sb == ZERO:
                return ZERO
            return ONE if fa.isdisjoint(fb) else ZERO
        if isinstance(f, NumAtom):
            total = 0
            for s, t in f.terms:
                v = self.term(t)
                if v is None:
                    return NA
                total += s * v
            ok = total > f.const if f.op == ">" else total == f.const
            return ONE if ok else ZERO
        raise TypeError(f"unknown feature {f!r}")


def _pred_map(catalog: FeatureCatalog) -> dict[str, PredicateDef]:
    if catalog.pred_defs:
        return {p.name: p for p in catalog.pred_defs}
    from .predicates import lookup

    return {name: lookup(name) for name in catalog.preds}


def evaluate(catalog: FeatureCatalog, graph: MemoryGraph) -> np.ndarray:
    """Feature vector of ``graph`` as an int8 array over {0, 1, N=-1}."""
    ev = _Eval(graph, _pred_map(catalog))
    return np.array([ev.feature(f) for f in catalog.features], dtype=np.int8)


def evaluate_many(catalog: FeatureCatalog, graphs: Sequence[MemoryGraph]) -> np.ndarray:
    preds = _pred_map(catalog)
    out = np.empty((len(graphs), len(catalog)), dtype=np.int8)
    for i, g in enumerate(graphs):
        ev = _Eval(g, preds)
        out[i] = [ev.feature(f) for f in catalog.features]
    return out


def vector_str(v: Sequence[int]) -> str:
    return " ".join(tri_str(int(x)) for x in v)


@dataclass
class LabeledMatrix:
    """Rows of {0,1,N} feature values with a label each."""

    values: np.ndarray
    labels: list[str]
    header: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int8).reshape(len(self.labels), -1) \
            if len(self.labels) else np.zeros((0, len(self.header)), dtype=np.int8)
        for lab in self.labels:
            if lab not in (POSITIVE, NEGATIVE):
                raise ValueError(f"bad label {lab!r}")

    @staticmethod
    def empty(header: Sequence[str]) -> "LabeledMatrix":
        return LabeledMatrix(np.zeros((0, len(header)), dtype=np.int8), [], list(header))

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_cols(self) -> int:
        return self.values.shape[1] if self.values.ndim == 2 and self.values.shape[0] else len(self.header)

    def positives(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == POSITIVE]

    def negatives(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == NEGATIVE]

    def row_keys(self) -> set[tuple]:
        return {(tuple(int(x) for x in r), lab) for r, lab in zip(self.values, self.labels)}

    def append(self, row: Sequence[int], label: str) -> bool:
        """Add a row unless an identical (values, label) row exists; True if added."""
        row = np.asarray(row, dtype=np.int8)
        key = (tuple(int(x) for x in row), label)
        if key in self.row_keys():
            return False
        if self.n_rows == 0:
            self.values = row.reshape(1, -1).copy()
        else:
            self.values = np.vstack([self.values, row.reshape(1, -1)])
        self.labels.append(label)
        return True

    def copy(self) -> "LabeledMatrix":
        return LabeledMatrix(self.values.copy(), list(self.labels), list(self.header))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = self.header or [str(i + 1) for i in range(self.n_cols)]
        w.writerow(list(header) + ["label"])
        for r, lab in zip(self.values, self.labels):
            w.writerow([tri_str(int(x)) for x in r] + [lab])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "LabeledMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty matrix file")
        header = rows[0][:-1]
        vals, labels = [], []
        for r in rows[1:]:
            if not r:
                continue
            if len(r) != len(header) + 1:
                raise ValueError(f"row has {len(r)} cells, expected {len(header) + 1}")
            vals.append([tri_parse(x) for x in r[:-1]])
            labels.append(r[-1].strip())
        arr = np.array(vals, dtype=np.int8) if vals else np.zeros((0, len(header)), dtype=np.int8)
        return LabeledMatrix(arr, labels, header)
