"""Translate a learned feature DNF into an assertion-language formula."""

from __future__ import annotations

from typing import Optional, Sequence

from ..features import (
    Eq,
    FeatureCatalog,
    LabeledMatrix,
    IsNull,
    Neq,
    NonNull,
    NumAtom,
    PointsToShape,
    PredLen,
    PredSat,
    PredShape,
    SepCombo,
    path_str,
)
from ..learner import FeatureFormula
from ..predicates import REGISTRY, Registry
from .ast import FALSE, TRUE, WILDCARD, ArithAtom, Formula, IsNullAtom, Lin, PointsTo, PredApp, SymHeap
from .transform import fresh_name


class TranslationError(Exception):
    pass


def _var(path) -> str:
    if len(path) != 1:
        raise TranslationError(
            f"feature over the field path {path_str(path)} has no variable in the assertion language"
        )
    return path[0]


def _shape_of(root: str, preds: dict, points: dict):
    if root in preds:
        return PredShape(preds[root], (root,))
    return points[root]


def _alias_patterns(roots, preds, points, feats, catalog, rows) -> list[tuple[tuple[str, str], ...]]:
    """Which pairs of spatial roots alias, one tuple per distinct pattern in ``rows``.

    A region naming shapes on two roots says nothing about how their
    footprints relate unless it also holds the matching separation feature.
    The covered positive rows decide: each pair must be separated or equal
    in every row, and each distinct combination becomes its own disjunct.
    """
    separated = set()
    for f in feats:
        if isinstance(f, SepCombo):
            separated.add(frozenset((_var(f.left.path), _var(f.right.path))))
    open_pairs = [
        (a, b) for i, a in enumerate(roots) for b in roots[i + 1:] if frozenset((a, b)) not in separated
    ]
    if not open_pairs:
        return [()]
    if rows is None:
        raise TranslationError(f"no separation fact relates {open_pairs[0][0]} and {open_pairs[0][1]}")
    index = {f: k for k, f in enumerate(catalog.features)}
    cols = []
    for a, b in open_pairs:
        sa, sb = _shape_of(a, preds, points), _shape_of(b, preds, points)
        sep = index.get(SepCombo(sa, sb), index.get(SepCombo(sb, sa)))
        eq = index.get(Eq((a,), (b,)), index.get(Eq((b,), (a,))))
        cols.append((a, b, sep, eq))
    patterns: list[tuple[tuple[str, str], ...]] = []
    for row in rows:
        pat = []
        for a, b, sep, eq in cols:
            if sep is not None and row[sep] == 1:
                continue
            if eq is not None and row[eq] == 1:
                pat.append((a, b))
                continue
            raise TranslationError(f"{a} and {b} neither separate nor alias in some covered state")
        if tuple(pat) not in patterns:
            patterns.append(tuple(pat))
    return sorted(patterns, key=lambda p: (len(p), p)) or [()]


def translate_region(
    region: Sequence[int],
    catalog: FeatureCatalog,
    registry: Registry = REGISTRY,
    rows: Optional[Sequence[Sequence[int]]] = None,
) -> list[SymHeap]:
    """Symbolic heaps for one region; ``rows`` are the positive rows it covers
    and settle how spatial roots without a separation feature relate."""
    feats = [catalog[k] for k in sorted(region)]
    order = {p[0]: i for i, (p, _) in enumerate(catalog.ref_vars) if len(p) == 1}
    preds: dict[str, str] = {}  # root -> predicate name
    points: dict[str, PointsToShape] = {}
    measured: dict[tuple[str, int], None] = {}

    def want_pred(root: str, name: str) -> None:
        if preds.get(root, name) != name:
            raise TranslationError(f"region asks for both {preds[root]}({root}) and {name}({root})")
        preds[root] = name

    def want_shape(s) -> None:
        if isinstance(s, PredShape):
            want_pred(_var(s.path), s.pred)
        else:
            points[_var(s.path)] = s

    for f in feats:
        if isinstance(f, PredSat):
            want_shape(f.shape)
        elif isinstance(f, SepCombo):
            want_shape(f.left)
            want_shape(f.right)
        elif isinstance(f, NumAtom):
            for _, t in f.terms:
                if isinstance(t, PredLen):
                    want_pred(_var(t.path), t.pred)
                    measured[(_var(t.path), t.index)] = None

    roots = sorted(set(preds) | set(points), key=lambda r: (order.get(r, len(order)), r))
    patterns = _alias_patterns(roots, preds, points, feats, catalog, rows)
    return [_symheap(feats, catalog, registry, roots, preds, points, measured, pat) for pat in patterns]


def _symheap(feats, catalog, registry, roots, preds, points, measured, aliases) -> SymHeap:
    rep = {r: r for r in roots}

    def find(r: str) -> str:
        while rep[r] != r:
            r = rep[r]
        return r

    for a, b in aliases:
        ra, rb = find(a), find(b)
        if ra != rb:
            rep[rb] = ra  # roots are ordered, so the earlier one represents the class
    groups: dict[str, list[str]] = {}
    for r in roots:
        groups.setdefault(find(r), []).append(r)
    pure: list = []
    g_preds: dict[str, str] = {}
    g_points: dict[str, PointsToShape] = {}
    for head, members in groups.items():
        names = {preds[m] for m in members if m in preds}
        if len(names) > 1:
            raise TranslationError(f"aliased roots {', '.join(members)} carry different predicates")
        if names:
            g_preds[head] = names.pop()
        cells = [points[m] for m in members if m in points]
        if cells:
            g_points[head] = cells[0]
        for m in members[1:]:
            pure.append(ArithAtom.make(Lin.make({head: 1}) - Lin.make({m: 1}), "="))

    taken = {p[0] for p, _ in catalog.ref_vars} | {p[0] for p in catalog.num_vars}
    names: dict[tuple[str, int], str] = {}
    exists: list[str] = []
    spatial: list = []
    for head in groups:
        if head in g_preds:
            d = registry.get(g_preds[head])
            args: list = [head]
            for i in range(len(d.num_params)):
                if any((m, i) in measured for m in groups[head]):
                    nm = fresh_name(taken | set(exists))
                    exists.append(nm)
                    for m in groups[head]:
                        names[(m, i)] = nm
                    args.append(nm)
                else:
                    args.append(WILDCARD)
            spatial.append(PredApp(d.name, tuple(args)))
        else:
            s = g_points[head]
            spatial.append(PointsTo(head, s.record, (WILDCARD,) * s.nfields))

    for f in feats:
        if isinstance(f, IsNull):
            pure.append(IsNullAtom(_var(f.path), True))
        elif isinstance(f, NonNull):
            root = _var(f.path)
            if root not in points:
                pure.append(IsNullAtom(root, False))
        elif isinstance(f, (Eq, Neq)):
            lin = Lin.make({_var(f.left): 1}) - Lin.make({_var(f.right): 1})
            pure.append(ArithAtom.make(lin, "=" if isinstance(f, Eq) else "!="))
        elif isinstance(f, NumAtom):
            terms: dict[str, int] = {}
            for s, t in f.terms:
                v = names[(_var(t.path), t.index)] if isinstance(t, PredLen) else _var(t.path)
                terms[v] = terms.get(v, 0) + s
            pure.append(ArithAtom.make(Lin.make(terms, -f.const), f.op))
    # a points-to on a root that also carries a predicate only says "non-null"
    for head in groups:
        if head in g_preds and head in g_points:
            pure.append(IsNullAtom(head, False))
    out_pure = []
    for a in pure:
        if a not in out_pure:
            out_pure.append(a)
    return SymHeap(tuple(exists), tuple(spatial) if spatial else None, tuple(out_pure))


def translate(
    dnf: FeatureFormula,
    catalog: FeatureCatalog,
    registry: Registry = REGISTRY,
    matrix: Optional[LabeledMatrix] = None,
) -> Formula:
    """``matrix`` supplies the positive rows each region covers; without it a
    region naming shapes on two roots must also name their separation."""
    if dnf.is_false:
        return FALSE
    if dnf.is_true:
        return TRUE
    out: list[SymHeap] = []
    for r in dnf.regions:
        rows = None
        if matrix is not None:
            rows = [matrix.values[i] for i in matrix.positives() if all(matrix.values[i][k] == 1 for k in r)]
        for h in translate_region(r, catalog, registry, rows):
            if h not in out:
                out.append(h)
    return Formula(tuple(out))
