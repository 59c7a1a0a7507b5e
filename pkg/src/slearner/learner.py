"""Greedy feature selection and region combination over labeled matrices.

Cells are read literally: a feature cuts a (positive, negative) pair only
when the positive row has 1 and the negative row has 0, so N never cuts,
never excludes a negative and never covers a positive.  Feature indices
are 0-based here and shown 1-based in reports.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .features import NEGATIVE, POSITIVE, LabeledMatrix
from .tri import ONE, ZERO

MAX_COMBINATION = 6


class InsufficientFeatures(Exception):
    """No remaining feature separates some positive row from some negative row."""

    def __init__(self, message: str, pairs: Sequence[tuple[int, int]] = (), point: Optional[str] = None):
        super().__init__(message)
        self.pairs = list(pairs)
        self.point = point


@dataclass(frozen=True)
class Region:
    features: tuple[int, ...]
    covers: frozenset[int]


@dataclass
class RegionSet:
    regions: list[Region] = field(default_factory=list)

    def feature_sets(self) -> list[tuple[int, ...]]:
        return [r.features for r in self.regions]


@dataclass(frozen=True)
class FeatureFormula:
    """DNF over catalog indices.  ``((),)`` is true and ``()`` is false."""

    regions: tuple[tuple[int, ...], ...]

    @property
    def is_true(self) -> bool:
        return () in self.regions

    @property
    def is_false(self) -> bool:
        return not self.regions

    def features(self) -> list[int]:
        return sorted({k for r in self.regions for k in r})

    def holds(self, row: Sequence[int]) -> bool:
        return any(all(row[k] == ONE for k in r) for r in self.regions)

    def show(self, names: Optional[Sequence[str]] = None) -> str:
        if self.is_false:
            return "false"
        if self.is_true:
            return "true"

        def lit(k: int) -> str:
            return f"[{names[k]}]" if names else f"f{k + 1}"

        return " | ".join(" & ".join(lit(k) for k in r) for r in self.regions)


TRUE = FeatureFormula(((),))
FALSE = FeatureFormula(())


def normalize(m: LabeledMatrix) -> LabeledMatrix:
    """Drop rows equal to an earlier row in both values and label."""
    seen: set = set()
    keep = []
    for i, (r, lab) in enumerate(zip(m.values, m.labels)):
        key = (r.tobytes(), lab)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return LabeledMatrix(m.values[keep] if m.n_rows else m.values, [m.labels[i] for i in keep], list(m.header))


def choose(m: LabeledMatrix) -> list[int]:
    """Greedy cover of all (positive, negative) pairs; ties go to the lowest index."""
    pos = m.positives()
    neg = m.negatives()
    if not pos or not neg:
        raise ValueError("choose needs at least one positive and one negative row")
    P = (m.values[pos] == ONE).astype(np.int64)  # (p, k)
    N = (m.values[neg] == ZERO).astype(np.int64)  # (n, k)
    alive = np.ones((len(pos), len(neg)), dtype=np.int64)
    chosen: list[int] = []
    while alive.any():
        counts = np.einsum("pk,nk,pn->k", P, N, alive)
        k = int(np.argmax(counts))
        if counts[k] == 0:
            left = [(pos[i], neg[j]) for i, j in zip(*np.nonzero(alive))]
            raise InsufficientFeatures(
                f"{len(left)} positive/negative row pairs cannot be separated by any feature", left
            )
        alive &= 1 - np.outer(P[:, k], N[:, k])
        chosen.append(k)
    return chosen


def combine(m: LabeledMatrix, K: Sequence[int], max_size: int = MAX_COMBINATION) -> RegionSet:
    """Smallest-first admissible conjunctions of ``K`` until every positive is covered."""
    pos = m.positives()
    neg = m.negatives()
    vals = m.values
    covered: set[int] = set()
    regions: list[Region] = []
    if not pos:
        return RegionSet([])
    limit = min(len(K), max_size)
    for size in range(1, len(K) + 1):
        if size > limit:
            raise ValueError(
                f"region combination would need more than {max_size} features (|K| = {len(K)})"
            )
        for c in itertools.combinations(K, size):
            cols = list(c)
            if neg and not all((vals[n, cols] == ZERO).any() for n in neg):
                continue
            cp = frozenset(p for p in pos if (vals[p, cols] == ONE).all())
            if not (cp - covered):
                continue
            regions = [r for r in regions if not r.covers < cp]
            regions.append(Region(tuple(c), cp))
            covered |= cp
            if covered >= set(pos):
                return RegionSet(regions)
    return RegionSet(regions)


def learn(m: LabeledMatrix) -> tuple[FeatureFormula, list[int], RegionSet]:
    """Learn a DNF separating positive from negative rows.

    Returns (formula, chosen features, regions).  An all-positive matrix
    gives true and an all-negative (or empty) one gives false.
    """
    m = normalize(m)
    pos, neg = m.positives(), m.negatives()
    if not pos:
        return FALSE, [], RegionSet([])
    if not neg:
        return TRUE, [], RegionSet([Region((), frozenset(pos))])
    K = choose(m)
    rs = combine(m, K)
    return FeatureFormula(tuple(r.features for r in rs.regions)), K, rs


def classify(formula: FeatureFormula, m: LabeledMatrix) -> list[str]:
    return [POSITIVE if formula.holds(r) else NEGATIVE for r in m.values]


def report(m: LabeledMatrix, K: Sequence[int], rs: RegionSet, names: Optional[Sequence[str]] = None) -> str:
    """Text report of chosen features and regions (1-based indices)."""
    lines = ["chosen: " + ", ".join(str(k + 1) for k in K)]
    for r in rs.regions:
        idx = "{" + ", ".join(str(k + 1) for k in r.features) + "}"
        cov = ", ".join(str(p + 1) for p in sorted(r.covers))
        lines.append(f"region {idx} covers rows {cov}")
        if names:
            lines.append("  " + " & ".join(names[k] for k in r.features))
    return "\n".join(lines)
