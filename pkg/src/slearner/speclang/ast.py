"""Assertion language AST.

A formula is a disjunction of symbolic heaps.  Each symbolic heap has
existential variables, a spatial part and a pure part.  The spatial part is
a flat tuple of atoms joined by separating conjunction; ``()`` is ``emp``
and ``None`` means "any heap", which is what pure-only formulas and
``true`` denote.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

WILDCARD = "_"
NULL_ARG = "null"

Arg = Union[str, int]  # variable name, "_", "null" or an integer literal


@dataclass(frozen=True)
class PointsTo:
    root: str
    record: str
    args: tuple[Arg, ...]

    def vars(self) -> set[str]:
        return {self.root} | {a for a in self.args if _is_var(a)}


@dataclass(frozen=True)
class PredApp:
    name: str
    args: tuple[Arg, ...]

    def vars(self) -> set[str]:
        return {a for a in self.args if _is_var(a)}

    @property
    def root(self) -> Arg:
        return self.args[0]


SpatialAtom = Union[PointsTo, PredApp]


@dataclass(frozen=True)
class Lin:
    """Integer linear expression: sum of coefficient * variable plus a constant.

    ``coeffs`` is sorted by variable name and never holds zero coefficients.
    """

    coeffs: tuple[tuple[str, int], ...]
    const: int = 0

    @staticmethod
    def make(terms: dict[str, int], const: int = 0) -> "Lin":
        return Lin(tuple(sorted((v, c) for v, c in terms.items() if c != 0)), const)

    def __neg__(self) -> "Lin":
        return Lin(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __add__(self, other: "Lin") -> "Lin":
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return Lin.make(d, self.const + other.const)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + (-other)

    def vars(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def rename(self, m: dict[str, str]) -> "Lin":
        d: dict[str, int] = {}
        for v, c in self.coeffs:
            w = m.get(v, v)
            d[w] = d.get(w, 0) + c
        return Lin.make(d, self.const)

    def value(self, env: dict[str, int]) -> int:
        return sum(c * env[v] for v, c in self.coeffs) + self.const


ARITH_OPS = ("=", "!=", "<", "<=")


@dataclass(frozen=True)
class ArithAtom:
    """``lin op 0``.  Equalities are normalized so the first coefficient is positive."""

    lin: Lin
    op: str

    @staticmethod
    def make(lin: Lin, op: str) -> "ArithAtom":
        if op == ">":
            return ArithAtom(-lin, "<")
        if op == ">=":
            return ArithAtom(-lin, "<=")
        if op not in ARITH_OPS:
            raise ValueError(f"unknown comparison {op}")
        if op in ("=", "!="):
            if lin.coeffs and lin.coeffs[0][1] < 0:
                lin = -lin
            elif not lin.coeffs and lin.const < 0:
                lin = -lin
        return ArithAtom(lin, op)

    def vars(self) -> set[str]:
        return self.lin.vars()

    def holds(self, env: dict[str, int]) -> bool:
        v = self.lin.value(env)
        if self.op == "=":
            return v == 0
        if self.op == "!=":
            return v != 0
        if self.op == "<":
            return v < 0
        return v <= 0


@dataclass(frozen=True)
class IsNullAtom:
    """``var = null`` when positive, ``var != null`` otherwise."""

    var: str
    positive: bool = True

    def vars(self) -> set[str]:
        return {self.var}


PureAtom = Union[ArithAtom, IsNullAtom]


@dataclass(frozen=True)
class SymHeap:
    exists: tuple[str, ...] = ()
    spatial: Optional[tuple[SpatialAtom, ...]] = None
    pure: tuple[PureAtom, ...] = ()

    def vars(self) -> set[str]:
        out: set[str] = set()
        for a in self.spatial or ():
            out |= a.vars()
        for p in self.pure:
            out |= p.vars()
        return out

    def free_vars(self) -> set[str]:
        return self.vars() - set(self.exists)


@dataclass(frozen=True)
class Formula:
    disjuncts: tuple[SymHeap, ...]

    @property
    def is_false(self) -> bool:
        return not self.disjuncts

    @property
    def is_true(self) -> bool:
        return any(d.spatial is None and not d.pure for d in self.disjuncts)

    def free_vars(self) -> set[str]:
        out: set[str] = set()
        for d in self.disjuncts:
            out |= d.free_vars()
        return out

    def __str__(self) -> str:
        from .printer import print_formula

        return print_formula(self)


TRUE = Formula((SymHeap(),))
FALSE = Formula(())


def _is_var(a: Arg) -> bool:
    return isinstance(a, str) and a not in (WILDCARD, NULL_ARG)


def is_var_arg(a: Arg) -> bool:
    return _is_var(a)
