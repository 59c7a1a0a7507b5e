"""Inductive shape predicates evaluated concretely on memory graphs.

Each predicate takes reference arguments and derives its numeric
parameters (a length or a size) from the matched shape.  A match also
reports its footprint: the record nodes it consumes plus the value nodes of
their primitive fields.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

from .memgraph import NULL, MemoryGraph


@dataclass(frozen=True)
class Match:
    values: tuple[int, ...]
    footprint: frozenset[int]


class _NoMatch:
    __slots__ = ()

    def __repr__(self) -> str:
        return "NoMatch"

    def __bool__(self) -> bool:
        return False


NoMatch = _NoMatch()

Evaluator = Callable[[MemoryGraph, Sequence[int]], "Match | _NoMatch"]


class PredicateError(Exception):
    pass


@dataclass(frozen=True)
class PredicateDef:
    """``applies(schema, record)`` says whether a record type can carry the shape."""

    name: str
    ref_params: tuple[str, ...]
    num_params: tuple[str, ...]
    evaluator: Evaluator
    applies: Callable[[dict, str], bool]
    doc: str = ""

    @property
    def arity(self) -> int:
        return len(self.ref_params) + len(self.num_params)

    def measure_name(self, i: int = 0) -> str:
        """Display name of numeric parameter ``i``, e.g. ``len_sll``."""
        prefix = "len" if self.num_params[i] == "n" else self.num_params[i]
        return f"{prefix}_{self.name}"

    def eval(self, graph: MemoryGraph, args: Sequence[int]):
        if len(args) != len(self.ref_params):
            raise PredicateError(f"{self.name} expects {len(self.ref_params)} reference arguments")
        for a in args:
            if a != NULL and not graph.is_record(a):
                raise PredicateError(f"{self.name}: argument node {a} is not a reference")
        return self.evaluator(graph, args)


def _field_type(schema, record: str, name: str) -> Optional[str]:
    for f, t in schema.get(record, ()):
        if f == name:
            return t
    return None


def _self_link(*names: str):
    def applies(schema, record: str) -> bool:
        return all(_field_type(schema, record, n) == record for n in names)

    return applies


def _chain(g: MemoryGraph, head: int, link: str = "next") -> Optional[list[int]]:
    """Nodes from ``head`` along ``link`` up to null, or None on a cycle or a
    node without the link field."""
    nodes: list[int] = []
    seen: set[int] = set()
    node = head
    while node != NULL:
        if node in seen or not g.is_record(node):
            return None
        nxt = g.target(node, link)
        if nxt is None:
            return None
        seen.add(node)
        nodes.append(node)
        node = nxt
    return nodes


def _footprint(g: MemoryGraph, nodes: Sequence[int]) -> frozenset[int]:
    out: set[int] = set()
    for n in nodes:
        out |= g.cell(n)
    return frozenset(out)


def _sll(g: MemoryGraph, args: Sequence[int]):
    chain = _chain(g, args[0])
    if chain is None:
        return NoMatch
    return Match((len(chain),), _footprint(g, chain))


def _dll(g: MemoryGraph, args: Sequence[int]):
    # head.prev is null and every node's successor points back to it
    head = args[0]
    chain = _chain(g, head)
    if chain is None:
        return NoMatch
    prev = NULL
    for n in chain:
        if g.target(n, "prev") != prev:
            return NoMatch
        prev = n
    return Match((len(chain),), _footprint(g, chain))


def _sorted_sll(g: MemoryGraph, args: Sequence[int]):
    chain = _chain(g, args[0])
    if chain is None:
        return NoMatch
    data = []
    for n in chain:
        d = g.target(n, "data")
        if d is None or d not in g.values:
            return NoMatch
        data.append(g.values[d])
    if any(a > b for a, b in zip(data, data[1:])):
        return NoMatch
    return Match((len(chain),), _footprint(g, chain))


def _btree(g: MemoryGraph, args: Sequence[int]):
    # a tree: no node is reached twice, children via left/right
    seen: list[int] = []
    stack = [args[0]]
    visited: set[int] = set()
    while stack:
        n = stack.pop()
        if n == NULL:
            continue
        if n in visited or not g.is_record(n):
            return NoMatch
        left, right = g.target(n, "left"), g.target(n, "right")
        if left is None or right is None:
            return NoMatch
        visited.add(n)
        seen.append(n)
        stack.extend((right, left))
    return Match((len(seen),), _footprint(g, seen))


def _sorted_applies(schema, record: str) -> bool:
    return _field_type(schema, record, "next") == record and _field_type(schema, record, "data") == "int"


BUILTINS = (
    PredicateDef("sll", ("x",), ("n",), _sll, _self_link("next"),
                 "null-terminated acyclic singly-linked list of n nodes"),
    PredicateDef("dll", ("x",), ("n",), _dll, _self_link("next", "prev"),
                 "doubly-linked list: head.prev is null and each prev mirrors next"),
    PredicateDef("sorted_sll", ("x",), ("n",), _sorted_sll, _sorted_applies,
                 "singly-linked list with non-decreasing data"),
    PredicateDef("btree", ("x",), ("n",), _btree, _self_link("left", "right"),
                 "binary tree without sharing; n counts nodes"),
)


class Registry:
    def __init__(self, preds: Sequence[PredicateDef] = ()):
        self._preds: dict[str, PredicateDef] = {}
        for p in preds:
            self.register(p)

    def register(self, pred: PredicateDef) -> None:
        if pred.name in self._preds:
            raise PredicateError(f"predicate {pred.name} is already registered")
        self._preds[pred.name] = pred

    def unregister(self, name: str) -> None:
        self._preds.pop(name, None)

    def get(self, name: str) -> PredicateDef:
        try:
            return self._preds[name]
        except KeyError:
            raise PredicateError(f"unknown predicate {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._preds

    def names(self) -> list[str]:
        return list(self._preds)

    def __iter__(self) -> Iterator[PredicateDef]:
        return iter(self._preds.values())


REGISTRY = Registry(BUILTINS)


def register(pred: PredicateDef) -> None:
    REGISTRY.register(pred)


def lookup(name: str) -> PredicateDef:
    return REGISTRY.get(name)


@contextlib.contextmanager
def registered(pred: PredicateDef):
    """Temporarily register ``pred`` on the default registry."""
    register(pred)
    try:
        yield pred
    finally:
        REGISTRY.unregister(pred.name)


def eval_pred(name: str, graph: MemoryGraph, args: Sequence[int]):
    return lookup(name).eval(graph, args)
