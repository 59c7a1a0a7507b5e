"""Concrete satisfaction of formulas by memory graphs.

Satisfaction is precise: the heap reachable from the formula's free
reference variables must be exactly the disjoint union of the spatial
footprints.  Footprints are fixed by the predicate evaluators, so no
partition search is needed; existentials are bound by matching spatial
atoms and only the remaining numeric ones are searched over ``num_bound``.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional, Sequence

from ..memgraph import INIT, NULL, MemoryGraph, enumerate_graphs
from ..predicates import REGISTRY, Registry
from .ast import (
    NULL_ARG,
    WILDCARD,
    Formula,
    IsNullAtom,
    PointsTo,
    SymHeap,
)

DEFAULT_NUM_BOUND = (-8, 8)


class _Cell:
    """A bound variable: a graph node (references) or an integer."""

    __slots__ = ("node", "num")

    def __init__(self, node: Optional[int] = None, num: Optional[int] = None):
        self.node = node
        self.num = num


def ref_roots(graph: MemoryGraph, names: Iterable[str]) -> list[str]:
    """Names bound in ``graph`` to reference (non-value) nodes, sorted."""
    out = []
    for v in sorted(names):
        node = graph.target(INIT, v)
        if node is not None and not graph.is_value(node):
            out.append(v)
    return out


def _initial_env(graph: MemoryGraph, names: Iterable[str]) -> Optional[dict[str, tuple[str, int]]]:
    env: dict[str, tuple[str, int]] = {}
    for v in names:
        node = graph.target(INIT, v)
        if node is None:
            return None
        if graph.is_value(node):
            val = graph.values[node]
            env[v] = ("num", int(val))
        else:
            env[v] = ("ref", node)
    return env


def _match_arg(env: dict, arg, kind: str, value: int) -> bool:
    """Unify an atom argument with a concrete ref node or number."""
    if arg == WILDCARD:
        return True
    if arg == NULL_ARG:
        return kind == "ref" and value == NULL
    if isinstance(arg, int):
        return kind == "num" and value == arg
    cur = env.get(arg)
    if cur is None:
        env[arg] = (kind, value)
        return True
    return cur == (kind, value)


def _root_node(env: dict, arg) -> Optional[int]:
    if arg == NULL_ARG:
        return NULL
    if isinstance(arg, str) and arg in env and env[arg][0] == "ref":
        return env[arg][1]
    return None


def _spatial_footprints(
    graph: MemoryGraph, atoms: Sequence, env: dict, registry: Registry
) -> Optional[list[frozenset[int]]]:
    """Match every spatial atom, binding existentials; None when some atom fails."""
    pending = list(atoms)
    prints: list[frozenset[int]] = []
    while pending:
        progressed = False
        for atom in list(pending):
            root_arg = atom.root
            if isinstance(root_arg, str) and root_arg not in env and root_arg != NULL_ARG:
                continue
            node = _root_node(env, root_arg)
            if node is None:
                return None
            pending.remove(atom)
            progressed = True
            if isinstance(atom, PointsTo):
                if node == NULL or graph.types.get(node) != atom.record:
                    return None
                fields = graph.field_order(node)
                if len(fields) != len(atom.args):
                    return None
                for fname, arg in zip(fields, atom.args):
                    dst = graph.target(node, fname)
                    if graph.is_value(dst):
                        ok = _match_arg(env, arg, "num", int(graph.values[dst]))
                    else:
                        ok = _match_arg(env, arg, "ref", dst)
                    if not ok:
                        return None
                prints.append(graph.cell(node))
            else:
                pred = registry.get(atom.name)
                nref = len(pred.ref_params)
                nodes = []
                for a in atom.args[:nref]:
                    n = _root_node(env, a)
                    if n is None or (n != NULL and not graph.is_record(n)):
                        return None
                    nodes.append(n)
                m = pred.evaluator(graph, nodes)
                if not m:
                    return None
                for a, val in zip(atom.args[nref:], m.values):
                    if not _match_arg(env, a, "num", val):
                        return None
                prints.append(m.footprint)
        if not progressed:
            return None
    return prints


def _pure_holds(atoms: Sequence, env: dict) -> bool:
    vals = {}
    for name, (kind, v) in env.items():
        vals[name] = v
    for a in atoms:
        if isinstance(a, IsNullAtom):
            cur = env.get(a.var)
            if cur is None or cur[0] != "ref":
                return False
            if (cur[1] == NULL) != a.positive:
                return False
        else:
            if any(v not in vals for v in a.vars()):
                return False
            if not a.holds(vals):
                return False
    return True


def models_symheap(
    graph: MemoryGraph,
    h: SymHeap,
    heap: frozenset[int],
    num_bound: tuple[int, int] = DEFAULT_NUM_BOUND,
    registry: Registry = REGISTRY,
) -> bool:
    free = h.free_vars()
    env = _initial_env(graph, free)
    if env is None:
        return False
    if h.spatial is not None:
        prints = _spatial_footprints(graph, h.spatial, env, registry)
        if prints is None:
            return False
        union: set[int] = set()
        total = 0
        for p in prints:
            union |= p
            total += len(p)
        if total != len(union) or frozenset(union) != heap:
            return False
    unbound = [v for v in h.exists if v not in env and any(v in a.vars() for a in h.pure)]
    if not unbound:
        return _pure_holds(h.pure, env)
    lo, hi = num_bound
    for combo in itertools.product(range(lo, hi + 1), repeat=len(unbound)):
        trial = dict(env)
        for v, k in zip(unbound, combo):
            trial[v] = ("num", k)
        if _pure_holds(h.pure, trial):
            return True
    return False


def formula_heap(graph: MemoryGraph, f: Formula) -> frozenset[int]:
    return graph.heap_of(ref_roots(graph, f.free_vars()))


def models(
    graph: MemoryGraph,
    f: Formula,
    num_bound: tuple[int, int] = DEFAULT_NUM_BOUND,
    registry: Registry = REGISTRY,
) -> bool:
    """Does ``graph`` satisfy some disjunct of ``f``?"""
    if not f.disjuncts:
        return False
    heap = formula_heap(graph, f)
    return any(models_symheap(graph, d, heap, num_bound, registry) for d in f.disjuncts)


class _Unsat:
    __slots__ = ()

    def __repr__(self) -> str:
        return "Unsat"

    def __bool__(self) -> bool:
        return False


Unsat = _Unsat()


def sat_bounded(
    f: Formula,
    schema,
    variables: Sequence[tuple[str, str]],
    max_nodes: int = 3,
    num_bound: tuple[int, int] = (-3, 3),
    value_domain: Sequence[int] = (0,),
    registry: Registry = REGISTRY,
):
    """First enumerated graph over ``variables`` that models ``f``, or Unsat.

    Unsat is a bounded verdict: no model exists within the bounds.
    """
    if f.is_false:
        return Unsat
    nums = tuple(range(num_bound[0], num_bound[1] + 1))
    for g in enumerate_graphs(schema, variables, max_nodes, value_domain=value_domain, num_domain=nums):
        if models(g, f, num_bound, registry):
            return g
    return Unsat


def distinguish_bounded(
    f: Formula,
    g: Formula,
    schema,
    variables: Sequence[tuple[str, str]],
    max_nodes: int = 4,
    num_bound: tuple[int, int] = (-4, 4),
    value_domain: Sequence[int] = (0,),
    registry: Registry = REGISTRY,
) -> Optional[MemoryGraph]:
    """First enumerated graph on which ``f`` and ``g`` disagree, or None when
    they are equivalent within the bounds."""
    nums = tuple(range(num_bound[0], num_bound[1] + 1))
    for m in enumerate_graphs(schema, variables, max_nodes, value_domain=value_domain, num_domain=nums):
        if models(m, f, num_bound, registry) != models(m, g, num_bound, registry):
            return m
    return None
