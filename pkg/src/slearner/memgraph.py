"""Memory graphs: immutable snapshots of a program state.

A graph is the tuple (M, init, E, Ty, L).  Node ``INIT`` carries one edge
per program variable, ``NULL`` has no out-edges, and every primitive value
sits on its own value node so that two equal integers never make their
owners overlap.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .tri import NA, ONE, ZERO

INIT = 0
NULL = 1

INIT_TYPE = "<init>"
NULL_TYPE = "null"
PRIM_TYPES = ("int", "bool")

Path = tuple[str, ...]
Schema = Mapping[str, tuple[tuple[str, str], ...]]

INT_BITS = 32
_MOD = 1 << INT_BITS
_HALF = 1 << (INT_BITS - 1)


def wrap_int(v: int) -> int:
    """Two's-complement wrap-around to the machine integer width."""
    return ((v + _HALF) % _MOD) - _HALF


class Ref:
    """A heap reference held by the interpreter (never null)."""

    __slots__ = ("id",)

    def __init__(self, id: int):
        self.id = id

    def __eq__(self, other) -> bool:
        return isinstance(other, Ref) and other.id == self.id

    def __hash__(self) -> int:
        return hash(("ref", self.id))

    def __repr__(self) -> str:
        return f"Ref({self.id})"


Value = Union[None, bool, int, Ref]


class MemoryGraph:
    """Immutable labelled graph; equality is isomorphism of the reachable part."""

    __slots__ = ("succ", "types", "values", "schema", "_canon", "_hash")

    def __init__(
        self,
        succ: Mapping[int, Mapping[str, int]],
        types: Mapping[int, str],
        values: Mapping[int, Union[int, bool]],
        schema: Schema,
    ):
        self.succ = succ
        self.types = types
        self.values = values
        self.schema = schema
        self._canon = None
        self._hash = None

    # -- basic queries --
    @property
    def nodes(self) -> Iterable[int]:
        return self.types.keys()

    def edges(self) -> Iterator[tuple[int, str, int]]:
        for src in sorted(self.succ):
            for label, dst in sorted(self.succ[src].items()):
                yield src, label, dst

    def var_names(self) -> list[str]:
        return sorted(self.succ.get(INIT, {}))

    def target(self, node: int, label: str) -> Optional[int]:
        out = self.succ.get(node)
        if out is None:
            return None
        return out.get(label)

    def is_record(self, node: int) -> bool:
        return self.types.get(node) in self.schema

    def is_value(self, node: int) -> bool:
        return self.types.get(node) in PRIM_TYPES

    def resolve(self, path: Sequence[str]) -> Optional[int]:
        return resolve(self, path)

    def decode(self, node: int) -> Value:
        """Interpreter value denoted by a node (value nodes give their label)."""
        if node == NULL:
            return None
        if node in self.values:
            return self.values[node]
        return Ref(node)

    def var_value(self, name: str) -> Value:
        node = self.target(INIT, name)
        if node is None:
            raise KeyError(name)
        return self.decode(node)

    def field_order(self, node: int) -> tuple[str, ...]:
        return tuple(f for f, _ in self.schema.get(self.types[node], ()))

    def reach(self, node: int) -> frozenset[int]:
        """Non-null nodes reachable from ``node``, including itself."""
        if node == NULL:
            return frozenset()
        seen = {node}
        stack = [node]
        while stack:
            n = stack.pop()
            for dst in self.succ.get(n, {}).values():
                if dst != NULL and dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return frozenset(seen)

    def cell(self, node: int) -> frozenset[int]:
        """A record node together with the value nodes of its primitive fields."""
        out = {node}
        for dst in self.succ.get(node, {}).values():
            if self.is_value(dst):
                out.add(dst)
        return frozenset(out)

    def heap_of(self, roots: Iterable[str]) -> frozenset[int]:
        """Heap region reachable from the reference-valued variables ``roots``."""
        region: set[int] = set()
        for name in roots:
            node = self.target(INIT, name)
            if node is None or node == NULL or self.is_value(node):
                continue
            region |= self.reach(node)
        return frozenset(region)

    # -- canonical form --
    def canonical(self) -> tuple:
        if self._canon is None:
            self._canon = canonical_form(self)
        return self._canon

    def __eq__(self, other) -> bool:
        return isinstance(other, MemoryGraph) and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.canonical())
        return self._hash

    def __repr__(self) -> str:
        return "MemoryGraph(" + "; ".join(self.dump().splitlines()) + ")"

    def dump(self) -> str:
        return dump(self)

    # -- functional updates (used by mutation) --
    def with_edge(self, src: int, label: str, dst: int) -> "MemoryGraph":
        succ = {n: dict(out) for n, out in self.succ.items()}
        succ.setdefault(src, {})[label] = dst
        return MemoryGraph(succ, self.types, self.values, self.schema)

    def with_value(self, node: int, value: Union[int, bool]) -> "MemoryGraph":
        values = dict(self.values)
        values[node] = value
        return MemoryGraph(self.succ, self.types, values, self.schema)

    def fresh_id(self) -> int:
        return max(self.types) + 1

    def with_record(self, record: str) -> tuple["MemoryGraph", int]:
        """Add an unreachable record node with default field values."""
        succ = {n: dict(out) for n, out in self.succ.items()}
        types = dict(self.types)
        values = dict(self.values)
        node = max(types) + 1
        types[node] = record
        out: dict[str, int] = {}
        nxt = node + 1
        for fname, ftype in self.schema[record]:
            if ftype in PRIM_TYPES:
                types[nxt] = ftype
                values[nxt] = False if ftype == "bool" else 0
                out[fname] = nxt
                nxt += 1
            else:
                out[fname] = NULL
        succ[node] = out
        return MemoryGraph(succ, types, values, self.schema), node


def canonical_form(g: MemoryGraph) -> tuple:
    """Encoding of the reachable part, numbering nodes in BFS order from init
    with edge labels visited in sorted order."""
    index = {INIT: 0, NULL: -1}
    order = [INIT]
    q = deque([INIT])
    while q:
        n = q.popleft()
        for label in sorted(g.succ.get(n, {})):
            dst = g.succ[n][label]
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
                q.append(dst)
    enc = []
    for n in order:
        out = g.succ.get(n, {})
        enc.append((
            g.types[n],
            g.values.get(n),
            tuple((label, index[out[label]]) for label in sorted(out)),
        ))
    return tuple(enc)


def dump(g: MemoryGraph) -> str:
    """Debug text: edges, then types, then values, in canonical order."""
    index = {INIT: 0, NULL: -1}
    order = [INIT]
    q = deque([INIT])
    while q:
        n = q.popleft()
        for label in sorted(g.succ.get(n, {})):
            dst = g.succ[n][label]
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
                q.append(dst)
    # unreachable nodes keep a stable position after the reachable ones
    for n in sorted(g.types):
        if n not in index:
            index[n] = len(order)
            order.append(n)

    def name(n: int) -> str:
        if n == INIT:
            return "init"
        if n == NULL:
            return "null"
        return f"n{index[n]}"

    lines = []
    for n in order:
        for label in sorted(g.succ.get(n, {})):
            lines.append(f"{name(n)} -{label}-> {name(g.succ[n][label])}")
    for n in order:
        if n not in (INIT, NULL):
            lines.append(f"type({name(n)})={g.types[n]}")
    for n in order:
        if n in g.values:
            v = g.values[n]
            lines.append(f"val({name(n)})={str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines)


# -- queries used by feature extraction -------------------------------------


def resolve(g: MemoryGraph, path: Sequence[str]) -> Optional[int]:
    """Follow ``path`` from init; None when a step is missing or leaves null."""
    node = INIT
    for label in path:
        if node == NULL:
            return None
        out = g.succ.get(node)
        if out is None or label not in out:
            return None
        node = out[label]
    return node


def variables_within_bound(g: MemoryGraph, k: int) -> list[Path]:
    """All resolvable rooted paths with at most ``k`` labels, breadth-first."""
    if k < 1:
        raise ValueError("dereference bound must be at least 1")
    level: list[tuple[Path, int]] = [((v,), g.succ[INIT][v]) for v in g.var_names()]
    out: list[Path] = [p for p, _ in level]
    for _ in range(k - 1):
        nxt = []
        for path, node in level:
            if node == NULL:
                continue
            for label in sorted(g.succ.get(node, {})):
                nxt.append((path + (label,), g.succ[node][label]))
        out.extend(p for p, _ in nxt)
        level = nxt
    return out


def separated(g: MemoryGraph, a: Sequence[str], b: Sequence[str]) -> int:
    na = resolve(g, a)
    nb = resolve(g, b)
    if na is None or nb is None:
        return NA
    return ONE if g.reach(na).isdisjoint(g.reach(nb)) else ZERO


# -- construction ------------------------------------------------------------


def build_graph(
    bindings: Iterable[tuple[str, Value]],
    heap: Mapping[int, tuple[str, Mapping[str, Value]]],
    schema: Schema,
    keep_unreachable: bool = False,
) -> MemoryGraph:
    """Snapshot an environment plus heap as a memory graph.

    ``heap`` maps reference ids to ``(record type, field values)``.  Only
    objects reachable from the bindings are included unless
    ``keep_unreachable`` is set.
    """
    succ: dict[int, dict[str, int]] = {INIT: {}}
    types: dict[int, str] = {INIT: INIT_TYPE, NULL: NULL_TYPE}
    values: dict[int, Union[int, bool]] = {}
    ids: dict[int, int] = {}
    counter = [NULL + 1]
    pending: deque[int] = deque()

    def node_for(v: Value) -> int:
        if v is None:
            return NULL
        if isinstance(v, Ref):
            if v.id not in ids:
                ids[v.id] = counter[0]
                counter[0] += 1
                types[ids[v.id]] = heap[v.id][0]
                pending.append(v.id)
            return ids[v.id]
        n = counter[0]
        counter[0] += 1
        types[n] = "bool" if isinstance(v, bool) else "int"
        values[n] = v
        return n

    for name, v in sorted(bindings, key=lambda kv: kv[0]):
        succ[INIT][name] = node_for(v)
    if keep_unreachable:
        for hid in sorted(heap):
            node_for(Ref(hid))

    def drain():
        while pending:
            hid = pending.popleft()
            rtype, fields = heap[hid]
            out = {}
            for fname, _ in schema[rtype]:
                out[fname] = node_for(fields[fname])
            succ[ids[hid]] = out

    drain()
    return MemoryGraph(succ, types, values, schema)


def graph_state(g: MemoryGraph) -> tuple[dict[str, Value], dict[int, tuple[str, dict[str, Value]]]]:
    """Inverse of build_graph: (environment, heap) keyed by graph node ids."""
    heap = {}
    for n, t in g.types.items():
        if t in g.schema:
            heap[n] = (t, {f: g.decode(d) for f, d in g.succ.get(n, {}).items()})
    env = {name: g.decode(dst) for name, dst in g.succ.get(INIT, {}).items()}
    return env, heap


# -- exhaustive enumeration --------------------------------------------------


def enumerate_graphs(
    schema: Schema,
    variables: Sequence[tuple[str, str]],
    max_nodes: int,
    value_domain: Sequence[int] = (0,),
    num_domain: Optional[Sequence[int]] = None,
    bool_domain: Sequence[bool] = (False, True),
) -> Iterator[MemoryGraph]:
    """Every graph with at most ``max_nodes`` reachable record nodes, once per
    isomorphism class.

    Slots are filled in canonical order (variables by name, then the fields
    of each node, by name, in discovery order), and a fresh node always gets
    the next number, so each emitted graph is already in canonical form and
    no two outputs are isomorphic.  ``num_domain`` ranges over primitive
    variables, ``value_domain`` over primitive record fields.
    """
    if max_nodes < 0:
        raise ValueError("max_nodes must be non-negative")
    vars_sorted = sorted(variables)
    num_domain = tuple(value_domain if num_domain is None else num_domain)
    value_domain = tuple(value_domain)
    sorted_fields = {r: tuple(sorted(fs)) for r, fs in schema.items()}

    node_types: list[str] = []
    node_vals: list[dict[str, object]] = []
    var_vals: dict[str, object] = {}
    NEW_NULL = None

    def slot(pos: int):
        if pos < len(vars_sorted):
            name, t = vars_sorted[pos]
            return ("var", name, t, None)
        pos -= len(vars_sorted)
        for i, t in enumerate(node_types):
            fs = sorted_fields[t]
            if pos < len(fs):
                return ("field", fs[pos][0], fs[pos][1], i)
            pos -= len(fs)
        return None

    def choices(t: str, is_var: bool):
        if t == "int":
            for v in (num_domain if is_var else value_domain):
                yield ("prim", v)
        elif t == "bool":
            for v in bool_domain:
                yield ("prim", v)
        else:
            yield ("ref", NEW_NULL)
            for i, nt in enumerate(node_types):
                if nt == t:
                    yield ("ref", i)
            if len(node_types) < max_nodes:
                yield ("new", t)

    def build() -> MemoryGraph:
        succ: dict[int, dict[str, int]] = {INIT: {}}
        types: dict[int, str] = {INIT: INIT_TYPE, NULL: NULL_TYPE}
        values: dict[int, Union[int, bool]] = {}
        base = NULL + 1
        for i, t in enumerate(node_types):
            types[base + i] = t
        nxt = base + len(node_types)

        def encode(kind_val) -> int:
            nonlocal nxt
            kind, v = kind_val
            if kind == "prim":
                types[nxt] = "bool" if isinstance(v, bool) else "int"
                values[nxt] = v
                nxt += 1
                return nxt - 1
            return NULL if v is None else base + v

        for name, _ in vars_sorted:
            succ[INIT][name] = encode(var_vals[name])
        for i in range(len(node_types)):
            succ[base + i] = {f: encode(node_vals[i][f]) for f, _ in schema[node_types[i]]}
        return MemoryGraph(succ, types, values, schema)

    def rec(pos: int) -> Iterator[MemoryGraph]:
        s = slot(pos)
        if s is None:
            yield build()
            return
        kind, name, t, owner = s
        for choice in choices(t, kind == "var"):
            created = False
            if choice[0] == "new":
                node_types.append(t)
                node_vals.append({})
                choice = ("ref", len(node_types) - 1)
                created = True
            if kind == "var":
                var_vals[name] = choice
            else:
                node_vals[owner][name] = choice
            yield from rec(pos + 1)
            if created:
                node_types.pop()
                node_vals.pop()

    yield from rec(0)
