import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import NODE_SCHEMA, list_states, state_graph
from slearner.memgraph import (
    INIT,
    NULL,
    Ref,
    build_graph,
    dump,
    enumerate_graphs,
    graph_state,
    resolve,
    variables_within_bound,
    wrap_int,
)


def count(variables, max_nodes, data=(0,)):
    return sum(1 for _ in enumerate_graphs(NODE_SCHEMA, variables, max_nodes, value_domain=data))


X = [("x", "Node")]
XY = [("x", "Node"), ("y", "Node")]


def test_zero_nodes_single_graph():
    gs = list(enumerate_graphs(NODE_SCHEMA, X, 0))
    assert len(gs) == 1
    assert gs[0].target(INIT, "x") == NULL


def test_one_node_three_graphs():
    assert count(X, 1) == 3


# counts frozen from tests/oracles.list_states (permutation-minimal keys)
@pytest.mark.parametrize(
    "variables,max_nodes,data,expected",
    [
        (X, 0, (0,), 1),
        (X, 1, (0,), 3),
        (X, 2, (0,), 6),
        (X, 3, (0,), 10),
        (X, 2, (0, 1), 17),
        (XY, 2, (0,), 25),
    ],
)
def test_enumeration_counts_frozen(variables, max_nodes, data, expected):
    assert count(variables, max_nodes, data) == expected


@pytest.mark.parametrize("n_vars,max_nodes,data", [(1, 3, (0,)), (2, 3, (0,)), (1, 2, (0, 1)), (2, 2, (0, 1))])
def test_enumeration_matches_oracle(n_vars, max_nodes, data):
    names = ["x", "y"][:n_vars]
    variables = [(n, "Node") for n in names]
    expected = {state_graph(names, *s) for s in list_states(n_vars, max_nodes, data)}
    got = list(enumerate_graphs(NODE_SCHEMA, variables, max_nodes, value_domain=data))
    assert len(got) == len(set(got)), "enumeration emitted isomorphic duplicates"
    assert set(got) == expected


def test_enumeration_deterministic():
    a = [dump(g) for g in enumerate_graphs(NODE_SCHEMA, XY, 3)]
    b = [dump(g) for g in enumerate_graphs(NODE_SCHEMA, XY, 3)]
    assert a == b


def test_enumeration_numeric_variables():
    gs = list(enumerate_graphs(NODE_SCHEMA, [("n", "int")], 3, num_domain=(-1, 0, 1)))
    assert sorted(g.var_value("n") for g in gs) == [-1, 0, 1]


def test_negative_bound_rejected():
    with pytest.raises(ValueError):
        list(enumerate_graphs(NODE_SCHEMA, X, -1))


states = st.integers(min_value=0, max_value=4).flatmap(
    lambda k: st.tuples(
        st.lists(st.one_of(st.none(), st.integers(0, max(k - 1, 0))) if k else st.none(), min_size=2, max_size=2),
        st.lists(st.one_of(st.none(), st.integers(0, max(k - 1, 0))), min_size=k, max_size=k),
        st.lists(st.integers(-2, 2), min_size=k, max_size=k),
        st.randoms(use_true_random=False),
    )
)


@settings(max_examples=300, deadline=None)
@given(states)
def test_canonical_form_ignores_node_numbering(state):
    vt, nx, ds, rnd = state
    k = len(nx)
    perm = list(range(k))
    rnd.shuffle(perm)
    base = 100 + rnd.randrange(50)

    def graph(ids):
        heap = {ids[i]: ("Node", {"data": ds[i], "next": None if nx[i] is None else Ref(ids[nx[i]])})
                for i in range(k)}
        return build_graph([("x", None if vt[0] is None else Ref(ids[vt[0]])),
                            ("y", None if vt[1] is None else Ref(ids[vt[1]]))], heap, NODE_SCHEMA)

    g1 = graph(list(range(10, 10 + k)))
    g2 = graph([base + p for p in perm])
    assert g1 == g2
    assert hash(g1) == hash(g2)
    assert dump(g1) == dump(g2)


def test_canonical_form_distinguishes_shapes():
    chain = state_graph(["x"], (0,), (1, None), (0, 0))
    lasso = state_graph(["x"], (0,), (1, 1), (0, 0))
    assert chain != lasso


def test_resolve_and_undefined_paths():
    g = state_graph(["x"], (0,), (None,), (7,))
    assert resolve(g, ("x",)) not in (None, NULL)
    assert resolve(g, ("x", "next")) == NULL
    assert resolve(g, ("x", "next", "next")) is None
    assert resolve(g, ("x", "next", "next", "data")) is None
    assert g.decode(resolve(g, ("x", "data"))) == 7


def test_small_graph_paths():
    # x -> [1] -> null, y -> null, plus an int n = 1
    g = build_graph([("x", Ref(5)), ("y", None), ("n", 1)], {5: ("Node", {"data": 1, "next": None})},
                    NODE_SCHEMA)
    assert variables_within_bound(g, 1) == [("n",), ("x",), ("y",)]
    assert variables_within_bound(g, 2) == [("n",), ("x",), ("y",), ("x", "data"), ("x", "next")]
    with pytest.raises(ValueError):
        variables_within_bound(g, 0)
    # equal integers sit on separate value nodes
    assert resolve(g, ("n",)) != resolve(g, ("x", "data"))


def test_dump_format():
    g = build_graph([("x", Ref(3))], {3: ("Node", {"data": 4, "next": Ref(3)})}, NODE_SCHEMA)
    assert dump(g).splitlines() == [
        "init -x-> n1",
        "n1 -data-> n2",
        "n1 -next-> n1",
        "type(n1)=Node",
        "type(n2)=int",
        "val(n2)=4",
    ]


def test_graph_state_round_trip():
    rnd = random.Random(3)
    for _ in range(50):
        k = rnd.randrange(4)
        nx = [rnd.choice([None] + list(range(k))) for _ in range(k)]
        vt = (rnd.choice([None] + list(range(k))) if k else None,)
        g = state_graph(["x"], vt, nx, [rnd.randrange(3) for _ in range(k)])
        env, heap = graph_state(g)
        assert build_graph(env.items(), heap, NODE_SCHEMA) == g


def test_with_edge_is_persistent():
    g = state_graph(["x"], (0,), (None,), (0,))
    n = resolve(g, ("x",))
    g2 = g.with_edge(n, "next", n)
    assert resolve(g, ("x", "next")) == NULL
    assert resolve(g2, ("x", "next")) == n


def test_wrap_int():
    assert wrap_int(2**31) == -(2**31)
    assert wrap_int(-(2**31) - 1) == 2**31 - 1
    assert wrap_int(5) == 5
