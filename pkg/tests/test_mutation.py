import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import NODE_SCHEMA, state_graph
from slearner.features import build_catalog
from slearner.learner import TRUE, FeatureFormula
from slearner.memgraph import NULL, dump, resolve, wrap_int
from slearner.mutation import (
    FRESH,
    OFFSET,
    REPOINT,
    SET_CONST,
    SWAP_NUM,
    SWAP_REF,
    Mutation,
    MutationError,
    apply,
    plan,
    targets,
)
from slearner.predicates import lookup

REL = [(("x",), "Node"), (("y",), "Node")]
CAT = build_catalog(REL, [], [lookup("sll")], (0,), NODE_SCHEMA)


def test_targets_follow_formula():
    f = FeatureFormula(((0,),))  # x = null
    assert targets(f, CAT, REL, NODE_SCHEMA) == [(("x",), "Node"), (("x", "data"), "int"), (("x", "next"), "Node")]
    assert [p for p, _ in targets(TRUE, CAT, REL, NODE_SCHEMA)] == [
        ("x",), ("y",), ("x", "data"), ("x", "next"), ("y", "data"), ("y", "next")]


def test_plan_and_apply_actions():
    g = state_graph(["x", "y"], (0, 1), (None, None), (4, 0))
    ms = plan(TRUE, CAT, g, REL, NODE_SCHEMA, (0, 2))
    actions = {(m.target, m.action) for m in ms}
    assert (("x",), FRESH) in actions and (("x",), SWAP_REF) in actions
    assert (("x", "data"), SET_CONST) in actions and (("x", "data"), OFFSET) in actions

    fresh = apply(g, Mutation(("x",), FRESH, "Node"))
    n = resolve(fresh, ("x",))
    assert fresh.values[resolve(fresh, ("x", "data"))] == 0 and resolve(fresh, ("x", "next")) == NULL
    assert n not in (resolve(g, ("x",)), resolve(g, ("y",)))

    swapped = apply(g, Mutation(("x",), SWAP_REF, ("y",)))
    assert swapped.values[resolve(swapped, ("x", "data"))] == 0
    assert swapped.values[resolve(swapped, ("y", "data"))] == 4

    nulled = apply(g, Mutation(("x",), REPOINT, None))
    assert resolve(nulled, ("x",)) == NULL

    bumped = apply(g, Mutation(("x", "data"), OFFSET, 1))
    assert bumped.values[resolve(bumped, ("x", "data"))] == 5


def test_offset_wraps():
    from slearner.memgraph import build_graph

    g = build_graph([("n", 2**31 - 1)], {}, NODE_SCHEMA)
    h = apply(g, Mutation(("n",), OFFSET, 1))
    assert h.var_value("n") == wrap_int(2**31) == -(2**31)
    m = build_graph([("n", 1), ("k", 5)], {}, NODE_SCHEMA)
    s = apply(m, Mutation(("n",), SWAP_NUM, ("k",)))
    assert (s.var_value("n"), s.var_value("k")) == (5, 1)


def test_apply_errors():
    g = state_graph(["x"], (None,), (), ())
    with pytest.raises(MutationError):
        apply(g, Mutation(("x", "next"), REPOINT, None))
    g = state_graph(["x"], (0,), (None,), (0,))
    with pytest.raises(MutationError):
        apply(g, Mutation(("x", "data"), REPOINT, resolve(g, ("x",))))


states = st.integers(0, 3).flatmap(
    lambda k: st.tuples(
        st.lists(st.one_of(st.none(), st.integers(0, max(k - 1, 0))) if k else st.none(), min_size=2, max_size=2),
        st.lists(st.one_of(st.none(), st.integers(0, max(k - 1, 0))), min_size=k, max_size=k),
        st.lists(st.integers(-2, 2), min_size=k, max_size=k),
    )
)


@settings(max_examples=200, deadline=None)
@given(states)
def test_apply_never_modifies_input(state):
    vt, nx, ds = state
    g = state_graph(["x", "y"], vt, nx, ds)
    before = dump(g)
    for m in plan(TRUE, CAT, g, REL, NODE_SCHEMA, (0, 3)):
        out = apply(g, m)
        assert dump(g) == before
        assert out is not g
