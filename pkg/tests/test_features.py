import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import NODE_SCHEMA, state_graph
from slearner.features import (
    NEGATIVE,
    POSITIVE,
    LabeledMatrix,
    build_catalog,
    evaluate,
    evaluate_many,
    vector_str,
)
from slearner.heaplang.transform import loops_to_tailrec
from slearner.memgraph import Ref, build_graph
from slearner.predicates import lookup
from slearner.tri import NA, ONE, ZERO
from slearner.verifier.learning import point_catalog, snapshots_at
from slearner.verifier.points import layout, snapshot_keys
from slearner.verifier.testgen import TestCase, execute

SLL = [lookup("sll")]
XY = [(("x",), "Node"), (("y",), "Node")]


@pytest.fixture(scope="module")
def fig1_point2(fig1):
    prog = loops_to_tailrec(fig1)
    lay = layout(prog, 1)
    p2 = next(p for p in lay.points if p.id == "p2")
    return prog, lay, p2, point_catalog(prog, p2)


def run_inputs(prog, lay, point, catalog, inputs):
    res = execute(prog, [TestCase(tuple(i), None, k) for k, i in enumerate(inputs)], snapshot_keys(lay), 100_000)
    out = []
    for r in res:
        (g, lab), = snapshots_at(point, [r])
        out.append((evaluate(catalog, g), lab))
    return out


def test_catalog_matches_golden_listing(fig1_point2, golden):
    _, _, _, cat = fig1_point2
    assert (cat.listing() + "\n").encode() == (golden / "p2_catalog.txt").read_bytes()


def test_two_test_vectors(fig1_point2):
    prog, lay, p2, cat = fig1_point2
    names = cat.displays()
    col = names.index
    (neg, lab_neg), (pos, lab_pos) = run_inputs(prog, lay, p2, cat, [(1, 0), (0, 1)])
    assert (lab_neg, lab_pos) == (NEGATIVE, POSITIVE)
    # len_sll(x) <= len_sll(y) is the negation of len_sll(x) - len_sll(y) > 0
    le = col("len_sll(x) - len_sll(y) > 0")
    for v, expect_le in ((neg, False), (pos, True)):
        assert v[col("is_sll(x)")] == ONE
        assert v[col("is_sll(y)")] == ONE
        assert v[col("is_sll(x) & is_sll(y) & sep(x,y)")] == ONE
        assert (v[le] == ZERO) == expect_le
        assert v[le] != NA


def test_vectors_match_matrix_rows(fig1_point2, golden):
    prog, lay, p2, cat = fig1_point2
    table = LabeledMatrix.from_csv((golden / "p2_matrix_full.csv").read_text())
    got = run_inputs(prog, lay, p2, cat, [(0, 1), (1, 0)])
    assert list(got[0][0]) == list(table.values[0]) and got[0][1] == table.labels[0]
    assert list(got[1][0]) == list(table.values[3]) and got[1][1] == table.labels[3]


def test_null_aliasing_counts_as_equal():
    cat = build_catalog(XY, [], SLL, (0,), NODE_SCHEMA)
    g = state_graph(["x", "y"], (None, None), (), ())
    v = dict(zip(cat.displays(), evaluate(cat, g)))
    assert v["x = y"] == ONE and v["x != y"] == ZERO
    assert v["is_sll(x) & is_sll(y) & sep(x,y)"] == ONE
    assert v["x |-> Node(_,_) & y |-> Node(_,_) & sep(x,y)"] == ZERO


def test_shared_cells_are_not_separated():
    cat = build_catalog(XY, [], SLL, (0,), NODE_SCHEMA)
    # x -> a -> b, y -> b
    g = state_graph(["x", "y"], (0, 1), (1, None), (0, 0))
    v = dict(zip(cat.displays(), evaluate(cat, g)))
    assert v["is_sll(x) & is_sll(y) & sep(x,y)"] == ZERO
    assert v["x |-> Node(_,_) & y |-> Node(_,_) & sep(x,y)"] == ONE
    assert v["len_sll(x) - len_sll(y) > 0"] == ONE


def test_cycle_fails_shape_and_hides_length():
    cat = build_catalog(XY, [], SLL, (0,), NODE_SCHEMA)
    g = state_graph(["x", "y"], (0, None), (0,), (0,))
    v = dict(zip(cat.displays(), evaluate(cat, g)))
    assert v["is_sll(x)"] == ZERO
    assert v["len_sll(x) > 0"] == NA
    assert v["len_sll(y) = 0"] == ONE


def test_unresolvable_path_is_n():
    paths = [(("x",), "Node"), (("x", "next"), "Node")]
    cat = build_catalog(paths, [("x", "data")], SLL, (0,), NODE_SCHEMA)
    g = state_graph(["x"], (None,), (), ())
    v = dict(zip(cat.displays(), evaluate(cat, g)))
    assert v["x = null"] == ONE
    assert v["x.next = null"] == NA
    assert v["x.data > 0"] == NA
    g = build_graph([("x", Ref(1))], {1: ("Node", {"data": 3, "next": None})}, NODE_SCHEMA)
    v = dict(zip(cat.displays(), evaluate(cat, g)))
    assert v["x.next = null"] == ONE
    assert v["x.data > 0"] == ONE


def test_constants_extend_numeric_atoms():
    cat = build_catalog([(("x",), "Node")], [("n",)], SLL, (0, 2), NODE_SCHEMA)
    names = cat.displays()
    assert "n > 2" in names and "len_sll(x) - n = 2" in names
    assert names.index("n > 0") < names.index("n > 2")


def test_evaluate_many_agrees():
    cat = build_catalog(XY, [], SLL, (0,), NODE_SCHEMA)
    gs = [state_graph(["x", "y"], (0, 1), (1, None), (0, 0)), state_graph(["x", "y"], (None, 0), (None,), (0,))]
    many = evaluate_many(cat, gs)
    for g, row in zip(gs, many):
        assert list(evaluate(cat, g)) == list(row)


def test_vector_str():
    assert vector_str([1, 0, -1]) == "1 0 N"


matrices = st.integers(1, 8).flatmap(
    lambda k: st.tuples(
        st.lists(st.lists(st.sampled_from([ZERO, ONE, NA]), min_size=k, max_size=k), max_size=6),
        st.just(k),
    )
)


@settings(max_examples=200, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_csv_round_trip(data, rnd):
    rows, k = data
    labels = [rnd.choice([POSITIVE, NEGATIVE]) for _ in rows]
    m = LabeledMatrix(np.array(rows, dtype=np.int8), labels, [f"f{i}" for i in range(k)])
    back = LabeledMatrix.from_csv(m.to_csv())
    assert back.header == m.header
    assert back.labels == m.labels
    assert back.values.tolist() == m.values.tolist()


def test_matrix_append_dedupes():
    m = LabeledMatrix.empty(["a", "b"])
    assert m.append([1, 0], POSITIVE)
    assert not m.append([1, 0], POSITIVE)
    assert m.append([1, 0], NEGATIVE)
    assert m.n_rows == 2


def test_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        LabeledMatrix(np.zeros((1, 2), dtype=np.int8), ["maybe"], ["a", "b"])
    with pytest.raises(ValueError):
        LabeledMatrix.from_csv("a,b,label\n1,positive\n")
