import pytest

from conftest import CORPUS_NAMES, corpus_program
from slearner.config import Config
from slearner.heaplang import parse
from slearner.heaplang.transform import loops_to_tailrec
from slearner.speclang.parser import parse_formula
from slearner.speclang.printer import print_formula
from slearner.verifier.learning import learn_point, point_predicates, snapshots_at
from slearner.verifier.obligations import (
    COUNTEREXAMPLE,
    PASSED,
    HoareObligation,
    check_bounded,
    decompose,
    elide_formula,
    emit_obligation,
    frame_elide,
    obligation_vars,
    run_check,
)
from slearner.verifier.pipeline import INCONCLUSIVE, REFUTED, VERIFIED, describe_state, prepare, verify
from slearner.verifier.points import describe_point, layout
from slearner.verifier.testgen import generate_tests, grid_tests

SEED0 = Config(seed=0)

# -- layout ---------------------------------------------------------------------------


def test_fig1_layout(fig1):
    lay = layout(fig1, 1)
    assert [(p.id, p.kind) for p in lay.points] == [("start", "start"), ("p1", "learned"), ("p2", "learned"),
                                                   ("end", "end")]
    rel = {p.id: [".".join(path) for path, _ in p.relevant] for p in lay.points if p.learned}
    assert rel == {"p1": ["n", "x"], "p2": ["x", "y"]}
    assert describe_point(fig1, lay.points[1]) == "after line 8, before line 9"
    assert [c.func for _, c in lay.calls] == ["createSLL", "createSLL", "getSum"]


def test_deref_bound_adds_field_paths(fig1):
    lay = layout(fig1, 2)
    p2 = next(p for p in lay.points if p.id == "p2")
    assert [".".join(path) for path, _ in p2.relevant] == ["x", "y", "x.data", "x.next", "y.data", "y.next"]


def test_predicates_from_contract_or_fallback():
    fig1 = corpus_program("fig1")
    lay = layout(fig1, 1)
    assert [d.name for d in point_predicates(fig1, lay.points[1])] == ["sll"]
    post_true = loops_to_tailrec(corpus_program("post_true"))
    lay = layout(post_true, 1)
    learned = next(p for p in lay.points if p.learned)
    # the contract names no predicate, so every one fitting Node is used
    assert [d.name for d in point_predicates(post_true, learned)] == ["sll", "sorted_sll"]


# -- tests ----------------------------------------------------------------------------------


def test_generate_tests_deterministic(fig1):
    a = generate_tests(fig1, 10, 0, 5)
    b = generate_tests(fig1, 10, 0, 5)
    assert a == b
    assert generate_tests(fig1, 10, 1, 5) != a
    assert all(-5 <= v <= 5 for t in a for v in t.inputs)
    assert any(m > n for m, n in (t.inputs for t in a))


def test_grid_tests(fig1):
    g = grid_tests(fig1, (0, 1, 2))
    assert [t.inputs for t in g] == [(m, n) for m in (0, 1, 2) for n in (0, 1, 2)]


def test_generate_tests_rejects_zero(fig1):
    with pytest.raises(ValueError):
        generate_tests(fig1, 0, 0)


# -- decomposition and elision ---------------------------------------------------------------


@pytest.fixture(scope="module")
def fig1_obligations():
    prog, lay, tests = prepare(corpus_program("fig1"), SEED0)
    inv = {}
    for p in lay.points:
        if p.learned:
            inv[p.id] = learn_point(prog, p, snapshots_at(p, tests), SEED0).formula
    obs, inst = decompose(prog, lay, inv)
    return prog, lay, inv, obs, inst


def test_decompose_fig1(fig1_obligations):
    prog, _, inv, obs, inst = fig1_obligations
    assert [ob.kind for ob in obs] == ["call", "call", "call"]
    assert [ob.code() for ob in obs] == ["createSLL(m)", "createSLL(n)", "getSum(x, y)"]
    assert print_formula(obs[0].pre) == "m <= n"
    # the assigned variable is renamed to res in the callee's postcondition
    assert "res" in obs[0].post.free_vars() and "x" not in obs[0].post.free_vars()
    assert obs[2].post == parse_formula("sll(x, _) * sll(y, _)")
    text = "\n".join(str(s) for s in inst.entry_function.body)
    assert "Assert" in text and "Assume" in text


def test_frame_elision_fig1(fig1_obligations, golden):
    prog, _, _, obs, _ = fig1_obligations
    for ob in obs:
        e = frame_elide(ob, prog)
        assert emit_obligation(e) == (golden / "obligations" / f"fig1.ob{e.index}.sl.txt").read_text()


@pytest.mark.parametrize(
    "formula,keep,refs,expected",
    [
        ("exists a. sll(y, a) & a <= n", {"n"}, {"y"}, "true"),
        ("sll(x, _) * sll(y, _) & y = null", {"x"}, {"x", "y"}, "sll(x, _)"),
        ("exists t. x |-> Node(_, t) * t |-> Node(_, null) * sll(y, _)", {"x"}, {"x", "y"},
         "exists t. x |-> Node(_, t) * t |-> Node(_, null)"),
        ("exists a,b. sll(x, a) * sll(y, b) & a <= b", {"x"}, {"x", "y"}, "sll(x, _)"),
        ("x = null | y = null", {"x"}, {"x", "y"}, "true"),
    ],
)
def test_elide_formula(formula, keep, refs, expected):
    assert print_formula(elide_formula(parse_formula(formula), keep, refs)) == expected


# -- bounded checking -----------------------------------------------------------------------------


def test_check_bounded_finds_null_dereference(fig1):
    lay = layout(fig1, 1)
    call = lay.calls[2][1]
    ob = HoareObligation(1, "call", parse_formula("true"), parse_formula("true"), call)
    assert obligation_vars(ob, fig1) == [("x", "Node"), ("y", "Node")]
    r = check_bounded(ob, fig1, SEED0)
    assert r.status == COUNTEREXAMPLE
    assert r.detail == "MemoryError at getSum@27:26"
    assert describe_state(r.counterexample) == "x=#1, y=null, #1=Node(0, null)"


def test_check_bounded_false_precondition_passes(fig1):
    call = layout(fig1, 1).calls[2][1]
    ob = HoareObligation(1, "call", parse_formula("false"), parse_formula("false"), call)
    r = check_bounded(ob, fig1, Config(max_nodes=3))
    assert r.status == PASSED and r.checked == 0 and r.states > 0


def test_check_bounded_budget(fig1):
    call = layout(fig1, 1).calls[2][1]
    ob = HoareObligation(1, "call", parse_formula("true"), parse_formula("true"), call)
    r = check_bounded(ob, fig1, Config(max_states=5, max_nodes=3))
    assert r.status == "BudgetExhausted"


def test_segment_obligation():
    p = parse("fn main(n: int) -> int requires n > 0 ensures res > 1 { var k: int = n + 1; return k; }")
    lay = layout(p, 1)
    obs, _ = decompose(p, lay, {})
    assert len(obs) == 1 and obs[0].kind == "segment"
    assert run_check(obs[0], p, Config(num_bound=4)).status == PASSED


# -- pipeline -------------------------------------------------------------------------------------

EXPECTED = {
    "btree": VERIFIED,
    "dll": VERIFIED,
    "empty": VERIFIED,
    "fig1": VERIFIED,
    "fig1_bug": REFUTED,
    "nested_loops": VERIFIED,
    "post_true": VERIFIED,
    "sll_build_loop": VERIFIED,
    "sll_loop": INCONCLUSIVE,
    "sorted": VERIFIED,
    "zero_call": VERIFIED,
}


def test_expected_covers_corpus():
    assert sorted(EXPECTED) == CORPUS_NAMES


def _config(name):
    # the recursive structures are checked at a smaller heap bound to keep the suite fast
    return Config(seed=0, max_nodes=3 if name in ("dll", "btree") else 5)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_verdicts(name):
    r = verify(corpus_program(name), _config(name), name)
    assert r.verdict == EXPECTED[name], r.text()
    if r.verdict == VERIFIED:
        assert all(ob.status == PASSED for ob in r.obligations)
    if r.verdict == REFUTED:
        bad = next(ob for ob in r.obligations if ob.status == COUNTEREXAMPLE)
        assert bad.counterexample is not None
    if name == "sll_loop":
        # p aliases into x mid-traversal; no list-segment predicate can say so
        assert "neither separate nor alias" in r.reason


def test_fig1_bug_counterexample():
    r = verify(corpus_program("fig1_bug"), SEED0, "fig1_bug")
    assert r.verdict == REFUTED
    text = r.text()
    assert "pre-state: m=1, n=-8" in text
    assert text.endswith("verdict: CounterExample (obligation 1 fails from a state satisfying the precondition)\n")


def test_relearning_strengthens_invariant():
    r = verify(corpus_program("sll_build_loop"), SEED0, "sll_build_loop")
    assert r.verdict == VERIFIED
    assert r.relearn_rounds == 1
    assert "relearn rounds: 1" in r.text()


def test_report_summary_shape(fig1):
    r = verify(fig1, SEED0, "fig1")
    s = r.summary()
    assert s["verdict"] == VERIFIED
    assert [o["code"] for o in s["obligations"]] == ["createSLL(m)", "createSLL(n)", "getSum(x, y)"]
    assert set(s["timings"]) == {"tests", "learn", "check", "total"}
    assert "time" not in r.text()
