import numpy as np
import pytest

from slearner.features import NEGATIVE, POSITIVE, LabeledMatrix
from slearner.learner import (
    FALSE,
    TRUE,
    FeatureFormula,
    InsufficientFeatures,
    choose,
    classify,
    combine,
    learn,
    normalize,
    report,
)


@pytest.fixture(scope="module")
def bold(golden):
    return LabeledMatrix.from_csv((golden / "p2_matrix_small.csv").read_text())


@pytest.fixture(scope="module")
def full(golden):
    return LabeledMatrix.from_csv((golden / "p2_matrix_full.csv").read_text())


def test_bold_matrix(bold):
    assert choose(bold) == [0, 3]
    assert combine(bold, [0, 3]).feature_sets() == [(0,), (3,)]
    f, K, _ = learn(bold)
    assert f == FeatureFormula(((0,), (3,)))
    assert classify(f, bold) == bold.labels


def test_full_matrix_first_pick_and_given_k(full):
    K = choose(full)
    assert K[0] == 11
    regions = combine(full, [0, 11, 20, 23]).feature_sets()
    assert {frozenset(r) for r in regions} == {frozenset({0, 11}), frozenset({11, 20}), frozenset({11, 23})}


def test_full_matrix_learned_formula_separates(full):
    f, K, rs = learn(full)
    assert K == [11, 0, 3, 20, 23]
    assert classify(f, full) == full.labels
    assert "chosen: 12, 1, 4, 21, 24" in report(full, K, rs)


def test_trivial_matrices():
    m = LabeledMatrix(np.array([[1, 0]], dtype=np.int8), [POSITIVE], ["a", "b"])
    assert learn(m)[0] == TRUE
    m = LabeledMatrix(np.array([[1, 0]], dtype=np.int8), [NEGATIVE], ["a", "b"])
    assert learn(m)[0] == FALSE
    assert learn(LabeledMatrix.empty(["a"]))[0] == FALSE


def test_conflicting_rows_are_insufficient():
    m = LabeledMatrix(np.array([[1, 0], [1, 0]], dtype=np.int8), [POSITIVE, NEGATIVE], ["a", "b"])
    with pytest.raises(InsufficientFeatures) as exc:
        learn(m)
    assert exc.value.pairs == [(0, 1)]


def test_n_never_separates():
    m = LabeledMatrix(np.array([[-1], [0]], dtype=np.int8), [POSITIVE, NEGATIVE], ["a"])
    with pytest.raises(InsufficientFeatures):
        choose(m)
    m = LabeledMatrix(np.array([[1], [-1]], dtype=np.int8), [POSITIVE, NEGATIVE], ["a"])
    with pytest.raises(InsufficientFeatures):
        choose(m)


def test_normalize_keeps_first_occurrence():
    m = LabeledMatrix(np.array([[1], [0], [1]], dtype=np.int8), [POSITIVE, NEGATIVE, POSITIVE], ["a"])
    n = normalize(m)
    assert n.values.tolist() == [[1], [0]] and n.labels == [POSITIVE, NEGATIVE]


def test_combination_cap():
    # seven features, each the only separator for one negative row
    k = 7
    vals = [[1] * k] + [[0 if j == i else 1 for j in range(k)] for i in range(k)]
    m = LabeledMatrix(np.array(vals, dtype=np.int8), [POSITIVE] + [NEGATIVE] * k, [str(i) for i in range(k)])
    K = choose(m)
    assert sorted(K) == list(range(k))
    with pytest.raises(ValueError):
        combine(m, K)
    assert combine(m, K, max_size=7).feature_sets() == [tuple(range(k))]
