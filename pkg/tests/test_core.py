import numpy as np
import pytest
from hypothesis import given, strategies as st

from soda.core import (
    DataError,
    Dataset,
    DimensionMismatch,
    IndexOutOfRange,
    SelectionConfig,
    Term,
    TermSet,
    induced_term_set,
    predictors_of,
)

indices = st.integers(min_value=0, max_value=30)
terms = st.one_of(indices.map(Term.main), st.tuples(indices, indices).map(lambda t: Term.pair(*t)))


def test_pair_is_canonical():
    assert Term.pair(3, 1) == Term.pair(1, 3) == Term(1, 1, 3)
    assert repr(Term.pair(2, 2)) == "Int(2,2)"
    assert Term.pair(2, 2).predictors == (2,)
    assert Term.pair(1, 4).predictors == (1, 4)


def test_negative_index_rejected():
    with pytest.raises(IndexOutOfRange):
        Term.main(-1)
    with pytest.raises(IndexOutOfRange):
        Term.pair(0, -2)


def test_labels():
    assert Term.main(0).label() == "X1"
    assert Term.pair(0, 0).label(["a", "b"]) == "a^2"
    assert Term.pair(1, 0).label(["a", "b"]) == "a*b"


@given(terms)
def test_term_list_round_trip(t):
    assert Term.from_list(t.to_list()) == t


@given(st.lists(terms, max_size=20))
def test_termset_sorted_and_unique(items):
    s = TermSet(items)
    assert list(s) == sorted(set(items))
    assert len(s) == len(set(items))
    assert TermSet(reversed(items)) == s
    assert hash(TermSet(reversed(items))) == hash(s)


@given(st.lists(terms, max_size=20))
def test_mains_precede_interactions(items):
    kinds = [t.kind for t in TermSet(items)]
    assert kinds == sorted(kinds)


@given(st.lists(terms, max_size=10), terms)
def test_add_remove(items, t):
    s = TermSet(items)
    assert t in s.add(t)
    assert t not in s.add(t).remove(t)
    assert s.add(t).remove(t) == s.remove(t)


@given(st.lists(terms, max_size=15))
def test_mains_interactions_partition(items):
    s = TermSet(items)
    assert s.mains | s.interactions == s
    assert not set(s.mains) & set(s.interactions)


@given(st.lists(terms, max_size=15))
def test_predictors_of(items):
    expected = set()
    for t in items:
        expected |= {t.i, t.j}
    assert predictors_of(items) == expected


@given(st.sets(indices, max_size=6), st.sets(indices, max_size=4))
def test_induced_term_set_size(c, pre):
    m_f = TermSet.of_mains(pre)
    s = induced_term_set(m_f, c)
    k = len(c)
    extra_mains = len(pre - c)
    assert len(s) == extra_mains + k + k * (k + 1) // 2
    assert predictors_of(s) == c | pre


def test_dataset_validation():
    x = np.zeros((4, 2))
    with pytest.raises(DimensionMismatch):
        Dataset(x, np.zeros(3, dtype=int))
    with pytest.raises(DataError):
        Dataset(x, np.zeros(4, dtype=int))  # one class
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan, 0]] * 4), np.array([0, 1, 0, 1]))
    with pytest.raises(DataError):
        Dataset(x, np.array([0, 2, 0, 2]))  # class 1 empty
    d = Dataset(x, np.array([0, 1, 0, 1]))
    assert d.n_classes == 2 and d.class_labels == (1, 2)
    assert d.column_names == ("X1", "X2")
    assert not d.x.flags.writeable


def test_subset_keeps_class_count():
    x = np.arange(12.0).reshape(6, 2)
    d = Dataset(x, np.array([0, 1, 2, 0, 1, 2]), class_labels=("a", "b", "c"))
    sub = d.subset([0, 1, 2, 3])
    assert sub.n_classes == 3
    with pytest.raises(DataError):
        d.subset([0, 3, 1])


def test_continuous_dataset():
    d = Dataset(np.ones((3, 1)), np.array([0.5, 1.5, 2.0]), categorical=False)
    assert d.n_classes == 0
    with pytest.raises(DataError):
        Dataset(np.ones((2, 1)), np.array([0.0, np.inf]), categorical=False)


def test_selection_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(gamma=-0.1)
    with pytest.raises(ValueError):
        SelectionConfig(p_f=-1)
    with pytest.raises(ValueError):
        SelectionConfig(separation="ignore")
    assert SelectionConfig().resolved_max_forward(1000) == 50
    assert SelectionConfig().resolved_max_forward(40) == 10
    assert SelectionConfig(max_forward=3).resolved_max_forward(1000) == 3
