import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netjac.network import parse_network
from netjac.selections import (
    ChildSelection,
    SelectionLimitError,
    SymbolError,
    cb_component,
    cb_evaluate,
    enumerate_all,
    enumerate_selections,
    parse_selection,
)

from oracles import brute_force_selections, random_network


def _labels(net, sel):
    return tuple(net.reactions[j].label for j in sel.assignment)


def test_example1_three_selections(net1):
    sels = list(enumerate_selections(net1, ["A", "B", "C"]))
    assert [_labels(net1, s) for s in sels] == [("0", "1", "3"), ("0", "2", "3"), ("1", "2", "3")]


def test_single_species_subset(net1):
    assert sorted(_labels(net1, s) for s in enumerate_selections(net1, ["A"])) == [("0",), ("1",)]


def test_non_reactant_species_gives_nothing():
    net = parse_network("1: A -> B")
    assert list(enumerate_selections(net, ["B"])) == []
    assert list(enumerate_selections(net, ["A", "B"])) == []


def test_enumerate_all_counts(net1):
    assert len(list(enumerate_all(net1, 3))) == 3
    ones = [s.format(net1) for s in enumerate_all(net1, 1)]
    assert sorted(ones) == sorted(["A->0", "A->1", "B->1", "B->2", "C->3"])
    assert list(enumerate_all(net1, 0)) == [ChildSelection((), ())]


def test_enumerate_all_range(net1):
    with pytest.raises(ValueError):
        list(enumerate_all(net1, 4))


def test_cb_component_examples(net1, net2):
    c1 = cb_component(net1, parse_selection(net1, "A->1, B->2, C->3"))
    assert [list(r) for r in c1.s_matrix] == [[1, 1, 0], [-2, -1, 1], [0, 1, -1]]
    assert c1.alpha == -2
    assert cb_component(net1, parse_selection(net1, "A->0, B->2, C->3")).alpha == 0
    c3 = cb_component(net2, parse_selection(net2, "A->1, B->2, C->3"))
    assert [list(r) for r in c3.s_matrix] == [[-1, 0, 1], [1, -1, 0], [1, 1, -1]]
    assert c3.alpha == 1


def test_cb_evaluate_all_ones(net1):
    comp = cb_component(net1, parse_selection(net1, "A->1, B->2, C->3"))
    ones = {p: 1.0 for p in comp.selection.positions}
    assert np.array_equal(cb_evaluate(comp, ones), np.array(comp.s_matrix, dtype=float))


def test_cb_evaluate_uniform_scaling(net2):
    comp = cb_component(net2, parse_selection(net2, "A->1, B->2, C->3, D->5"))
    twos = {p: 2.0 for p in comp.selection.positions}
    e1 = np.sort_complex(np.linalg.eigvals(np.array(comp.s_matrix, dtype=float)))
    e2 = np.sort_complex(np.linalg.eigvals(cb_evaluate(comp, twos)))
    assert np.allclose(e2, 2 * e1, atol=1e-12)


def test_cb_evaluate_errors(net1):
    comp = cb_component(net1, parse_selection(net1, "A->1"))
    with pytest.raises(SymbolError):
        cb_evaluate(comp, {})
    with pytest.raises(SymbolError):
        cb_evaluate(comp, {comp.selection.positions[0]: 0.0})


def test_selection_limit(net2, monkeypatch):
    with pytest.raises(SelectionLimitError):
        list(enumerate_all(net2, 3, max_selections=2))
    monkeypatch.setenv("NETJAC_MAX_SELECTIONS", "1")
    with pytest.raises(SelectionLimitError):
        list(enumerate_all(net2, 2))


def test_format_and_parse_round_trip(net2):
    for sel in enumerate_all(net2, 3):
        assert parse_selection(net2, sel.format(net2)) == sel
    with pytest.raises(ValueError):
        parse_selection(net2, "A->2")
    with pytest.raises(ValueError):
        parse_selection(net2, "C->3, D->3")


def test_component_format(net1):
    comp = cb_component(net1, parse_selection(net1, "A->1, B->2, C->3"))
    assert comp.format(net1) == "A->1, B->2, C->3 | alpha=-2"


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_enumeration_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 8)))
    for n in range(1, net.M + 1):
        got = [(s.species_subset, s.assignment) for s in enumerate_all(net, n)]
        assert len(got) == len(set(got))
        assert set(got) == brute_force_selections(net, n)
        for s in enumerate_all(net, n):
            assert s.is_valid_for(net)
    assert len(list(enumerate_all(net, 1))) == len(net.pattern)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lexicographic_order(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 8)))
    for n in range(1, net.M + 1):
        keys = [(s.species_subset, s.assignment) for s in enumerate_all(net, n)]
        assert keys == sorted(keys)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sign_of_scaled_component(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 8)))
    for n in range(1, net.M + 1):
        for sel in enumerate_all(net, n):
            comp = cb_component(net, sel)
            r = {p: float(rng.uniform(0.1, 10)) for p in sel.positions}
            d = np.linalg.det(cb_evaluate(comp, r))
            expected = comp.alpha * np.prod(list(r.values()))
            assert abs(d - expected) <= 1e-9 * max(1.0, abs(expected))
            assert np.sign(round(d, 6)) == np.sign(comp.alpha) or comp.alpha == 0
