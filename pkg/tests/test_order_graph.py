from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ordergraph.errors import InfeasibleAction, LimitExceeded
from ordergraph.order_graph import (
    apply_action,
    enumerate_orderings,
    feasible_actions,
    feasible_pairs,
    layer,
    ordering_prefix_states,
    state_bits,
    parse_state_bits,
    state_from_members,
    state_vector,
    states_by_layer,
)


@pytest.mark.parametrize(
    "members, expected",
    [((), [0, 1, 2]), ((0,), [1, 2]), ((0, 1, 2), [])],
)
def test_feasible_actions(members, expected):
    assert feasible_actions(state_from_members(members, 3), 3) == expected


def test_apply_action():
    assert apply_action(0, 2) == 0b100
    assert apply_action(0b101, 1) == 0b111
    with pytest.raises(InfeasibleAction):
        apply_action(0b001, 0)


@pytest.mark.parametrize(
    "members, vec",
    [((1, 3), [0, 1, 0, 1]), ((), [0, 0, 0, 0]), ((0, 1, 2, 3), [1, 1, 1, 1])],
)
def test_state_vector(members, vec):
    np.testing.assert_array_equal(state_vector(state_from_members(members, 4), 4), vec)


@pytest.mark.parametrize("d, count", [(1, 1), (3, 6), (5, 120)])
def test_enumerate_orderings(d, count):
    orderings = list(enumerate_orderings(d))
    assert len(orderings) == count == factorial(d)
    assert len(set(orderings)) == count


def test_enumeration_limit():
    with pytest.raises(LimitExceeded):
        enumerate_orderings(10)
    assert len(list(enumerate_orderings(4, limit=4))) == 24


def test_prefix_states():
    assert ordering_prefix_states([0, 1]) == [0, 0b01, 0b11]
    assert ordering_prefix_states([1, 0]) == [0, 0b10, 0b11]


@given(st.permutations(range(6)))
def test_prefix_path_properties(ordering):
    states = ordering_prefix_states(ordering)
    assert len(states) == 7 and states[0] == 0 and states[-1] == 63
    for k, (s, t) in enumerate(zip(states, states[1:])):
        assert layer(t) == layer(s) + 1
        assert ordering[k] in feasible_actions(s, 6)


def test_prefix_states_injective():
    paths = {tuple(ordering_prefix_states(L)) for L in enumerate_orderings(5)}
    assert len(paths) == 120


@pytest.mark.parametrize("d", [1, 4, 8, 12])
def test_layer_sizes_binomial(d):
    layers = states_by_layer(d)
    assert [len(x) for x in layers] == [comb(d, k) for k in range(d + 1)]
    assert sum(len(x) for x in layers) == 2 ** d
    for k, states in enumerate(layers):
        assert all(len(feasible_actions(s, d)) == d - k for s in states)


def test_feasible_pair_count():
    assert len(feasible_pairs(5)) == 5 * 2 ** 4


@given(st.integers(0, 2 ** 7 - 1))
def test_state_bits_roundtrip(s):
    assert parse_state_bits(state_bits(s, 7)) == s
