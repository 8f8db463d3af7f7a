from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openadmm.errors import ConfigError, DisconnectingDeparture, GraphError, IsolatedArrival
from openadmm.open_graph import ChurnDelta, GraphSnapshot, apply_churn, is_connected, random_graph, transition


def test_snapshot_rejects_self_loops():
    with pytest.raises(GraphError, match="self loop"):
        GraphSnapshot([0, 1], [(1, 1)])


def test_snapshot_rejects_unknown_endpoint():
    with pytest.raises(GraphError):
        GraphSnapshot([0, 1], [(0, 2)])


def test_degrees_and_xi(path4):
    assert [path4.degree(a) for a in range(4)] == [1, 2, 2, 1]
    assert path4.xi == 6
    assert path4.ordered_edges == ((0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2))
    assert path4.neighbors(1) == {0, 2}


def test_is_connected():
    assert is_connected(GraphSnapshot.path(5))
    assert not is_connected(GraphSnapshot([0, 1, 2, 3], [(0, 1), (2, 3)]))
    assert is_connected(GraphSnapshot([]))


def test_random_graph_single_agent():
    g = random_graph(1, 0.7, 0)
    assert g.agents == {0} and not g.edges


def test_random_graph_without_edges_becomes_a_tree():
    g = random_graph(5, 0.0, 1)
    assert len(g.edges) == 4
    assert is_connected(g)


def test_random_graph_full_size():
    g = random_graph(200, 0.1, 2)
    assert g.n == 200 and is_connected(g)
    assert g.next_id == 200


def test_random_graph_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        random_graph(0, 0.1, 0)
    with pytest.raises(ConfigError):
        random_graph(3, 1.5, 0)


@given(st.integers(1, 40), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
@settings(max_examples=1000, deadline=None)
def test_random_graph_always_connected(n, p, seed):
    g = random_graph(n, p, seed)
    assert g.n == n
    assert is_connected(g)
    assert all(i < j for i, j in g.edges)
    assert g.xi == 2 * len(g.edges) == sum(g.degree(a) for a in g.agents)


def test_random_graph_deterministic_under_seed():
    assert random_graph(30, 0.1, 9) == random_graph(30, 0.1, 9)


def test_empty_delta_returns_same_snapshot(path4):
    assert apply_churn(path4, ChurnDelta()) is path4


def test_leaf_departure_accepted(path4):
    g = apply_churn(path4, ChurnDelta(departed={3}))
    assert g.agents == {0, 1, 2}
    assert g.edges == {(0, 1), (1, 2)}
    assert g.next_id == 4


def test_middle_departure_rejected():
    with pytest.raises(DisconnectingDeparture, match="disconnecting departure"):
        apply_churn(GraphSnapshot.path(3), ChurnDelta(departed={1}))


def test_isolated_arrival_rejected(path4):
    with pytest.raises(IsolatedArrival, match="isolated arrival"):
        apply_churn(path4, ChurnDelta(arrived={4: frozenset()}))


def test_arrival_attached_to_departing_agent_rejected(path4):
    with pytest.raises(GraphError):
        apply_churn(path4, ChurnDelta(arrived={4: frozenset({3})}, departed={3}))


def test_reused_ids_rejected(path4):
    g = apply_churn(path4, ChurnDelta(departed={3}))
    with pytest.raises(GraphError, match="reused agent id"):
        apply_churn(g, ChurnDelta(arrived={3: frozenset({2})}))


def test_arrivals_may_chain_through_each_other(path4):
    g = apply_churn(path4, ChurnDelta(arrived={4: frozenset({3}), 5: frozenset({0, 4})}))
    assert g.n == 6 and is_connected(g)
    assert g.next_id == 6


def test_transition_sets(path4):
    g = apply_churn(path4, ChurnDelta(arrived={4: frozenset({0, 2})}, departed={3}))
    moves = transition(path4, g)
    assert moves.remaining == {0, 1, 2}
    assert moves.arrived == {4}
    assert moves.departed == {3}
    assert moves.departing_edges == {(2, 3), (3, 2)}
    assert moves.arriving_edges == {(0, 4), (4, 0), (2, 4), (4, 2)}
    assert moves.remaining_neighbors(2) == {1}
    assert moves.arriving_neighbors(2) == {4}
    assert moves.departing_neighbors(2) == {3}


def test_to_networkx_matches(triangle):
    graph = triangle.to_networkx()
    assert set(graph.nodes) == {0, 1, 2}
    assert nx.number_of_edges(graph) == 3


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_random_churn_keeps_connectivity_and_fresh_ids(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(8, 0.3, rng)
    seen = set(g.agents)
    for _ in range(10):
        departed = set()
        for candidate in rng.permutation(sorted(g.agents)).tolist():
            if len(departed) < 2 and g.n - len(departed) > 1 and is_connected(g.without(departed | {candidate})):
                departed.add(candidate)
        survivors = sorted(g.agents - departed)
        new_id = g.next_id
        g = apply_churn(g, ChurnDelta(arrived={new_id: frozenset({survivors[0]})}, departed=departed))
        assert is_connected(g)
        assert new_id not in seen
        seen.add(new_id)
