from __future__ import annotations

import pickle
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openadmm.costs import ConsensusMedian, ProxQuery, consensus_cost
from openadmm.errors import ConfigError, Diverged, OpenAdmmError
from openadmm.experiments import ChurnConfig, CostConfig, GraphConfig, RunConfig, ScenarioConfig
from openadmm.open_admm import (
    AdmmParams, InitVariant, NetworkState, admm_tick, init_arriving, initial_state, run_scenario
)
from openadmm.open_graph import ChurnDelta, GraphSnapshot, apply_churn
from openadmm.reference_oracles import centralized_solve, random_closed_instance, tsi_fixed_point


def _run(g, costs, params, ticks):
    state = initial_state(g, costs, params)
    for _ in range(ticks):
        state = admm_tick(state, g, g, costs, params)
    return state


def _edge_states(vector, g):
    return {(i, j): np.array([vector[(i, j, 0)]]) for (i, j) in g.ordered_edges}


@pytest.fixture
def grown(path4, avg_costs):
    """path4 at rest, plus agent 4 joining at agent 3 with signal 4"""
    costs = avg_costs([1.0, 2.0, 3.0, 5.0])
    state = _run(path4, costs, AdmmParams(), 5)
    delta = ChurnDelta(arrived={4: frozenset({3})})
    costs[4] = consensus_cost("avg", 4.0)
    return state, apply_churn(path4, delta), delta, costs


# --< Parameters >-- #

def test_params_validation():
    for alpha in (0.0, 1.0, 1.5, float("nan")):
        with pytest.raises(ConfigError):
            AdmmParams(alpha=alpha)
    with pytest.raises(ConfigError):
        AdmmParams(rho=0.0)
    with pytest.raises(ConfigError):
        AdmmParams(init="random")
    assert AdmmParams(init="zero").init is InitVariant.ZERO


# --< Closed networks >-- #

def test_closed_path_reaches_the_average(avg_costs):
    g = GraphSnapshot.path(3)
    state = _run(g, avg_costs([0.0, 3.0, 6.0]), AdmmParams(alpha=0.99, rho=0.5), 5000)
    for y in state.y.values():
        assert abs(y[0] - 3.0) <= 1e-8


@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from(["avg", "max", "median"]),
    st.floats(0.05, 0.99),
    st.floats(0.1, 5.0),
)
@settings(max_examples=1000, deadline=None)
def test_closed_step_lengths_never_grow(seed, kind, alpha, rho):
    rng = np.random.default_rng(seed)
    g, costs = random_closed_instance(rng, 8, kind)
    params = AdmmParams(alpha=alpha, rho=rho)
    state = initial_state(g, costs, params, rng=rng, box=(-5.0, 5.0))
    steps = []
    for _ in range(40):
        nxt = admm_tick(state, g, g, costs, params)
        steps.append(sqrt(sum(float(np.sum((nxt.x[e] - state.x[e]) ** 2)) for e in g.ordered_edges)))
        state = nxt
    for before, after in zip(steps, steps[1:]):
        assert after <= before * (1.0 + 1e-9) + 1e-12


def test_lone_agent_sits_at_its_minimizer():
    g = GraphSnapshot([0])
    costs = {0: consensus_cost("median", 2.5)}
    state = _run(g, costs, AdmmParams(), 3)
    assert state.y[0].tolist() == [2.5]
    assert not state.x


@pytest.mark.parametrize("kind, signals", [
    ("avg", [1.0, 2.0, 6.0, 0.5]),
    ("max", [1.0, 2.0, 6.0, 0.5]),
    ("median", [0.0, 1.0, 4.0, 5.0]),
])
def test_fixed_point_is_left_alone(path4, kind, signals):
    costs = {a: consensus_cost(kind, u) for a, u in enumerate(signals)}
    rho = 0.5
    y_star = centralized_solve(costs).y_star
    x = _edge_states(tsi_fixed_point(path4, costs, y_star, rho), path4)
    state = NetworkState(0, x, {a: y_star.copy() for a in path4.agents})

    step = admm_tick(state, path4, path4, costs, AdmmParams(rho=rho))
    for e in path4.ordered_edges:
        assert step.x[e] == pytest.approx(x[e], abs=1e-9)
    for a in path4.agents:
        assert step.y[a] == pytest.approx(y_star, abs=1e-9)


def test_box_initialization(triangle, avg_costs):
    costs = avg_costs([1.0, 2.0, 3.0])
    state = initial_state(triangle, costs, AdmmParams(), np.random.default_rng(0), box=(0.0, 500.0))
    assert all(0.0 <= v[0] <= 500.0 for v in state.x.values())
    state.check_labels(triangle)
    with pytest.raises(ValueError):
        initial_state(triangle, costs, AdmmParams(), box=(0.0, 500.0))


# --< Arrivals and departures >-- #

def test_local_optimum_seeds(grown):
    state, g, delta, costs = grown
    seeded = init_arriving(state, g, delta, costs, AdmmParams(rho=0.5))
    assert seeded.x[(4, 3)].tolist() == [2.0]
    assert seeded.x[(3, 4)].tolist() == [2.5]
    assert set(seeded.x) == set(g.ordered_edges)


def test_zero_seeds(grown):
    state, g, delta, costs = grown
    seeded = init_arriving(state, g, delta, costs, AdmmParams(init=InitVariant.ZERO))
    assert seeded.x[(4, 3)].tolist() == [0.0]
    assert seeded.x[(3, 4)].tolist() == [0.0]


def test_neighbor_average_seeds(grown):
    state, g, delta, costs = grown
    params = AdmmParams(rho=0.5, init=InitVariant.NEIGHBOR_AVERAGE)
    seeded = init_arriving(state, g, delta, costs, params)
    # the newcomer sees agent 3, agent 3 only has agent 2 as a veteran neighbor
    np.testing.assert_allclose(seeded.x[(4, 3)], 0.5 * state.y[3])
    np.testing.assert_allclose(seeded.x[(3, 4)], 0.5 * state.y[2])


def test_neighbor_average_falls_back_without_history(path4, avg_costs):
    costs = avg_costs([1.0, 2.0, 3.0, 5.0])
    state = initial_state(path4, costs, AdmmParams())
    # agent 5 hangs off agent 4, which arrives in the same event
    g = GraphSnapshot(range(6), [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
    delta = ChurnDelta(arrived={4: frozenset({3}), 5: frozenset({4})})
    costs.update({4: consensus_cost("avg", 4.0), 5: consensus_cost("avg", 6.0)})
    seeded = init_arriving(state, g, delta, costs, AdmmParams(rho=0.5, init=InitVariant.NEIGHBOR_AVERAGE))
    assert seeded.x[(5, 4)].tolist() == [3.0]
    np.testing.assert_allclose(seeded.x[(4, 5)], 0.5 * state.y[3])
    np.testing.assert_allclose(seeded.x[(4, 3)], 0.5 * state.y[3])
    assert set(seeded.x) == set(g.ordered_edges)


def test_neighbor_average_skips_veterans_without_outputs(path4, avg_costs):
    costs = avg_costs([1.0, 2.0, 3.0, 5.0])
    state = initial_state(path4, costs, AdmmParams())
    state = NetworkState(state.tick, state.x, {a: y for a, y in state.y.items() if a != 3})
    delta = ChurnDelta(arrived={4: frozenset({3})})
    g = apply_churn(path4, delta)
    costs[4] = consensus_cost("avg", 4.0)
    seeded = init_arriving(state, g, delta, costs, AdmmParams(rho=0.5, init=InitVariant.NEIGHBOR_AVERAGE))
    assert seeded.x[(4, 3)].tolist() == [2.0]


def test_departed_edges_are_dropped(path4, avg_costs):
    costs = avg_costs([1.0, 2.0, 3.0, 5.0])
    params = AdmmParams()
    state = initial_state(path4, costs, params)
    delta = ChurnDelta(departed={0})
    g = apply_churn(path4, delta)
    costs = {a: c for a, c in costs.items() if a != 0}
    state = admm_tick(init_arriving(state, g, delta, costs, params), path4, g, costs, params)
    state.check_labels(g)
    assert 0 not in state.y


def test_tick_keeps_seeds_of_new_edges(grown):
    state, g, delta, costs = grown
    params = AdmmParams(rho=0.5)
    seeded = init_arriving(state, g, delta, costs, params)
    stepped = admm_tick(seeded, GraphSnapshot.path(4), g, costs, params)
    assert stepped.x[(4, 3)].tolist() == [2.0]
    stepped.check_labels(g)
    assert stepped.tick == state.tick + 1


def test_tick_rejects_unseeded_edges(grown):
    state, g, _, costs = grown
    with pytest.raises(ValueError, match="no initialized state"):
        admm_tick(state, GraphSnapshot.path(4), g, costs, AdmmParams())


def test_median_lagged_uses_previous_edge_states():
    g = GraphSnapshot.path(2)
    costs = {0: ConsensusMedian(0.0), 1: ConsensusMedian(5.0)}
    state = NetworkState(0, {(0, 1): np.array([3.0]), (1, 0): np.array([1.0])}, {0: np.array([0.5]), 1: np.array([4.0])})

    lagged = admm_tick(state, g, g, costs, AdmmParams(rho=0.5, median_lagged=True))
    current = admm_tick(state, g, g, costs, AdmmParams(rho=0.5))
    expected_lagged = costs[0].prox(ProxQuery(state.x[(0, 1)] / 0.5, 0.5))
    expected_current = costs[0].prox(ProxQuery(current.x[(0, 1)] / 0.5, 0.5))
    np.testing.assert_allclose(lagged.y[0], expected_lagged)
    np.testing.assert_allclose(current.y[0], expected_current)
    np.testing.assert_array_equal(lagged.x[(0, 1)], current.x[(0, 1)])


def test_non_finite_states_raise_diverged(path4, avg_costs):
    costs = avg_costs([1.0, 2.0, 3.0, 5.0])
    params = AdmmParams()
    state = _run(path4, costs, params, 3)
    x = dict(state.x)
    x[(1, 2)] = np.array([np.inf])
    with pytest.raises(Diverged, match="diverged at tick 4") as caught:
        admm_tick(NetworkState(state.tick, x, state.y), path4, path4, costs, params)
    assert caught.value.tick == 4
    assert isinstance(caught.value, OpenAdmmError)


def test_overflowing_prox_anchor_raises_diverged(avg_costs):
    g = GraphSnapshot.path(3)
    costs = avg_costs([1.0, 2.0, 3.0])
    params = AdmmParams(alpha=0.01, rho=0.5)
    huge = np.array([1e308])
    x = {(0, 1): np.zeros(1), (1, 0): huge, (1, 2): huge, (2, 1): np.zeros(1)}
    state = NetworkState(7, x, {a: np.array([float(a)]) for a in g.agents})
    with pytest.raises(Diverged) as caught:
        admm_tick(state, g, g, costs, params)
    assert caught.value.tick == 8


def test_diverged_survives_pickling():
    restored = pickle.loads(pickle.dumps(Diverged(12)))
    assert isinstance(restored, Diverged) and restored.tick == 12
    assert str(restored) == str(Diverged(12))


# --< Scenario runs >-- #

def _open_config(seed=0, horizon=40, process="poisson"):
    return ScenarioConfig(
        graph=GraphConfig(n0=10, edge_prob=0.3),
        churn=ChurnConfig(process=process, rate=0.5),
        costs=CostConfig(family="avg", sigma=0.1),
        run=RunConfig(horizon=horizon, seed=seed),
    )


def test_first_frame_is_the_initial_state():
    frames = list(run_scenario(_open_config(horizon=1)))
    assert len(frames) == 1 and frames[0].k == 0
    assert frames[0].delta.is_empty


def test_closed_scenario_tick_is_one_engine_round():
    config = ScenarioConfig(graph=GraphConfig(n0=8, edge_prob=0.4), run=RunConfig(horizon=2))
    first, second = run_scenario(config)
    expected = admm_tick(first.state, first.graph, first.graph, first.costs, config.admm.params())
    assert second.graph is first.graph
    for e, v in expected.x.items():
        np.testing.assert_array_equal(second.state.x[e], v)
    for a, v in expected.y.items():
        np.testing.assert_array_equal(second.state.y[a], v)


def test_scenario_runs_are_deterministic():
    last = [list(run_scenario(_open_config(seed=4)))[-1] for _ in range(2)]
    assert last[0].graph == last[1].graph
    for a in last[0].graph.agents:
        np.testing.assert_array_equal(last[0].state.y[a], last[1].state.y[a])


@given(st.integers(0, 2**16))
@settings(max_examples=1000, deadline=None)
def test_labels_follow_the_graph(seed):
    for frame in run_scenario(_open_config(seed=seed, horizon=12)):
        frame.state.check_labels(frame.graph)
        assert set(frame.costs) == set(frame.graph.agents)
        assert set(frame.signals.values) == set(frame.graph.agents)
