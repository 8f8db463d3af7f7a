from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openadmm.churn import (
    AverageDegreeAttachment, BernoulliAttachment, BernoulliSchedule, ChurnProcess, DecayingPoisson,
    Phase, Poisson, Replacement, SignalModel, _draw_departures, poisson_knuth, sample_churn, step_signals
)
from openadmm.errors import ConfigError
from openadmm.open_graph import ChurnDelta, GraphSnapshot, apply_churn, is_connected, random_graph


def _trace(process, ticks, seed, n0=30, edge_prob=0.2):
    rng = np.random.default_rng(seed)
    g = random_graph(n0, edge_prob, rng)
    deltas, sizes = [], [g.n]
    for k in range(1, ticks):
        delta = sample_churn(process, k, g, rng)
        g = apply_churn(g, delta)
        deltas.append(delta)
        sizes.append(g.n)
    return deltas, sizes, g


def test_zero_rate_poisson_is_always_empty():
    deltas, sizes, _ = _trace(Poisson.constant(0.0), 200, 0)
    assert all(d.is_empty for d in deltas)
    assert set(sizes) == {30}


def test_closed_process_never_changes_the_graph():
    deltas, _, _ = _trace(ChurnProcess(), 50, 1)
    assert all(d.is_empty for d in deltas)


def test_open_consensus_schedule_phases():
    schedule = BernoulliSchedule.open_consensus()
    assert schedule.rates(1) == (0.01, 0.01)
    assert schedule.rates(1000) == (0.01, 0.01)
    assert schedule.rates(1001) == (0.10, 0.01)
    assert schedule.rates(2500) == (0.01, 0.01)
    assert schedule.rates(3200) == (0.01, 0.10)
    assert schedule.rates(3501) == (0.05, 0.05)
    assert schedule.rates(10_000) == (0.05, 0.05)


def test_schedule_scaling_keeps_rates():
    scaled = BernoulliSchedule.open_consensus().scaled(0.25)
    assert [p.until for p in scaled.phases] == [250, 500, 750, 875, None]
    assert scaled.rates(251) == (0.10, 0.01)


def test_learning_modes_breakpoints():
    modes = Poisson.learning_modes()
    assert modes.rates(320) == (1.0, 1.0)
    assert modes.rates(321) == (1.0, 0.5)
    assert modes.rates(641) == (0.5, 1.0)


def test_decaying_rate_at_start():
    process = DecayingPoisson(5.0, 0.9583)
    assert process.rates(0) == (5.0, 5.0)
    assert process.rates(5) == pytest.approx((5.0 * 0.9583, 5.0 * 0.9583))


def test_bernoulli_schedule_at_most_one_event_each():
    deltas, _, _ = _trace(BernoulliSchedule([Phase(None, 0.5, 0.5)]), 300, 2)
    assert all(len(d.arrived) <= 1 and len(d.departed) <= 1 for d in deltas)
    assert any(d.arrived for d in deltas) and any(d.departed for d in deltas)


def test_replacement_keeps_size_fixed():
    _, sizes, g = _trace(Replacement(3.0), 200, 3, n0=20)
    assert set(sizes) == {20}
    assert is_connected(g)


def test_departures_never_remove_last_agent():
    _, sizes, _ = _trace(Poisson([Phase(None, 0.0, 20.0)]), 50, 4, n0=5)
    assert min(sizes) == 1


def _redraw_until_connected(g, wanted, rng):
    current, departed = g, set()
    for _ in range(min(wanted, g.n - 1)):
        pool = sorted(current.agents)
        for _ in range(100):
            candidate = pool[rng.integers(len(pool))]
            trial = current.without(frozenset([candidate]))
            if is_connected(trial):
                departed.add(candidate)
                current = trial
                break
    return frozenset(departed)


@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0.05, 0.6))
@settings(max_examples=1000, deadline=None)
def test_departures_match_redrawing_on_connectivity(seed, wanted, edge_prob):
    g = random_graph(14, edge_prob, np.random.default_rng(seed))
    fast = _draw_departures(g, wanted, np.random.default_rng(seed + 1))
    slow = _redraw_until_connected(g, wanted, np.random.default_rng(seed + 1))
    assert fast == slow
    assert is_connected(g.without(fast))


def test_invalid_schedules():
    with pytest.raises(ConfigError):
        BernoulliSchedule([Phase(None, 1.5, 0.0)])
    with pytest.raises(ConfigError):
        Poisson([Phase(None, 1.0, 1.0), Phase(10, 1.0, 1.0)])
    with pytest.raises(ConfigError):
        Poisson([Phase(10, 1.0, 1.0), Phase(5, 1.0, 1.0)])
    with pytest.raises(ConfigError):
        DecayingPoisson(5.0, 1.2)


def test_poisson_knuth_mean():
    rng = np.random.default_rng(5)
    draws = [poisson_knuth(4.0, rng) for _ in range(20_000)]
    assert np.mean(draws) == pytest.approx(4.0, abs=0.08)


def test_poisson_knuth_large_rate_is_chunked():
    rng = np.random.default_rng(6)
    draws = [poisson_knuth(100.0, rng) for _ in range(2_000)]
    assert np.mean(draws) == pytest.approx(100.0, rel=0.03)


def test_seeded_determinism():
    first, _, _ = _trace(Poisson.constant(1.0), 100, 7)
    second, _, _ = _trace(Poisson.constant(1.0), 100, 7)
    assert first == second


def test_average_degree_attachment_count():
    g = GraphSnapshot.path(5)
    survivors = sorted(g.agents)
    attach = AverageDegreeAttachment().attach(survivors, g, np.random.default_rng(0))
    assert len(attach) == 2
    assert attach <= g.agents


def test_bernoulli_attachment_forces_one_edge():
    g = GraphSnapshot.path(5)
    attach = BernoulliAttachment(0.0).attach(sorted(g.agents), g, np.random.default_rng(0))
    assert len(attach) == 1


# --< Signals >-- #

def test_constant_signals_without_step():
    rng = np.random.default_rng(8)
    model = SignalModel.sample(range(10), 0.0, 5.0, 0.0, rng)
    stepped = step_signals(model, ChurnDelta(), rng)
    assert stepped.values == model.values


def test_signal_span_of_consensus_scenario():
    model = SignalModel.sample(range(3), 0.0, 5.0, 0.2, np.random.default_rng(9))
    assert model.omega == 5.0


def test_signals_follow_churn():
    rng = np.random.default_rng(10)
    model = SignalModel.sample(range(4), 0.0, 5.0, 0.2, rng)
    stepped = model.step(ChurnDelta(arrived={4: frozenset({0})}, departed={1}), rng)
    assert set(stepped.values) == {0, 2, 3, 4}
    assert 0.0 <= stepped.values[4] <= 5.0


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
@settings(max_examples=1000, deadline=None)
def test_signals_stay_bounded(seed, sigma):
    rng = np.random.default_rng(seed)
    model = SignalModel.sample(range(6), 0.0, 5.0, sigma, rng)
    next_id = 6
    for k in range(20):
        departed = {a for a in model.values if rng.random() < 0.1}
        arrived = {next_id: frozenset()} if rng.random() < 0.3 else {}
        next_id += len(arrived)
        stepped = model.step(ChurnDelta(arrived, departed), rng)
        for agent, value in stepped.values.items():
            assert 0.0 <= value <= 5.0
            if agent in model.values:
                assert abs(value - model.values[agent]) <= sigma + 1e-12
        model = stepped
