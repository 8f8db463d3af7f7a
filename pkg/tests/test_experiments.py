from __future__ import annotations

from dataclasses import replace

import pytest

from openadmm.analysis import read_trace_csv
from openadmm.churn import BernoulliSchedule, Phase
from openadmm.errors import ConfigError, OutputError
from openadmm.experiments import (
    SCALES, SCENARIO_IDS, SUMMARY_HEADER, AdmmConfig, ChurnConfig, CostConfig, GraphConfig, RunConfig,
    ScenarioConfig, builtin_scenario, format_schedule, from_ini, load_config, parse_schedule,
    run_and_summarize, save_config, to_ini
)
from openadmm.open_admm import InitVariant


def _tiny(**run):
    return ScenarioConfig(
        id="tiny",
        graph=GraphConfig(n0=6, edge_prob=0.4),
        churn=ChurnConfig(process="poisson", rate=0.3),
        costs=CostConfig(family="avg", sigma=0.1),
        run=RunConfig(horizon=30, seed=11, **run),
    )


# --< Builtins >-- #

def test_open_consensus_full_scale():
    config = builtin_scenario("consensus-open", "paper")
    assert (config.graph.n0, config.graph.edge_prob, config.graph.attach_prob) == (200, 0.1, 0.1)
    assert config.churn.schedule == BernoulliSchedule.open_consensus().phases
    assert [p.until for p in config.churn.schedule] == [1000, 2000, 3000, 3500, None]
    assert (config.costs.lo, config.costs.hi, config.costs.sigma) == (0.0, 5.0, 0.2)
    assert (config.admm.alpha, config.admm.rho) == (0.99, 0.5)
    assert config.admm.initial_box() == (0.0, 500.0)
    assert config.run.horizon >= 4000


def test_open_consensus_declares_signal_bounds():
    inputs = builtin_scenario("consensus-open", "paper").bound_inputs()
    assert inputs.radius == pytest.approx(2.6)
    assert builtin_scenario("learning-modes").bound_inputs() is None


def test_learning_full_scale():
    for scenario_id in SCENARIO_IDS[2:]:
        config = builtin_scenario(scenario_id, "paper")
        assert config.costs.family == "logistic" and config.costs.ridge == 0.05
        assert (config.graph.n0, config.graph.edge_prob) == (50, 0.1)
        assert (config.admm.alpha, config.admm.rho) == (0.99, 0.125)
        assert config.run.reps == 10 and config.run.horizon == 960
        expected = "eps_avg_k" if scenario_id == "learning-replacement" else "eps_k"
        assert config.run.summary_column == expected


def test_lambda_sweep_values():
    config = builtin_scenario("learning-lambda-sweep", "paper")
    assert config.run.sweep_values == (0.1, 1.0, 10.0, 100.0)
    assert [v.variant for v in config.expand()] == ["rate=0.1", "rate=1.0", "rate=10.0", "rate=100.0"]
    assert [v.churn.rate for v in config.expand()] == [0.1, 1.0, 10.0, 100.0]


def test_init_sweep_covers_every_variant():
    variants = builtin_scenario("learning-init-sweep").expand()
    assert [v.admm.params().init for v in variants] == list(InitVariant)


def test_desk_closed_consensus():
    full, desk = builtin_scenario("consensus-closed", "paper"), builtin_scenario("consensus-closed", "desk")
    assert (desk.graph.n0, desk.run.horizon) == (20, 500)
    assert desk.graph.edge_prob == 1.0
    assert (desk.admm.alpha, desk.admm.rho) == (full.admm.alpha, full.admm.rho)
    assert desk.admm.initial_box() is None
    assert desk.run.sweep_values == ("avg", "max", "median")


def test_desk_scale_limits_and_rates():
    for scenario_id in SCENARIO_IDS:
        full, desk = builtin_scenario(scenario_id, "paper"), builtin_scenario(scenario_id, "desk")
        assert desk.scale == "desk"
        assert desk.graph.n0 <= 50 and desk.run.horizon <= 1000 and desk.run.reps <= 5
        assert desk.churn.rate == full.churn.rate
        assert [(p.join, p.leave) for p in desk.churn.schedule] == [(p.join, p.leave) for p in full.churn.schedule]
        desk.validate()


def test_desk_keeps_the_expected_degree():
    for scenario_id in SCENARIO_IDS:
        full, desk = builtin_scenario(scenario_id, "paper"), builtin_scenario(scenario_id, "desk")
        degree = full.graph.edge_prob * (full.graph.n0 - 1)
        desk_degree = desk.graph.edge_prob * (desk.graph.n0 - 1)
        assert desk_degree == pytest.approx(min(degree, desk.graph.n0 - 1), rel=1e-3)


def test_desk_open_consensus_scales_attachment():
    desk = builtin_scenario("consensus-open", "desk")
    assert (desk.graph.n0, desk.graph.edge_prob, desk.graph.attach_prob) == (50, 0.4061, 0.4061)
    assert builtin_scenario("learning-modes", "desk").graph.attach_prob == GraphConfig().attach_prob


def test_desk_lambda_sweep_is_shorter():
    desk = builtin_scenario("learning-lambda-sweep", "desk")
    assert (desk.graph.n0, desk.run.horizon, desk.run.reps) == (20, 200, 3)
    assert builtin_scenario("learning-decay", "desk").run.horizon == 1000


def test_desk_schedule_follows_the_horizon():
    desk = builtin_scenario("consensus-open", "desk")
    assert [p.until for p in desk.churn.schedule] == [250, 500, 750, 875, None]


def test_desk_replacement_sizes():
    assert builtin_scenario("learning-replacement", "desk").run.sweep_values == (20, 50, 100)
    assert builtin_scenario("learning-replacement", "paper").run.sweep_values == (50, 100, 500)


def test_unknown_builtins():
    with pytest.raises(ConfigError, match="unknown scenario"):
        builtin_scenario("consensus-half-open")
    with pytest.raises(ConfigError, match="unknown scale"):
        builtin_scenario("consensus-open", "lab")


# --< Serialization >-- #

@pytest.mark.parametrize("scale", SCALES)
@pytest.mark.parametrize("scenario_id", SCENARIO_IDS)
def test_builtins_survive_ini(scenario_id, scale):
    config = builtin_scenario(scenario_id, scale)
    text = to_ini(config)
    parsed = from_ini(text)
    assert parsed == config
    assert to_ini(parsed) == text


def test_schedule_text():
    phases = (Phase(10, 0.5, 0.25), Phase(None, 1.0, 2.0))
    assert format_schedule(phases) == "10:0.5:0.25, *:1.0:2.0"
    assert parse_schedule("10:0.5:0.25, *:1:2") == phases
    with pytest.raises(ConfigError, match="bad schedule phase"):
        parse_schedule("10:0.5")


def test_partial_files_keep_defaults():
    config = from_ini("[graph]\nn0 = 12\n\n[admm]\nmedian_lagged = yes\ninit_lo = 1.5\ninit_hi = 2.5\n")
    assert config.graph.n0 == 12 and config.graph.edge_prob == GraphConfig().edge_prob
    assert config.admm.median_lagged is True
    assert config.admm.initial_box() == (1.5, 2.5)
    assert config.id == "custom" and config.scale == "desk"


@pytest.mark.parametrize("text", [
    "[physics]\ng = 9.81\n",
    "[scenario]\nowner = me\n",
    "[graph]\ndiameter = 3\n",
    "[graph]\nn0 = many\n",
    "[admm]\nmedian_lagged = perhaps\n",
    "[run]\nsweep_key = graph.edges\nsweep_values = 1, 2\n",
    "not an ini file",
])
def test_malformed_files(text):
    with pytest.raises(ConfigError):
        from_ini(text)


@pytest.mark.parametrize("config", [
    ScenarioConfig(graph=GraphConfig(n0=0)),
    ScenarioConfig(graph=GraphConfig(edge_prob=1.5)),
    ScenarioConfig(churn=ChurnConfig(process="tidal")),
    ScenarioConfig(churn=ChurnConfig(process="bernoulli", schedule=(Phase(None, 2.0, 0.0),))),
    ScenarioConfig(costs=CostConfig(family="mode")),
    ScenarioConfig(costs=CostConfig(lo=3.0, hi=1.0)),
    ScenarioConfig(admm=AdmmConfig(alpha=1.0)),
    ScenarioConfig(admm=AdmmConfig(init_lo=1.0)),
    ScenarioConfig(run=RunConfig(burn_in=1.0)),
    ScenarioConfig(run=RunConfig(summary_column="loss")),
    ScenarioConfig(run=RunConfig(sweep_key="graph.n0")),
    ScenarioConfig(run=RunConfig(sweep_key="graph.n0", sweep_values=(10, 0))),
    ScenarioConfig(scale="lab"),
])
def test_invalid_configs(config):
    with pytest.raises(ConfigError):
        config.validate()


def test_config_files(tmp_path):
    config = builtin_scenario("learning-decay")
    path = save_config(config, tmp_path / "decay.ini")
    assert load_config(path) == config
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(OutputError):
        save_config(config, tmp_path / "missing" / "decay.ini")


def test_streams_differ_per_repetition():
    config = _tiny()
    first, second = config.streams(0), config.streams(1)
    assert first.graph.random() != second.graph.random()
    assert config.streams(0).churn.random() == config.streams(0).churn.random()


# --< Runner >-- #

def test_run_writes_traces_and_summary(tmp_path):
    result = run_and_summarize(_tiny(reps=2), tmp_path, workers=1, silent=True)
    root = tmp_path / "tiny-desk"
    assert result.out_dir == root
    assert sorted(p.name for p in (root / "base").iterdir()) == ["rep0.csv", "rep1.csv"]

    records = read_trace_csv(root / "base" / "rep0.csv")
    assert [r.k for r in records] == list(range(30))
    assert [r.as_row() for r in records] == [r.as_row() for r in result.runs[0].records]

    lines = result.summary_path.read_text().splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    assert lines[1].startswith("tiny,desk,base,d_cons_norm,")
    assert result.summaries[""].count == 30


def test_runs_are_reproducible(tmp_path):
    first = run_and_summarize(_tiny(reps=2), tmp_path / "a", workers=1, silent=True)
    second = run_and_summarize(_tiny(reps=2), tmp_path / "b", workers=2, silent=True)
    assert first.summary_path.read_text() == second.summary_path.read_text()
    for rep in (0, 1):
        name = f"rep{rep}.csv"
        assert (first.out_dir / "base" / name).read_text() == (second.out_dir / "base" / name).read_text()


def test_sweep_writes_one_summary_per_value(tmp_path):
    config = replace(
        builtin_scenario("learning-replacement"),
        run=replace(builtin_scenario("learning-replacement").run, horizon=6, reps=1),
    )
    result = run_and_summarize(config, tmp_path, workers=1, silent=True)
    assert list(result.summaries) == ["n0=20", "n0=50", "n0=100"]
    for variant in result.summaries:
        assert (result.out_dir / variant / "rep0.csv").is_file()
    sizes = {run.variant: {r.n_k for r in run.records} for run in result.runs}
    assert sizes == {"n0=20": {20}, "n0=50": {50}, "n0=100": {100}}

