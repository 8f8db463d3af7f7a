"""
Scenario configuration, the builtin experiments and the Monte Carlo runner.

A scenario is six flat sections of keys, read from and written to INI
documents. Every key has a default, so a file only lists what it changes.
"""

from __future__ import annotations
import typing as t
import configparser
import csv
import io
import logging
import os

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import NamedTuple

import multiprocessing as mp
import numpy as np
from tqdm import tqdm

from .analysis import (
    SUMMARY_COLUMNS, SUMMARY_SOURCES, BoundInputs, Summary, TraceRecord, TraceRecorder,
    aggregate_summaries, summarize_trace, write_trace_csv
)
from .churn import (
    AttachmentPolicy, AverageDegreeAttachment, BernoulliAttachment, BernoulliSchedule,
    ChurnProcess, DecayingPoisson, Phase, Poisson, Replacement, scale_phases
)
from .costs import CONSENSUS_KINDS, ClassificationSource
from .errors import ConfigError, OutputError
from .families import ConsensusFamily, CostFamily, LearningFamily
from .open_admm import AdmmParams, InitVariant, run_scenario

_log = logging.getLogger(__name__)

SCALES = ("paper", "desk")
PROCESSES = ("none", "bernoulli", "poisson", "decaying-poisson", "replacement")
ATTACHMENTS = ("bernoulli", "average-degree")
FAMILIES = tuple(CONSENSUS_KINDS) + ("logistic",)
SWEEP_KEYS = ("churn.rate", "graph.n0", "admm.init", "costs.family")

# Values written for booleans; configparser also reads yes/no and 1/0
_TRUE, _FALSE = "true", "false"


# --< Sections >-- #

@dataclass(frozen=True)
class GraphConfig:
    n0: int = 50
    edge_prob: float = 0.1
    attachment: str = "bernoulli"
    attach_prob: float = 0.1


@dataclass(frozen=True)
class ChurnConfig:
    """Churn process; `schedule` drives bernoulli and poisson, `rate` the others

    An empty poisson schedule means constant rates join = leave = `rate`.
    """

    process: str = "none"
    schedule: tuple[Phase, ...] = ()
    rate: float = 1.0
    decay: float = 0.9583
    divisor: float = 5.0


@dataclass(frozen=True)
class CostConfig:
    family: str = "avg"
    lo: float = 0.0
    hi: float = 5.0
    sigma: float = 0.0
    samples: int = 20
    dim: int = 5
    separation: float = 2.0
    heterogeneity: float = 0.5
    ridge: float = 0.05


@dataclass(frozen=True)
class AdmmConfig:
    """Engine tuning; `init_lo` and `init_hi` together draw the first edge states from a box"""

    alpha: float = 0.99
    rho: float = 0.5
    init: str = InitVariant.LOCAL_OPTIMUM.value
    median_lagged: bool = False
    init_lo: float | None = None
    init_hi: float | None = None

    def params(self) -> AdmmParams:
        return AdmmParams(self.alpha, self.rho, self.init, self.median_lagged)

    def initial_box(self) -> tuple[float, float] | None:
        if self.init_lo is None and self.init_hi is None:
            return None
        if self.init_lo is None or self.init_hi is None or self.init_lo > self.init_hi:
            raise ConfigError(f"initial box needs init_lo <= init_hi, got [{self.init_lo}, {self.init_hi}]")
        return self.init_lo, self.init_hi


@dataclass(frozen=True)
class RunConfig:
    horizon: int = 1000
    seed: int = 0
    reps: int = 1
    burn_in: float = 0.5
    gamma: float = 0.0
    beta: float = 1.0
    summary_column: str = "d_cons_norm"
    sweep_key: str = ""
    sweep_values: tuple[t.Any, ...] = ()


class Streams(NamedTuple):
    graph: np.random.Generator
    churn: np.random.Generator
    costs: np.random.Generator
    state: np.random.Generator


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete, runnable scenario

    `variant` labels one point of a sweep and is empty for the base config.
    """

    id: str = "custom"
    scale: str = "desk"
    variant: str = ""
    graph: GraphConfig = field(default_factory=GraphConfig)
    churn: ChurnConfig = field(default_factory=ChurnConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> None:
        """Raises ConfigError unless every section is usable"""
        if self.scale not in SCALES:
            raise ConfigError(f"unknown scale {self.scale!r}, expected one of {', '.join(SCALES)}")
        g, c, f, r = self.graph, self.churn, self.costs, self.run
        if g.n0 < 1:
            raise ConfigError(f"graph.n0 must be positive, got {g.n0}")
        if not 0.0 <= g.edge_prob <= 1.0:
            raise ConfigError(f"graph.edge_prob must lie in [0, 1], got {g.edge_prob}")
        if g.attachment not in ATTACHMENTS:
            raise ConfigError(f"unknown attachment {g.attachment!r}")
        if c.process not in PROCESSES:
            raise ConfigError(f"unknown churn process {c.process!r}")
        if f.family not in FAMILIES:
            raise ConfigError(f"unknown cost family {f.family!r}")
        if not f.lo <= f.hi or f.sigma < 0:
            raise ConfigError(f"signals need lo <= hi and sigma >= 0, got [{f.lo}, {f.hi}], sigma={f.sigma}")
        if f.family == "logistic" and (f.samples < 1 or f.dim < 1 or f.ridge <= 0 or f.heterogeneity < 0):
            raise ConfigError("logistic costs need samples >= 1, dim >= 1, ridge > 0 and heterogeneity >= 0")
        if r.horizon < 1 or r.reps < 1:
            raise ConfigError(f"run.horizon and run.reps must be positive, got {r.horizon} and {r.reps}")
        if not 0.0 <= r.burn_in < 1.0:
            raise ConfigError(f"run.burn_in must lie in [0, 1), got {r.burn_in}")
        if r.seed < 0:
            raise ConfigError(f"run.seed must be non-negative, got {r.seed}")
        if r.summary_column not in SUMMARY_SOURCES:
            raise ConfigError(f"unknown summary column {r.summary_column!r}")
        if r.sweep_key and r.sweep_key not in SWEEP_KEYS:
            raise ConfigError(f"unknown sweep key {r.sweep_key!r}, expected one of {', '.join(SWEEP_KEYS)}")
        if bool(r.sweep_key) != bool(r.sweep_values):
            raise ConfigError("run.sweep_key and run.sweep_values go together")
        self.admm.params()
        self.admm.initial_box()
        self.build_churn()
        for variant in self.expand() if r.sweep_key else ():
            variant.validate()

    def streams(self, rep: int) -> Streams:
        """Independent generators for graph, churn, costs and initial state of one repetition"""
        children = np.random.SeedSequence([self.run.seed, rep]).spawn(4)
        return Streams(*(np.random.default_rng(s) for s in children))

    def attachment(self) -> AttachmentPolicy:
        if self.graph.attachment == "average-degree":
            return AverageDegreeAttachment()
        if not 0.0 <= self.graph.attach_prob <= 1.0:
            raise ConfigError(f"graph.attach_prob must lie in [0, 1], got {self.graph.attach_prob}")
        return BernoulliAttachment(self.graph.attach_prob)

    def build_churn(self) -> ChurnProcess:
        c = self.churn
        attachment = self.attachment()
        if c.process == "none":
            return ChurnProcess(attachment)
        if c.process == "bernoulli":
            return BernoulliSchedule(c.schedule, attachment)
        if c.process == "poisson":
            if c.schedule:
                return Poisson(c.schedule, attachment)
            if c.rate < 0:
                raise ConfigError(f"negative churn rate {c.rate}")
            return Poisson.constant(c.rate, attachment=attachment)
        if c.process == "decaying-poisson":
            return DecayingPoisson(c.rate, c.decay, c.divisor, attachment)
        if c.process == "replacement":
            return Replacement(c.rate, attachment)
        raise ConfigError(f"unknown churn process {c.process!r}")

    def build_family(self, rng: np.random.Generator) -> CostFamily:
        f = self.costs
        if f.family == "logistic":
            source = ClassificationSource(f.samples, f.dim, f.separation, f.heterogeneity, f.ridge, rng)
            return LearningFamily(source)
        return ConsensusFamily(f.family, f.lo, f.hi, f.sigma)

    def bound_inputs(self) -> BoundInputs | None:
        """Bounds for consensus families; learning scenarios declare none"""
        if self.costs.family == "logistic":
            return None
        r = self.run
        return BoundInputs.from_signals(r.gamma, r.beta, self.admm.rho, self.costs.sigma, self.costs.hi - self.costs.lo)

    def expand(self) -> list[ScenarioConfig]:
        """One config per sweep value, or just this one"""
        key = self.run.sweep_key
        if not key:
            return [self]
        section, name = key.split(".")
        base = replace(self, run=replace(self.run, sweep_key="", sweep_values=()))
        variants = []
        for value in self.run.sweep_values:
            updated = replace(getattr(base, section), **{name: value})
            variants.append(replace(base, variant=f"{name}={_format(value)}", **{section: updated}))
        return variants


# --< Serialization >-- #

_SECTIONS = ("graph", "churn", "costs", "admm", "run")


def format_schedule(phases: t.Sequence[Phase]) -> str:
    return ", ".join(
        f"{'*' if p.until is None else p.until}:{float(p.join)!r}:{float(p.leave)!r}" for p in phases
    )


def parse_schedule(text: str) -> tuple[Phase, ...]:
    """Reads `until:join:leave` phases separated by commas, `*` marking the open tail"""
    phases = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        try:
            until, join, leave = chunk.split(":")
            phases.append(Phase(None if until.strip() == "*" else int(until), float(join), float(leave)))
        except ValueError:
            raise ConfigError(f"bad schedule phase {chunk!r}, expected until:join:leave") from None
    return tuple(phases)


def _format(value: t.Any, kind: str | None = None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return _TRUE if value else _FALSE
    if isinstance(value, InitVariant):
        return value.value
    if kind == "float" or isinstance(value, float):
        return repr(float(value))
    return str(value)


def _field_kind(section: str, name: str) -> str:
    for f in fields(_SECTION_TYPES[section]):
        if f.name == name:
            return str(f.type)
    raise ConfigError(f"unknown key {section}.{name}")


def _parse(kind: str, raw: str, key: str) -> t.Any:
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return float(raw) if raw else None
        if kind == "bool":
            lowered = raw.lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]
        if kind == "tuple[Phase, ...]":
            return parse_schedule(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind}") from None
    return raw


def _sweep_kind(sweep_key: str) -> str:
    section, name = sweep_key.split(".")
    return _field_kind(section, name)


_SECTION_TYPES: dict[str, type] = {
    "graph": GraphConfig,
    "churn": ChurnConfig,
    "costs": CostConfig,
    "admm": AdmmConfig,
    "run": RunConfig,
}


def to_ini(config: ScenarioConfig) -> str:
    """Canonical INI text: every key, floats by repr, sections in fixed order"""
    parser = configparser.ConfigParser(interpolation=None)
    parser["scenario"] = {"id": config.id, "scale": config.scale, "variant": config.variant}
    for section in _SECTIONS:
        values = getattr(config, section)
        entries = {}
        for f in fields(values):
            value = getattr(values, f.name)
            kind = str(f.type)
            if kind == "tuple[Phase, ...]":
                entries[f.name] = format_schedule(value)
            elif f.name == "sweep_values":
                sweep = _sweep_kind(values.sweep_key) if values.sweep_key in SWEEP_KEYS else None
                entries[f.name] = ", ".join(_format(v, sweep) for v in value)
            else:
                entries[f.name] = _format(value, kind)
        parser[section] = entries

    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def from_ini(text: str) -> ScenarioConfig:
    """Parses an INI document; missing keys keep their defaults

    Raises:
        ConfigError: For syntax errors, unknown sections or keys and unreadable values
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    unknown = set(parser.sections()) - {"scenario", *_SECTIONS}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")

    header = dict(parser["scenario"]) if parser.has_section("scenario") else {}
    extra = set(header) - {"id", "scale", "variant"}
    if extra:
        raise ConfigError(f"unknown keys in [scenario]: {sorted(extra)}")

    sections = {}
    for section in _SECTIONS:
        raw = dict(parser[section]) if parser.has_section(section) else {}
        values = {}
        for name, text_value in raw.items():
            if name == "sweep_values":
                continue
            values[name] = _parse(_field_kind(section, name), text_value, f"{section}.{name}")
        if section == "run" and raw.get("sweep_values", "").strip():
            sweep_key = values.get("sweep_key", "")
            if sweep_key not in SWEEP_KEYS:
                raise ConfigError(f"unknown sweep key {sweep_key!r}")
            kind = _sweep_kind(sweep_key)
            values["sweep_values"] = tuple(
                _parse(kind, v, "run.sweep_values") for v in raw["sweep_values"].split(",") if v.strip()
            )
        sections[section] = _SECTION_TYPES[section](**values)

    return ScenarioConfig(
        id=header.get("id", "custom"),
        scale=header.get("scale", "desk"),
        variant=header.get("variant", ""),
        **sections,
    )


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    config = from_ini(text)
    config.validate()
    return config


def save_config(config: ScenarioConfig, path: str | os.PathLike) -> Path:
    path = Path(path)
    try:
        path.write_text(to_ini(config))
    except OSError as exc:
        raise OutputError(f"cannot write config {path}: {exc.strerror or exc}") from exc
    return path


# --< Builtin scenarios >-- #

SCENARIO_IDS = (
    "consensus-open",
    "consensus-closed",
    "learning-modes",
    "learning-lambda-sweep",
    "learning-decay",
    "learning-replacement",
    "learning-init-sweep",
)

# Horizon of the learning figures, implied by the 320 / 640 breakpoints
_LEARNING_HORIZON = 960

# rho times the expected degree stays near 0.6 at edge probability 0.1
_LEARNING_RHO = 0.125


def _consensus_open() -> ScenarioConfig:
    return ScenarioConfig(
        id="consensus-open",
        scale="paper",
        graph=GraphConfig(n0=200, edge_prob=0.1, attachment="bernoulli", attach_prob=0.1),
        churn=ChurnConfig(process="bernoulli", schedule=BernoulliSchedule.open_consensus().phases),
        costs=CostConfig(family="avg", lo=0.0, hi=5.0, sigma=0.2),
        admm=AdmmConfig(alpha=0.99, rho=0.5, init_lo=0.0, init_hi=500.0),
        run=RunConfig(horizon=4000, reps=1, summary_column="d_cons_norm"),
    )


def _consensus_closed() -> ScenarioConfig:
    return ScenarioConfig(
        id="consensus-closed",
        scale="paper",
        graph=GraphConfig(n0=200, edge_prob=0.1),
        churn=ChurnConfig(process="none"),
        costs=CostConfig(family="avg", lo=0.0, hi=5.0, sigma=0.0),
        admm=AdmmConfig(alpha=0.99, rho=0.5, init_lo=0.0, init_hi=500.0),
        run=RunConfig(
            horizon=2000, reps=1, summary_column="d_cons_norm",
            sweep_key="costs.family", sweep_values=("avg", "max", "median"),
        ),
    )


def _learning(scenario_id: str, churn: ChurnConfig, **run: t.Any) -> ScenarioConfig:
    run.setdefault("summary_column", "eps_k")
    return ScenarioConfig(
        id=scenario_id,
        scale="paper",
        graph=GraphConfig(n0=50, edge_prob=0.1, attachment="average-degree"),
        churn=churn,
        costs=CostConfig(family="logistic", samples=20, dim=5, separation=2.0, heterogeneity=0.5, ridge=0.05),
        admm=AdmmConfig(alpha=0.99, rho=_LEARNING_RHO),
        run=RunConfig(horizon=_LEARNING_HORIZON, reps=10, **run),
    )


_BUILTINS: dict[str, t.Callable[[], ScenarioConfig]] = {
    "consensus-open": _consensus_open,
    "consensus-closed": _consensus_closed,
    "learning-modes": lambda: _learning(
        "learning-modes", ChurnConfig(process="poisson", schedule=Poisson.learning_modes().phases)),
    "learning-lambda-sweep": lambda: _learning(
        "learning-lambda-sweep", ChurnConfig(process="poisson", rate=1.0),
        sweep_key="churn.rate", sweep_values=(0.1, 1.0, 10.0, 100.0)),
    "learning-decay": lambda: _learning(
        "learning-decay", ChurnConfig(process="decaying-poisson", rate=5.0, decay=0.9583, divisor=5.0)),
    "learning-replacement": lambda: _learning(
        "learning-replacement", ChurnConfig(process="replacement", rate=1.0),
        sweep_key="graph.n0", sweep_values=(50, 100, 500), summary_column="eps_avg_k"),
    "learning-init-sweep": lambda: _learning(
        "learning-init-sweep", ChurnConfig(process="poisson", rate=1.0),
        sweep_key="admm.init", sweep_values=tuple(v.value for v in InitVariant)),
}


class DeskRule(NamedTuple):
    """Shrinks a paper-scale scenario

    Schedule breakpoints follow the horizon and churn rates stay. Edge and
    attachment probabilities grow by (n0 - 1) / (desk n0 - 1), capped at 1,
    so agents keep the expected degree they have at paper scale.
    """

    n0: int
    horizon: int
    reps: int
    sweep_values: tuple[t.Any, ...] | None = None
    local_init: bool = False


_DESK_RULES: dict[str, DeskRule] = {
    "consensus-open": DeskRule(n0=50, horizon=1000, reps=5),
    "consensus-closed": DeskRule(n0=20, horizon=500, reps=1, local_init=True),
    "learning-modes": DeskRule(n0=20, horizon=400, reps=5),
    "learning-lambda-sweep": DeskRule(n0=20, horizon=200, reps=3),
    "learning-decay": DeskRule(n0=20, horizon=1000, reps=5),
    "learning-replacement": DeskRule(n0=20, horizon=400, reps=5, sweep_values=(20, 50, 100)),
    "learning-init-sweep": DeskRule(n0=20, horizon=400, reps=5),
}


def _keep_degree(prob: float, n0: int, desk_n0: int) -> float:
    if desk_n0 <= 1 or n0 <= desk_n0:
        return prob
    return round(min(1.0, prob * (n0 - 1) / (desk_n0 - 1)), 4)


def _desk(config: ScenarioConfig) -> ScenarioConfig:
    rule = _DESK_RULES[config.id]
    factor = rule.horizon / config.run.horizon
    schedule = config.churn.schedule
    if schedule and factor != 1.0:
        schedule = scale_phases(schedule, factor)
    admm = replace(config.admm, init_lo=None, init_hi=None) if rule.local_init else config.admm
    run = replace(config.run, horizon=rule.horizon, reps=rule.reps)
    if rule.sweep_values is not None:
        run = replace(run, sweep_values=rule.sweep_values)
    return replace(
        config,
        scale="desk",
        graph=replace(
            config.graph,
            n0=rule.n0,
            edge_prob=_keep_degree(config.graph.edge_prob, config.graph.n0, rule.n0),
            attach_prob=_keep_degree(config.graph.attach_prob, config.graph.n0, rule.n0)
            if config.graph.attachment == "bernoulli" else config.graph.attach_prob,
        ),
        churn=replace(config.churn, schedule=schedule),
        admm=admm,
        run=run,
    )


def builtin_scenario(scenario_id: str, scale: str = "desk") -> ScenarioConfig:
    """A builtin experiment at paper or desk scale

    Raises:
        ConfigError: For an unknown id or scale
    """
    try:
        factory = _BUILTINS[scenario_id]
    except KeyError:
        raise ConfigError(f"unknown scenario {scenario_id!r}, expected one of {', '.join(SCENARIO_IDS)}") from None
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}, expected one of {', '.join(SCALES)}")
    config = factory()
    return config if scale == "paper" else _desk(config)


# --< Runner >-- #

@dataclass
class RunOutcome:
    """One repetition of one variant"""

    variant: str
    rep: int
    trace_path: Path | None
    summary: Summary
    records: list[TraceRecord]


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    out_dir: Path
    summary_path: Path
    runs: list[RunOutcome]
    summaries: dict[str, Summary]

    def traces(self, variant: str = "") -> list[Path]:
        return [r.trace_path for r in self.runs if r.variant == variant]


def run_repetition(config: ScenarioConfig, rep: int, out_dir: Path | None = None) -> RunOutcome:
    """Runs one repetition and, given a directory, writes its trace there"""
    recorder = TraceRecorder(config.admm.rho, config.bound_inputs())
    for frame in run_scenario(config, rep):
        recorder.observe(frame, frame.family.solution(frame.costs))

    path = None
    if out_dir is not None:
        path = write_trace_csv(out_dir / f"rep{rep}.csv", recorder.records)
    summary = summarize_trace(recorder.records, config.run.summary_column, config.run.burn_in)
    return RunOutcome(config.variant, rep, path, summary, recorder.records)


def _run_task(task: tuple[ScenarioConfig, int, Path]) -> RunOutcome:
    return run_repetition(*task)


def _variant_dir(root: Path, variant: str) -> Path:
    return root / (variant or "base")


def run_and_summarize(
        config: ScenarioConfig,
        out_dir: str | os.PathLike,
        workers: int | None = None,
        silent: bool = False
    ) -> ExperimentResult:
    """Runs every repetition of every variant and writes traces and a summary

    Traces land in `<out_dir>/<id>-<scale>/<variant>/rep<r>.csv`, the
    aggregate in `<out_dir>/<id>-<scale>/summary.csv`.

    Args:
        config (ScenarioConfig): The scenario; validated before anything runs
        out_dir (os.PathLike): Root of the output tree
        workers (int, optional): Pool size; 1 runs in this process, None uses every core
        silent (bool, optional): Hide the progress bar. Defaults to False.

    Raises:
        ConfigError: If the config is invalid
        OutputError: If the output tree cannot be written
    """
    config.validate()
    root = Path(out_dir) / f"{config.id}-{config.scale}"
    variants = config.expand()

    tasks = []
    for variant in variants:
        directory = _variant_dir(root, variant.variant)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create {directory}: {exc.strerror or exc}") from exc
        tasks.extend((variant, rep, directory) for rep in range(variant.run.reps))

    _log.info("running %s at %s scale: %d variants, %d repetitions", config.id, config.scale, len(variants), len(tasks))
    progress = tqdm(total=len(tasks), desc=f"{config.id}", disable=silent)
    runs: list[RunOutcome] = []
    if workers == 1 or len(tasks) == 1:
        for task in tasks:
            runs.append(_run_task(task))
            progress.update()
    else:
        with mp.Pool(workers) as pool:
            for outcome in pool.imap_unordered(_run_task, tasks):
                runs.append(outcome)
                progress.update()
    progress.close()

    # Completion order depends on the pool; results do not
    order = {v.variant: i for i, v in enumerate(variants)}
    runs.sort(key=lambda r: (order[r.variant], r.rep))

    summaries = {}
    for variant in variants:
        summaries[variant.variant] = aggregate_summaries([r.summary for r in runs if r.variant == variant.variant])

    summary_path = write_summary_csv(root / "summary.csv", config, summaries)
    return ExperimentResult(config, root, summary_path, runs, summaries)


SUMMARY_HEADER = ("scenario", "scale", "variant", "column") + SUMMARY_COLUMNS + ("reps",)


def summary_rows(config: ScenarioConfig, summaries: t.Mapping[str, Summary]) -> list[list[str]]:
    column = config.run.summary_column
    return [
        [config.id, config.scale, variant or "base", column]
        + [repr(float(v)) for v in s[:4]]
        + [str(s.count), str(config.run.reps)]
        for variant, s in summaries.items()
    ]


def write_summary_csv(path: Path, config: ScenarioConfig, summaries: t.Mapping[str, Summary]) -> Path:
    rows = summary_rows(config, summaries)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write summary {path}: {exc.strerror or exc}") from exc
    return path
