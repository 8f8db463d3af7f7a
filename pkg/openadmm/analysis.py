"""
Metrics of a running network and the radii its distances are held to.

Distances are normalized by the square root of the label count so that
networks of different sizes can be compared on one axis.
"""

from __future__ import annotations
import typing as t
import csv
import logging

from dataclasses import astuple, dataclass, fields
from math import isfinite, nan, sqrt
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BoundError, EmptyTargetSet, NonsmoothCost, OutputError
from .labeled_space import Interval, LabeledBox

if t.TYPE_CHECKING:
    from .costs import CostModel
    from .open_admm import TickFrame
    from .reference_oracles import CentralizedSolution

_log = logging.getLogger(__name__)

Edge = tuple[int, int]
SolutionLike = t.Union[LabeledBox, np.ndarray, t.Sequence[float]]


# --< Bounds >-- #

@dataclass(frozen=True)
class BoundInputs:
    """Parameters of the linear convergence bound

    Attributes:
        gamma (float): Paracontraction factor of the standard maps, in [0, 1)
        beta (float): Departure bound, in (gamma, 1]
        B (float): Largest move of the set of interest per tick
        H (float): Largest distance an arrival can add
        rho (float): Penalty of the engine
        sigma (float): Signal step bound, when known
        omega (float): Signal span, when known
    """

    gamma: float
    beta: float
    B: float
    H: float
    rho: float
    sigma: float = nan
    omega: float = nan

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise BoundError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not self.beta <= 1.0:
            raise BoundError(f"beta must not exceed 1, got {self.beta}")
        if not self.gamma < self.beta:
            raise BoundError(f"contraction slower than departure bound: gamma={self.gamma} >= beta={self.beta}")
        if not (self.B >= 0.0 and self.H >= 0.0):
            raise BoundError(f"variation bounds must be non-negative, got B={self.B}, H={self.H}")
        if not (isfinite(self.rho) and self.rho > 0.0):
            raise BoundError(f"rho must be positive, got {self.rho}")

    @classmethod
    def from_signals(cls, gamma: float, beta: float, rho: float, sigma: float, omega: float) -> BoundInputs:
        """Consensus bounds: B = rho sigma, H = rho omega"""
        if sigma < 0 or omega < 0:
            raise BoundError(f"signal bounds must be non-negative, got sigma={sigma}, omega={omega}")
        return cls(gamma, beta, rho * sigma, rho * omega, rho, sigma, omega)

    @property
    def theta(self) -> float:
        return self.gamma / self.beta

    @property
    def radius(self) -> float:
        return (self.B + self.H) / (1.0 - self.theta)


class BoundResult(NamedTuple):
    theta: float
    radius: float
    bound: float


def linear_rate_bound(inputs: BoundInputs, k: int, d0: float) -> BoundResult:
    """Rate, asymptotic radius and the bound on the normalized distance at tick k

    The bound is theta^k d0 + (1 - theta^k) / (1 - theta) (B + H).
    """
    if k < 0:
        raise ValueError(f"tick must be non-negative, got {k}")
    theta = inputs.theta
    decay = theta ** k
    bound = decay * d0 + (1.0 - decay) / (1.0 - theta) * (inputs.B + inputs.H)
    return BoundResult(theta, inputs.radius, bound)


def linear_rate_curve(inputs: BoundInputs, d0: float, horizon: int) -> np.ndarray:
    """Per-tick bounds for k = 0 .. horizon - 1; B = H = 0 gives the pure linear decay"""
    ticks = np.arange(horizon)
    decay = inputs.theta ** ticks
    return decay * d0 + (1.0 - decay) / (1.0 - inputs.theta) * (inputs.B + inputs.H)


def consensus_bound(inputs: BoundInputs, n: int) -> float:
    """Radius of the outputs around the consensus set, (R / rho) sqrt(n)"""
    return inputs.radius / inputs.rho * sqrt(n)


# --< Distances >-- #

def _solution_intervals(solution: SolutionLike) -> list[Interval]:
    if isinstance(solution, LabeledBox):
        if not solution.intervals:
            raise EmptyTargetSet()
        return [solution.intervals[c] for c in sorted(solution.intervals)]
    point = np.atleast_1d(np.asarray(solution, dtype=float))
    if point.size == 0:
        raise EmptyTargetSet()
    return [Interval.point(float(v)) for v in point]


def consensus_distance(
        y: t.Mapping[int, np.ndarray],
        solution: SolutionLike,
        p: int | None = None,
        n: int | None = None
    ) -> float:
    """Distance of the outputs to the consensus set, over sqrt(p n)

    The consensus set holds 1 kron y* for every y* in `solution`. Per
    coordinate the nearest y* is the clamp of the outputs' mean into the
    solution interval.

    Args:
        y (Mapping[int, np.ndarray]): Output per agent
        solution (LabeledBox | array): Solution set over coordinate labels, or a single point
        p (int, optional): Dimension; taken from `solution` when omitted
        n (int, optional): Agent count; taken from `y` when omitted

    Raises:
        EmptyTargetSet: If the solution set has no coordinates
        ValueError: If there are no outputs
    """
    intervals = _solution_intervals(solution)
    p = len(intervals) if p is None else p
    if not y:
        raise ValueError("no outputs to measure")
    n = len(y) if n is None else n

    stacked = np.stack([np.atleast_1d(y[a]) for a in sorted(y)])
    if stacked.shape[1] != len(intervals):
        raise ValueError(f"outputs have dimension {stacked.shape[1]}, solution set has {len(intervals)}")

    total = 0.0
    for c, interval in enumerate(intervals):
        column = stacked[:, c]
        center = interval.clamp(float(column.mean()))
        total += float(np.sum((column - center) ** 2))
    return sqrt(total) / sqrt(p * n)


def tsi_distance(x: t.Mapping[Edge, np.ndarray], solution: SolutionLike, rho: float) -> float:
    """Distance of the edge states to the set of interest, over sqrt(|I|)

    The set holds every x with x^{ij} + x^{ji} = 2 rho y* on all edges for
    some y* in `solution`. A network without edges is at distance 0.
    """
    intervals = _solution_intervals(solution)
    if not x:
        return 0.0

    sums = []
    for (i, j), own in sorted(x.items()):
        if i < j:
            sums.append(np.atleast_1d(own) + np.atleast_1d(x[(j, i)]))
    sums = np.stack(sums)

    total = 0.0
    for c, interval in enumerate(intervals):
        column = sums[:, c]
        center = interval.clamp(float(column.mean()) / (2.0 * rho))
        total += 0.5 * float(np.sum((column - 2.0 * rho * center) ** 2))
    return sqrt(total) / sqrt(len(x) * len(intervals))


def epsilon_metric(costs: t.Mapping[int, CostModel], y: t.Mapping[int, np.ndarray]) -> float:
    """||sum_i grad f_i(mean of y)||^2

    Raises:
        NonsmoothCost: If any cost has no gradient
    """
    if not y:
        raise ValueError("no outputs to measure")
    for cost in costs.values():
        if not cost.smooth:
            raise NonsmoothCost(cost.kind)
    mean = np.mean([np.atleast_1d(y[a]) for a in sorted(y)], axis=0)
    total = np.sum([costs[a].gradient(mean) for a in sorted(costs)], axis=0)
    return float(total @ total)


# --< Traces >-- #

@dataclass(frozen=True)
class TraceRecord:
    """One row of a run's trace

    `eps_k` is NaN when a cost is nonsmooth and `delta_bound` is NaN when
    the scenario declares no signal bounds.
    """

    k: int
    n_k: int
    xi_k: int
    d_cons_norm: float
    delta_bound: float
    d_tsi_norm: float
    eps_k: float
    beta_k: float
    arrivals: int
    departures: int

    @property
    def eps_avg_k(self) -> float:
        """eps_k over n_k^2, the squared norm of the mean gradient at the mean output"""
        return self.eps_k / (self.n_k * self.n_k) if self.n_k else float("nan")

    def as_row(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v) for v in astuple(self)]

    @classmethod
    def from_row(cls, row: t.Mapping[str, str]) -> TraceRecord:
        values = {}
        for f in fields(cls):
            raw = row[f.name]
            values[f.name] = int(raw) if f.type in ("int", int) else float(raw)
        return cls(**values)


CSV_COLUMNS = tuple(f.name for f in fields(TraceRecord))
# Columns a summary may describe; derived ones are never written to traces
SUMMARY_SOURCES = CSV_COLUMNS + ("eps_avg_k",)
SUMMARY_COLUMNS = ("min", "mean", "std", "max", "count")


class TraceRecorder(object):
    """Turns tick frames into trace records

    The departure ratio of each tick compares the edge state counts of
    consecutive frames, so frames must be fed in order.
    """

    rho: float
    bounds: BoundInputs | None
    records: list[TraceRecord]

    _previous_size: int | None

    def __init__(self, rho: float, bounds: BoundInputs | None = None) -> None:
        self.rho = rho
        self.bounds = bounds
        self.records = []
        self._previous_size = None

    def observe(self, frame: TickFrame, solution: CentralizedSolution) -> TraceRecord:
        g, state = frame.graph, frame.state
        p = state.dim
        size = g.xi * p

        if self._previous_size is None or self._previous_size == 0:
            beta = 1.0
        else:
            beta = sqrt(size) / sqrt(self._previous_size)
        self._previous_size = size

        smooth = all(cost.smooth for cost in frame.costs.values())
        record = TraceRecord(
            k=frame.k,
            n_k=g.n,
            xi_k=g.xi,
            d_cons_norm=consensus_distance(state.y, solution.solution_set),
            delta_bound=nan if self.bounds is None else consensus_bound(self.bounds, g.n),
            d_tsi_norm=tsi_distance(state.x, solution.solution_set, self.rho),
            eps_k=epsilon_metric(frame.costs, state.y) if smooth else nan,
            beta_k=beta,
            arrivals=len(frame.delta.arrived),
            departures=len(frame.delta.departed),
        )
        self.records.append(record)
        return record


class Summary(NamedTuple):
    min: float
    mean: float
    std: float
    max: float
    count: int


def summarize_trace(records: t.Sequence[TraceRecord], column: str, burn_in: float = 0.5) -> Summary:
    """Statistics of one column over the records after the burn-in fraction

    Raises:
        ValueError: For an unknown column or an empty window
    """
    if column not in SUMMARY_SOURCES:
        raise ValueError(f"unknown trace column {column!r}")
    if not 0.0 <= burn_in < 1.0:
        raise ValueError(f"burn-in fraction must lie in [0, 1), got {burn_in}")
    window = records[int(len(records) * burn_in):]
    if not window:
        raise ValueError("empty window after burn-in")
    values = np.array([getattr(r, column) for r in window], dtype=float)
    return Summary(float(values.min()), float(values.mean()), float(values.std()), float(values.max()), values.size)


def aggregate_summaries(summaries: t.Sequence[Summary]) -> Summary:
    """Monte Carlo fold: each statistic averaged over runs, counts summed"""
    if not summaries:
        raise ValueError("no summaries to aggregate")
    table = np.array([s[:4] for s in summaries], dtype=float)
    means = table.mean(axis=0)
    return Summary(*(float(v) for v in means), sum(s.count for s in summaries))


def empirical_departure_bound(trace: t.Sequence[TraceRecord] | t.Sequence[int]) -> float:
    """Smallest ratio sqrt(|I_k|) / sqrt(|I_{k-1}|) seen over a trace

    Accepts trace records, whose beta_k already holds the ratio, or the
    raw sequence of label counts.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    if isinstance(trace[0], TraceRecord):
        return min(r.beta_k for r in trace)  # type: ignore[union-attr]

    sizes = [int(s) for s in trace]  # type: ignore[arg-type]
    if min(sizes) <= 0:
        raise ValueError("label counts must stay positive")
    ratios = [sqrt(b) / sqrt(a) for a, b in zip(sizes, sizes[1:])]
    return min(ratios, default=1.0)


# --< CSV >-- #

def write_trace_csv(path: str | Path, records: t.Iterable[TraceRecord]) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for record in records:
                writer.writerow(record.as_row())
    except OSError as exc:
        raise OutputError(f"cannot write trace {path}: {exc.strerror or exc}") from exc
    return path


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValueError(f"{path} does not carry the trace header")
            return [TraceRecord.from_row(row) for row in reader]
    except OSError as exc:
        raise OutputError(f"cannot read trace {path}: {exc.strerror or exc}") from exc
