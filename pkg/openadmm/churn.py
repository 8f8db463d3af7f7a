"""
Stochastic churn processes and bounded reference signals.

Every process turns a tick index and the current graph into a
`ChurnDelta`. Departures are drawn first, one candidate at a time,
and a candidate whose removal would split the network is re-drawn.
Arrivals then attach to the survivors through an `AttachmentPolicy`.
"""

from __future__ import annotations
import typing as t
import logging

from math import ceil, exp
from typing import NamedTuple

import networkx as nx
import numpy as np

from .errors import ConfigError
from .labeled_space import Interval
from .open_graph import ChurnDelta, GraphSnapshot

_log = logging.getLogger(__name__)

# Re-draws allowed for a departure candidate before the departure is skipped
_MAX_DEPARTURE_DRAWS = 100

# Largest rate handed to a single multiplication run; exp(-rate)
# must stay far from underflow
_KNUTH_CHUNK = 30.0


def poisson_knuth(rate: float, rng: np.random.Generator) -> int:
    """Poisson draw by multiplying uniforms until they fall below exp(-rate)

    Large rates are split into chunks whose counts are summed.
    """
    if rate < 0:
        raise ValueError(f"negative Poisson rate {rate}")
    count = 0
    remaining = float(rate)
    while remaining > 0:
        chunk = min(remaining, _KNUTH_CHUNK)
        remaining -= chunk
        limit = exp(-chunk)
        product = rng.random()
        while product > limit:
            count += 1
            product *= rng.random()
    return count


class Phase(NamedTuple):
    """Join and leave parameters active up to and including tick `until` (None: forever)"""
    until: int | None
    join: float
    leave: float


def _active_phase(phases: t.Sequence[Phase], k: int) -> Phase:
    for phase in phases:
        if phase.until is None or k <= phase.until:
            return phase
    return phases[-1]


def _check_phases(phases: t.Sequence[Phase], upper: float | None) -> tuple[Phase, ...]:
    if not phases:
        raise ConfigError("a churn schedule needs at least one phase")
    checked = []
    last = -1
    for i, phase in enumerate(phases):
        phase = Phase(*phase)
        if phase.until is None and i != len(phases) - 1:
            raise ConfigError("only the last schedule phase may be open ended")
        if phase.until is not None:
            if phase.until <= last:
                raise ConfigError("schedule breakpoints must increase")
            last = phase.until
        for value in (phase.join, phase.leave):
            if value < 0 or (upper is not None and value > upper):
                raise ConfigError(f"schedule value {value} outside [0, {upper if upper is not None else 'inf'}]")
        checked.append(phase)
    return tuple(checked)


# --< Attachment >-- #

class AttachmentPolicy(object):
    """Chooses which surviving agents a new agent connects to"""

    def attach(self, survivors: t.Sequence[int], residual: GraphSnapshot, rng: np.random.Generator) -> frozenset[int]:
        raise NotImplementedError


class BernoulliAttachment(AttachmentPolicy):
    """One independent Bernoulli(p) edge per survivor, with one uniform edge forced if none is drawn"""

    prob: float

    def __init__(self, prob: float = 0.1) -> None:
        if not 0.0 <= prob <= 1.0:
            raise ConfigError(f"attachment probability {prob} outside [0, 1]")
        self.prob = prob

    def attach(self, survivors: t.Sequence[int], residual: GraphSnapshot, rng: np.random.Generator) -> frozenset[int]:
        hits = rng.random(len(survivors)) < self.prob
        chosen = frozenset(a for a, hit in zip(survivors, hits) if hit)
        if not chosen:
            chosen = frozenset([survivors[rng.integers(len(survivors))]])
        return chosen


class AverageDegreeAttachment(AttachmentPolicy):
    """Connects to ceil(average degree) survivors chosen uniformly without replacement"""

    def attach(self, survivors: t.Sequence[int], residual: GraphSnapshot, rng: np.random.Generator) -> frozenset[int]:
        count = min(max(ceil(residual.average_degree()), 1), len(survivors))
        picks = rng.choice(len(survivors), size=count, replace=False)
        return frozenset(survivors[p] for p in sorted(picks.tolist()))


# --< Processes >-- #

class ChurnProcess(object):
    """A closed network; subclasses decide how many agents join and leave each tick"""

    attachment: AttachmentPolicy
    tag: t.ClassVar[str] = "none"

    def __init__(self, attachment: AttachmentPolicy | None = None) -> None:
        self.attachment = AverageDegreeAttachment() if attachment is None else attachment

    def rates(self, k: int) -> tuple[float, float]:
        """Expected (arrivals, departures) at tick k"""
        return 0.0, 0.0

    def counts(self, k: int, rng: np.random.Generator) -> tuple[int, int]:
        return 0, 0

    def scaled(self, factor: float) -> ChurnProcess:
        """The same process with its tick breakpoints stretched by factor"""
        return self

    def _arrivals_after(self, wanted: int, departures_wanted: int, departures_done: int) -> int:
        return wanted

    def sample(self, k: int, g: GraphSnapshot, rng: np.random.Generator) -> ChurnDelta:
        n_join, n_leave = self.counts(k, rng)
        if n_join == 0 and n_leave == 0:
            return ChurnDelta()

        departed = _draw_departures(g, n_leave, rng)
        n_join = self._arrivals_after(n_join, n_leave, len(departed))

        residual = g.without(departed)
        survivors = sorted(residual.agents)
        arrived: dict[int, frozenset[int]] = {}
        for offset in range(n_join):
            arrived[g.next_id + offset] = self.attachment.attach(survivors, residual, rng)
        return ChurnDelta(arrived, departed)


def _draw_departures(g: GraphSnapshot, wanted: int, rng: np.random.Generator) -> frozenset[int]:
    remaining = g.to_networkx()
    departed: set[int] = set()
    # The last agent never leaves
    for _ in range(min(wanted, g.n - 1)):
        pool = sorted(remaining.nodes)
        # On a connected graph only cut vertices split it when removed
        cuts = set(nx.articulation_points(remaining))
        for _ in range(_MAX_DEPARTURE_DRAWS):
            candidate = pool[rng.integers(len(pool))]
            if candidate not in cuts:
                departed.add(candidate)
                remaining.remove_node(candidate)
                break
        else:
            _log.debug("departure skipped: %d draws all disconnected the graph", _MAX_DEPARTURE_DRAWS)
    return frozenset(departed)


class BernoulliSchedule(ChurnProcess):
    """At most one join and one leave per tick, with piecewise constant probabilities"""

    phases: tuple[Phase, ...]
    tag = "bernoulli"

    def __init__(self, phases: t.Sequence[Phase], attachment: AttachmentPolicy | None = None) -> None:
        super().__init__(BernoulliAttachment() if attachment is None else attachment)
        self.phases = _check_phases(phases, 1.0)

    @classmethod
    def open_consensus(cls, attachment: AttachmentPolicy | None = None) -> BernoulliSchedule:
        """The five phase schedule of the open consensus experiment"""
        return cls([
            Phase(1000, 0.01, 0.01),
            Phase(2000, 0.10, 0.01),
            Phase(3000, 0.01, 0.01),
            Phase(3500, 0.01, 0.10),
            Phase(None, 0.05, 0.05),
        ], attachment)

    def rates(self, k: int) -> tuple[float, float]:
        phase = _active_phase(self.phases, k)
        return phase.join, phase.leave

    def counts(self, k: int, rng: np.random.Generator) -> tuple[int, int]:
        p_join, p_leave = self.rates(k)
        return int(rng.random() < p_join), int(rng.random() < p_leave)

    def scaled(self, factor: float) -> BernoulliSchedule:
        return BernoulliSchedule(scale_phases(self.phases, factor), self.attachment)


class Poisson(ChurnProcess):
    """Pois(join) arrivals and Pois(leave) departures per tick, piecewise constant rates"""

    phases: tuple[Phase, ...]
    tag = "poisson"

    def __init__(self, phases: t.Sequence[Phase], attachment: AttachmentPolicy | None = None) -> None:
        super().__init__(attachment)
        self.phases = _check_phases(phases, None)

    @classmethod
    def constant(cls, join: float, leave: float | None = None, attachment: AttachmentPolicy | None = None) -> Poisson:
        return cls([Phase(None, join, join if leave is None else leave)], attachment)

    @classmethod
    def learning_modes(cls, attachment: AttachmentPolicy | None = None) -> Poisson:
        """Balanced, then join-heavy, then leave-heavy rates"""
        return cls([Phase(320, 1.0, 1.0), Phase(640, 1.0, 0.5), Phase(None, 0.5, 1.0)], attachment)

    def rates(self, k: int) -> tuple[float, float]:
        phase = _active_phase(self.phases, k)
        return phase.join, phase.leave

    def counts(self, k: int, rng: np.random.Generator) -> tuple[int, int]:
        join, leave = self.rates(k)
        return poisson_knuth(join, rng), poisson_knuth(leave, rng)

    def scaled(self, factor: float) -> Poisson:
        return Poisson(scale_phases(self.phases, factor), self.attachment)


class DecayingPoisson(ChurnProcess):
    """Arrivals and departures both Pois(rate * decay ** (k / divisor))"""

    rate: float
    decay: float
    divisor: float
    tag = "decaying"

    def __init__(self, rate: float = 5.0, decay: float = 0.9583, divisor: float = 5.0, attachment: AttachmentPolicy | None = None) -> None:
        super().__init__(attachment)
        if rate < 0:
            raise ConfigError(f"negative churn rate {rate}")
        if not 0.0 < decay < 1.0:
            raise ConfigError(f"decay {decay} outside (0, 1)")
        if divisor <= 0:
            raise ConfigError(f"decay divisor {divisor} must be positive")
        self.rate, self.decay, self.divisor = rate, decay, divisor

    def rates(self, k: int) -> tuple[float, float]:
        current = self.rate * self.decay ** (k / self.divisor)
        return current, current

    def counts(self, k: int, rng: np.random.Generator) -> tuple[int, int]:
        current, _ = self.rates(k)
        return poisson_knuth(current, rng), poisson_knuth(current, rng)


class Replacement(ChurnProcess):
    """m ~ Pois(rate) agents leave and m fresh agents join, so the size never changes"""

    rate: float
    tag = "replacement"

    def __init__(self, rate: float = 1.0, attachment: AttachmentPolicy | None = None) -> None:
        super().__init__(attachment)
        if rate < 0:
            raise ConfigError(f"negative churn rate {rate}")
        self.rate = rate

    def rates(self, k: int) -> tuple[float, float]:
        return self.rate, self.rate

    def counts(self, k: int, rng: np.random.Generator) -> tuple[int, int]:
        m = poisson_knuth(self.rate, rng)
        return m, m

    def _arrivals_after(self, wanted: int, departures_wanted: int, departures_done: int) -> int:
        return departures_done


def scale_phases(phases: t.Sequence[Phase], factor: float) -> tuple[Phase, ...]:
    return tuple(
        Phase(None if p.until is None else max(1, round(p.until * factor)), p.join, p.leave)
        for p in phases
    )


def sample_churn(process: ChurnProcess, k: int, g: GraphSnapshot, rng: np.random.Generator) -> ChurnDelta:
    return process.sample(k, g, rng)


# --< Signals >-- #

class SignalModel(object):
    """Per-agent reference signals drifting inside a fixed span

    Attributes:
        span (Interval): Every signal stays in [lo, hi]
        sigma (float): Largest change of a remaining agent's signal in one tick
        values (dict[int, float]): Current signal per agent
    """

    span: Interval
    sigma: float
    values: dict[int, float]

    def __init__(self, lo: float, hi: float, sigma: float, values: t.Mapping[int, float]) -> None:
        if sigma < 0:
            raise ConfigError(f"negative signal step {sigma}")
        try:
            self.span = Interval(lo, hi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.sigma = float(sigma)
        self.values = {int(a): float(v) for a, v in values.items()}
        outside = [a for a, v in self.values.items() if not self.span.contains(v)]
        if outside:
            raise ValueError(f"signals of agents {sorted(outside)} outside [{lo}, {hi}]")

    @classmethod
    def sample(cls, agents: t.Iterable[int], lo: float, hi: float, sigma: float, rng: np.random.Generator) -> SignalModel:
        ordered = sorted(agents)
        return cls(lo, hi, sigma, dict(zip(ordered, rng.uniform(lo, hi, size=len(ordered)).tolist())))

    @property
    def omega(self) -> float:
        return self.span.size()

    def step(self, delta: ChurnDelta, rng: np.random.Generator) -> SignalModel:
        """Moves remaining signals by a clamped uniform step and samples arrivals"""
        remaining = sorted(a for a in self.values if a not in delta.departed)
        moves = rng.uniform(-self.sigma, self.sigma, size=len(remaining))
        values = {a: self.span.clamp(self.values[a] + s) for a, s in zip(remaining, moves.tolist())}
        arrivals = sorted(delta.arrived)
        values.update(zip(arrivals, rng.uniform(self.span.lo, self.span.hi, size=len(arrivals)).tolist()))
        return SignalModel(self.span.lo, self.span.hi, self.sigma, values)


def step_signals(model: SignalModel, delta: ChurnDelta, rng: np.random.Generator) -> SignalModel:
    return model.step(delta, rng)
