"""
The Open ADMM engine.

Every agent i keeps one state x^{ij} per neighbor j and an output y^i.
A synchronous tick relaxes each surviving edge state against the
neighbor's reverse state and last output, then each agent takes a prox
step of its local cost around the average of its edge states. Edges
created by arrivals are seeded by the chosen initialization variant and
edges of departed agents are simply forgotten.
"""

from __future__ import annotations
import typing as t
import logging

from dataclasses import dataclass, field
from enum import Enum
from math import isfinite

import numpy as np

from .costs import ConsensusMedian, ProxQuery
from .errors import ConfigError, Diverged
from .labeled_space import LabeledVector
from .open_graph import ChurnDelta, GraphSnapshot, apply_churn, random_graph

if t.TYPE_CHECKING:
    from .churn import SignalModel
    from .costs import CostModel
    from .experiments import ScenarioConfig
    from .families import CostFamily

_log = logging.getLogger(__name__)

Edge = tuple[int, int]
Costs = t.Mapping[int, "CostModel"]


class InitVariant(str, Enum):
    """Seed value of a new edge state x^{ij}"""

    LOCAL_OPTIMUM = "local-optimum"
    ZERO = "zero"
    NEIGHBOR_AVERAGE = "neighbor-average"


@dataclass(frozen=True)
class AdmmParams:
    """Tuning of the engine

    Attributes:
        alpha (float): Relaxation, strictly between 0 and 1
        rho (float): Penalty, positive
        init (InitVariant): Seed of new edge states
        median_lagged (bool): Feed median agents the previous tick's edge states
    """

    alpha: float = 0.99
    rho: float = 0.5
    init: InitVariant = InitVariant.LOCAL_OPTIMUM
    median_lagged: bool = False

    def __post_init__(self) -> None:
        if not (isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise ConfigError(f"relaxation alpha must lie in (0, 1), got {self.alpha}")
        if not (isfinite(self.rho) and self.rho > 0.0):
            raise ConfigError(f"penalty rho must be positive, got {self.rho}")
        try:
            object.__setattr__(self, "init", InitVariant(self.init))
        except ValueError:
            raise ConfigError(f"unknown initialization {self.init!r}") from None


@dataclass(frozen=True)
class NetworkState:
    """Edge states and agent outputs at one tick"""

    tick: int
    x: t.Mapping[Edge, np.ndarray]
    y: t.Mapping[int, np.ndarray]

    @property
    def dim(self) -> int:
        for value in self.y.values():
            return value.size
        for value in self.x.values():
            return value.size
        return 0

    def edge_vector(self) -> LabeledVector:
        """x as a labeled vector over (i, j, coordinate) labels"""
        return LabeledVector(
            ((i, j, c), float(v)) for (i, j), vec in self.x.items() for c, v in enumerate(vec)
        )

    def output_vector(self) -> LabeledVector:
        return LabeledVector(
            ((i, c), float(v)) for i, vec in self.y.items() for c, v in enumerate(vec)
        )

    def check_labels(self, g: GraphSnapshot) -> None:
        if set(self.x) != set(g.ordered_edges):
            raise ValueError("edge states do not match the graph's ordered edges")
        if set(self.y) != set(g.agents):
            raise ValueError("outputs do not match the graph's agents")


@dataclass(frozen=True)
class TickFrame:
    """Everything known about the network at the end of one tick"""

    k: int
    graph: GraphSnapshot
    state: NetworkState
    costs: Costs
    delta: ChurnDelta = field(default_factory=ChurnDelta)
    signals: SignalModel | None = None
    family: CostFamily | None = None


def _edge_seed(
        agent: int,
        g: GraphSnapshot,
        veterans: t.AbstractSet[int],
        previous_y: t.Mapping[int, np.ndarray],
        costs: Costs,
        params: AdmmParams
    ) -> np.ndarray:
    cost = costs[agent]
    if params.init is InitVariant.ZERO:
        return np.zeros(cost.dim)
    if params.init is InitVariant.NEIGHBOR_AVERAGE:
        history = [previous_y[j] for j in sorted(g.neighbors(agent)) if j in veterans and j in previous_y]
        if history:
            return params.rho * np.mean(history, axis=0)
    return params.rho * np.asarray(cost.local_minimizer(), dtype=float)


def _outputs(
        g: GraphSnapshot,
        x: t.Mapping[Edge, np.ndarray],
        costs: Costs,
        params: AdmmParams,
        previous: NetworkState | None = None,
        tick: int = 0
    ) -> dict[int, np.ndarray]:
    y: dict[int, np.ndarray] = {}
    for i in sorted(g.agents):
        cost = costs[i]
        neighbors = sorted(g.neighbors(i))
        if not neighbors:
            # Lone agent: the prox aggregate is empty
            y[i] = np.array(cost.local_minimizer(), dtype=float)
            continue

        source = x
        if params.median_lagged and previous is not None and isinstance(cost, ConsensusMedian):
            source = {e: previous.x.get(e, x[e]) for e in ((i, j) for j in neighbors)}

        w = params.rho * len(neighbors)
        anchor = np.sum([source[(i, j)] for j in neighbors], axis=0) / w
        if not np.all(np.isfinite(anchor)):
            raise Diverged(tick)
        warm = previous.y.get(i) if previous is not None else None
        y[i] = cost.prox(ProxQuery(anchor, w), warm_start=warm)
    return y


def initial_state(
        g: GraphSnapshot,
        costs: Costs,
        params: AdmmParams,
        rng: np.random.Generator | None = None,
        box: tuple[float, float] | None = None
    ) -> NetworkState:
    """Seeds every edge state and computes the first outputs

    Args:
        g (GraphSnapshot): Starting graph
        costs (Mapping[int, CostModel]): Local costs
        params (AdmmParams): Engine tuning; its init variant seeds the edges unless `box` is given
        rng (np.random.Generator, optional): Needed with `box`
        box (tuple[float, float], optional): Draw each edge state uniformly from [lo, hi]

    Returns:
        NetworkState: The state at tick 0
    """
    x: dict[Edge, np.ndarray] = {}
    for (i, j) in g.ordered_edges:
        if box is not None:
            if rng is None:
                raise ValueError("a random initial box needs an rng")
            x[(i, j)] = rng.uniform(box[0], box[1], size=costs[i].dim)
        else:
            x[(i, j)] = _edge_seed(i, g, frozenset(), {}, costs, params)
    return NetworkState(0, x, _outputs(g, x, costs, params))


def init_arriving(state: NetworkState, g: GraphSnapshot, delta: ChurnDelta, costs: Costs, params: AdmmParams) -> NetworkState:
    """Drops states of vanished edges and seeds states of new ones

    `g` is the graph after the churn event. States of surviving edges are
    left at their previous values for `admm_tick` to update.
    """
    veterans = g.agents - frozenset(delta.arrived)
    edges = set(g.ordered_edges)
    x = {e: v for e, v in state.x.items() if e in edges}
    for (i, j) in g.ordered_edges:
        if (i, j) not in x:
            x[(i, j)] = _edge_seed(i, g, veterans, state.y, costs, params)
    return NetworkState(state.tick, x, state.y)


def admm_tick(state: NetworkState, g_prev: GraphSnapshot, g_now: GraphSnapshot, costs: Costs, params: AdmmParams) -> NetworkState:
    """One synchronous round of the engine

    Edges present in both graphs relax with
    x^{ij} <- (1 - alpha) x^{ij} - alpha x^{ji} + 2 alpha rho y^j,
    using the previous tick's values. Edges new in `g_now` keep the seed
    written by `init_arriving`. Every agent then updates its output.

    Raises:
        ValueError: If a new edge was never seeded
        Diverged: If the relaxed states or a prox anchor are not finite
        ProxSolverStalled: From an agent's prox
    """
    alpha, rho = params.alpha, params.rho
    old_edges = set(g_prev.ordered_edges)
    kept = [e for e in g_now.ordered_edges if e in old_edges]

    x: dict[Edge, np.ndarray] = {}
    if kept:
        own = np.stack([state.x[e] for e in kept])
        reverse = np.stack([state.x[(j, i)] for (i, j) in kept])
        peer = np.stack([state.y[j] for (_, j) in kept])
        relaxed = (1.0 - alpha) * own - alpha * reverse + (2.0 * alpha * rho) * peer
        if not np.all(np.isfinite(relaxed)):
            raise Diverged(state.tick + 1)
        x.update(zip(kept, relaxed))

    for e in g_now.ordered_edges:
        if e not in x:
            try:
                x[e] = state.x[e]
            except KeyError:
                raise ValueError(f"edge {e} has no initialized state") from None

    return NetworkState(state.tick + 1, x, _outputs(g_now, x, costs, params, previous=state, tick=state.tick + 1))


def run_scenario(config: ScenarioConfig, rep: int = 0) -> t.Iterator[TickFrame]:
    """Runs one repetition of a scenario, yielding a frame per tick

    Tick 0 holds the initial state. Each later tick samples churn, applies
    it to the graph, advances the costs, seeds new edges and runs one round.
    """
    config.validate()
    streams = config.streams(rep)
    params = config.admm.params()

    g = random_graph(config.graph.n0, config.graph.edge_prob, streams.graph)
    family = config.build_family(streams.costs)
    costs = family.initial(g.agents, streams.costs)
    process = config.build_churn()
    state = initial_state(g, costs, params, rng=streams.state, box=config.admm.initial_box())

    _log.info("scenario %s rep %d: %d agents, %d edges", config.id, rep, g.n, len(g.edges))
    yield TickFrame(0, g, state, costs, ChurnDelta(), family.signals, family)

    for k in range(1, config.run.horizon):
        delta = process.sample(k, g, streams.churn)
        g_next = apply_churn(g, delta)
        costs = family.advance(costs, delta, streams.costs)
        state = init_arriving(state, g_next, delta, costs, params)
        state = admm_tick(state, g, g_next, costs, params)
        g = g_next
        if not delta.is_empty:
            _log.debug("tick %d: +%d -%d agents, n=%d", k, len(delta.arrived), len(delta.departed), g.n)
        yield TickFrame(k, g, state, costs, delta, family.signals, family)
