"""
Time-varying undirected graphs whose agent set changes through churn.

Snapshots are immutable. The next snapshot is always built by
`apply_churn`, which refuses any event that would disconnect the
network or leave an arriving agent without edges.
"""

from __future__ import annotations
import typing as t
import logging

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import ConfigError, DisconnectingDeparture, GraphError, IsolatedArrival

_log = logging.getLogger(__name__)

AgentId = int
Edge = tuple[int, int]


def _undirected(i: int, j: int) -> Edge:
    if i == j:
        raise GraphError(f"self loop on agent {i}")
    return (i, j) if i < j else (j, i)


class GraphSnapshot(object):
    """An undirected graph at one tick

    Attributes:
        agents (frozenset[int]): The agent set
        edges (frozenset[Edge]): Unordered edges stored as (low id, high id)
        next_id (int): Smallest id never used so far; arrivals must be at or above it
    """

    agents: frozenset[AgentId]
    edges: frozenset[Edge]
    next_id: int

    _neighbors: dict[AgentId, frozenset[AgentId]]
    _ordered: tuple[Edge, ...]

    def __init__(self, agents: t.Iterable[AgentId], edges: t.Iterable[tuple[AgentId, AgentId]] = (), next_id: int | None = None) -> None:
        self.agents = frozenset(int(a) for a in agents)
        self.edges = frozenset(_undirected(int(i), int(j)) for i, j in edges)

        for i, j in self.edges:
            if i not in self.agents or j not in self.agents:
                raise GraphError(f"edge ({i}, {j}) references an unknown agent")

        watermark = max(self.agents) + 1 if self.agents else 0
        self.next_id = watermark if next_id is None else int(next_id)
        if self.next_id < watermark:
            raise GraphError(f"next_id {self.next_id} is below existing agent ids")

        neighbors: dict[AgentId, set[AgentId]] = {a: set() for a in self.agents}
        for i, j in self.edges:
            neighbors[i].add(j)
            neighbors[j].add(i)
        self._neighbors = {a: frozenset(s) for a, s in neighbors.items()}
        self._ordered = tuple(sorted([(i, j) for i, j in self.edges] + [(j, i) for i, j in self.edges]))

    @classmethod
    def path(cls, n: int, first_id: int = 0) -> GraphSnapshot:
        ids = range(first_id, first_id + n)
        return cls(ids, zip(ids, ids[1:]))

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def xi(self) -> int:
        """Sum of degrees, twice the number of unordered edges"""
        return 2 * len(self.edges)

    @property
    def ordered_edges(self) -> tuple[Edge, ...]:
        return self._ordered

    def neighbors(self, agent: AgentId) -> frozenset[AgentId]:
        return self._neighbors[agent]

    def degree(self, agent: AgentId) -> int:
        return len(self._neighbors[agent])

    def average_degree(self) -> float:
        return self.xi / self.n if self.agents else 0.0

    def has_edge(self, i: AgentId, j: AgentId) -> bool:
        return i != j and _undirected(i, j) in self.edges

    def without(self, departed: t.AbstractSet[AgentId]) -> GraphSnapshot:
        """The residual graph after removing agents, connected or not"""
        return GraphSnapshot(
            self.agents - departed,
            [(i, j) for i, j in self.edges if i not in departed and j not in departed],
            next_id=self.next_id
        )

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(sorted(self.agents))
        graph.add_edges_from(sorted(self.edges))
        return graph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSnapshot):
            return NotImplemented
        return self.agents == other.agents and self.edges == other.edges and self.next_id == other.next_id

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"GraphSnapshot(n={self.n}, edges={len(self.edges)}, next_id={self.next_id})"


@dataclass(frozen=True)
class ChurnDelta:
    """Agents joining and leaving during one tick

    Attributes:
        arrived (Mapping[int, frozenset[int]]): New agent id to the agents it attaches to
        departed (frozenset[int]): Agents leaving
    """

    arrived: t.Mapping[AgentId, frozenset[AgentId]] = field(default_factory=dict)
    departed: frozenset[AgentId] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrived", {int(a): frozenset(int(b) for b in attach) for a, attach in self.arrived.items()})
        object.__setattr__(self, "departed", frozenset(int(a) for a in self.departed))

    @property
    def is_empty(self) -> bool:
        return not self.arrived and not self.departed


@dataclass(frozen=True)
class Transition:
    """Agent and edge sets relating two consecutive snapshots"""

    previous: GraphSnapshot
    current: GraphSnapshot

    @property
    def remaining(self) -> frozenset[AgentId]:
        return self.current.agents & self.previous.agents

    @property
    def arrived(self) -> frozenset[AgentId]:
        return self.current.agents - self.previous.agents

    @property
    def departed(self) -> frozenset[AgentId]:
        return self.previous.agents - self.current.agents

    @property
    def remaining_edges(self) -> frozenset[Edge]:
        return frozenset(self.current.ordered_edges) & frozenset(self.previous.ordered_edges)

    @property
    def arriving_edges(self) -> frozenset[Edge]:
        return frozenset(self.current.ordered_edges) - frozenset(self.previous.ordered_edges)

    @property
    def departing_edges(self) -> frozenset[Edge]:
        return frozenset(self.previous.ordered_edges) - frozenset(self.current.ordered_edges)

    def remaining_neighbors(self, agent: AgentId) -> frozenset[AgentId]:
        if agent not in self.previous.agents:
            return frozenset()
        return self.current.neighbors(agent) & self.previous.neighbors(agent)

    def arriving_neighbors(self, agent: AgentId) -> frozenset[AgentId]:
        if agent not in self.previous.agents:
            return self.current.neighbors(agent)
        return self.current.neighbors(agent) - self.previous.neighbors(agent)

    def departing_neighbors(self, agent: AgentId) -> frozenset[AgentId]:
        if agent not in self.current.agents:
            return self.previous.neighbors(agent)
        return self.previous.neighbors(agent) - self.current.neighbors(agent)


def transition(g_prev: GraphSnapshot, g_now: GraphSnapshot) -> Transition:
    return Transition(g_prev, g_now)


def is_connected(g: GraphSnapshot) -> bool:
    """Reachability check; the empty graph counts as connected"""
    if g.n == 0:
        return True
    return nx.is_connected(g.to_networkx())


def random_graph(n: int, edge_prob: float, rng_seed: int | np.random.Generator | None = None, first_id: int = 0) -> GraphSnapshot:
    """Draws an Erdos-Renyi graph and patches it into a connected one

    Components are merged in order of their smallest agent id, each one
    joined to the already merged part by a single uniformly chosen edge.

    Args:
        n (int): Number of agents, at least 1
        edge_prob (float): Independent edge probability in [0, 1]
        rng_seed (int | np.random.Generator, optional): Seed or generator
        first_id (int, optional): Id of the first agent. Defaults to 0.

    Returns:
        GraphSnapshot: A connected graph with agents first_id .. first_id + n - 1
    """
    if n < 1:
        raise ConfigError(f"random_graph needs at least one agent, got {n}")
    if not 0.0 <= edge_prob <= 1.0:
        raise ConfigError(f"edge probability {edge_prob} outside [0, 1]")

    rng = np.random.default_rng(rng_seed)
    ids = list(range(first_id, first_id + n))
    upper = np.triu(rng.random((n, n)) < edge_prob, k=1)
    edges = {(ids[a], ids[b]) for a, b in zip(*np.nonzero(upper))}

    graph = nx.Graph()
    graph.add_nodes_from(ids)
    graph.add_edges_from(edges)
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])

    merged = list(components[0])
    for component in components[1:]:
        u = merged[rng.integers(len(merged))]
        v = component[rng.integers(len(component))]
        edges.add(_undirected(u, v))
        merged.extend(component)

    if len(components) > 1:
        _log.debug("random graph on %d agents patched with %d bridging edges", n, len(components) - 1)
    return GraphSnapshot(ids, edges, next_id=first_id + n)


def apply_churn(g: GraphSnapshot, delta: ChurnDelta) -> GraphSnapshot:
    """Builds the next snapshot from a churn event

    Departures are removed first, then arrivals are attached.

    Raises:
        DisconnectingDeparture: If the graph left by the departures is disconnected
        IsolatedArrival: If an arrival has no edge to a surviving agent
        GraphError: For unknown, reused or departing ids in the event
    """
    if delta.is_empty:
        return g

    unknown = delta.departed - g.agents
    if unknown:
        raise GraphError(f"departing agents {sorted(unknown)} are not in the graph")
    for agent in delta.arrived:
        if agent in g.agents or agent < g.next_id:
            raise GraphError(f"reused agent id {agent}")

    residual = g.without(delta.departed)
    if not is_connected(residual):
        raise DisconnectingDeparture(delta.departed)

    arrivals = frozenset(delta.arrived)
    edges = set(residual.edges)
    for agent, attach in sorted(delta.arrived.items()):
        if not attach:
            raise IsolatedArrival(agent)
        stray = attach - residual.agents - arrivals
        if stray:
            raise GraphError(f"agent {agent} attaches to agents {sorted(stray)} outside the graph")
        if residual.agents and not attach & residual.agents:
            raise IsolatedArrival(agent)
        edges.update(_undirected(agent, other) for other in attach)

    next_id = max([g.next_id] + [a + 1 for a in arrivals])
    result = GraphSnapshot(residual.agents | arrivals, edges, next_id=next_id)
    if not is_connected(result):
        raise GraphError("arrivals do not form a connected graph")
    return result
