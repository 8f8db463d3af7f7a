"""
Ground truth for the engine: the dense matrix form of one round, explicit
members of the trajectory of fixed-point sets, and a centralized solver.

Everything here is dense and slow on purpose and is capped at a few
dozen agents.
"""

from __future__ import annotations
import typing as t
import logging

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect, brentq
from scipy.special import expit

from .costs import ConsensusAvg, ConsensusMax, ConsensusMedian, CostModel, LogisticRidge, ProxQuery, consensus_cost
from .costs.solvers import accelerated_gradient
from .errors import ConfigError
from .labeled_space import AffineEdgeSet, Interval, LabeledBox, LabeledVector, distance_to_set
from .open_admm import AdmmParams, NetworkState, admm_tick
from .open_graph import GraphSnapshot, random_graph

_log = logging.getLogger(__name__)

_DENSE_AGENT_CAP = 32

# Points of the coarse grid that brackets the numeric prox
_ORACLE_GRID = 401

PI = np.array([[0.0, 1.0], [1.0, 0.0]])
J = PI + np.eye(2)


class CompactOperatorMatrices(object):
    """Dense matrices of one round over a fixed graph

    Rows are ordered edges grouped per unordered edge, (i, j) then (j, i),
    each expanded to `dim` coordinates. Columns of A are agents in sorted
    order, also expanded to `dim` coordinates.

    Attributes:
        A (np.ndarray): Lifts agent outputs onto the edges leaving each agent
        D (np.ndarray): Block diagonal 1 / (rho * degree); zero for a lone agent
        P (np.ndarray): Swaps the two ordered states of every edge
        Lambda (dict[Edge, np.ndarray]): The 2 x n selector [e_i, e_j]^T per edge
    """

    agents: list[int]
    rows: list[tuple[int, int]]
    dim: int
    rho: float
    degrees: np.ndarray

    A: np.ndarray
    D: np.ndarray
    P: np.ndarray
    Lambda: dict[tuple[int, int], np.ndarray]

    def __init__(self, g: GraphSnapshot, dim: int, rho: float) -> None:
        if g.n > _DENSE_AGENT_CAP:
            raise ConfigError(f"dense oracle is capped at {_DENSE_AGENT_CAP} agents, got {g.n}")
        self.agents = sorted(g.agents)
        self.dim = dim
        self.rho = rho
        column = {a: c for c, a in enumerate(self.agents)}
        unordered = sorted(g.edges)
        self.rows = [row for i, j in unordered for row in ((i, j), (j, i))]

        eye_p = np.eye(dim)
        self.Lambda = {}
        for i, j in unordered:
            selector = np.zeros((2, g.n))
            selector[0, column[i]] = 1.0
            selector[1, column[j]] = 1.0
            self.Lambda[(i, j)] = selector

        if unordered:
            self.A = np.vstack([np.kron(self.Lambda[e], eye_p) for e in unordered])
        else:
            self.A = np.zeros((0, g.n * dim))
        self.P = np.kron(np.eye(len(unordered)), np.kron(PI, eye_p))

        self.degrees = np.array([g.degree(a) for a in self.agents], dtype=float)
        inverse = np.divide(1.0, rho * self.degrees, out=np.zeros_like(self.degrees), where=self.degrees > 0)
        self.D = np.kron(np.diag(inverse), eye_p)

    def index_x(self) -> list[tuple[int, int, int]]:
        return [(i, j, c) for (i, j) in self.rows for c in range(self.dim)]

    def stack_x(self, x: t.Mapping[tuple[int, int], np.ndarray] | LabeledVector) -> np.ndarray:
        if isinstance(x, LabeledVector):
            return x.to_array(self.index_x())
        return np.concatenate([np.asarray(x[row], dtype=float) for row in self.rows]) if self.rows else np.zeros(0)

    def unstack_x(self, vector: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
        blocks = np.asarray(vector).reshape(len(self.rows), self.dim)
        return {row: blocks[r].copy() for r, row in enumerate(self.rows)}

    def stack_y(self, y: t.Mapping[int, np.ndarray] | np.ndarray) -> np.ndarray:
        if isinstance(y, np.ndarray) and y.ndim == 1 and y.size == self.dim:
            return np.tile(y, len(self.agents))
        return np.concatenate([np.asarray(y[a], dtype=float) for a in self.agents])

    def unstack_y(self, vector: np.ndarray) -> dict[int, np.ndarray]:
        blocks = np.asarray(vector).reshape(len(self.agents), self.dim)
        return {a: blocks[c].copy() for c, a in enumerate(self.agents)}

    def tsi_rhs(self, y_star: np.ndarray) -> np.ndarray:
        """2 rho P A (1 kron y_star)"""
        return 2.0 * self.rho * (self.P @ (self.A @ self.stack_y(np.atleast_1d(y_star))))


def compact_tick(
        x_prev: np.ndarray,
        y_prev: np.ndarray,
        matrices: CompactOperatorMatrices,
        costs: t.Mapping[int, CostModel],
        alpha: float,
        rho: float
    ) -> tuple[np.ndarray, np.ndarray]:
    """One round as x = [(1 - alpha) I - alpha P] x + 2 alpha rho P A y, y = prox(D A^T x)"""
    m = matrices
    if x_prev.shape != (m.P.shape[0],) or y_prev.shape != (m.A.shape[1],):
        raise ValueError(f"dimension mismatch: x {x_prev.shape}, y {y_prev.shape} for {len(m.rows)} rows and {len(m.agents)} agents")

    mixing = (1.0 - alpha) * np.eye(m.P.shape[0]) - alpha * m.P
    x = mixing @ x_prev + (2.0 * alpha * rho) * (m.P @ (m.A @ y_prev))
    aggregate = m.D @ (m.A.T @ x)

    y = np.empty_like(y_prev)
    p = m.dim
    for c, agent in enumerate(m.agents):
        block = slice(c * p, (c + 1) * p)
        if m.degrees[c] == 0:
            y[block] = costs[agent].local_minimizer()
        else:
            query = ProxQuery(aggregate[block], rho * m.degrees[c])
            y[block] = costs[agent].prox(query, warm_start=y_prev[block])
    return x, y


def tsi_member(g: GraphSnapshot, y_star: np.ndarray, rho: float) -> LabeledVector:
    """The symmetric member x^{ij} = x^{ji} = rho y_star on every edge"""
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    return LabeledVector(
        ((i, j, c), rho * float(y_star[c])) for (i, j) in g.ordered_edges for c in range(y_star.size)
    )


def _balanced_subgradients(costs: t.Sequence[CostModel], y_star: np.ndarray) -> np.ndarray:
    # One subgradient per agent at y_star, chosen so that they sum to zero
    bounds = [cost.subdifferential(y_star) for cost in costs]
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    chosen = np.empty_like(lo)

    for c in range(lo.shape[1]):
        low, high = lo[:, c], hi[:, c]
        free = low < high
        if not free.any():
            chosen[:, c] = low - low.mean()
            continue

        def excess(tau: float) -> float:
            return float(np.sum(np.clip(tau, low, high)))

        ends = np.abs(np.concatenate([low[np.isfinite(low)], high[np.isfinite(high)]]))
        span = 1.0 + len(low) * float(ends.max(initial=0.0))
        left, right = excess(-span), excess(span)
        if left > 0 or right < 0:
            raise ValueError("y_star is not a minimizer of the summed costs")
        tau = -span if left == 0 else span if right == 0 else brentq(excess, -span, span, xtol=1e-15)
        pick = np.clip(tau, low, high)
        pick[free] -= pick.sum() / free.sum()
        chosen[:, c] = pick
    return chosen


def tsi_fixed_point(g: GraphSnapshot, costs: t.Mapping[int, CostModel], y_star: np.ndarray, rho: float) -> LabeledVector:
    """The member of the set of interest that a round maps to itself

    Each edge pair is split as rho y_star +- z_e, where z is the minimum
    norm edge flow whose divergence at every agent equals a subgradient of
    its cost at y_star. With outputs at y_star, both the edge states and
    the outputs are then left unchanged by a round.
    """
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    agents = sorted(g.agents)
    unordered = sorted(g.edges)
    if not unordered:
        return LabeledVector()

    flows = _balanced_subgradients([costs[a] for a in agents], y_star)
    row = {a: r for r, a in enumerate(agents)}
    incidence = np.zeros((len(agents), len(unordered)))
    for e, (i, j) in enumerate(unordered):
        incidence[row[i], e] = 1.0
        incidence[row[j], e] = -1.0
    z = np.linalg.lstsq(incidence, flows, rcond=None)[0]

    entries = {}
    for e, (i, j) in enumerate(unordered):
        for c in range(y_star.size):
            entries[(i, j, c)] = rho * y_star[c] + z[e, c]
            entries[(j, i, c)] = rho * y_star[c] - z[e, c]
    return LabeledVector(entries)


def project_to_tsi(x: LabeledVector, g: GraphSnapshot, y_star: np.ndarray, rho: float) -> LabeledVector:
    """Least squares projection onto (I + P) x = 2 rho P A (1 kron y_star) through the pseudo-inverse"""
    y_star = np.atleast_1d(np.asarray(y_star, dtype=float))
    m = CompactOperatorMatrices(g, y_star.size, rho)
    if set(x.labels) != set(m.index_x()):
        raise ValueError("x is not labeled by the graph's ordered edges")
    z = m.stack_x(x)
    lifted = np.eye(z.size) + m.P
    projected = z - np.linalg.pinv(lifted) @ (lifted @ z - m.tsi_rhs(y_star))
    return LabeledVector.from_array(m.index_x(), projected)


# --< Centralized problem >-- #

class CentralizedSolution(NamedTuple):
    y_star: np.ndarray
    value: float
    solution_set: LabeledBox


def _point_set(y: np.ndarray) -> LabeledBox:
    return LabeledBox({c: Interval.point(float(v)) for c, v in enumerate(y)})


def centralized_solve(costs: t.Mapping[int, CostModel] | t.Sequence[CostModel], warm_start: np.ndarray | None = None) -> CentralizedSolution:
    """Minimizes the sum of all local costs

    Consensus families are solved in closed form. For median costs with an
    even count the whole interval between the middle signals is optimal;
    the lower median is returned as the point and the interval as the set.
    """
    models = list(costs.values()) if isinstance(costs, t.Mapping) else list(costs)
    if not models:
        raise ValueError("centralized_solve needs at least one cost")

    first = models[0]
    same_kind = all(type(m) is type(first) and getattr(m, "sign", 1) == getattr(first, "sign", 1) for m in models)
    if not same_kind:
        raise ValueError("centralized_solve needs costs of a single kind")

    if isinstance(first, LogisticRidge):
        y = _solve_logistic(models, warm_start)
        return CentralizedSolution(y, sum(m.value(y) for m in models), _point_set(y))

    signals = np.array([m.u for m in models], dtype=float)
    if isinstance(first, ConsensusAvg):
        y = np.array([signals.mean()])
        solution = _point_set(y)
    elif isinstance(first, ConsensusMax):
        y = np.array([signals.max() if first.sign > 0 else signals.min()])
        solution = _point_set(y)
    elif isinstance(first, ConsensusMedian):
        ordered = np.sort(signals)
        n = ordered.size
        lower, upper = (ordered[n // 2], ordered[n // 2]) if n % 2 else (ordered[n // 2 - 1], ordered[n // 2])
        y = np.array([lower])
        solution = LabeledBox({0: Interval(lower, upper)})
    else:
        raise TypeError(f"no centralized solver for {type(first).__name__}")
    return CentralizedSolution(y, sum(m.value(y) for m in models), solution)


def _solve_logistic(models: list[LogisticRidge], warm_start: np.ndarray | None) -> np.ndarray:
    dim = models[0].dim
    populated = [m for m in models if m.m > 0]
    ridge = sum(m.ridge for m in models)
    lipschitz = sum(m.lipschitz for m in models)

    if populated:
        features = np.vstack([m.features for m in populated])
        labels = np.concatenate([m.labels for m in populated])
        weights = np.concatenate([np.full(m.m, 1.0 / m.m) for m in populated])
    else:
        features, labels, weights = np.zeros((0, dim)), np.zeros(0), np.zeros(0)

    def gradient(y: np.ndarray) -> np.ndarray:
        margins = labels * (features @ y)
        return -(features.T @ (weights * labels * expit(-margins))) + ridge * y

    def objective(y: np.ndarray) -> float:
        margins = labels * (features @ y)
        return float(weights @ np.logaddexp(0.0, -margins)) + 0.5 * ridge * float(y @ y)

    start = np.zeros(dim) if warm_start is None else warm_start
    return accelerated_gradient(gradient, start, lipschitz, ridge, objective=objective).x


# --< Numeric prox oracle >-- #

def numeric_scalar_prox(model: CostModel, w: float, v: float) -> float:
    """argmin f(y) + (w / 2)(y - v)^2 for a scalar consensus cost

    A dense grid brackets the minimizer, then bisection on the right
    derivative of the prox objective pins it down to machine precision.
    """
    u = float(model.u)  # type: ignore[attr-defined]
    reach = 1.0 / w + 1.0
    lo, hi = min(u, v) - reach, max(u, v) + reach
    if isinstance(model, ConsensusMax):
        lo, hi = (u, hi) if model.sign > 0 else (lo, u)

    grid = np.linspace(lo, hi, _ORACLE_GRID)
    values = model.pointwise(grid) + 0.5 * w * (grid - v) ** 2  # type: ignore[attr-defined]
    best = int(np.argmin(values))
    a, c = float(grid[max(best - 1, 0)]), float(grid[min(best + 1, grid.size - 1)])

    def slope(y: float) -> float:
        return float(model.subdifferential(np.array([y]))[1][0]) + w * (y - v)

    # convexity puts the minimizer inside [a, c]
    if slope(a) >= 0.0:
        return a
    if slope(c) <= 0.0:
        return c
    return float(bisect(slope, a, c, xtol=1e-15, maxiter=200))


# --< Oracle suite >-- #

@dataclass
class OracleReport:
    """Worst residual per check against its tolerance"""

    residuals: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)

    def record(self, name: str, residual: float, tolerance: float) -> None:
        self.residuals[name] = max(self.residuals.get(name, 0.0), float(residual))
        self.tolerances[name] = tolerance

    @property
    def failures(self) -> list[str]:
        return [name for name, r in self.residuals.items() if not r <= self.tolerances[name]]

    @property
    def passed(self) -> bool:
        return not self.failures


_CONSENSUS_KINDS = ("avg", "max", "min", "median")


def random_closed_instance(rng: np.random.Generator, n_max: int, kind: str | None = None) -> tuple[GraphSnapshot, dict[int, CostModel]]:
    """A random connected graph of 1..n_max agents with consensus costs of one kind"""
    n = int(rng.integers(1, n_max + 1))
    g = random_graph(n, float(rng.uniform(0.2, 0.9)), rng)
    kind = kind or _CONSENSUS_KINDS[int(rng.integers(len(_CONSENSUS_KINDS)))]
    signals = rng.uniform(0.0, 5.0, size=n)
    return g, {a: consensus_cost(kind, u) for a, u in zip(sorted(g.agents), signals)}


def run_oracle_suite(
        n_max: int = 8,
        ticks: int = 20,
        trials: int = 100,
        seed: int = 0,
        alpha: float = 0.99,
        rho: float = 0.5,
        prox_samples: int = 2000
    ) -> OracleReport:
    """Cross-checks the engine against the dense form, the fixed-point sets and the numeric prox

    Raises:
        ConfigError: For parameters outside their ranges
    """
    params = AdmmParams(alpha, rho)
    if not 1 <= n_max <= _DENSE_AGENT_CAP:
        raise ConfigError(f"oracle networks need 1..{_DENSE_AGENT_CAP} agents, got {n_max}")
    if ticks < 1 or trials < 1:
        raise ConfigError("ticks and trials must be positive")

    rng = np.random.default_rng(seed)
    report = OracleReport()

    for _ in range(trials):
        g, costs = random_closed_instance(rng, n_max)
        m = CompactOperatorMatrices(g, 1, rho)
        x = {e: rng.normal(0.0, 5.0, size=1) for e in g.ordered_edges}
        y = {a: rng.uniform(0.0, 5.0, size=1) for a in g.agents}
        state = NetworkState(0, x, y)
        xv, yv = m.stack_x(x), m.stack_y(y)
        for _ in range(ticks):
            state = admm_tick(state, g, g, costs, params)
            xv, yv = compact_tick(xv, yv, m, costs, alpha, rho)
            gap = max(np.max(np.abs(m.stack_x(state.x) - xv), initial=0.0), np.max(np.abs(m.stack_y(state.y) - yv)))
            report.record("engine vs compact form", gap, 1e-12)

    for _ in range(max(1, trials // 2)):
        g, costs = random_closed_instance(rng, n_max)
        m = CompactOperatorMatrices(g, 1, rho)
        y_star = centralized_solve(costs).y_star
        y_flat = m.stack_y(y_star)

        member = m.stack_x(tsi_member(g, y_star, rho))
        lifted = np.eye(member.size) + m.P
        report.record("fixed-point set equation", np.max(np.abs(lifted @ member - m.tsi_rhs(y_star)), initial=0.0), 1e-12)
        x_next, _ = compact_tick(member, y_flat, m, costs, alpha, rho)
        report.record("fixed-point set state step", np.max(np.abs(x_next - member), initial=0.0), 1e-9)

        fixed = m.stack_x(tsi_fixed_point(g, costs, y_star, rho))
        x_next, y_next = compact_tick(fixed, y_flat, m, costs, alpha, rho)
        step = max(np.max(np.abs(x_next - fixed), initial=0.0), np.max(np.abs(y_next - y_flat)))
        report.record("fixed point round", step, 1e-9)

        point = LabeledVector.from_array(m.index_x(), rng.normal(0.0, 5.0, size=len(m.index_x())))
        if g.edges:
            projected = project_to_tsi(point, g, y_star, rho)
            target = AffineEdgeSet.consensus(g.edges, y_star, rho)
            gap = abs(float(np.linalg.norm(m.stack_x(point) - m.stack_x(projected))) - distance_to_set(point, target))
            report.record("projection distance", gap, 1e-12 * max(1.0, point.norm))

    for _ in range(prox_samples):
        kind = _CONSENSUS_KINDS[int(rng.integers(len(_CONSENSUS_KINDS)))]
        model = consensus_cost(kind, float(rng.uniform(-5.0, 5.0)))
        w, v = float(rng.uniform(0.05, 10.0)), float(rng.uniform(-10.0, 10.0))
        closed = float(model.prox(ProxQuery(np.array([v]), w))[0])
        report.record("closed form prox", abs(closed - numeric_scalar_prox(model, w, v)), 1e-8)

    for name in report.residuals:
        _log.info("%-28s %.3e (tolerance %.0e)", name, report.residuals[name], report.tolerances[name])
    return report
