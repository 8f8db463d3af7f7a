"""
Cost families: who owns which local cost, and how costs follow churn.
"""

from __future__ import annotations
import typing as t
import logging

import numpy as np

from .churn import SignalModel
from .costs import ClassificationSource, CostModel, consensus_cost
from .open_graph import ChurnDelta
from .reference_oracles import CentralizedSolution, centralized_solve

_log = logging.getLogger(__name__)


class CostFamily(object):
    """Produces every agent's local cost and keeps the set in step with churn"""

    signals: SignalModel | None = None

    def initial(self, agents: t.Iterable[int], rng: np.random.Generator) -> dict[int, CostModel]:
        raise NotImplementedError

    def advance(self, costs: t.Mapping[int, CostModel], delta: ChurnDelta, rng: np.random.Generator) -> dict[int, CostModel]:
        raise NotImplementedError

    def solution(self, costs: t.Mapping[int, CostModel]) -> CentralizedSolution:
        return centralized_solve(costs)


class ConsensusFamily(CostFamily):
    """Consensus costs anchored at drifting reference signals"""

    kind: str
    lo: float
    hi: float
    sigma: float

    def __init__(self, kind: str, lo: float = 0.0, hi: float = 5.0, sigma: float = 0.0) -> None:
        consensus_cost(kind, 0.0)
        self.kind, self.lo, self.hi, self.sigma = kind, lo, hi, sigma
        self.signals = None

    def _build(self) -> dict[int, CostModel]:
        return {a: consensus_cost(self.kind, u) for a, u in sorted(self.signals.values.items())}

    def initial(self, agents: t.Iterable[int], rng: np.random.Generator) -> dict[int, CostModel]:
        self.signals = SignalModel.sample(agents, self.lo, self.hi, self.sigma, rng)
        return self._build()

    def advance(self, costs: t.Mapping[int, CostModel], delta: ChurnDelta, rng: np.random.Generator) -> dict[int, CostModel]:
        if self.sigma == 0 and delta.is_empty:
            return dict(costs)
        self.signals = self.signals.step(delta, rng)
        return self._build()


class LearningFamily(CostFamily):
    """Static private data per agent; arrivals bring freshly drawn data"""

    source: ClassificationSource

    _cache_key: frozenset[int] | None
    _cache: CentralizedSolution | None

    def __init__(self, source: ClassificationSource) -> None:
        self.source = source
        self._cache_key = None
        self._cache = None

    def initial(self, agents: t.Iterable[int], rng: np.random.Generator) -> dict[int, CostModel]:
        return {a: self.source.draw(rng) for a in sorted(agents)}

    def advance(self, costs: t.Mapping[int, CostModel], delta: ChurnDelta, rng: np.random.Generator) -> dict[int, CostModel]:
        if delta.is_empty:
            return dict(costs)
        kept = {a: c for a, c in costs.items() if a not in delta.departed}
        kept.update((a, self.source.draw(rng)) for a in sorted(delta.arrived))
        return kept

    def solution(self, costs: t.Mapping[int, CostModel]) -> CentralizedSolution:
        # Data only changes with the agent set, so the optimum is reused
        key = frozenset(costs)
        if key != self._cache_key:
            warm = None if self._cache is None else self._cache.y_star
            self._cache = centralized_solve(costs, warm_start=warm)
            self._cache_key = key
        return self._cache
