"""
Scalar consensus costs built around a per-agent reference signal u.

  avg     f(y) = (y - u)^2 / 2
  max     f(y) = (y - u)^2 / 2 restricted to y >= u   (y <= u for the min mirror)
  median  f(y) = |y - u|

All proxes are closed form.
"""

from __future__ import annotations
import typing as t

from math import inf, isfinite

import numpy as np

from .base import CostModel, ProxQuery


class ScalarConsensus(CostModel):
    """Shared plumbing of the one dimensional consensus costs"""

    u: float
    dim = 1

    def __init__(self, u: float) -> None:
        u = float(u)
        if not isfinite(u):
            raise ValueError(f"reference signal must be finite, got {u}")
        self.u = u

    def pointwise(self, y: np.ndarray) -> np.ndarray:
        """Objective evaluated at each entry of y"""
        raise NotImplementedError

    def value(self, y: np.ndarray) -> float:
        return float(np.sum(self.pointwise(np.atleast_1d(np.asarray(y, dtype=float)))))

    def local_minimizer(self) -> np.ndarray:
        return np.array([self.u])

    def prox(self, query: ProxQuery, warm_start: np.ndarray | None = None) -> np.ndarray:
        return np.array([self._prox_scalar(float(query.v[0]), query.w)])

    def _prox_scalar(self, v: float, w: float) -> float:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(u={self.u!r})"


class ConsensusAvg(ScalarConsensus):
    kind = "avg"
    smooth = True

    def pointwise(self, y: np.ndarray) -> np.ndarray:
        return 0.5 * (y - self.u) ** 2

    def _prox_scalar(self, v: float, w: float) -> float:
        return (self.u + w * v) / (1.0 + w)

    def gradient(self, y: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(y, dtype=float)) - self.u

    def subdifferential(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.gradient(y)
        return g, g.copy()


class ConsensusMax(ScalarConsensus):
    """Quadratic pull towards u, constrained to sign * (y - u) >= 0

    sign = +1 drives the network to the largest signal, sign = -1
    (see `minimum`) to the smallest.
    """

    sign: int

    def __init__(self, u: float, sign: int = 1) -> None:
        super().__init__(u)
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign}")
        self.sign = sign

    @classmethod
    def minimum(cls, u: float) -> ConsensusMax:
        return cls(u, sign=-1)

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "max" if self.sign > 0 else "min"

    def pointwise(self, y: np.ndarray) -> np.ndarray:
        feasible = self.sign * (y - self.u) >= 0
        return np.where(feasible, 0.5 * (y - self.u) ** 2, inf)

    def _prox_scalar(self, v: float, w: float) -> float:
        s = self.sign
        return s * max(s * self.u, s * (self.u + w * v) / (1.0 + w))

    def subdifferential(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y0 = float(np.atleast_1d(y)[0])
        gap = y0 - self.u
        if self.sign * gap > 0:
            return np.array([gap]), np.array([gap])
        if gap == 0:
            # gradient 0 plus the normal cone of the constraint
            return (np.array([-inf]), np.array([0.0])) if self.sign > 0 else (np.array([0.0]), np.array([inf]))
        raise ValueError(f"point {y0} violates the {self.kind} constraint at u={self.u}")

    def __repr__(self) -> str:
        return f"ConsensusMax(u={self.u!r}, sign={self.sign})"


class ConsensusMedian(ScalarConsensus):
    kind = "median"

    def pointwise(self, y: np.ndarray) -> np.ndarray:
        return np.abs(y - self.u)

    def _prox_scalar(self, v: float, w: float) -> float:
        lower, upper = v - 1.0 / w, v + 1.0 / w
        return self.u + max(lower - self.u, 0.0) + min(upper - self.u, 0.0)

    def subdifferential(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y0 = float(np.atleast_1d(y)[0])
        if y0 > self.u:
            return np.array([1.0]), np.array([1.0])
        if y0 < self.u:
            return np.array([-1.0]), np.array([-1.0])
        return np.array([-1.0]), np.array([1.0])


CONSENSUS_KINDS: dict[str, t.Callable[[float], ScalarConsensus]] = {
    "avg": ConsensusAvg,
    "max": ConsensusMax,
    "min": ConsensusMax.minimum,
    "median": ConsensusMedian,
}


def consensus_cost(kind: str, u: float) -> ScalarConsensus:
    """Builds a consensus cost by name: avg, max, min or median"""
    try:
        factory = CONSENSUS_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown consensus kind {kind!r}") from None
    return factory(u)
