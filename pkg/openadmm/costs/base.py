from __future__ import annotations
import typing as t

from dataclasses import dataclass
from math import isfinite

import numpy as np

from ..errors import NonsmoothCost


@dataclass(frozen=True)
class ProxQuery:
    """A prox evaluation point: argmin f(y) + (w / 2) ||y - v||^2

    Attributes:
        v (np.ndarray): Anchor point
        w (float): Quadratic weight, rho times the agent's degree inside the engine
    """

    v: np.ndarray
    w: float

    def __post_init__(self) -> None:
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("prox anchor must be a finite vector")
        if not (isfinite(self.w) and self.w > 0):
            raise ValueError(f"prox weight must be positive, got {self.w}")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", float(self.w))


class CostModel(object):
    """One agent's local objective

    The base class carries no objective of its own; each subclass defines
    the value, the prox and the local minimizer, and the smooth ones the
    gradient as well.
    """

    kind: t.ClassVar[str] = "cost"
    smooth: t.ClassVar[bool] = False
    dim: int

    def value(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, query: ProxQuery, warm_start: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def local_minimizer(self) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, y: np.ndarray) -> np.ndarray:
        raise NonsmoothCost(self.kind)

    def subdifferential(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate bounds (lo, hi) of the subdifferential at y"""
        raise NotImplementedError

    def prox_objective(self, query: ProxQuery, y: np.ndarray) -> float:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return self.value(y) + 0.5 * query.w * float(np.sum((y - query.v) ** 2))
