"""
Ridge regularized logistic loss over an agent's private samples, and a
synthetic data source for it.
"""

from __future__ import annotations
import typing as t
import logging

import numpy as np
from scipy.special import expit

from .base import CostModel, ProxQuery
from .solvers import accelerated_gradient

_log = logging.getLogger(__name__)

DEFAULT_RIDGE = 0.05


class LogisticRidge(CostModel):
    """f(y) = mean_j log(1 + exp(-b_j a_j^T y)) + (ridge / 2) ||y||^2

    With no samples the data term vanishes and only the ridge is left.
    """

    kind = "logistic"
    smooth = True

    features: np.ndarray
    labels: np.ndarray
    ridge: float
    dim: int

    _minimizer: np.ndarray | None

    def __init__(self, features: np.ndarray, labels: np.ndarray, ridge: float = DEFAULT_RIDGE, dim: int | None = None) -> None:
        features = np.array(features, dtype=float)
        labels = np.array(labels, dtype=float).ravel()
        if features.size == 0:
            if dim is None:
                raise ValueError("an empty sample set needs an explicit dim")
            features = features.reshape(0, dim)
        if features.ndim != 2 or features.shape[0] != labels.size:
            raise ValueError(f"features {features.shape} do not match {labels.size} labels")
        if dim is not None and features.shape[1] != dim:
            raise ValueError(f"features have dimension {features.shape[1]}, expected {dim}")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not ridge > 0:
            raise ValueError(f"ridge must be positive, got {ridge}")

        features.setflags(write=False)
        labels.setflags(write=False)
        self.features = features
        self.labels = labels
        self.ridge = float(ridge)
        self.dim = features.shape[1]
        self._minimizer = None

    @property
    def m(self) -> int:
        return self.labels.size

    @property
    def lipschitz(self) -> float:
        """Smoothness bound ridge + sum ||a||^2 / (4 m)"""
        if self.m == 0:
            return self.ridge
        return self.ridge + float(np.sum(self.features ** 2)) / (4.0 * self.m)

    def value(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float)
        reg = 0.5 * self.ridge * float(y @ y)
        if self.m == 0:
            return reg
        margins = self.labels * (self.features @ y)
        return float(np.mean(np.logaddexp(0.0, -margins))) + reg

    def gradient(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.m == 0:
            return self.ridge * y
        margins = self.labels * (self.features @ y)
        return -(self.features.T @ (self.labels * expit(-margins))) / self.m + self.ridge * y

    def subdifferential(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.gradient(y)
        return g, g.copy()

    def prox(self, query: ProxQuery, warm_start: np.ndarray | None = None) -> np.ndarray:
        w, v = query.w, query.v
        if self.m == 0:
            return w * v / (self.ridge + w)
        start = v if warm_start is None else warm_start
        result = accelerated_gradient(
            lambda y: self.gradient(y) + w * (y - v),
            start,
            lipschitz=self.lipschitz + w,
            strong_convexity=self.ridge + w,
            objective=lambda y: self.value(y) + 0.5 * w * float((y - v) @ (y - v)),
        )
        return result.x

    def local_minimizer(self) -> np.ndarray:
        if self._minimizer is None:
            if self.m == 0:
                self._minimizer = np.zeros(self.dim)
            else:
                result = accelerated_gradient(self.gradient, np.zeros(self.dim), self.lipschitz, self.ridge, objective=self.value)
                self._minimizer = result.x
            self._minimizer.setflags(write=False)
        return self._minimizer

    def __repr__(self) -> str:
        return f"LogisticRidge(m={self.m}, dim={self.dim}, ridge={self.ridge!r})"


class ClassificationSource(object):
    """Gaussian two-class data with agent-specific mean shifts

    Every agent shares one class direction, drawn once. Class +1 sits at
    +separation/2 along it and class -1 at -separation/2. Each agent then
    shifts both of its clusters by heterogeneity times a standard normal
    vector and adds unit Gaussian noise per sample.
    """

    samples: int
    dim: int
    separation: float
    heterogeneity: float
    ridge: float
    direction: np.ndarray

    def __init__(self,
            samples: int,
            dim: int,
            separation: float = 2.0,
            heterogeneity: float = 0.0,
            ridge: float = DEFAULT_RIDGE,
            rng: np.random.Generator | None = None
        ) -> None:
        if samples < 1 or dim < 1:
            raise ValueError(f"need at least one sample and one dimension, got m={samples}, p={dim}")
        if heterogeneity < 0:
            raise ValueError(f"heterogeneity must be non-negative, got {heterogeneity}")
        rng = np.random.default_rng() if rng is None else rng
        self.samples, self.dim = samples, dim
        self.separation, self.heterogeneity, self.ridge = separation, heterogeneity, ridge
        direction = rng.standard_normal(dim)
        self.direction = direction / np.linalg.norm(direction)

    def draw(self, rng: np.random.Generator) -> LogisticRidge:
        """Samples one agent's private data set"""
        shift = self.heterogeneity * rng.standard_normal(self.dim)
        labels = np.where(rng.random(self.samples) < 0.5, -1.0, 1.0)
        centers = np.outer(labels, 0.5 * self.separation * self.direction)
        features = centers + shift + rng.standard_normal((self.samples, self.dim))
        return LogisticRidge(features, labels, self.ridge)


def make_classification_data(
        n_agents: int,
        samples: int,
        dim: int,
        separation: float,
        heterogeneity: float,
        rng: np.random.Generator,
        ridge: float = DEFAULT_RIDGE
    ) -> list[LogisticRidge]:
    source = ClassificationSource(samples, dim, separation, heterogeneity, ridge, rng)
    return [source.draw(rng) for _ in range(n_agents)]
