"""
Vectors with labeled components and the open distance calculus.

A labeled vector keys each component by an opaque, totally ordered
label (an agent id, an ordered agent pair, or an (agent, agent,
coordinate) triple). Vectors of different size and composition are
compared on the labels they share, which is what lets a sequence of
states live in spaces that change every tick.
"""

from __future__ import annotations
import typing as t
import logging

from math import inf, isfinite, isnan, sqrt
from typing import NamedTuple

import numpy as np

from .errors import EmptyTargetSet

if t.TYPE_CHECKING:
    TargetSet = t.Union["LabeledBox", "AffineEdgeSet"]

_log = logging.getLogger(__name__)

Label = t.Hashable

# Components already within this absolute distance of a set
# constraint are returned untouched by projections
_MEMBERSHIP_TOLERANCE = 1e-12

# Sample budget for shadow distances with no closed form
_DEFAULT_SAMPLES = 256


class Interval(object):
    """A closed interval [lo, hi] on the extended real line"""

    lo: float
    hi: float

    def __init__(self, lo: float = -inf, hi: float = inf) -> None:
        """Creates an interval between two numbers

        Args:
            lo (float, optional): Lower end. Defaults to -inf.
            hi (float, optional): Upper end. Defaults to inf.

        Raises:
            ValueError: If lo > hi or either end is NaN
        """
        lo, hi = float(lo), float(hi)
        if isnan(lo) or isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    def size(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def clamp(self, x: float) -> float:
        """Returns x clamped between lo and hi

        Args:
            x (float): Value to clamp

        Returns:
            float: x if x is inside the interval else the nearest end
        """
        if x < self.lo: return self.lo
        if x > self.hi: return self.hi
        return x

    def nearest_to_zero(self) -> float:
        """The member of the interval with the smallest magnitude"""
        return self.clamp(0.0)

    @classmethod
    def universe(cls) -> Interval:
        return cls(-inf, inf)

    @classmethod
    def point(cls, value: float) -> Interval:
        return cls(value, value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


class LabeledVector(object):
    """A finite vector whose components are keyed by labels

    Values are finite floats; construction fails otherwise. Instances are
    immutable, every operation returns a new vector.
    """

    _entries: dict[Label, float]

    def __init__(self, entries: t.Mapping[Label, float] | t.Iterable[tuple[Label, float]] = ()) -> None:
        self._entries = {label: float(value) for label, value in dict(entries).items()}
        for label, value in self._entries.items():
            if not isfinite(value):
                raise ValueError(f"non-finite component {value!r} at label {label!r}")

    @classmethod
    def from_array(cls, labels: t.Sequence[Label], values: np.ndarray | t.Sequence[float]) -> LabeledVector:
        values = np.asarray(values, dtype=float).ravel()
        if len(labels) != values.size:
            raise ValueError(f"{len(labels)} labels for {values.size} values")
        return cls(zip(labels, values.tolist()))

    @property
    def labels(self) -> frozenset[Label]:
        return frozenset(self._entries)

    def ordered_labels(self) -> list[Label]:
        return sorted(self._entries)

    def to_array(self, labels: t.Sequence[Label] | None = None) -> np.ndarray:
        """Component values in the given label order (sorted labels by default)"""
        order = self.ordered_labels() if labels is None else labels
        return np.array([self._entries[label] for label in order], dtype=float)

    def items(self) -> list[tuple[Label, float]]:
        return [(label, self._entries[label]) for label in self.ordered_labels()]

    def restrict(self, labels: t.Iterable[Label]) -> LabeledVector:
        keep = set(labels)
        return LabeledVector({label: v for label, v in self._entries.items() if label in keep})

    @property
    def norm(self) -> float:
        if not self._entries:
            return 0.0
        return float(np.linalg.norm(self.to_array()))

    def _same_labels(self, other: LabeledVector) -> None:
        if self._entries.keys() != other._entries.keys():
            raise ValueError("label sets differ; restrict both vectors to a common set first")

    def __getitem__(self, label: Label) -> float:
        return self._entries[label]

    def __contains__(self, label: object) -> bool:
        return label in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> t.Iterator[Label]:
        return iter(self.ordered_labels())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledVector):
            return NotImplemented
        return self._entries == other._entries

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other: LabeledVector) -> LabeledVector:
        self._same_labels(other)
        return LabeledVector({k: v + other._entries[k] for k, v in self._entries.items()})

    def __sub__(self, other: LabeledVector) -> LabeledVector:
        self._same_labels(other)
        return LabeledVector({k: v - other._entries[k] for k, v in self._entries.items()})

    def __neg__(self) -> LabeledVector:
        return LabeledVector({k: -v for k, v in self._entries.items()})

    def __mul__(self, scalar: float) -> LabeledVector:
        return LabeledVector({k: v * scalar for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> LabeledVector:
        return LabeledVector({k: v / scalar for k, v in self._entries.items()})

    def __repr__(self) -> str:
        body = ", ".join(f"{label!r}: {value!r}" for label, value in self.items())
        return f"LabeledVector({{{body}}})"


class LabeledBox(object):
    """Axis aligned set: one closed interval per label"""

    intervals: dict[Label, Interval]

    def __init__(self, intervals: t.Mapping[Label, Interval | tuple[float, float]]) -> None:
        self.intervals = {
            label: iv if isinstance(iv, Interval) else Interval(*iv)
            for label, iv in intervals.items()
        }

    @classmethod
    def point(cls, y: LabeledVector) -> LabeledBox:
        return cls({label: Interval.point(v) for label, v in y.items()})

    @property
    def labels(self) -> frozenset[Label]:
        return frozenset(self.intervals)

    def contains(self, x: LabeledVector) -> bool:
        return all(label in x and iv.contains(x[label]) for label, iv in self.intervals.items())

    def __repr__(self) -> str:
        return f"LabeledBox({self.intervals!r})"


class AffineEdgeSet(object):
    """Per-edge affine set {x : x[(i, j, c)] + x[(j, i, c)] = target[c]}

    Edges are keyed by the unordered pair (i, j) with i < j, and each edge
    carries a target vector with one entry per coordinate c. Both ordered
    labels of every edge belong to the set by construction.
    """

    targets: dict[tuple[t.Any, t.Any], np.ndarray]

    def __init__(self, targets: t.Mapping[tuple[t.Any, t.Any], np.ndarray | t.Sequence[float] | float]) -> None:
        self.targets = {}
        for (i, j), target in targets.items():
            if i == j:
                raise ValueError(f"self loop on {i!r}")
            edge = (i, j) if i < j else (j, i)
            vec = np.atleast_1d(np.asarray(target, dtype=float)).copy()
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise ValueError(f"edge {edge!r} needs a finite target vector")
            vec.setflags(write=False)
            self.targets[edge] = vec

    @classmethod
    def consensus(cls, edges: t.Iterable[tuple[t.Any, t.Any]], y_star: np.ndarray, rho: float) -> AffineEdgeSet:
        """The set pinning every edge pair to 2 rho y_star"""
        target = 2.0 * rho * np.atleast_1d(np.asarray(y_star, dtype=float))
        return cls({edge: target for edge in edges})

    def pairs(self) -> t.Iterator[tuple[Label, Label, float]]:
        """Yields (label ij, label ji, target) per edge coordinate, in sorted order"""
        for (i, j) in sorted(self.targets):
            for c, target in enumerate(self.targets[(i, j)]):
                yield (i, j, c), (j, i, c), float(target)

    @property
    def labels(self) -> frozenset[Label]:
        return frozenset(label for a, b, _ in self.pairs() for label in (a, b))

    def __repr__(self) -> str:
        return f"AffineEdgeSet({len(self.targets)} edges)"


class LabelTransition(NamedTuple):
    remaining: frozenset
    arriving: frozenset
    departing: frozenset


def label_transition(
        previous: t.AbstractSet[Label],
        current: t.AbstractSet[Label],
        following: t.AbstractSet[Label] | None = None
    ) -> LabelTransition:
    """Splits a label set into the parts kept, gained and about to be lost

    Args:
        previous (AbstractSet): Labels one tick back
        current (AbstractSet): Labels at this tick
        following (AbstractSet, optional): Labels one tick ahead; no departures when omitted

    Returns:
        LabelTransition: remaining = current & previous, arriving = current - previous,
            departing = current - following
    """
    current = frozenset(current)
    departing = frozenset() if following is None else current - frozenset(following)
    return LabelTransition(current & frozenset(previous), current - frozenset(previous), departing)


def open_distance(x: LabeledVector, y: LabeledVector) -> float:
    """Euclidean distance over the common labels of x and y, 0 when there are none"""
    common = sorted(x.labels & y.labels)
    if not common:
        return 0.0
    return float(np.linalg.norm(x.to_array(common) - y.to_array(common)))


def _require_nonempty(target: TargetSet) -> None:
    if isinstance(target, LabeledBox):
        empty = not target.intervals
    elif isinstance(target, AffineEdgeSet):
        empty = not target.targets
    else:
        raise TypeError(f"unsupported target set {type(target).__name__}")
    if empty:
        raise EmptyTargetSet()


def distance_to_set(x: LabeledVector, target: TargetSet) -> float:
    """Open distance from x to the closest member of a box or affine edge set

    Labels of the set that x lacks are free and cost nothing; labels of x the
    set lacks are ignored.

    Raises:
        EmptyTargetSet: If the set has no labels
    """
    _require_nonempty(target)
    gaps: list[float] = []
    if isinstance(target, LabeledBox):
        for label in sorted(target.labels & x.labels):
            value = x[label]
            gaps.append(value - target.intervals[label].clamp(value))
    else:
        for a, b, goal in target.pairs():
            if a in x and b in x:
                half = (x[a] + x[b] - goal) / 2.0
                gaps.extend((half, half))
    return float(np.linalg.norm(gaps)) if gaps else 0.0


def normalized_distance(x: LabeledVector, target: TargetSet) -> float:
    """distance_to_set scaled by the square root of the set's label count"""
    return distance_to_set(x, target) / sqrt(len(target.labels))


def project_to_set(x: LabeledVector, target: TargetSet) -> LabeledVector:
    """A canonical member of the projection of x onto a box or affine edge set

    The result is labeled exactly by the set's labels. Free coordinates (set
    labels missing from x) take the feasible value of smallest magnitude.

    Raises:
        EmptyTargetSet: If the set has no labels
    """
    _require_nonempty(target)
    out: dict[Label, float] = {}
    if isinstance(target, LabeledBox):
        for label, iv in target.intervals.items():
            out[label] = iv.clamp(x[label]) if label in x else iv.nearest_to_zero()
        return LabeledVector(out)

    for a, b, goal in target.pairs():
        if a in x and b in x:
            residual = x[a] + x[b] - goal
            if abs(residual) <= _MEMBERSHIP_TOLERANCE:
                out[a], out[b] = x[a], x[b]
            else:
                out[a], out[b] = x[a] - residual / 2.0, x[b] - residual / 2.0
        elif a in x:
            out[a], out[b] = x[a], goal - x[a]
        elif b in x:
            out[a], out[b] = goal - x[b], x[b]
        else:
            out[a] = out[b] = goal / 2.0
    return LabeledVector(out)


def _interval_shadow(a: Interval, b: Interval) -> float:
    # clamp_a(z) - clamp_b(z) is piecewise linear; extremes sit at the
    # endpoints or in the limits z -> -inf, z -> +inf
    worst = 0.0
    for end_a, end_b in ((a.lo, b.lo), (a.hi, b.hi)):
        if end_a != end_b:
            worst = max(worst, abs(end_a - end_b))
    for z in (a.lo, a.hi, b.lo, b.hi):
        if isfinite(z):
            worst = max(worst, abs(a.clamp(z) - b.clamp(z)))
    return worst


def _sample_scale(target: TargetSet) -> float:
    if isinstance(target, LabeledBox):
        ends = [abs(e) for iv in target.intervals.values() for e in (iv.lo, iv.hi) if isfinite(e)]
    else:
        ends = [abs(goal) for _, _, goal in target.pairs()]
    return 1.0 + 2.0 * max(ends, default=0.0)


def shadow_distance(
        first: TargetSet,
        second: TargetSet,
        samples: int = _DEFAULT_SAMPLES,
        rng: np.random.Generator | None = None
    ) -> float:
    """Largest distance between the projections of one point onto two sets

    Box pairs over identical labels and affine edge sets over identical edges
    are computed exactly. Any other pair is estimated by projecting `samples`
    random points, which only gives a lower bound on the supremum.

    Args:
        first (LabeledBox | AffineEdgeSet): First set
        second (LabeledBox | AffineEdgeSet): Second set
        samples (int, optional): Random points for the estimated case. Defaults to 256.
        rng (np.random.Generator, optional): Sample stream. Defaults to a fixed seed.

    Returns:
        float: The shadow distance, possibly inf for unbounded box gaps
    """
    _require_nonempty(first)
    _require_nonempty(second)

    if isinstance(first, LabeledBox) and isinstance(second, LabeledBox) and first.labels == second.labels:
        gaps = [_interval_shadow(first.intervals[label], second.intervals[label]) for label in sorted(first.labels)]
        return float(sqrt(sum(g * g for g in gaps)))

    if (isinstance(first, AffineEdgeSet) and isinstance(second, AffineEdgeSet)
            and first.targets.keys() == second.targets.keys()
            and all(first.targets[e].shape == second.targets[e].shape for e in first.targets)):
        # Projections onto parallel edge sets differ by half the target gap
        # in both ordered components, whatever the projected point
        total = sum(float(np.sum((first.targets[e] - second.targets[e]) ** 2)) for e in first.targets)
        return sqrt(total / 2.0)

    rng = np.random.default_rng(0) if rng is None else rng
    labels = sorted(first.labels | second.labels, key=repr)
    scale = max(_sample_scale(first), _sample_scale(second))
    worst = 0.0
    for _ in range(samples):
        z = LabeledVector.from_array(labels, rng.normal(0.0, scale, size=len(labels)))
        worst = max(worst, open_distance(project_to_set(z, first), project_to_set(z, second)))
    _log.debug("shadow distance estimated from %d samples: %.6g", samples, worst)
    return worst


def open_step(
        x_prev: LabeledVector,
        standard_map: t.Callable[[LabeledVector], LabeledVector],
        arrivals: LabeledVector,
        departed: t.AbstractSet[Label]
    ) -> LabeledVector:
    """Applies one open operator: drop, map what remains, then append arrivals

    Args:
        x_prev (LabeledVector): State one tick back
        standard_map (Callable): Map over the remaining labels; must keep them unchanged
        arrivals (LabeledVector): Initial values of the arriving labels
        departed (AbstractSet): Labels leaving before the map is applied

    Returns:
        LabeledVector: The state at the new tick
    """
    remaining = x_prev.restrict(x_prev.labels - frozenset(departed))
    mapped = standard_map(remaining)
    if mapped.labels != remaining.labels:
        raise ValueError("standard map changed the label set")
    if arrivals.labels & mapped.labels:
        raise ValueError("arriving labels collide with remaining ones")
    return LabeledVector({**dict(mapped.items()), **dict(arrivals.items())})
