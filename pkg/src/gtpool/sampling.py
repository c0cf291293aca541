"""Plug-and-play node selection from a significance-score vector.

Given normalized per-node scores, three deterministic strategies pick
``M = ceil(mu * n)`` distinct nodes:

* ``topk``  -- the M highest-scoring nodes (ties to the lower index).
* ``rws``   -- roulette-wheel sampling: fixed points k = i/(M+1) fall into
  cumulative-score intervals ``(CDF[i-1], CDF[i]]``.
* ``rwsv``  -- a wheel variant that picks the node whose cumulative score is
  nearest to k, which widens the intervals of low-scoring nodes.

Duplicate hits are re-sampled by walking left around the wheel (cyclically)
to the first unselected node. Everything here is a pure function of its
inputs, so selection is identical across training and inference.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

METHODS = ("topk", "rws", "rwsv")


@dataclass(frozen=True)
class ScoreDistribution:
    """Normalized significance scores and their cumulative form."""

    s: np.ndarray
    cdf: np.ndarray = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64).ravel()
        if s.size == 0:
            raise ValueError("score distribution needs at least one node")
        if (s < 0).any():
            raise ValueError("scores must be nonnegative")
        total = s.sum()
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"scores must sum to 1 (got {total!r}); normalize first")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "cdf", np.cumsum(s))

    @property
    def n(self) -> int:
        return self.s.size

    @staticmethod
    def from_scores(raw) -> "ScoreDistribution":
        """Normalize an arbitrary positive vector into a distribution."""
        raw = np.asarray(raw, dtype=np.float64).ravel()
        if raw.size == 0:
            raise ValueError("score vector is empty")
        if (raw <= 0).any():
            raise ValueError("raw scores must be strictly positive")
        return ScoreDistribution(raw / raw.sum())


@dataclass(frozen=True)
class SampleSpec:
    """How many nodes to keep and by which strategy."""

    mu: float = 0.5
    method: str = "rwsv"

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"pooling ratio must be in (0, 1], got {self.mu}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    def count(self, n: int) -> int:
        return math.ceil(self.mu * n)


def sample_points(n: int, mu: float) -> list[float]:
    """The M = ceil(mu*n) fixed, evenly spaced points i/(M+1) inside (0, 1)."""
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    m = math.ceil(mu * n)
    return [i / (m + 1) for i in range(1, m + 1)]


def rws(dist: ScoreDistribution, k: float) -> int:
    """Index of the wheel interval (CDF[i-1], CDF[i]] containing k."""
    _check_point(k)
    idx = bisect_left(dist.cdf, k)
    return min(idx, dist.n - 1)  # guard the k ~ 1 float edge


def rwsv(dist: ScoreDistribution, k: float) -> int:
    """Index whose cumulative score is nearest to k; midpoint ties go lower."""
    _check_point(k)
    cdf = dist.cdf
    hi = bisect_left(cdf, k)
    if hi >= dist.n:
        hi = dist.n - 1
    if hi == 0:
        return 0
    lo = hi - 1
    if k - cdf[lo] <= cdf[hi] - k:
        # ties among equal cumulative values resolve to the lowest index
        return bisect_left(cdf, cdf[lo])
    return hi


def select(dist: ScoreDistribution, spec: SampleSpec) -> list[int]:
    """M distinct node indices, ascending, per the spec's strategy."""
    n = dist.n
    m = spec.count(n)
    if spec.method == "topk":
        order = sorted(range(n), key=lambda i: (-dist.s[i], i))
        return sorted(order[:m])

    pick = rws if spec.method == "rws" else rwsv
    chosen: set[int] = set()
    for k in sample_points(n, spec.mu):
        idx = pick(dist, k)
        while idx in chosen:  # nearest-left (cyclic) replacement on the wheel
            idx = (idx - 1) % n
        chosen.add(idx)
    return sorted(chosen)


def select_nodes(scores, mu: float = 0.5, method: str = "rwsv") -> list[int]:
    """Score-vector-to-indices entry point for swapping into other poolers.

    ``scores`` may be any strictly positive vector; it is normalized here.
    """
    return select(ScoreDistribution.from_scores(scores), SampleSpec(mu, method))


def brute_force_select(dist: ScoreDistribution, spec: SampleSpec) -> list[int]:
    """Reference implementation via linear interval scans (test oracle)."""
    n = dist.n
    m = spec.count(n)
    if spec.method == "topk":
        ranked = sorted(range(n), key=lambda i: (-dist.s[i], i))[:m]
        return sorted(ranked)

    intervals = rws_intervals(dist) if spec.method == "rws" else rwsv_intervals(dist)
    chosen: set[int] = set()
    for k in sample_points(n, spec.mu):
        idx = _scan(intervals, k, spec.method)
        while idx in chosen:
            idx = (idx - 1) % n
        chosen.add(idx)
    return sorted(chosen)


def rws_intervals(dist: ScoreDistribution) -> list[tuple[float, float]]:
    """Wheel intervals (CDF[i-1], CDF[i]] as (lo, hi) pairs, CDF[-1] = 0."""
    cdf = dist.cdf
    lows = np.concatenate(([0.0], cdf[:-1]))
    return list(zip(lows.tolist(), cdf.tolist()))


def rwsv_intervals(dist: ScoreDistribution) -> list[tuple[float, float]]:
    """Midpoint-partitioned intervals: node i owns the span of cumulative
    values closer to CDF[i] than to its neighbors; the first interval starts
    at 0 and the last ends at 1.

    Duplicated cumulative values (zero-score nodes) always lose the nearest
    tie to the earlier node with the same value, so each span between
    neighboring distinct values belongs to the first index of its run and
    later duplicates get empty intervals.
    """
    cdf = dist.cdf.tolist()
    distinct: list[float] = []
    first_idx: list[int] = []
    for i, v in enumerate(cdf):
        if not distinct or v > distinct[-1]:
            distinct.append(v)
            first_idx.append(i)
    mids = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    lows = [0.0] + mids
    highs = mids + [1.0]
    intervals = [(v, v) for v in cdf]  # empty placeholders for duplicates
    for j, i in enumerate(first_idx):
        intervals[i] = (lows[j], highs[j])
    return intervals


def _scan(intervals: list[tuple[float, float]], k: float, method: str) -> int:
    for i, (lo, hi) in enumerate(intervals):
        inside = lo < k <= hi if method == "rws" else lo <= k <= hi
        if inside:
            return i
    return len(intervals) - 1


def _check_point(k: float) -> None:
    if not 0.0 < k < 1.0:
        raise ValueError(f"sample point must lie strictly inside (0, 1), got {k}")
