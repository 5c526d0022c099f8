"""k-means++ seeding: basic, greedy (s candidates per slot) and reservoir variants.

Random draws are part of the determinism contract. Every sampling step
consumes exactly one ``rng.random()`` double, resolved against the
cumulative mass array. The greedy variants draw all ``s`` candidates of a
slot before evaluating any of them. As a consequence, with the same stream:

* greedy with ``s=1`` reproduces basic k-means++ exactly;
* reservoir seeding over the data itself with unit weights reproduces greedy.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .core import Configuration, Dataset, UsageError, _dist_to_point


class Reservoir:
    """Candidate seed points with one nonnegative prior weight each."""

    __slots__ = ("pool", "weights")

    def __init__(self, pool, weights=None):
        self.pool = Dataset(pool).points
        if weights is None:
            weights = np.ones(self.pool.shape[0])
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.shape != (self.pool.shape[0],):
            raise UsageError(
                f"need one weight per pool point: {w.shape[0]} weights, {self.pool.shape[0]} points"
            )
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise UsageError("weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise UsageError("at least one reservoir weight must be positive")
        self.weights = w

    @classmethod
    def from_data(cls, data: Dataset) -> "Reservoir":
        return cls(data.points, np.ones(data.n))

    @property
    def size(self) -> int:
        return self.pool.shape[0]

    @property
    def dim(self) -> int:
        return self.pool.shape[1]


class SeedingScratch:
    """Running min squared distance of every pool point to the chosen centroids.

    Before any centroid is chosen the distances are +inf and sampling is by
    weight alone.
    """

    def __init__(self, reservoir: Reservoir):
        self.reservoir = reservoir
        self.min_dist_sq = np.full(reservoir.size, np.inf)
        self._tmp = np.empty(reservoir.size)
        self._cum = None
        self.n_centroids = 0

    def append(self, c: np.ndarray) -> None:
        _dist_to_point(self.reservoir.pool, c, self._tmp)
        np.minimum(self.min_dist_sq, self._tmp, out=self.min_dist_sq)
        self.n_centroids += 1
        self._cum = None

    def cumulative_mass(self) -> np.ndarray:
        if self._cum is None:
            w = self.reservoir.weights
            if self.n_centroids == 0:
                mass = w
            else:
                mass = w * self.min_dist_sq
            cum = np.cumsum(mass)
            if cum[-1] == 0.0:
                # every positive-weight point coincides with a chosen centroid
                cum = np.cumsum(w)
            self._cum = cum
        return self._cum

    @property
    def total_mass(self) -> float:
        return float(self.cumulative_mass()[-1])


def _inverse_cdf(cum: np.ndarray, u: float) -> int:
    """Index i with cum[i-1] <= u*total < cum[i]; zero-mass entries are never returned."""
    target = u * cum[-1]
    i = int(np.searchsorted(cum, target, side="right"))
    if i >= cum.shape[0]:
        # u*total rounded up to total: take the last entry carrying mass
        i = int(np.searchsorted(cum, cum[-1], side="left"))
    return i


def d2_sample(reservoir: Reservoir, scratch: SeedingScratch, rng: np.random.Generator) -> int:
    """Draw a pool index with probability proportional to weight * min squared distance."""
    if scratch.reservoir is not reservoir:
        raise UsageError("scratch was built for a different reservoir")
    return _inverse_cdf(scratch.cumulative_mass(), rng.random())


def default_s(k: int) -> int:
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    return max(1, int(math.floor(2 + math.log(k))))


def _check_k(k: int) -> None:
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")


def basic_kmeanspp(data: Dataset, k: int, rng: np.random.Generator) -> Configuration:
    _check_k(k)
    x = data.points
    n = data.n
    chosen = np.empty((k, data.dim))
    i = _inverse_cdf(np.cumsum(np.ones(n)), rng.random())
    chosen[0] = x[i]
    min_d2 = np.empty(n)
    _dist_to_point(x, chosen[0], min_d2)
    tmp = np.empty(n)
    for a in range(1, k):
        cum = np.cumsum(min_d2)
        if cum[-1] == 0.0:
            cum = np.cumsum(np.ones(n))
        i = _inverse_cdf(cum, rng.random())
        chosen[a] = x[i]
        _dist_to_point(x, chosen[a], tmp)
        np.minimum(min_d2, tmp, out=min_d2)
    return Configuration(chosen)


@numba.njit(cache=True, nogil=True)
def _candidate_loss(x, c, min_d2, out):
    """Fill ``out`` with min(min_d2, |x_i - c|^2) and return its sum in index order."""
    total = 0.0
    for i in range(x.shape[0]):
        d = 0.0
        for j in range(x.shape[1]):
            t = x[i, j] - c[j]
            d += t * t
        m = min_d2[i]
        if d < m:
            m = d
        out[i] = m
        total += m
    return total


def _pick_best(x, candidates, min_d2, bufs):
    """Evaluate each candidate's partial loss incrementally; first-drawn wins ties."""
    best_b = -1
    best_loss = np.inf
    for b, c in enumerate(candidates):
        l = _candidate_loss(x, c, min_d2, bufs[b])
        if l < best_loss:
            best_loss = l
            best_b = b
    return best_b, best_loss


def greedy_kmeanspp(data: Dataset, k: int, s: int | None, rng: np.random.Generator) -> Configuration:
    """k-means++ where each slot after the first keeps the best of ``s`` D²-sampled candidates.

    Candidate partial losses are evaluated in O(N d) each by keeping the
    current per-point minimum distance; the winner's distance array becomes the
    new minimum directly, so a slot costs O(N d s) overall.
    """
    _check_k(k)
    if s is None:
        s = default_s(k)
    if s < 1:
        raise UsageError(f"s must be >= 1, got {s}")
    x = data.points
    n = data.n
    chosen = np.empty((k, data.dim))
    i = _inverse_cdf(np.cumsum(np.ones(n)), rng.random())
    chosen[0] = x[i]
    min_d2 = np.empty(n)
    _dist_to_point(x, chosen[0], min_d2)
    bufs = np.empty((s, n))
    for a in range(1, k):
        cum = np.cumsum(min_d2)
        if cum[-1] == 0.0:
            cum = np.cumsum(np.ones(n))
        idx = [_inverse_cdf(cum, rng.random()) for _ in range(s)]
        best_b, _ = _pick_best(x, [x[i] for i in idx], min_d2, bufs)
        chosen[a] = x[idx[best_b]]
        min_d2 = bufs[best_b].copy()
    return Configuration(chosen)


def reservoir_kmeanspp(
    reservoir: Reservoir, data: Dataset, k: int, s: int | None, rng: np.random.Generator
) -> Configuration:
    """Greedy k-means++ drawing seeds from ``reservoir`` while scoring candidates on ``data``.

    The first seed is drawn proportionally to the reservoir weights; each
    further candidate proportionally to weight times squared distance to the
    nearest seed so far.
    """
    _check_k(k)
    if s is None:
        s = default_s(k)
    if s < 1:
        raise UsageError(f"s must be >= 1, got {s}")
    if reservoir.dim != data.dim:
        raise UsageError(
            f"dimension mismatch: reservoir has d={reservoir.dim}, data has d={data.dim}"
        )
    x = data.points
    pool = reservoir.pool
    scratch = SeedingScratch(reservoir)
    chosen = np.empty((k, data.dim))

    i = d2_sample(reservoir, scratch, rng)
    chosen[0] = pool[i]
    scratch.append(chosen[0])
    data_min_d2 = np.empty(data.n)
    _dist_to_point(x, chosen[0], data_min_d2)
    bufs = np.empty((s, data.n))
    for a in range(1, k):
        idx = [d2_sample(reservoir, scratch, rng) for _ in range(s)]
        best_b, _ = _pick_best(x, [pool[i] for i in idx], data_min_d2, bufs)
        chosen[a] = pool[idx[best_b]]
        data_min_d2 = bufs[best_b].copy()
        scratch.append(chosen[a])
    return Configuration(chosen)
