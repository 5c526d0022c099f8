"""Data types, squared-Euclidean distances, loss and nearest-centroid assignment.

All hot loops are numba kernels that sum coordinates directly (no
``|x|^2 + |c|^2 - 2 x.c`` expansion), in point-index order, so that every
result is bit-stable for given inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


class UsageError(ValueError):
    """Raised when an operation is called with arguments violating its contract."""


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, nogil=True)
def _sqdist(x, i, c, a):
    d = 0.0
    for j in range(x.shape[1]):
        t = x[i, j] - c[a, j]
        d += t * t
    return d


@numba.njit(cache=True, nogil=True)
def _assign_kernel(x, c, labels, dists):
    n, dim = x.shape
    k = c.shape[0]
    for i in range(n):
        best = np.inf
        best_a = 0
        for a in range(k):
            d = 0.0
            for j in range(dim):
                t = x[i, j] - c[a, j]
                d += t * t
                # partial sums of nonnegative terms never decrease under
                # rounding, so abandoning here cannot change the argmin
                if d >= best:
                    break
            if d < best:
                best = d
                best_a = a
        labels[i] = best_a
        dists[i] = best


@numba.njit(cache=True, nogil=True)
def _sum_kernel(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i]
    return s


@numba.njit(cache=True, nogil=True)
def _dist_to_point(x, c, out):
    """Squared distance of every row of ``x`` to the single point ``c``."""
    for i in range(x.shape[0]):
        d = 0.0
        for j in range(x.shape[1]):
            t = x[i, j] - c[j]
            d += t * t
        out[i] = d


# ---------------------------------------------------------------------------
# types


def _as_matrix(values, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise UsageError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


class Dataset:
    """N points in d dimensions, stored as a read-only row-major float64 matrix.

    A 1-d input is read as N one-dimensional points.
    """

    __slots__ = ("points",)

    def __init__(self, points):
        self.points = _as_matrix(points, "points")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> np.ndarray:
        return self.points[i]

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, dim={self.dim})"


class Configuration:
    """An ordered list of k centroids, optionally carrying its loss on some dataset."""

    __slots__ = ("centroids", "loss")

    def __init__(self, centroids, loss: float | None = None):
        self.centroids = _as_matrix(centroids, "centroids")
        if loss is not None:
            loss = float(loss)
            if not loss >= 0.0:
                raise UsageError(f"loss must be nonnegative, got {loss}")
        self.loss = loss

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def with_loss(self, data: Dataset) -> "Configuration":
        return Configuration(self.centroids, loss(data, self))

    def __repr__(self) -> str:
        return f"Configuration(k={self.k}, dim={self.dim}, loss={self.loss})"


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    distances: np.ndarray
    loss: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "loss", float(_sum_kernel(self.distances)))


# ---------------------------------------------------------------------------
# operations


def _check_dims(data: Dataset, config: Configuration) -> None:
    if data.dim != config.dim:
        raise UsageError(
            f"dimension mismatch: data has d={data.dim}, centroids have d={config.dim}"
        )


def squared_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    d = 0.0
    for aj, bj in zip(a.tolist(), b.tolist()):
        t = aj - bj
        d += t * t
    return d


def assign(data: Dataset, config: Configuration) -> Assignment:
    """Nearest-centroid labels (lowest index wins ties) and squared distances."""
    _check_dims(data, config)
    labels = np.empty(data.n, dtype=np.int64)
    dists = np.empty(data.n, dtype=np.float64)
    _assign_kernel(data.points, config.centroids, labels, dists)
    return Assignment(labels, dists)


def loss(data: Dataset, config: Configuration) -> float:
    """k-means objective: sum over points of the squared distance to the nearest centroid."""
    return assign(data, config).loss
