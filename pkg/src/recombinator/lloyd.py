"""Lloyd's alternating minimization, run to an exact assignment fixed point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .core import Assignment, Configuration, Dataset, UsageError, _check_dims, assign


@dataclass
class LloydOutcome:
    final: Configuration
    iterations: int
    converged: bool
    empty_cluster_repairs: int
    # loss of the configuration entering each round, then the final loss
    losses: list = field(default_factory=list)
    # per-round repair counts, aligned with losses[1:]
    repairs_per_round: list = field(default_factory=list)


@numba.njit(cache=True, nogil=True)
def _update_kernel(x, labels, k, sums, counts):
    n, dim = x.shape
    for a in range(k):
        counts[a] = 0
        for j in range(dim):
            sums[a, j] = 0.0
    for i in range(n):
        a = labels[i]
        counts[a] += 1
        for j in range(dim):
            sums[a, j] += x[i, j]


def _update(data: Dataset, asg: Assignment, k: int) -> tuple[np.ndarray, int]:
    x = data.points
    sums = np.empty((k, data.dim))
    counts = np.empty(k, dtype=np.int64)
    _update_kernel(x, asg.labels, k, sums, counts)
    empty = np.flatnonzero(counts == 0)
    nonempty = counts > 0
    centroids = np.empty_like(sums)
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    if empty.size:
        # farthest points first; stable sort keeps lower index on equal distance
        order = np.argsort(-asg.distances, kind="stable")
        for a, i in zip(empty, order[: empty.size]):
            centroids[a] = x[i]
    return centroids, int(empty.size)


def lloyd_step(data: Dataset, config: Configuration):
    """One assign/update round.

    Returns the updated configuration (loss unset), the assignment of ``data``
    to the *input* configuration, and the number of empty clusters that were
    relocated onto far-away data points.
    """
    _check_dims(data, config)
    asg = assign(data, config)
    centroids, repaired = _update(data, asg, config.k)
    return Configuration(centroids), asg, repaired


def run_lloyd(data: Dataset, init: Configuration, max_iters: int = 1000) -> LloydOutcome:
    if max_iters < 1:
        raise UsageError(f"max_iters must be >= 1, got {max_iters}")
    _check_dims(data, init)

    config = init
    asg = assign(data, config)
    losses = [asg.loss]
    repairs_per_round = []
    prev_labels = None
    iterations = 0
    converged = False
    while True:
        if prev_labels is not None and np.array_equal(asg.labels, prev_labels):
            converged = True
            break
        if iterations == max_iters:
            break
        centroids, repaired = _update(data, asg, config.k)
        config = Configuration(centroids)
        prev_labels = asg.labels
        asg = assign(data, config)
        iterations += 1
        losses.append(asg.loss)
        repairs_per_round.append(repaired)

    final = Configuration(config.centroids, asg.loss)
    assert final.loss <= losses[0] * (1 + 1e-12) + 1e-300, "Lloyd increased the loss"
    return LloydOutcome(
        final=final,
        iterations=iterations,
        converged=converged,
        empty_cluster_repairs=sum(repairs_per_round),
        losses=losses,
        repairs_per_round=repairs_per_round,
    )
