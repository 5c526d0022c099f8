"""Independent reference computations used by the tests.

Nothing here imports the kernels under test: distances are plain numpy
broadcasts, optima come from exhaustive enumeration.
"""

import itertools

import numpy as np


def sqdist_matrix(x, c):
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def brute_force_labels(x, c):
    # np.argmin returns the first minimum, i.e. the lowest centroid index on ties
    return np.argmin(sqdist_matrix(x, c), axis=1)


def naive_loss(x, c):
    return float(sqdist_matrix(x, c).min(axis=1).sum())


def partition_loss(x, labels, k):
    x = np.asarray(x, dtype=float)
    total = 0.0
    for a in range(k):
        members = x[labels == a]
        if len(members):
            total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def exhaustive_optimum(x, k):
    """Global k-means optimum by enumerating every labeling of the points."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    labels = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)
    onehot = (labels[:, :, None] == np.arange(k)).astype(float)  # (L, n, k)
    counts = onehot.sum(axis=1)
    sums = np.einsum("lna,nd->lad", onehot, x)
    sumsq = np.einsum("lna,n->la", onehot, (x**2).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        within = np.where(counts > 0, sumsq - (sums**2).sum(axis=2) / counts, 0.0)
    approx = within.sum(axis=1)
    # the sum-of-squares shortcut cancels badly; rescore the best few exactly
    top = np.argsort(approx)[:16]
    return min(partition_loss(x, labels[i], k) for i in top)


def d2_probabilities(pool, weights, centroids):
    """Exact sampling law of one weighted D² draw."""
    pool = np.asarray(pool, dtype=float).reshape(len(pool), -1)
    w = np.asarray(weights, dtype=float)
    if len(centroids) == 0:
        mass = w.copy()
    else:
        mass = w * sqdist_matrix(pool, np.asarray(centroids, dtype=float).reshape(len(centroids), -1)).min(axis=1)
    if mass.sum() == 0:
        mass = w.copy()
    return mass / mass.sum()


def naive_greedy(x, k, s, rng):
    """Greedy k-means++ replayed with full loss recomputation for every candidate.

    Uses the same draw protocol as the library (one uniform double per draw,
    resolved against a cumulative mass array) so that the stream can be
    replayed. Returns (centroids, per-slot list of (candidate index, loss)).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)

    def draw(mass):
        cum = np.cumsum(mass)
        if cum[-1] == 0:
            cum = np.cumsum(np.ones(n))
        t = rng.random() * cum[-1]
        i = int(np.searchsorted(cum, t, side="right"))
        if i >= n:
            i = int(np.searchsorted(cum, cum[-1], side="left"))
        return i

    chosen = [x[draw(np.ones(n))]]
    log = []
    for _ in range(1, k):
        mass = sqdist_matrix(x, np.array(chosen)).min(axis=1)
        idx = [draw(mass) for _ in range(s)]
        evaluated = [(i, naive_loss(x, np.array(chosen + [x[i]]))) for i in idx]
        best_i, best_l = evaluated[0]
        for i, l in evaluated[1:]:
            if l < best_l:
                best_i, best_l = i, l
        log.append(evaluated)
        chosen.append(x[best_i])
    return np.array(chosen), log
