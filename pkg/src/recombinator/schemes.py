"""Restart schemes: simple-kmeans, repeated-kmeans and recombinator-kmeans.

Every restart draws from its own random stream, derived from a master seed
and the restart's (batch, restart) coordinates with ``numpy.random.SeedSequence``.
Results are therefore identical whether restarts run sequentially or on a
pool of worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Configuration, Dataset, UsageError
from .lloyd import run_lloyd
from .seeding import Reservoir, default_s, greedy_kmeanspp, reservoir_kmeanspp


@dataclass
class SchemeParams:
    k: int
    s: int | None = None
    J: int = 10
    beta: float = 5.0
    rtol_stop: float = 1e-4
    max_batches: int = 100
    lloyd_max_iters: int = 1000

    def __post_init__(self):
        if self.k < 1:
            raise UsageError(f"k must be >= 1, got {self.k}")
        if self.s is None:
            self.s = default_s(self.k)
        if self.s < 1:
            raise UsageError(f"s must be >= 1, got {self.s}")
        if self.J < 1:
            raise UsageError(f"J must be >= 1, got {self.J}")
        if not self.beta >= 0:
            raise UsageError(f"beta must be >= 0, got {self.beta}")
        if not self.rtol_stop > 0:
            raise UsageError(f"rtol_stop must be > 0, got {self.rtol_stop}")
        if self.max_batches < 1:
            raise UsageError(f"max_batches must be >= 1, got {self.max_batches}")
        if self.lloyd_max_iters < 1:
            raise UsageError(f"lloyd_max_iters must be >= 1, got {self.lloyd_max_iters}")


@dataclass
class RunResult:
    config: Configuration
    loss: float
    lloyd_iterations: int
    converged: bool
    repairs: int
    stream: tuple = ()


@dataclass
class BatchRecord:
    batch_index: int
    losses: list
    best_loss_so_far: float
    min: float = field(init=False)
    mean: float = field(init=False)

    def __post_init__(self):
        self.min = min(self.losses)
        self.mean = float(np.mean(self.losses))


@dataclass
class SchemeOutcome:
    best: Configuration
    total_restarts: int
    batches: list
    stop_reason: str
    runs: list = field(default_factory=list, repr=False)

    @property
    def loss(self) -> float:
        return self.best.loss

    @property
    def all_losses(self) -> list:
        return [l for b in self.batches for l in b.losses]


STOP_COLLAPSED = "collapsed"
STOP_FAILSAFE = "failsafe"
STOP_MAX_BATCHES = "max_batches"
STOP_COMPLETED = "completed"


# ---------------------------------------------------------------------------
# streams


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def restart_stream(seed, *key: int) -> np.random.Generator:
    """Independent generator for the restart addressed by ``key`` under ``seed``.

    The key is appended to the seed sequence's own spawn key, so streams for
    distinct keys never overlap and do not depend on evaluation order.
    """
    ss = _seed_sequence(seed)
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(v) for v in key))
    return np.random.default_rng(child)


# ---------------------------------------------------------------------------
# single runs


def _finish(data: Dataset, init: Configuration, params: SchemeParams, stream: tuple) -> RunResult:
    out = run_lloyd(data, init, params.lloyd_max_iters)
    return RunResult(
        config=out.final,
        loss=out.final.loss,
        lloyd_iterations=out.iterations,
        converged=out.converged,
        repairs=out.empty_cluster_repairs,
        stream=stream,
    )


def simple_kmeans(data: Dataset, params: SchemeParams, rng: np.random.Generator, stream: tuple = ()) -> RunResult:
    """Greedy k-means++ seeding followed by Lloyd's algorithm."""
    init = greedy_kmeanspp(data, params.k, params.s, rng)
    return _finish(data, init, params, stream)


def _reservoir_run(data, reservoir, params, seed, batch, r):
    rng = restart_stream(seed, batch, r)
    init = reservoir_kmeanspp(reservoir, data, params.k, params.s, rng)
    return _finish(data, init, params, (batch, r))


def _map(executor, fn, items):
    if executor is None:
        return [fn(it) for it in items]
    return list(executor.map(fn, items))


def repeated_kmeans(data: Dataset, params: SchemeParams, R: int, seed, executor=None) -> SchemeOutcome:
    """Best of ``R`` independent simple-kmeans runs; restart r uses ``restart_stream(seed, 0, r)``."""
    if R < 1:
        raise UsageError(f"R must be >= 1, got {R}")

    def one(r):
        return simple_kmeans(data, params, restart_stream(seed, 0, r), stream=(0, r))

    runs = _map(executor, one, range(R))
    best = runs[0]
    for run in runs[1:]:
        if run.loss < best.loss:
            best = run
    record = BatchRecord(0, [run.loss for run in runs], best.loss)
    return SchemeOutcome(best.config, R, [record], STOP_COMPLETED, runs)


# ---------------------------------------------------------------------------
# recombinator pieces


def compute_weights(losses, beta: float) -> np.ndarray:
    """exp(-beta (l - l*) / (mean - l*)); all ones when every loss is equal."""
    l = np.asarray(losses, dtype=np.float64)
    if l.size == 0:
        raise UsageError("need at least one loss")
    if not np.all(np.isfinite(l)):
        raise UsageError("losses must be finite")
    best = l.min()
    mean = float(np.mean(l))
    if not mean > best:
        return np.ones_like(l)
    return np.exp(-beta * ((l - best) / (mean - best)))


def batch_collapsed(losses, rtol: float) -> bool:
    """True iff (mean - min) / min <= rtol.

    A zero minimum counts as collapsed only if every loss is zero.
    """
    l = np.asarray(losses, dtype=np.float64)
    lo = l.min()
    mean = float(np.mean(l))
    if lo == 0.0:
        return mean == 0.0
    return (mean - lo) / lo <= rtol


def failsafe_triggered(current: BatchRecord, previous: BatchRecord) -> bool:
    """Neither the batch minimum nor the batch mean improved on the previous batch."""
    return current.min >= previous.min and current.mean >= previous.mean


def recombinator_kmeans(data: Dataset, params: SchemeParams, seed, executor=None) -> SchemeOutcome:
    """Batched restarts whose pooled final centroids seed the next batch.

    Batch 0 seeds from the data with unit weights. After each batch the J*k
    final centroids become the new reservoir, every centroid of restart r
    weighted by ``compute_weights`` of the batch losses. Stops when the batch
    collapses (mean ~ min), when neither min nor mean improved on the previous
    batch, or after ``max_batches`` batches. Restart r of batch t draws from
    ``restart_stream(seed, t, r)``.
    """
    k, J = params.k, params.J
    reservoir = Reservoir.from_data(data)
    best: RunResult | None = None
    batches: list[BatchRecord] = []
    runs: list[RunResult] = []
    stop = STOP_MAX_BATCHES
    previous = None
    for t in range(params.max_batches):
        batch = _map(executor, lambda r: _reservoir_run(data, reservoir, params, seed, t, r), range(J))
        for run in batch:
            if best is None or run.loss < best.loss:
                best = run
        runs.extend(batch)
        losses = [run.loss for run in batch]
        record = BatchRecord(t, losses, best.loss)
        batches.append(record)
        if batch_collapsed(losses, params.rtol_stop):
            stop = STOP_COLLAPSED
            break
        if previous is not None and failsafe_triggered(record, previous):
            stop = STOP_FAILSAFE
            break
        previous = record
        w = compute_weights(losses, params.beta)
        reservoir = Reservoir(
            np.concatenate([run.config.centroids for run in batch]),
            np.repeat(w, k),
        )
    return SchemeOutcome(best.config, J * len(batches), batches, stop, runs)
