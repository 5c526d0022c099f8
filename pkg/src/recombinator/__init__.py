"""Recombinator k-means: batched k-means++ restarts seeded from pools of earlier solutions."""

from .core import Assignment, Configuration, Dataset, UsageError, assign, loss, squared_distance
from .data import ParseError, load_dataset, scale_to_unit_square
from .lloyd import LloydOutcome, lloyd_step, run_lloyd
from .schemes import (
    BatchRecord,
    RunResult,
    SchemeOutcome,
    SchemeParams,
    batch_collapsed,
    compute_weights,
    failsafe_triggered,
    recombinator_kmeans,
    repeated_kmeans,
    restart_stream,
    simple_kmeans,
)
from .seeding import (
    Reservoir,
    SeedingScratch,
    basic_kmeanspp,
    d2_sample,
    default_s,
    greedy_kmeanspp,
    reservoir_kmeanspp,
)

__version__ = "0.1.0"
