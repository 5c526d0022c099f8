"""Comparison protocol: simple-kmeans pool, cost-matched bootstrap of repeated-kmeans,
recombinator samples, summaries and plot-ready CSVs.

Random streams are addressed by spawn keys under the master seed:

    (0, i)          experiment sample i (recombinator appends (batch, restart))
    (1, i)          simple-kmeans pool run i
    (2,)            bootstrap draws for the cost-matched repeated-kmeans losses

so every number in every CSV is a function of the master seed alone,
independently of the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..core import Dataset, UsageError
from ..data import load_dataset, scale_to_unit_square
from ..schemes import (
    STOP_COMPLETED,
    SchemeParams,
    recombinator_kmeans,
    repeated_kmeans,
    restart_stream,
    simple_kmeans,
)

log = logging.getLogger(__name__)

THREADS_ENV = "RKM_THREADS"
ALGORITHMS = ("simple", "repeated", "recombinator")

SAMPLE_KEY = 0
POOL_KEY = 1
BOOTSTRAP_KEY = 2


def fmt(x) -> str:
    """Fixed float formatting used in every CSV (17 significant digits)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def resolve_threads(flag: int | None) -> int:
    """Worker count: the flag wins, then $RKM_THREADS, then 1."""
    if flag is not None:
        n = flag
    else:
        n = int(os.environ.get(THREADS_ENV, "1"))
    if n < 1:
        raise UsageError(f"thread count must be >= 1, got {n}")
    return n


@dataclass
class ExperimentConfig:
    dataset: str
    k: int
    format: str = "whitespace"
    algorithm: str = "recombinator"
    J: int = 10
    beta: float = 5.0
    s: int | None = None
    rtol: float = 1e-4
    max_batches: int = 100
    lloyd_max_iters: int = 1000
    samples: int = 100
    restarts: int | None = None
    pool_size: int = 10_000
    pool_path: str | None = None
    seed: int = 0
    success_threshold: float | None = None
    unit_scale: bool = False
    out_dir: str | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.samples < 1:
            raise UsageError(f"samples must be >= 1, got {self.samples}")
        if self.pool_size < 1:
            raise UsageError(f"pool size must be >= 1, got {self.pool_size}")
        if self.algorithm == "repeated" and (self.restarts is None or self.restarts < 1):
            raise UsageError("algorithm 'repeated' needs restarts >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")

    def params(self) -> SchemeParams:
        return SchemeParams(
            k=self.k,
            s=self.s,
            J=self.J,
            beta=self.beta,
            rtol_stop=self.rtol,
            max_batches=self.max_batches,
            lloyd_max_iters=self.lloyd_max_iters,
        )

    def header(self) -> str:
        """One-line JSON description carried as a comment on top of every CSV.

        Output locations and the worker count are left out: they do not
        affect any number and would break byte-for-byte comparisons.
        """
        d = asdict(self)
        d["s"] = self.params().s
        for key in ("out_dir", "threads"):
            d.pop(key)
        return "# " + json.dumps(d, sort_keys=True)


def load_config_dataset(config: ExperimentConfig) -> Dataset:
    data = load_dataset(config.dataset, config.format)
    if config.unit_scale:
        data = scale_to_unit_square(data)
    return data


# ---------------------------------------------------------------------------
# statistics


def median(values) -> float:
    v = sorted(float(x) for x in values)
    if not v:
        raise UsageError("median of an empty list")
    m = len(v) // 2
    if len(v) % 2:
        return v[m]
    return (v[m - 1] + v[m]) / 2


@dataclass
class Stats:
    mean: float
    std: float
    min: float
    median: float
    max: float

    @classmethod
    def of(cls, values) -> "Stats":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise UsageError("statistics of an empty list")
        std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
        return cls(float(np.mean(v)), std, float(v.min()), median(v), float(v.max()))


def success_rate(losses, threshold: float | None) -> float | None:
    if threshold is None:
        return None
    return sum(1 for l in losses if l <= threshold) / len(losses)


@dataclass
class ExperimentSummary:
    n: int
    loss: Stats
    R: Stats
    success: float | None = None
    rep: Stats | None = None
    rep_success: float | None = None
    pool_min: float | None = None
    pool_median: float | None = None

    COLUMNS = (
        "n",
        "R_mean", "R_std", "R_min", "R_median", "R_max",
        "loss_mean", "loss_std", "loss_min", "loss_median", "loss_max", "success",
        "rep_mean", "rep_std", "rep_min", "rep_median", "rep_max", "rep_success",
        "pool_min", "pool_median",
    )

    def row(self) -> dict:
        out = {"n": self.n}
        for prefix, st in (("R", self.R), ("loss", self.loss), ("rep", self.rep)):
            for f in fields(Stats):
                out[f"{prefix}_{f.name}"] = getattr(st, f.name) if st is not None else None
        out["success"] = self.success
        out["rep_success"] = self.rep_success
        out["pool_min"] = self.pool_min
        out["pool_median"] = self.pool_median
        return {c: out[c] for c in self.COLUMNS}


# ---------------------------------------------------------------------------
# csv helpers


def _write_csv(path, header_line: str | None, columns, rows) -> None:
    buf = io.StringIO()
    if header_line:
        buf.write(header_line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else fmt(v) for v in r])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> tuple[str | None, list[dict]]:
    """Return (header comment without '# ', rows as dicts of strings)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    comment = None
    if text and text[0].startswith("#"):
        comment = text[0][1:].strip()
        text = text[1:]
    return comment, list(csv.DictReader(text))


# ---------------------------------------------------------------------------
# simple-kmeans pool and the bootstrap baseline


def _pool_run(data, params, seed, i):
    rng = restart_stream(np.random.SeedSequence(seed, spawn_key=(POOL_KEY,)), i)
    return simple_kmeans(data, params, rng).loss


def build_simple_pool(config: ExperimentConfig, data: Dataset | None = None, path=None) -> list:
    """``config.pool_size`` independent simple-kmeans losses, written to ``path`` when given."""
    if data is None:
        data = load_config_dataset(config)
    params = config.params()
    n_threads = resolve_threads(config.threads)
    started = time.perf_counter()
    with ThreadPoolExecutor(n_threads) as ex:
        losses = list(ex.map(lambda i: _pool_run(data, params, config.seed, i), range(config.pool_size)))
    log.info("simple pool: %d runs in %.1fs", len(losses), time.perf_counter() - started)
    if path is not None:
        _write_csv(
            path,
            config.header(),
            ("run_id", "loss", "seed_stream"),
            [(i, l, f"{POOL_KEY}/{i}") for i, l in enumerate(losses)],
        )
    return losses


def load_pool(path) -> list:
    _, rows = read_csv(path)
    if not rows:
        raise UsageError(f"{path}: empty pool")
    return [float(r["loss"]) for r in rows]


def bootstrap_repeated(pool, R: int, trials: int, rng: np.random.Generator) -> list:
    """Each trial: the minimum of ``R`` draws with replacement from ``pool``."""
    pool = np.asarray(pool, dtype=np.float64)
    if pool.size == 0:
        raise UsageError("pool must be nonempty")
    if R < 1:
        raise UsageError(f"R must be >= 1, got {R}")
    return [float(pool[rng.integers(0, pool.size, size=R)].min()) for _ in range(trials)]


def bootstrap_matched(pool, Rs, rng: np.random.Generator) -> list:
    """One bootstrap trial per entry of ``Rs``, each using exactly that R."""
    return [bootstrap_repeated(pool, int(R), 1, rng)[0] for R in Rs]


# ---------------------------------------------------------------------------
# experiment


@dataclass
class SampleRecord:
    run_id: int
    loss: float
    R: int
    batches: int
    stop_reason: str
    seed_stream: str
    batch_losses: list = field(repr=False, default_factory=list)
    centroids: np.ndarray | None = field(repr=False, default=None)
    seconds: float = 0.0


def _run_sample(data, config: ExperimentConfig, params: SchemeParams, i: int) -> SampleRecord:
    ss = np.random.SeedSequence(config.seed, spawn_key=(SAMPLE_KEY, i))
    started = time.perf_counter()
    if config.algorithm == "recombinator":
        out = recombinator_kmeans(data, params, ss)
        rec = SampleRecord(i, out.loss, out.total_restarts, len(out.batches), out.stop_reason,
                           f"{SAMPLE_KEY}/{i}", [b.losses for b in out.batches], out.best.centroids)
    elif config.algorithm == "repeated":
        out = repeated_kmeans(data, params, config.restarts, ss)
        rec = SampleRecord(i, out.loss, out.total_restarts, 1, out.stop_reason,
                           f"{SAMPLE_KEY}/{i}", [b.losses for b in out.batches], out.best.centroids)
    else:
        run = simple_kmeans(data, params, restart_stream(ss))
        rec = SampleRecord(i, run.loss, 1, 1, STOP_COMPLETED, f"{SAMPLE_KEY}/{i}",
                           [[run.loss]], run.config.centroids)
    rec.seconds = time.perf_counter() - started
    return rec


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: ExperimentSummary
    rep_losses: list | None
    pool: list | None


def run_experiment(config: ExperimentConfig, data: Dataset | None = None, pool=None) -> ExperimentResult:
    """Collect ``config.samples`` outcomes and summarize them against the simple-kmeans pool.

    For each outcome with R restarts, one repeated-kmeans loss is bootstrapped
    from the pool with that same R. The pool comes from ``pool`` if given,
    else from ``config.pool_path`` if that file exists, else it is built (and
    saved to ``pool_path`` when set). For ``algorithm='simple'`` the pool is
    only consulted when one is supplied.
    """
    if data is None:
        data = load_config_dataset(config)
    params = config.params()
    n_threads = resolve_threads(config.threads)

    started = time.perf_counter()
    with ThreadPoolExecutor(n_threads) as ex:
        records = list(ex.map(lambda i: _run_sample(data, config, params, i), range(config.samples)))
    log.info("%d %s samples in %.1fs", len(records), config.algorithm, time.perf_counter() - started)

    need_pool = config.algorithm != "simple" or pool is not None or config.pool_path
    if need_pool and pool is None:
        if config.pool_path and Path(config.pool_path).exists():
            pool = load_pool(config.pool_path)
        else:
            pool = build_simple_pool(config, data, config.pool_path)

    losses = [r.loss for r in records]
    Rs = [r.R for r in records]
    rep = None
    if pool is not None and config.algorithm != "simple":
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(BOOTSTRAP_KEY,)))
        rep = bootstrap_matched(pool, Rs, rng)

    summary = ExperimentSummary(
        n=len(records),
        loss=Stats.of(losses),
        R=Stats.of(Rs),
        success=success_rate(losses, config.success_threshold),
        rep=Stats.of(rep) if rep is not None else None,
        rep_success=success_rate(rep, config.success_threshold) if rep is not None else None,
        pool_min=min(pool) if pool is not None else None,
        pool_median=median(pool) if pool is not None else None,
    )
    result = ExperimentResult(config, records, summary, rep, pool)
    if config.out_dir:
        write_outputs(result, config.out_dir)
    return result


RUN_COLUMNS = ("run_id", "loss", "R", "batches", "stop_reason", "seed_stream")


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write runs.csv, batches.csv, summary.csv (+ repeated.csv, timings.csv). Returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = result.config.header()
    paths = {
        "runs": out / "runs.csv",
        "batches": out / "batches.csv",
        "summary": out / "summary.csv",
        "timings": out / "timings.csv",
    }
    _write_csv(paths["runs"], header, RUN_COLUMNS,
               [(r.run_id, r.loss, r.R, r.batches, r.stop_reason, r.seed_stream) for r in result.records])
    _write_csv(paths["batches"], header, ("run_id", "batch", "restart", "loss"),
               [(r.run_id, t, j, l) for r in result.records
                for t, ls in enumerate(r.batch_losses) for j, l in enumerate(ls)])
    row = result.summary.row()
    cfg = result.config
    lead = {"dataset": Path(cfg.dataset).name, "k": cfg.k, "algorithm": cfg.algorithm,
            "J": cfg.J, "beta": cfg.beta, "s": cfg.params().s}
    _write_csv(paths["summary"], header, tuple(lead) + tuple(row),
               [tuple(lead.values()) + tuple(row.values())])
    if result.rep_losses is not None:
        paths["repeated"] = out / "repeated.csv"
        _write_csv(paths["repeated"], header, ("run_id", "R", "loss"),
                   [(r.run_id, r.R, l) for r, l in zip(result.records, result.rep_losses)])
    # wall-clock times vary between runs; kept apart from the reproducible files
    _write_csv(paths["timings"], None, ("run_id", "seconds"),
               [(r.run_id, round(r.seconds, 6)) for r in result.records])
    return paths


# ---------------------------------------------------------------------------
# histograms


def emit_histogram(losses, bin_width: float, out_path, header: str | None = None) -> list:
    """Rows (bin lower edge, count), contiguous from the lowest to the highest occupied bin."""
    if not bin_width > 0:
        raise UsageError(f"bin width must be > 0, got {bin_width}")
    v = np.asarray(losses, dtype=np.float64)
    if v.size == 0:
        raise UsageError("no losses to bin")
    idx = np.floor(v / bin_width).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    rows = [((lo + b) * bin_width, int(c)) for b, c in enumerate(counts)]
    _write_csv(out_path, header, ("bin_lower", "count"), rows)
    return rows


def centroid_density(centroid_sets, bin_width: float) -> dict:
    """Fraction of runs placing at least one centroid in each occupied 2-d bin."""
    if not bin_width > 0:
        raise UsageError(f"bin width must be > 0, got {bin_width}")
    n_runs = 0
    counts: dict = {}
    for cents in centroid_sets:
        c = np.asarray(cents, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 2:
            raise UsageError("centroid density needs 2-d centroids")
        n_runs += 1
        for b in set(map(tuple, np.floor(c / bin_width).astype(np.int64).tolist())):
            counts[b] = counts.get(b, 0) + 1
    if n_runs == 0:
        raise UsageError("no runs to bin")
    return {b: c / n_runs for b, c in sorted(counts.items())}


def emit_centroid_density(centroid_sets, bin_width: float, out_path, header: str | None = None) -> dict:
    dens = centroid_density(centroid_sets, bin_width)
    _write_csv(out_path, header, ("x_bin", "y_bin", "frequency"),
               [(bx * bin_width, by * bin_width, f) for (bx, by), f in dens.items()])
    return dens


# ---------------------------------------------------------------------------
# human-readable table


def format_table(rows: list[dict], scale: float = 1.0) -> str:
    """Render summary rows the way the result tables are laid out; losses divided by ``scale``."""

    def num(v, digits):
        if v in (None, ""):
            return "-"
        return f"{float(v):.{digits}f}"

    def loss(v):
        return num(None if v in (None, "") else float(v) / scale, 5 if scale == 1.0 else 4)

    def pct(v):
        return "-" if v in (None, "") else f"{100 * float(v):.0f}%"

    head = ["k", "J", "beta", "R mean±std", "R min/med/max", "L_rec mean±std",
            "L_rec min", "L_rec median", "L_rec max", "succ", "L_rep mean±std", "succ",
            "L_simple min", "L_simple median"]
    lines = []
    for r in rows:
        lines.append([
            r.get("k", ""), r.get("J", ""), r.get("beta", ""),
            f"{num(r['R_mean'], 1)}±{num(r['R_std'], 1)}",
            f"{num(r['R_min'], 0)}/{num(r['R_median'], 0)}/{num(r['R_max'], 0)}",
            f"{loss(r['loss_mean'])}±{loss(r['loss_std'])}",
            loss(r["loss_min"]), loss(r["loss_median"]), loss(r["loss_max"]), pct(r.get("success")),
            f"{loss(r.get('rep_mean'))}±{loss(r.get('rep_std'))}", pct(r.get("rep_success")),
            loss(r.get("pool_min")), loss(r.get("pool_median")),
        ])
    widths = [max(len(str(x)) for x in col) for col in zip(head, *lines)]
    out = [" | ".join(str(h).rjust(w) for h, w in zip(head, widths))]
    out.append("-+-".join("-" * w for w in widths))
    for line in lines:
        out.append(" | ".join(str(x).rjust(w) for x, w in zip(line, widths)))
    return "\n".join(out)
