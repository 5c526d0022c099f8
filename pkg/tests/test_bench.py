import math

import numpy as np
import pytest
from scipy import stats

from conftest import blobs
from recombinator import UsageError
from recombinator.bench import (
    ExperimentConfig,
    Stats,
    bootstrap_matched,
    bootstrap_repeated,
    build_simple_pool,
    centroid_density,
    emit_centroid_density,
    emit_histogram,
    format_table,
    median,
    read_csv,
    resolve_threads,
    run_experiment,
)
from recombinator.bench.experiment import THREADS_ENV, fmt


@pytest.fixture
def blob_file(tmp_path):
    rng = np.random.default_rng(0)
    x = blobs(rng, [[0, 0], [4, 0], [0, 4], [4, 4], [8, 8]], 20, 0.7)
    p = tmp_path / "blobs.txt"
    p.write_text("\n".join(f"{a:.17g} {b:.17g}" for a, b in x) + "\n")
    return p


def config(path, **kw):
    base = dict(dataset=str(path), k=5, J=6, beta=5.0, samples=4, pool_size=30, seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


def test_bootstrap_constant_pool():
    assert bootstrap_repeated([3.5] * 7, 4, 50, np.random.default_rng(0)) == [3.5] * 50


def test_bootstrap_r1_resamples_pool():
    pool = [1.0, 2.0, 5.0]
    out = bootstrap_repeated(pool, 1, 30_000, np.random.default_rng(1))
    counts = [out.count(v) for v in pool]
    assert sum(counts) == 30_000
    assert stats.chisquare(counts).pvalue > 0.001


def test_bootstrap_order_statistic():
    # P(min of two draws from {1,2} equals 1) = 1 - (1/2)^2
    n = 100_000
    out = np.array(bootstrap_repeated([1.0, 2.0], 2, n, np.random.default_rng(2)))
    p = 0.75
    assert abs((out == 1.0).sum() - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_bootstrap_matched_uses_each_r():
    # with a pool of distinct values, a larger R can only lower the expected minimum
    pool = np.arange(100.0)
    rng = np.random.default_rng(3)
    small = np.mean(bootstrap_matched(pool, [1] * 4000, rng))
    large = np.mean(bootstrap_matched(pool, [20] * 4000, rng))
    assert small == pytest.approx(49.5, abs=2.0)
    # E[min of 20 uniform draws from 0..99] computed exactly
    exact = sum(((100 - j) / 100) ** 20 for j in range(1, 100))
    assert large == pytest.approx(exact, abs=0.3)


def test_bootstrap_rejects_bad_input():
    with pytest.raises(UsageError):
        bootstrap_repeated([], 1, 1, np.random.default_rng(0))
    with pytest.raises(UsageError):
        bootstrap_repeated([1.0], 0, 1, np.random.default_rng(0))


def test_median_and_stats():
    assert median([3, 1, 2]) == 2
    assert median([4, 1, 3, 2]) == 2.5
    s = Stats.of([1.0, 2.0, 3.0, 4.0])
    assert (s.mean, s.min, s.median, s.max) == (2.5, 1.0, 2.5, 4.0)
    assert s.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1), rel=1e-15)
    one = Stats.of([7.0])
    assert one.min == one.median == one.max == 7.0 and one.std == 0.0


def test_fmt_round_trips():
    for v in [0.1, 1 / 3, 6.73772e-300, 2.0**60, -0.0]:
        assert float(fmt(v)) == v
    assert fmt(3) == "3" and fmt(np.int64(4)) == "4"


def test_pool_of_size_one(blob_file, tmp_path):
    cfg = config(blob_file, pool_size=1)
    losses = build_simple_pool(cfg, path=tmp_path / "pool.csv")
    assert len(losses) == 1 and losses[0] > 0
    header, rows = read_csv(tmp_path / "pool.csv")
    assert '"seed": 11' in header
    assert len(rows) == 1 and float(rows[0]["loss"]) == losses[0]


def test_single_sample_summary(blob_file):
    res = run_experiment(config(blob_file, samples=1))
    s = res.summary
    assert s.loss.min == s.loss.median == s.loss.max
    assert s.R.min == s.R.median == s.R.max
    assert s.loss.std == 0.0


def test_summary_invariants(blob_file):
    res = run_experiment(config(blob_file, samples=6, success_threshold=60.0))
    for st in (res.summary.loss, res.summary.R, res.summary.rep):
        assert st.min <= st.median <= st.max
        assert st.std >= 0
    assert 0.0 <= res.summary.success <= 1.0
    assert res.summary.pool_min <= res.summary.pool_median


def test_cost_matching(blob_file, tmp_path):
    res = run_experiment(config(blob_file, samples=5, out_dir=str(tmp_path / "o")))
    _, runs = read_csv(tmp_path / "o" / "runs.csv")
    _, rep = read_csv(tmp_path / "o" / "repeated.csv")
    assert [r["R"] for r in runs] == [r["R"] for r in rep]
    for rec in res.records:
        assert rec.R == 6 * rec.batches
    # replaying the bootstrap stream with the recorded R values gives the same losses
    rng = np.random.default_rng(np.random.SeedSequence(11, spawn_key=(2,)))
    assert bootstrap_matched(res.pool, [r.R for r in res.records], rng) == res.rep_losses


def test_summary_matches_one_pass_recomputation(blob_file, tmp_path):
    run_experiment(config(blob_file, samples=7, out_dir=str(tmp_path)))
    _, runs = read_csv(tmp_path / "runs.csv")
    _, summary = read_csv(tmp_path / "summary.csv")
    row = summary[0]
    for col, key in (("loss", "loss"), ("R", "R")):
        # Welford's running mean and variance
        n, mean, m2 = 0, 0.0, 0.0
        lo, hi = math.inf, -math.inf
        for r in runs:
            v = float(r[col])
            n += 1
            delta = v - mean
            mean += delta / n
            m2 += delta * (v - mean)
            lo, hi = min(lo, v), max(hi, v)
        std = math.sqrt(m2 / (n - 1))
        assert float(row[f"{key}_mean"]) == pytest.approx(mean, rel=1e-12)
        # identical losses leave rounding-level spread; judge it against the loss scale
        assert float(row[f"{key}_std"]) == pytest.approx(std, rel=1e-12, abs=1e-12 * abs(mean))
        assert float(row[f"{key}_min"]) == lo
        assert float(row[f"{key}_max"]) == hi


def test_outputs_are_reproducible(blob_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(config(blob_file, out_dir=str(a), threads=1))
    run_experiment(config(blob_file, out_dir=str(b), threads=3))
    for name in ("runs.csv", "batches.csv", "summary.csv", "repeated.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    header = (a / "runs.csv").read_text().splitlines()[0]
    assert header.startswith("# {") and '"seed": 11' in header


def test_pool_file_is_reused(blob_file, tmp_path):
    pool_path = tmp_path / "pool.csv"
    first = run_experiment(config(blob_file, pool_path=str(pool_path)))
    assert pool_path.exists()
    second = run_experiment(config(blob_file, pool_path=str(pool_path), pool_size=1))
    assert second.pool == first.pool


def test_other_algorithms(blob_file):
    rep = run_experiment(config(blob_file, algorithm="repeated", restarts=3, samples=3))
    assert all(r.R == 3 for r in rep.records)
    simple = run_experiment(config(blob_file, algorithm="simple", samples=3))
    assert simple.rep_losses is None and all(r.R == 1 for r in simple.records)
    with pytest.raises(UsageError):
        config(blob_file, algorithm="repeated")
    with pytest.raises(UsageError):
        config(blob_file, samples=0)


def test_histogram_single_value(tmp_path):
    rows = emit_histogram([6.74], 0.01, tmp_path / "h.csv")
    assert len(rows) == 1 and rows[0][1] == 1
    assert rows[0][0] <= 6.74 < rows[0][0] + 0.01


def test_histogram_is_contiguous(tmp_path):
    rows = emit_histogram([0.05, 0.05, 0.35], 0.1, tmp_path / "h.csv")
    assert [c for _, c in rows] == [2, 0, 0, 1]
    _, read = read_csv(tmp_path / "h.csv")
    assert [int(r["count"]) for r in read] == [2, 0, 0, 1]


def test_histogram_of_uniform_losses_is_flat(tmp_path):
    v = np.random.default_rng(4).random(20_000) * 10
    rows = emit_histogram(v, 1.0, tmp_path / "h.csv")
    counts = [c for _, c in rows]
    assert len(counts) == 10
    assert stats.chisquare(counts).pvalue > 0.001


def test_histogram_rejects_bad_width(tmp_path):
    with pytest.raises(UsageError):
        emit_histogram([1.0], 0.0, tmp_path / "h.csv")


def test_centroid_density(tmp_path):
    runs = [
        [[0.01, 0.01], [0.011, 0.012], [0.5, 0.5]],
        [[0.015, 0.001], [0.9, 0.9]],
    ]
    dens = centroid_density(runs, 0.02)
    # a run counts once per bin even with two centroids in it
    assert dens[(0, 0)] == 1.0
    assert dens[(25, 25)] == 0.5
    assert dens[(45, 45)] == 0.5
    assert all(0 < f <= 1 for f in dens.values())
    emit_centroid_density(runs, 0.02, tmp_path / "d.csv")
    _, rows = read_csv(tmp_path / "d.csv")
    assert len(rows) == 3


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    with pytest.raises(UsageError):
        resolve_threads(0)


def test_format_table_scales_losses():
    row = {"k": 20, "J": 50, "beta": 10, "R_mean": 500.0, "R_std": 10.0, "R_min": 450, "R_median": 500,
           "R_max": 550, "loss_mean": 21369500.0, "loss_std": 100.0, "loss_min": 21369500.0,
           "loss_median": 21369500.0, "loss_max": 21369500.0, "success": None}
    text = format_table([row], scale=1e5)
    assert "213.6950" in text
    assert len(text.splitlines()) == 3
