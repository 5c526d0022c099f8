import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.environ.get("RKM_DATA_DIR", REPO / "data"))

# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blobs(rng, centers, per_cluster, sigma):
    centers = np.asarray(centers, dtype=float)
    pts = [c + sigma * rng.standard_normal((per_cluster, centers.shape[1])) for c in centers]
    return np.concatenate(pts)
