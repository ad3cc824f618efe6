import csv
import time
from pathlib import Path

import pytest

from waveop import cli

ACCEPTANCE = {}


def read_series(path):
    """Results CSV -> {tier: {column: [values]}}."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cols = out.setdefault(row["tier"], {})
            for k, v in row.items():
                if k != "tier":
                    cols.setdefault(k, []).append(float(v))
    return out


@pytest.fixture(scope="session")
def benchmark_runs(tmp_path_factory):
    """Both bundled thermal sweeps, run once through the CLI and shared by all tests."""
    out = tmp_path_factory.mktemp("bench")
    runs = {}
    for n in (2, 4):
        cfg = cli.data_path(f"benchmark_n{n}.cfg")
        t0 = time.perf_counter()
        assert cli.main(["run", str(cfg), "--output-dir", str(out)]) == 0
        path = Path(out) / f"benchmark_n{n}.csv"
        seconds = time.perf_counter() - t0
        runs[n] = {"csv": path, "series": read_series(path), "dir": Path(out), "seconds": seconds}
    return runs


SUITE_LIMIT = 300.0
_START = []


def pytest_sessionstart(session):
    _START.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    wall = time.perf_counter() - _START[0]
    if 10 in ACCEPTANCE:
        ok, text = ACCEPTANCE[10]
        within = wall < SUITE_LIMIT
        ACCEPTANCE[10] = (ok and within, f"{text}, suite wall time {wall:.0f} s (< {SUITE_LIMIT:.0f} s)")
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {text}")
