from __future__ import annotations

import numpy as np
import pytest


def bernoulli_step(seed, n_before=5000, n_after=5000, p0=0.1, p1=0.4):
    """Error bits with rate ``p0`` then ``p1``, switching at ``n_before``."""
    rng = np.random.default_rng(seed)
    return np.concatenate([rng.random(n_before) < p0, rng.random(n_after) < p1]).astype(np.int64)


def gap_shrinkage(period_before=10, period_after=2, n_before=600, n_after=400):
    """Deterministic error bits whose spacing drops from one period to another."""
    e = np.zeros(n_before + n_after, dtype=np.int64)
    e[period_before - 1:n_before:period_before] = 1
    e[n_before + period_after - 1::period_after] = 1
    return e


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, checks: dict, detail: str = "") -> bool:
    """Log one ``PASS``/``FAIL`` line for an acceptance criterion and return the verdict."""
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    if failed:
        line += f" | failed: {', '.join(failed)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1][1:].rstrip(":"))):
            terminalreporter.write_line(line)
