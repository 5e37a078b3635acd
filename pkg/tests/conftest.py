import math

import numpy as np
import pytest
from scipy.stats import beta

from qwalk.graph_model import random_layered_dag, random_tree

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def lower_confidence(successes: int, trials: int, level: float = 0.95) -> float:
    """One-sided Clopper-Pearson lower bound on a success probability."""
    if successes == 0:
        return 0.0
    return float(beta.ppf(1.0 - level, successes, trials - successes + 1))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def _random_instance(rng, kind: str, max_vertices: int = 60):
    V = int(rng.integers(2, max_vertices + 1))
    lo = max(1, math.ceil(math.log(2 * V + 1, 3)) - 1)
    depth = int(rng.integers(lo, min(V - 1, 10) + 1))
    if kind == "tree":
        return random_tree(V, depth, 3, rng)
    return random_layered_dag(V, depth, 3, int(rng.integers(1, 6)), rng)


@pytest.fixture(scope="session")
def tree_batch():
    rng = np.random.default_rng(20240501)
    return [_random_instance(rng, "tree") for _ in range(100)]


@pytest.fixture(scope="session")
def dag_batch():
    rng = np.random.default_rng(20240502)
    out = []
    while len(out) < 100:
        d = _random_instance(rng, "dag")
        if d.edge_count <= 80:
            out.append(d)
    return out
