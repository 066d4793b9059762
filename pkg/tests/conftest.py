"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
import pytest

from hieval.taxonomy import Taxonomy, build_taxonomy

# Four leaves under two groups; column order pinned to rose,tulip,bus,car so
# that score-matrix fixtures read naturally.
SEVEN_NODE_EDGES = [
    ("rose", "flower"),
    ("tulip", "flower"),
    ("bus", "vehicle"),
    ("car", "vehicle"),
    ("flower", "entity"),
    ("vehicle", "entity"),
]
SEVEN_NODE_LEAVES = ["rose", "tulip", "bus", "car"]


@pytest.fixture(scope="session")
def flower_vehicle() -> Taxonomy:
    return build_taxonomy(SEVEN_NODE_EDGES, leaf_order=SEVEN_NODE_LEAVES)


def random_tree_edges(rng: np.random.Generator, n_nodes: int) -> list[tuple[str, str]]:
    """Random rooted tree: node i attaches below a uniformly chosen earlier node."""
    return [(f"v{i}", f"v{int(rng.integers(0, i))}") for i in range(1, n_nodes)]


def random_taxonomy(rng: np.random.Generator, n_nodes: int) -> Taxonomy:
    return build_taxonomy(random_tree_edges(rng, n_nodes))


def random_prob_rows(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    rows = rng.random((n, k)) + 1e-9
    return rows / rows.sum(axis=1, keepdims=True)


# ------------------------------------------------------- acceptance summary
#
# test_acceptance.py wraps each criterion in the `criterion` context manager;
# the terminal summary hook prints one PASS/FAIL line per criterion at the
# end of the run regardless of output capturing.

ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


@contextmanager
def criterion(number: int, description: str):
    detail = {"text": ""}
    try:
        yield detail
    except BaseException:
        ACCEPTANCE_RESULTS.append((number, description, False, detail["text"]))
        raise
    else:
        ACCEPTANCE_RESULTS.append((number, description, True, detail["text"]))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, description, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"[criterion {number:2d}] {status} - {description}{suffix}")
