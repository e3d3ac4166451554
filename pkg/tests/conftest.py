"""Shared corpus builders for the detection test suites."""

import numpy as np
import pytest

from cliquesim.graphs import Graph, generate


def random_gnp(n, p, seed):
    return generate("gnp", {"n": n, "p": p}, seed=seed)


def sparse_corpus(counts={16: 80, 64: 90, 256: 30}):
    """Mixed low-density corpus: trees, stars, shared-edge families,
    bounded-arboricity forest unions (with and without a planted triangle),
    and sparse G(n,p)."""
    graphs = []
    for n, count in counts.items():
        rng = np.random.default_rng(n)
        for i in range(count):
            kind = i % 5
            if kind == 0:
                graphs.append(generate("tree", {"n": n}, seed=i))
            elif kind == 1:
                graphs.append(generate("star", {"n": n}))
            elif kind == 2:
                t = int(rng.integers(0, n // 2))
                graphs.append(generate("shared-edge", {"n": n, "t": t}))
            elif kind == 3:
                plant = bool(i % 2)
                graphs.append(generate(
                    "forest-union",
                    {"n": n, "k": 2, "plant_triangle": plant},
                    seed=i,
                ))
            else:
                p = float(rng.choice([1.5 / n, 3.0 / n, 6.0 / n]))
                graphs.append(random_gnp(n, p, seed=i))
    return graphs


def mixed_corpus(n, count, seeds_from=0, ps=(0.03, 0.06, 0.1, 0.2, 0.4)):
    """Random G(n,p) over a density spread, mostly sparse."""
    graphs = []
    for i in range(count):
        p = ps[i % len(ps)]
        graphs.append(random_gnp(n, p, seed=seeds_from + i))
    return graphs


@pytest.fixture(scope="session")
def small_sparse_corpus():
    return sparse_corpus(counts={16: 20, 64: 12})


ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
