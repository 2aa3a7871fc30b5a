import itertools

import numpy as np
import pytest

from mcseg.model import HOPotts, LPI, Factor, FactorGraph, Junction, Potts, Table

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def grid_model(width, height, labels, rng, coupling=(-1.0, 1.0)):
    """Supervised grid with uniform unaries and uniform Potts couplings."""
    n = width * height
    fs = [Factor((v,), Table(rng.random(labels))) for v in range(n)]
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                fs.append(Factor((v, v + 1), Potts(0.0, rng.uniform(*coupling))))
            if r + 1 < height:
                fs.append(Factor((v, v + width), Potts(0.0, rng.uniform(*coupling))))
    return FactorGraph(n, labels, fs)


def random_graph_model(n, rng, density=0.6, higher=None):
    """Unsupervised correlation clustering model, optionally with one higher-order factor."""
    fs = []
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < density:
            fs.append(Factor((i, j), Potts(0.0, rng.uniform(-1, 1))))
    if higher == "lpi":
        sc = tuple(sorted(int(v) for v in rng.choice(n, 3, replace=False)))
        fs.append(Factor(sc, LPI(rng.normal(size=5))))
    elif higher == "hopotts":
        sc = tuple(sorted(int(v) for v in rng.choice(n, 4, replace=False)))
        fs.append(Factor(sc, HOPotts(rng.normal(), rng.normal())))
    elif higher == "junction":
        sc = tuple(sorted(int(v) for v in rng.choice(n, 4, replace=False)))
        fs.append(Factor(sc, Junction(rng.random())))
    return FactorGraph(n, n, fs, mode="unsupervised")


def triangle_model():
    """Correlation clustering triangle with pair weights ab=-1, bc=-1, ac=+2."""
    return FactorGraph(
        3, 3,
        [Factor((0, 1), Potts(0.0, -1.0)), Factor((1, 2), Potts(0.0, -1.0)), Factor((0, 2), Potts(0.0, 2.0))],
        mode="unsupervised",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
