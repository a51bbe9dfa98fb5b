import numpy as np
import pytest

from ordergraph.datagen import Dataset, GenConfig, er_dag, linear_gaussian_sample
from ordergraph.graph import WeightedDag


def chain_graph(d=3, weight=2.0):
    w = np.zeros((d, d))
    for i in range(d - 1):
        w[i, i + 1] = weight
    return WeightedDag(w)


def chain_data(n=200, d=3, weight=2.0, seed=0, standardize=True):
    rng = np.random.default_rng(seed)
    return linear_gaussian_sample(chain_graph(d, weight), n, 1.0, rng, standardize_columns=standardize)


def er_instance(d, seed, n=200):
    rng = np.random.default_rng(seed)
    g = er_dag(GenConfig(d=d, n=n), rng)
    return g, linear_gaussian_sample(g, n, 1.0, rng)


def ols_bic(y, X):
    """Independent oracle: BIC via numpy least squares on an explicit design."""
    n = len(y)
    Z = np.column_stack([np.ones(n)] + ([X] if X is not None and X.size else []))
    beta = np.linalg.lstsq(Z, y, rcond=None)[0]
    rss = max(float(np.sum((y - Z @ beta) ** 2)), 1e-8 * n)
    return -0.5 * n * (np.log(2 * np.pi * rss / n) + 1) - 0.5 * Z.shape[1] * np.log(n)


@pytest.fixture
def chain3():
    return chain_data()


@pytest.fixture
def iid_data():
    rng = np.random.default_rng(7)
    return Dataset(rng.standard_normal((300, 4))).standardized()


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
