"""Synthetic ground truth (Erdős–Rényi DAGs, linear Gaussian SEMs) and CSV ingestion."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import NonFiniteValue, ParseError, TooFewSamples
from .graph import WeightedDag, default_names


class Dataset:
    """An ``n x d`` sample matrix with column names.

    At least ``d + 2`` rows are required so that regressing any variable on
    all the others plus an intercept stays determined.
    """

    def __init__(self, values, names: Optional[Sequence[str]] = None, scale=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-d sample matrix, got shape {values.shape}")
        n, d = values.shape
        if names is None:
            names = default_names(d)
        if len(names) != d:
            raise ValueError(f"{len(names)} names for {d} columns")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteValue(f"non-finite value at row {r}, column {c}", row=int(r), col=int(c))
        if n < d + 2:
            raise TooFewSamples(f"need at least d+2={d + 2} samples, got {n}")
        self.values = values
        self.names = list(names)
        # per-column factor mapping ``values`` back to original units
        self.scale = np.ones(d) if scale is None else np.array(scale, dtype=float)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def standardized(self) -> "Dataset":
        """Copy with zero-mean unit-variance columns; ``scale`` keeps the original spread."""
        std = self.values.std(axis=0)
        return Dataset(standardize(self.values), self.names, scale=self.scale * std)

    def original_values(self) -> np.ndarray:
        return self.values * self.scale

    def __repr__(self):
        return f"Dataset(n={self.n}, d={self.d})"


def standardize(values: np.ndarray) -> np.ndarray:
    """Zero mean, unit (population) variance per column."""
    values = np.asarray(values, dtype=float)
    centered = values - values.mean(axis=0)
    std = np.sqrt((centered ** 2).mean(axis=0))
    if np.any(std == 0):
        raise ValueError(f"constant column(s) {np.flatnonzero(std == 0).tolist()} cannot be standardized")
    return centered / std


@dataclass
class GenConfig:
    d: int = 5
    expected_edges: Optional[float] = None  # None means 2d (ER2), capped at the complete DAG
    n: int = 200
    weight_low: float = 0.5
    weight_high: float = 2.0
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.expected_edges is None:
            self.expected_edges = min(2 * self.d, self.d * (self.d - 1) / 2)
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.n < self.d + 2:
            raise TooFewSamples(f"n={self.n} below d+2={self.d + 2}")
        if not 0 < self.weight_low < self.weight_high:
            raise ValueError("need 0 < weight_low < weight_high")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        if not 0 <= self.expected_edges <= self.d * (self.d - 1) / 2:
            raise ValueError("expected_edges must lie in [0, d(d-1)/2]")

    @property
    def edge_probability(self) -> float:
        return self.expected_edges / (self.d * (self.d - 1) / 2)


def er_dag(cfg: GenConfig, rng: np.random.Generator) -> WeightedDag:
    """Random DAG: uniform topological order, each forward pair kept with
    probability ``expected_edges / (d(d-1)/2)``, weights uniform on
    ``±[low, high]``."""
    d = cfg.d
    order = rng.permutation(d)
    upper = np.triu(rng.random((d, d)) < cfg.edge_probability, k=1)
    magnitude = rng.uniform(cfg.weight_low, cfg.weight_high, size=(d, d))
    sign = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    w_sorted = upper * magnitude * sign
    weights = np.zeros((d, d))
    weights[np.ix_(order, order)] = w_sorted
    return WeightedDag(weights)


def linear_gaussian_sample(
    g: WeightedDag,
    n: int,
    noise_std: float = 1.0,
    rng: Optional[np.random.Generator] = None,
    standardize_columns: bool = True,
    noise: Optional[np.ndarray] = None,
) -> Dataset:
    """Sample ``x_j = sum_i w_ij x_i + e_j`` in topological order.

    ``noise`` replays a given ``n x d`` matrix of raw standard-normal draws
    instead of drawing fresh ones.
    """
    d = g.d
    if noise is None:
        noise = rng.standard_normal((n, d))
    x = noise_std * np.array(noise, dtype=float)
    for j in g.topological_order():
        parents = g.parents(j)
        if parents:
            x[:, j] = x[:, j] + x[:, parents] @ g.weights[parents, j]
    data = Dataset(x, g.names)
    return data.standardized() if standardize_columns else data


def load_csv(path, standardize_columns: bool = True) -> Dataset:
    """Read a comma-separated file with a header row of names."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", row=0)
    names = [c.strip() for c in rows[0]]
    d = len(names)
    body = []
    for r, row in enumerate(rows[1:], start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d:
            raise ParseError(f"{path}: row {r} has {len(row)} fields, expected {d}", row=r)
        values = []
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {r}, column {c}: cannot parse {cell!r}", row=r, col=c) from None
            if not math.isfinite(v):
                raise NonFiniteValue(f"{path}: row {r}, column {c}: non-finite value {cell!r}", row=r, col=c)
            values.append(v)
        body.append(values)
    values = np.array(body, dtype=float).reshape(len(body), d)
    if len(body) < d + 2:
        raise TooFewSamples(f"{path}: {len(body)} samples for {d} variables, need at least {d + 2}")
    data = Dataset(values, names)
    return data.standardized() if standardize_columns else data


def save_csv(data: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.names)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])
