"""Structure-recovery metrics. All comparisons use edge structure only."""

import json
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyList


def _adjacency(g) -> np.ndarray:
    w = g.weights if hasattr(g, "weights") else np.asarray(g)
    return np.asarray(w) != 0


def _pair(g, truth):
    a, b = _adjacency(g), _adjacency(truth)
    if a.shape != b.shape:
        raise DimensionMismatch(f"graphs over {a.shape[0]} and {b.shape[0]} variables")
    return a, b


def shd(g, truth) -> int:
    """Structural Hamming distance; a reversed edge costs 1.

    Counts unordered variable pairs whose edge status (absent, i->j, j->i)
    differs between the two graphs.
    """
    a, b = _pair(g, truth)
    differs = (a != b) | (a.T != b.T)
    return int(np.triu(differs, k=1).sum())


def e_shd(graphs: Sequence, truth) -> float:
    """Mean SHD of a list of graphs to ``truth``."""
    if len(graphs) == 0:
        raise EmptyList("e_shd of an empty list")
    return float(np.mean([shd(g, truth) for g in graphs]))


def edge_counts(g, truth):
    """(number of edges in ``g``, number of those also in ``truth`` with the same direction)."""
    a, b = _pair(g, truth)
    return int(a.sum()), int((a & b).sum())


def tpr_fdr_f1(g, truth):
    total, tp = edge_counts(g, truth)
    true_edges = int(_adjacency(truth).sum())
    if true_edges == 0:
        raise ValueError("truth has no edges; TPR is undefined")
    tpr = tp / true_edges
    fdr = (total - tp) / max(total, 1)
    precision = 1.0 - fdr
    f1 = 0.0 if precision + tpr == 0 or tp == 0 else 2 * precision * tpr / (precision + tpr)
    return tpr, fdr, f1


@dataclass
class MetricsReport:
    total_edges: float
    correct_edges: float
    tpr: float
    fdr: float
    f1: float
    shd: float
    per_graph: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(g, truth) -> MetricsReport:
    total, correct = edge_counts(g, truth)
    tpr, fdr, f1 = tpr_fdr_f1(g, truth)
    return MetricsReport(total, correct, tpr, fdr, f1, shd(g, truth))


def evaluate_many(graphs: Sequence, truth) -> MetricsReport:
    """Averages over a list of graphs; ``shd`` holds the E-SHD."""
    if len(graphs) == 0:
        raise EmptyList("no graphs to evaluate")
    reports = [evaluate(g, truth) for g in graphs]
    mean = lambda key: float(np.mean([getattr(r, key) for r in reports]))  # noqa: E731
    return MetricsReport(
        mean("total_edges"),
        mean("correct_edges"),
        mean("tpr"),
        mean("fdr"),
        mean("f1"),
        e_shd(graphs, truth),
        per_graph=[{k: v for k, v in r.to_dict().items() if k != "per_graph"} for r in reports],
    )
