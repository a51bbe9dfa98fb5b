"""Weighted DAG container and its file formats."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import CyclicGraph


def default_names(d: int) -> List[str]:
    return [f"X{i}" for i in range(d)]


def topological_sort(adjacency: np.ndarray) -> Optional[List[int]]:
    """Kahn's algorithm on ``adjacency != 0``; returns None if there is a cycle."""
    adj = np.asarray(adjacency) != 0
    indeg = adj.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(int(j))
        ready.sort()
    if len(order) != adj.shape[0]:
        return None
    return order


def is_acyclic(adjacency: np.ndarray) -> bool:
    return topological_sort(adjacency) is not None


@dataclass
class WeightedDag:
    """``weights[i, j]`` is the coefficient of edge ``i -> j``; zero means no edge."""

    weights: np.ndarray
    names: List[str] = field(default=None)
    score: Optional[float] = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float)
        d = self.weights.shape[0]
        if self.weights.shape != (d, d):
            raise ValueError(f"weights must be square, got {self.weights.shape}")
        if self.names is None:
            self.names = default_names(d)
        self.names = list(self.names)
        if len(self.names) != d:
            raise ValueError("one name per variable required")
        if np.any(np.diag(self.weights) != 0):
            raise CyclicGraph("self-loop on the diagonal")
        if not is_acyclic(self.weights):
            raise CyclicGraph("weighted adjacency contains a directed cycle")

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return (self.weights != 0).astype(int)

    def edges(self):
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.weights))]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(self.weights))

    def parents(self, j: int) -> List[int]:
        return np.flatnonzero(self.weights[:, j]).tolist()

    def parent_mask(self, j: int) -> int:
        return sum(1 << i for i in self.parents(j))

    def topological_order(self) -> List[int]:
        return topological_sort(self.weights)

    def to_dict(self) -> dict:
        return {
            "names": self.names,
            "edges": [
                {"from": i, "to": j, "weight": float(self.weights[i, j])}
                for i, j in self.edges()
            ],
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightedDag":
        names = obj["names"]
        w = np.zeros((len(names), len(names)))
        for e in obj["edges"]:
            w[int(e["from"]), int(e["to"])] = float(e.get("weight", 1.0))
        return cls(w, names, obj.get("score"))

    def to_edge_list(self) -> str:
        return "".join(f"{i} {j} {self.weights[i, j]!r}\n" for i, j in self.edges())

    @classmethod
    def from_edge_list(cls, text: str, d: int, names=None) -> "WeightedDag":
        w = np.zeros((d, d))
        for line in text.splitlines():
            if line.strip():
                i, j, weight = line.split()
                w[int(i), int(j)] = float(weight)
        return cls(w, names)


def save_graph(graph: WeightedDag, path) -> None:
    path = Path(path)
    if path.suffix == ".txt":
        path.write_text(graph.to_edge_list())
    else:
        path.write_text(json.dumps(graph.to_dict(), indent=2))


def load_graph(path) -> WeightedDag:
    return WeightedDag.from_dict(json.loads(Path(path).read_text()))


def save_graphs(graphs, path) -> None:
    Path(path).write_text(json.dumps([g.to_dict() for g in graphs], indent=2))


def load_graphs(path) -> List[WeightedDag]:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        obj = [obj]
    return [WeightedDag.from_dict(g) for g in obj]
