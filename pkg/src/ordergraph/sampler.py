"""Inference on trained layer models: orderings, DAGs, pruning, best-k selection."""

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import pearsonr

from .datagen import Dataset
from .exact import ExactQTable, exact_transition_dp
from .graph import WeightedDag
from .order_graph import Ordering, check_ordering, feasible_actions, feasible_pairs
from .scoring import BICScorer, dag_log_score, solve_normal_equations
from .trainer import LayeredQModels

DEFAULT_THRESHOLD = 0.3


def sample_ordering(models: LayeredQModels, rng: np.random.Generator) -> Tuple[Ordering, float]:
    """Ancestral sample of an ordering and the sum of its step log-probabilities."""
    s, ordering, logp = 0, [], 0.0
    for _ in range(models.d):
        dist = models.distribution(s)
        acts = feasible_actions(s, models.d)
        p = dist.probs[acts]
        a = acts[int(rng.choice(len(acts), p=p / p.sum()))] if len(acts) > 1 else acts[0]
        logp += math.log(dist.probs[a])
        ordering.append(a)
        s |= 1 << a
    return tuple(ordering), logp


def ordering_log_probability(models: LayeredQModels, ordering: Sequence[int]) -> float:
    s, logp = 0, 0.0
    for a in ordering:
        logp += math.log(models.distribution(s).probs[a])
        s |= 1 << a
    return logp


def greedy_ordering(models: LayeredQModels) -> Ordering:
    """Highest-probability action at every step; ties go to the lowest index."""
    s, ordering = 0, []
    for _ in range(models.d):
        probs = models.distribution(s).probs
        acts = feasible_actions(s, models.d)
        a = acts[int(np.argmax(probs[acts]))]
        ordering.append(a)
        s |= 1 << a
    return tuple(ordering)


def ordering_to_full_dag(ordering: Sequence[int], names=None) -> WeightedDag:
    """Every earlier variable becomes a parent of every later one (unit weights)."""
    ordering = check_ordering(ordering, len(ordering))
    d = len(ordering)
    w = np.zeros((d, d))
    for k, j in enumerate(ordering):
        w[list(ordering[:k]), j] = 1.0
    return WeightedDag(w, names)


def prune_linear(
    full: WeightedDag, data: Dataset, threshold: float = DEFAULT_THRESHOLD, original_scale: bool = True
) -> WeightedDag:
    """Refit every node on its parents by OLS (with intercept) and drop small coefficients.

    With ``original_scale`` the coefficients are those of the regression on
    the data in its original units (``data.scale``), so the threshold is
    independent of any standardisation applied at load time.
    """
    d = full.d
    x = data.original_values() if original_scale else data.values
    z = np.column_stack([np.ones(data.n), x])
    gram = z.T @ z
    w = np.zeros((d, d))
    for j in range(d):
        parents = full.parents(j)
        if not parents:
            continue
        beta = solve_normal_equations(gram, [0] + [p + 1 for p in parents], j + 1)[1:]
        keep = np.abs(beta) >= threshold
        w[np.array(parents)[keep], j] = beta[keep]
    return WeightedDag(w, full.names)


def sample_best_k(
    models: LayeredQModels,
    scorer: BICScorer,
    n: int = 1000,
    k: int = 20,
    threshold: float = DEFAULT_THRESHOLD,
    rng: Optional[np.random.Generator] = None,
    return_all: bool = False,
):
    """Sample ``n`` orderings, prune each full DAG, return the ``k`` best by BIC.

    Duplicates are kept. The returned graphs carry their score in ``.score``
    and are sorted by it, best first. With ``return_all`` the full scored
    sample list is returned as well.
    """
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    rng = np.random.default_rng() if rng is None else rng
    data = scorer.data
    graphs: List[WeightedDag] = []
    for _ in range(n):
        ordering, _ = sample_ordering(models, rng)
        g = prune_linear(ordering_to_full_dag(ordering, data.names), data, threshold)
        g.score = dag_log_score(g, scorer)
        graphs.append(g)
    ranked = sorted(range(n), key=lambda i: -graphs[i].score)
    best = [graphs[i] for i in ranked[:k]]
    return (best, graphs) if return_all else best


def greedy_dag(models: LayeredQModels, scorer: BICScorer, threshold: float = DEFAULT_THRESHOLD) -> WeightedDag:
    ordering = greedy_ordering(models)
    g = prune_linear(ordering_to_full_dag(ordering, scorer.data.names), scorer.data, threshold)
    g.score = dag_log_score(g, scorer)
    return g


class ProbabilityComparison(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    estimated: np.ndarray
    exact: np.ndarray

    @property
    def pearson_r(self) -> float:
        return float(pearsonr(self.estimated, self.exact)[0])


def compare_transition_probabilities(
    models: LayeredQModels, table: ExactQTable, n_pairs: int = 250, rng: Optional[np.random.Generator] = None
) -> ProbabilityComparison:
    """Learned vs exact P(s'|s) on ``n_pairs`` random (state, action) pairs.

    Pairs are drawn uniformly with replacement among feasible pairs whose
    state has at least two feasible actions; single-action states have
    probability 1 under any model and would only inflate the correlation.
    """
    rng = np.random.default_rng() if rng is None else rng
    d = table.d
    pairs = [(s, a) for s, a in feasible_pairs(d) if len(feasible_actions(s, d)) > 1]
    pick = rng.integers(len(pairs), size=n_pairs)
    states = np.array([pairs[i][0] for i in pick], dtype=np.int64)
    actions = np.array([pairs[i][1] for i in pick], dtype=np.int64)
    est = np.array([models.distribution(int(s)).probs[a] for s, a in zip(states, actions)])
    exact = np.array([exact_transition_dp(table, int(s)).probs[a] for s, a in zip(states, actions)])
    return ProbabilityComparison(states, actions, est, exact)
