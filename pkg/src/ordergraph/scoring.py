"""Gaussian BIC local scores and the log-rewards built from them.

The local score of a child given a parent set is the profile log-likelihood
of an ordinary-least-squares fit (with intercept) minus the BIC penalty::

    -(n/2) * (log(2*pi*RSS/n) + 1) - ((|parents| + 1)/2) * log(n)

Action rewards on the order graph score the newly placed variable against
the set already placed. How that set is turned into a parent set is chosen
by ``parent_sets``:

``"all"``
    every already-placed variable is a parent. For linear Gaussian data this
    makes every ordering score the same (all complete DAGs are Markov
    equivalent), so it is only useful as a reference.
``"best"`` (default)
    the best-scoring subset of the placed variables.
``"marginal"``
    log-sum-exp over all subsets of the placed variables, i.e. the BIC
    approximation of the ordering's marginal likelihood with every DAG
    consistent with the ordering weighted equally.

Subset aggregation runs as a sum/max-over-subsets transform on a per-child
table, optionally restricted to at most ``max_parents`` parents.
"""

import math
from math import comb
from typing import Optional, Sequence

import numpy as np

from .datagen import Dataset
from .errors import CyclicGraph, InfeasibleAction, LimitExceeded, SingularRegression
from .graph import WeightedDag, is_acyclic
from .order_graph import ordering_prefix_states

RSS_FLOOR = 1e-8
RIDGE = 1e-8
PARENT_SET_MODES = ("all", "best", "marginal")
# total local scores a per-child subset table may need before we refuse
SUBSET_TABLE_BUDGET = 4_000_000


def _design(values: np.ndarray):
    z = np.column_stack([np.ones(values.shape[0]), values])
    return z, z.T @ z


def _parent_indices(parents: int):
    return [i for i in range(parents.bit_length()) if parents >> i & 1]


def solve_normal_equations(gram: np.ndarray, cols, target: int) -> np.ndarray:
    """OLS coefficients from a Gram matrix, retrying once with ridge jitter."""
    a = gram[np.ix_(cols, cols)]
    b = gram[cols, target]
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(a + RIDGE * np.eye(len(cols)))
        except np.linalg.LinAlgError:
            raise SingularRegression(f"design matrix on columns {cols} is rank deficient") from None
    beta = np.linalg.solve(chol.T, np.linalg.solve(chol, b))
    if not np.all(np.isfinite(beta)):
        raise SingularRegression(f"non-finite OLS coefficients on columns {cols}")
    return beta


def _bic(z: np.ndarray, gram: np.ndarray, child: int, parents: int) -> float:
    if parents >> child & 1:
        raise ValueError(f"variable {child} cannot be its own parent")
    n = z.shape[0]
    cols = [0] + [p + 1 for p in _parent_indices(parents)]
    beta = solve_normal_equations(gram, cols, child + 1)
    resid = z[:, child + 1] - z[:, cols] @ beta
    rss = max(float(resid @ resid), RSS_FLOOR * n)
    return -0.5 * n * (math.log(2 * math.pi * rss / n) + 1) - 0.5 * len(cols) * math.log(n)


def bic_local_score(child: int, parents: int, data: Dataset) -> float:
    """BIC of ``child`` regressed on the variables in bit pattern ``parents``."""
    z, gram = _design(data.values)
    return _bic(z, gram, child, parents)


class BICScorer:
    """Dataset plus compute-once caches of local scores and action rewards.

    Keys are ``(child, parent bit pattern)``. Concurrent readers are fine;
    two writers racing on the same key store the same value.
    """

    def __init__(self, data: Dataset, parent_sets: str = "best", max_parents: Optional[int] = None):
        if parent_sets not in PARENT_SET_MODES:
            raise ValueError(f"parent_sets must be one of {PARENT_SET_MODES}, got {parent_sets!r}")
        self.data = data
        self.parent_sets = parent_sets
        self.max_parents = max_parents
        self._z, self._gram = _design(data.values)
        self._local = {}
        self._tables = {}

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def n(self) -> int:
        return self.data.n

    def local_score(self, child: int, parents: int) -> float:
        key = (child, parents)
        value = self._local.get(key)
        if value is None:
            value = _bic(self._z, self._gram, child, parents)
            self._local[key] = value
        return value

    def cache_size(self) -> int:
        return len(self._local)

    def action_log_reward(self, state: int, action: int) -> float:
        if state >> action & 1:
            raise InfeasibleAction(f"variable {action} already ordered in state {state:#b}")
        if self.parent_sets == "all":
            return self.local_score(action, state)
        table = self._tables.get(action)
        if table is None:
            table = self._subset_table(action)
            self._tables[action] = table
        low = state & ((1 << action) - 1)
        return float(table[low | ((state >> (action + 1)) << action)])

    def _subset_table(self, child: int) -> np.ndarray:
        d = self.d
        k = d - 1 if self.max_parents is None else min(self.max_parents, d - 1)
        needed = sum(comb(d - 1, j) for j in range(k + 1))
        if needed > SUBSET_TABLE_BUDGET or d - 1 > 26:
            raise LimitExceeded(
                f"{needed} parent sets per variable at d={d}; set max_parents to restrict the search"
            )
        idx = np.arange(1 << (d - 1), dtype=np.int64)
        low = idx & ((1 << child) - 1)
        full = low | ((idx >> child) << (child + 1))
        sizes = _popcount(idx)
        table = np.full(idx.shape, -np.inf)
        for i in np.flatnonzero(sizes <= k):
            table[i] = self.local_score(child, int(full[i]))
        combine = np.logaddexp if self.parent_sets == "marginal" else np.maximum
        for bit in range(d - 1):
            view = table.reshape(-1, 2, 1 << bit)
            view[:, 1, :] = combine(view[:, 1, :], view[:, 0, :])
        return table


def _popcount(x: np.ndarray) -> np.ndarray:
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def as_scorer(obj, **kwargs) -> BICScorer:
    return obj if isinstance(obj, BICScorer) else BICScorer(obj, **kwargs)


def action_log_reward(state: int, action: int, scorer: BICScorer) -> float:
    """log R(a) for adding ``action`` to ``state``."""
    return scorer.action_log_reward(state, action)


def ordering_log_reward(ordering: Sequence[int], scorer: BICScorer) -> float:
    """log R(L): action log-rewards summed along the ordering's path."""
    states = ordering_prefix_states(ordering)
    return math.fsum(scorer.action_log_reward(s, v) for s, v in zip(states, ordering))


def dag_log_score(g, scorer: BICScorer) -> float:
    """Sum of local BIC scores of every node given its parents in ``g``."""
    adj = g.weights if isinstance(g, WeightedDag) else np.asarray(g)
    if not is_acyclic(adj) or np.any(np.diag(adj) != 0):
        raise CyclicGraph("cannot score a cyclic graph")
    return math.fsum(
        scorer.local_score(j, sum(1 << int(i) for i in np.flatnonzero(adj[:, j])))
        for j in range(adj.shape[0])
    )


def best_parents(child: int, state: int, scorer: BICScorer) -> int:
    """Highest-scoring parent set of ``child`` inside ``state`` (respects max_parents)."""
    cands = [p for p in range(scorer.d) if state >> p & 1]
    k = len(cands) if scorer.max_parents is None else min(scorer.max_parents, len(cands))
    best, best_mask = -math.inf, 0
    for mask in range(1 << len(cands)):
        if bin(mask).count("1") > k:
            continue
        parents = sum(1 << cands[i] for i in range(len(cands)) if mask >> i & 1)
        s = scorer.local_score(child, parents)
        if s > best:
            best, best_mask = s, parents
    return best_mask
