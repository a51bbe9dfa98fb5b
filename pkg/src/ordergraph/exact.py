"""Exact transition probabilities on small order graphs.

Two independent routes are provided and cross-checked in the test-suite:

* :func:`exact_q_dp` runs backward induction over all ``2**d`` states,
  ``logQ(s, a) = logR(a) + logsumexp_{a'} logQ(s + a, a')``;
* :class:`OrderingEnumeration` scores all ``d!`` orderings and takes ratios of
  summed ordering rewards over the orderings whose path visits a state.

All arithmetic is in log space; rewards are exponentials of BIC sums of order
``n`` and would overflow otherwise.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np
from scipy.special import logsumexp

from .errors import LimitExceeded, TerminalState
from .order_graph import (
    ENUMERATION_LIMIT,
    Ordering,
    enumerate_orderings,
    feasible_actions,
    full_state,
    layer,
    parse_state_bits,
    state_bits,
    states_by_layer,
)
from .scoring import as_scorer

DP_LIMIT = 15


@dataclass
class TransitionDistribution:
    """Next-variable probabilities out of ``state``; ``probs`` has length ``d``
    with zeros on infeasible actions."""

    state: int
    probs: np.ndarray

    def as_dict(self) -> Dict[int, float]:
        return {a: float(self.probs[a]) for a in feasible_actions(self.state, len(self.probs))}

    def __getitem__(self, action: int) -> float:
        return float(self.probs[action])


@dataclass
class ExactQTable:
    """``logq[s, a]`` for every feasible pair; ``-inf`` marks infeasible entries."""

    d: int
    logq: np.ndarray
    value: np.ndarray = field(default=None)  # logsumexp_a logq[s, a]; 0 at the full state

    def __post_init__(self):
        if self.value is None:
            self.value = _state_values(self.logq, self.d)

    def __getitem__(self, key):
        s, a = key
        return float(self.logq[s, a])

    def to_dict(self) -> dict:
        return {
            f"{state_bits(s, self.d)}/{a}": float(self.logq[s, a])
            for s in range(1 << self.d)
            for a in feasible_actions(s, self.d)
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExactQTable":
        d = len(next(iter(obj)).split("/")[0])
        logq = np.full((1 << d, d), -np.inf)
        for key, v in obj.items():
            bits, a = key.split("/")
            logq[parse_state_bits(bits), int(a)] = v
        return cls(d, logq)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "ExactQTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _state_values(logq: np.ndarray, d: int) -> np.ndarray:
    with np.errstate(divide="ignore"):
        value = logsumexp(logq, axis=1)
    value[full_state(d)] = 0.0
    return value


def exact_q_dp(data, limit: int = DP_LIMIT) -> ExactQTable:
    """Backward induction from layer ``d-1`` (where ``logQ = logR``) up to the empty state."""
    scorer = as_scorer(data)
    d = scorer.d
    if d > limit:
        raise LimitExceeded(f"d={d} above the DP limit {limit} ({1 << d} states)")
    logq = np.full((1 << d, d), -np.inf)
    value = np.zeros(1 << d)
    for states in reversed(states_by_layer(d)[:-1]):
        for s in states:
            acts = feasible_actions(s, d)
            for a in acts:
                logq[s, a] = scorer.action_log_reward(s, a) + value[s | (1 << a)]
            value[s] = logsumexp(logq[s, acts])
    return ExactQTable(d, logq, value)


def exact_transition_dp(table: ExactQTable, state: int) -> TransitionDistribution:
    d = table.d
    if state == full_state(d):
        raise TerminalState("the full state has no outgoing transitions")
    acts = feasible_actions(state, d)
    probs = np.zeros(d)
    probs[acts] = np.exp(table.logq[state, acts] - logsumexp(table.logq[state, acts]))
    return TransitionDistribution(state, probs)


class OrderingEnumeration:
    """All ``d!`` orderings with their log-rewards and prefix-state paths."""

    def __init__(self, data, limit: int = ENUMERATION_LIMIT):
        self.scorer = as_scorer(data)
        d = self.d = self.scorer.d
        self.orderings = np.array(list(enumerate_orderings(d, limit)), dtype=np.int64).reshape(-1, d)
        bits = np.left_shift(1, self.orderings)
        # prefix[:, k] is the state after k placements
        self.prefix = np.concatenate(
            [np.zeros((len(bits), 1), dtype=np.int64), np.bitwise_or.accumulate(bits, axis=1)], axis=1
        )
        keys = self.orderings * (1 << d) + self.prefix[:, :-1]
        uniq, inverse = np.unique(keys, return_inverse=True)
        rewards = np.array([self.scorer.action_log_reward(int(k % (1 << d)), int(k >> d)) for k in uniq])
        self.step_log_rewards = rewards[inverse.reshape(keys.shape)]
        self.log_rewards = self.step_log_rewards.sum(axis=1)
        self.log_normalizer = logsumexp(self.log_rewards)

    def through(self, state: int) -> np.ndarray:
        """Boolean mask of orderings whose path visits ``state``."""
        return self.prefix[:, layer(state)] == state

    def log_state_reward(self, state: int) -> float:
        """log of the summed reward of every ordering passing through ``state``."""
        return float(logsumexp(self.log_rewards[self.through(state)]))

    def log_path_reward(self, path) -> float:
        """log of the summed reward of orderings starting with the definite prefix ``path``."""
        k = len(path)
        mask = np.all(self.orderings[:, :k] == np.asarray(path, dtype=np.int64), axis=1)
        return float(logsumexp(self.log_rewards[mask]))

    def transition(self, state: int, action: int) -> float:
        if state == full_state(self.d):
            raise TerminalState("the full state has no outgoing transitions")
        nxt = state | (1 << action)
        if nxt == state:
            raise ValueError(f"action {action} infeasible in state {state:#b}")
        via = self.through(state)
        both = via & self.through(nxt)
        return float(np.exp(logsumexp(self.log_rewards[both]) - logsumexp(self.log_rewards[via])))

    def posterior(self) -> Dict[Ordering, float]:
        p = np.exp(self.log_rewards - self.log_normalizer)
        return {tuple(int(v) for v in L): float(q) for L, q in zip(self.orderings, p)}


def exact_transition_enum(data, state: int, action: int, limit: int = ENUMERATION_LIMIT) -> float:
    """P(s'|s): summed reward of orderings through both ``s`` and ``s'`` over
    that of orderings through ``s``."""
    return OrderingEnumeration(data, limit).transition(state, action)


def exact_ordering_posterior(data, limit: int = ENUMERATION_LIMIT) -> Dict[Ordering, float]:
    return OrderingEnumeration(data, limit).posterior()


@dataclass
class DetailedBalanceReport:
    max_violation: float
    num_pairs: int
    violations: List[float]

    def ok(self, tol: float = 1e-9) -> bool:
        return self.max_violation <= tol


def check_detailed_balance(data, limit: int = ENUMERATION_LIMIT) -> DetailedBalanceReport:
    """Check ``P(s'|s) R(s) = P(s|s') R(s')`` with ``P(s|s') = 1`` on every edge.

    ``R(s)`` sums rewards of orderings that follow a definite path to ``s``
    (members of ``s`` in ascending order) and ``R(s')`` those that follow the
    same path then take the edge; both sums come from enumeration, while
    ``P(s'|s)`` comes from the DP table.
    """
    scorer = as_scorer(data)
    enum = OrderingEnumeration(scorer, limit)
    table = exact_q_dp(scorer)
    d = scorer.d
    violations = []
    for s in range(full_state(d)):
        path = [i for i in range(d) if s >> i & 1]
        log_rs = enum.log_path_reward(path)
        for a in feasible_actions(s, d):
            log_p = table.logq[s, a] - table.value[s]
            log_rs_next = enum.log_path_reward(path + [a])
            violations.append(abs(log_p + log_rs - log_rs_next))
    return DetailedBalanceReport(float(max(violations)), len(violations), violations)
