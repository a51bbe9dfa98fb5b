"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line; the lines are printed together in the
terminal summary. The two training criteria take several minutes each.
"""

import math
import time

import numpy as np
import pytest

from ordergraph.datagen import Dataset, GenConfig, er_dag, linear_gaussian_sample
from ordergraph.exact import (
    OrderingEnumeration,
    check_detailed_balance,
    exact_ordering_posterior,
    exact_q_dp,
    exact_transition_dp,
)
from ordergraph.graph import WeightedDag, is_acyclic
from ordergraph.metrics import shd, tpr_fdr_f1
from ordergraph.order_graph import feasible_pairs, ordering_prefix_states
from ordergraph.qfunction import MASK_VALUE, MaskedQVector, MLPQModel, transition_distribution
from ordergraph.sampler import (
    compare_transition_probabilities,
    greedy_dag,
    ordering_to_full_dag,
    prune_linear,
    sample_ordering,
)
from ordergraph.scoring import BICScorer
from ordergraph.trainer import LayeredQModels, ReplayBuffer, TrainConfig, rollout, train, update_layers

from conftest import chain_data
from test_qfunction import fd_check

RECOVERY_EPISODES = 16000


def er_problem(d, seed, n=200):
    rng = np.random.default_rng(seed)
    g = er_dag(GenConfig(d=d, n=n), rng)
    return g, linear_gaussian_sample(g, n, 1.0, rng)


def test_oracle_equivalence(criterion):
    t0 = time.time()
    worst = 0.0
    for d, seeds in ((5, range(5)), (7, range(3))):
        for seed in seeds:
            scorer = BICScorer(er_problem(d, seed)[1])
            table, enum = exact_q_dp(scorer), OrderingEnumeration(scorer)
            dists = {s: exact_transition_dp(table, s).probs for s in range(2**d - 1)}
            for s, a in feasible_pairs(d):
                worst = max(worst, abs(dists[s][a] - enum.transition(s, a)))
    secs = time.time() - t0
    criterion("oracle equivalence", worst <= 1e-9 and secs < 30, f"max |dp - enum| = {worst:.2e}, {secs:.1f}s")


def test_posterior_normalization_and_chain_rule(criterion):
    worst_norm = worst_chain = 0.0
    for d in range(2, 7):
        # ER2 needs d >= 5; smaller instances take the first columns of a d=5 draw
        data = er_problem(max(d, 5), 20 + d)[1]
        scorer = BICScorer(Dataset(data.values[:, :d]))
        post = exact_ordering_posterior(scorer)
        worst_norm = max(worst_norm, abs(math.fsum(post.values()) - 1.0))
        table = exact_q_dp(scorer)
        dists = {}
        for L, p in post.items():
            prod = 1.0
            for s, a in zip(ordering_prefix_states(L), L):
                if s not in dists:
                    dists[s] = exact_transition_dp(table, s).probs
                prod *= dists[s][a]
            worst_chain = max(worst_chain, abs(prod - p))
    ok = worst_norm <= 1e-9 and worst_chain <= 1e-9
    criterion("posterior normalization and chain rule (d <= 6)", ok,
              f"|sum - 1| = {worst_norm:.1e}, max chain-rule error = {worst_chain:.1e}")


def test_detailed_balance(criterion):
    worst = max(check_detailed_balance(er_problem(5, seed)[1]).max_violation for seed in range(3))
    criterion("detailed balance at d=5", worst <= 1e-9, f"max log violation = {worst:.2e}")


def test_figure3_correlation(criterion):
    rs, secs = [], []
    for seed in range(5):
        t0 = time.time()
        scorer = BICScorer(er_problem(5, seed)[1])
        models = train(scorer, TrainConfig(seed=seed))
        cmp = compare_transition_probabilities(models, exact_q_dp(scorer), 250, np.random.default_rng([seed, 4]))
        rs.append(cmp.pearson_r)
        secs.append(time.time() - t0)
    hits = sum(r >= 0.95 for r in rs)
    ok = hits >= 4 and max(secs) <= 600
    criterion("learned vs exact transition probabilities (d=5)", ok,
              f"r = {np.round(rs, 4).tolist()}, {hits}/5 >= 0.95, max {max(secs):.0f}s per seed")


def test_recovery_d10(criterion):
    tprs, shds = [], []
    for seed in range(5):
        truth, data = er_problem(10, seed)
        scorer = BICScorer(data)
        models = train(scorer, TrainConfig(seed=seed, episodes=RECOVERY_EPISODES))
        g = greedy_dag(models, scorer)
        tprs.append(tpr_fdr_f1(g, truth)[0])
        shds.append(shd(g, truth))
    tpr, dist = float(np.median(tprs)), float(np.median(shds))
    criterion("recovery at d=10", tpr >= 0.8 and dist <= 6,
              f"median TPR {tpr:.3f} (per seed {np.round(tprs, 3).tolist()}), median SHD {dist:g} (per seed {shds})")


def test_sampling_fidelity(criterion):
    data = Dataset(er_problem(5, 4)[1].values[:, :4])
    scorer = BICScorer(data)
    models = LayeredQModels.from_exact(exact_q_dp(scorer).logq)
    post = exact_ordering_posterior(scorer)
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(20000):
        L, _ = sample_ordering(models, rng)
        counts[L] = counts.get(L, 0) + 1
    tv = 0.5 * sum(abs(counts.get(L, 0) / 20000 - p) for L, p in post.items())
    criterion("sampling fidelity at d=4", tv <= 0.05, f"total variation = {tv:.4f}")


def test_gradient_correctness(criterion):
    worst, coords_checked = 0.0, 0
    for d, hidden in ((3, (8,)), (5, (16, 12)), (8, (128, 128))):
        rng = np.random.default_rng(d)
        model = MLPQModel(d, hidden, seed=d, offset=-2.0, scale=3.0, init_range=0.5)
        coords = rng.choice(model.params.size, size=12, replace=False)
        states, actions, targets = rng.integers(0, 1 << d, 8), rng.integers(0, d, 8), rng.normal(size=8)
        worst = max(worst, fd_check(model, states, actions, targets, coords))
        coords_checked += len(coords)
    criterion("gradient correctness", worst <= 1e-4 and coords_checked >= 30,
              f"{coords_checked} coordinates over 3 shapes, max relative error {worst:.2e}")


def _invariants():
    failures = []
    rng = np.random.default_rng(0)
    # softmax shift invariance and mask dominance
    for _ in range(200):
        d = int(rng.integers(2, 9))
        mask = int(rng.integers(0, (1 << d) - 1))
        v = np.where((mask >> np.arange(d)) & 1 == 1, MASK_VALUE, rng.normal(scale=50, size=d))
        p = transition_distribution(MaskedQVector(v, mask)).probs
        q = transition_distribution(MaskedQVector(np.where(v == MASK_VALUE, v, v + rng.normal(scale=1e3)), mask)).probs
        if np.abs(p - q).max() > 1e-12:
            failures.append("softmax shift")
        if np.any(p[v == MASK_VALUE] != 0.0):
            failures.append("mask dominance")
    # fixed point of the target rule under exact tabular values
    scorer = BICScorer(er_problem(5, 1)[1])
    models = LayeredQModels.from_exact(exact_q_dp(scorer).logq)
    buf = ReplayBuffer(10_000)
    for _ in range(100):
        rollout(models, scorer, buf, 0.5, rng)
    if max(update_layers(models, buf, TrainConfig(), rng, lr=1.0)) > 1e-9:
        failures.append("fixed-point loss")
    # pruning gives acyclic subgraphs
    for seed in range(20):
        _, data = er_problem(6, seed)
        full = ordering_to_full_dag(rng.permutation(6))
        g = prune_linear(full, data, float(rng.uniform(0, 1)))
        if not is_acyclic(g.adjacency) or np.any(g.adjacency > full.adjacency):
            failures.append("pruning subgraph")
    # metric unit cases
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 2] = 1
    truth = WeightedDag(w)
    w2 = np.zeros((3, 3))
    w2[0, 1] = w2[0, 2] = 1
    if shd(truth, truth) != 0 or shd(WeightedDag(w.T.copy()), truth) != 2:
        failures.append("shd unit")
    if tpr_fdr_f1(WeightedDag(w2), truth) != (0.5, 0.5, 0.5) or tpr_fdr_f1(WeightedDag(np.zeros((3, 3))), truth) != (0, 0, 0):
        failures.append("tpr/fdr unit")
    # seed reproducibility
    data = chain_data(d=4)
    cfg = TrainConfig(episodes=20, hidden=(16,), seed=7)
    a, b = train(BICScorer(data), cfg), train(BICScorer(data), cfg)
    if any(not np.array_equal(x, y) for x, y in zip(a.params(), b.params())):
        failures.append("reproducibility")
    return sorted(set(failures))


def test_invariant_suites(criterion):
    failures = _invariants()
    criterion("invariant suites", not failures, "all hold" if not failures else f"broken: {failures}")


def test_pruning_separation(criterion):
    data = chain_data(n=1000, d=3, weight=2.0, seed=0)
    g = prune_linear(ordering_to_full_dag([0, 1, 2]), data, 0.3)
    edges = sorted(g.edges())
    criterion("pruning separation on chain data", edges == [(0, 1), (1, 2)], f"kept {edges}")
