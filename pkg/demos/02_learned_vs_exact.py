# coding: utf-8

# # Learned transition probabilities
#
# Train the per-layer Q-models on a 5-variable problem and compare the
# transition probabilities they imply with the exact ones. Takes about a
# minute on one core.

import numpy as np

from ordergraph import BICScorer, GenConfig, TrainConfig, er_dag, linear_gaussian_sample, train
from ordergraph.exact import exact_q_dp
from ordergraph.order_graph import state_bits
from ordergraph.sampler import compare_transition_probabilities, greedy_ordering

rng = np.random.default_rng(0)
truth = er_dag(GenConfig(d=5), rng)
data = linear_gaussian_sample(truth, 200, 1.0, rng)
scorer = BICScorer(data)


# ## Training
#
# Each episode walks the order graph once and then refits every layer on a
# batch of its own buffered transitions. The callback reports progress.


def progress(episode, models):
    if episode % 1000 == 0:
        print("episode", episode, "P(first):", np.round(models.distribution(0).probs, 3))


models = train(scorer, TrainConfig(seed=0), callback=progress)


# ## Compare with the exact table
#
# 250 random (state, action) pairs, skipping states with a single feasible
# action since their probability is 1 under any model. In a state string
# character i is variable i.

table = exact_q_dp(scorer)
cmp = compare_transition_probabilities(models, table, 250, np.random.default_rng(1))
print(f"pearson r = {cmp.pearson_r:.4f}")
print(f"max abs error = {np.abs(cmp.estimated - cmp.exact).max():.4f}")

for s, a, e, x in list(zip(cmp.states, cmp.actions, cmp.estimated, cmp.exact))[:8]:
    print(f"state {state_bits(int(s), 5)} action {a}: learned {e:.3f} exact {x:.3f}")

print("greedy ordering:", greedy_ordering(models))
