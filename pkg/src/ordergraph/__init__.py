"""Posterior inference over variable orderings with Q-learning on the order graph."""

__version__ = "0.1.0"

from .datagen import Dataset, GenConfig, er_dag, linear_gaussian_sample, load_csv, save_csv
from .errors import OrderGraphError
from .exact import (
    ExactQTable,
    check_detailed_balance,
    exact_ordering_posterior,
    exact_q_dp,
    exact_transition_dp,
    exact_transition_enum,
)
from .graph import WeightedDag, load_graph, load_graphs, save_graph, save_graphs
from .metrics import MetricsReport, e_shd, edge_counts, evaluate, evaluate_many, shd, tpr_fdr_f1
from .qfunction import MLPQModel, TabularQModel, forward_masked, transition_distribution
from .sampler import (
    compare_transition_probabilities,
    greedy_dag,
    greedy_ordering,
    ordering_to_full_dag,
    prune_linear,
    sample_best_k,
    sample_ordering,
)
from .scoring import BICScorer, bic_local_score, dag_log_score, ordering_log_reward
from .trainer import LayeredQModels, TrainConfig, train

__all__ = [
    "BICScorer",
    "Dataset",
    "ExactQTable",
    "GenConfig",
    "LayeredQModels",
    "MLPQModel",
    "MetricsReport",
    "OrderGraphError",
    "TabularQModel",
    "TrainConfig",
    "WeightedDag",
    "bic_local_score",
    "check_detailed_balance",
    "compare_transition_probabilities",
    "dag_log_score",
    "e_shd",
    "edge_counts",
    "er_dag",
    "evaluate",
    "evaluate_many",
    "exact_ordering_posterior",
    "exact_q_dp",
    "exact_transition_dp",
    "exact_transition_enum",
    "forward_masked",
    "greedy_dag",
    "greedy_ordering",
    "linear_gaussian_sample",
    "load_csv",
    "load_graph",
    "load_graphs",
    "ordering_log_reward",
    "ordering_to_full_dag",
    "prune_linear",
    "sample_best_k",
    "sample_ordering",
    "save_csv",
    "save_graph",
    "save_graphs",
    "shd",
    "tpr_fdr_f1",
    "train",
    "transition_distribution",
]
