"""Bayesian stochastic block models: inference, description length and link prediction."""

from ._core import (
    DegenerateVarianceError,
    Graph,
    ParseError,
    auc,
    auc_theory_inferred,
    auc_theory_true_model,
    description_length,
    description_length_terms,
    detectability_threshold,
    infer,
    planted_partition,
    removal_experiment,
    sample_posterior,
    score_pairs,
    score_pairs_averaged,
    two_cliques,
)

__all__ = [
    "DegenerateVarianceError",
    "Graph",
    "ParseError",
    "auc",
    "auc_theory_inferred",
    "auc_theory_true_model",
    "description_length",
    "description_length_terms",
    "detectability_threshold",
    "infer",
    "planted_partition",
    "removal_experiment",
    "sample_posterior",
    "score_pairs",
    "score_pairs_averaged",
    "two_cliques",
]
