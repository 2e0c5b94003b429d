"""Context tree estimation for variable-length Markov chains.

Estimators (algorithm Context and penalized maximum likelihood via CTM), exact
simulation of finite sources, and evaluators for the finite-sample over- and
under-estimation and deviation bounds.
"""

__version__ = "0.1.0"

from .core import (
    EMPTY,
    Alphabet,
    ContextTree,
    VlmcModel,
    context_of,
    is_suffix,
    tree_includes,
    truncate,
    validate_tree,
)
from .counts import CountTrie, Sample, build_counts, empirical_prob, query
from .infodiv import binary_kl, kl_div, log_ml_tree, log_ml_word, penalized_score
from .estimators import (
    EstimationResult,
    EstimatorConfig,
    Schedule,
    context_estimator,
    ctm_estimator,
    delta,
    exhaustive_pml,
    is_acceptable,
)
from .simulate import SimConfig, marginal_prob, sample_path, stationary_distribution

__all__ = [
    "EMPTY", "Alphabet", "ContextTree", "VlmcModel", "context_of", "is_suffix",
    "tree_includes", "truncate", "validate_tree",
    "CountTrie", "Sample", "build_counts", "empirical_prob", "query",
    "binary_kl", "kl_div", "log_ml_tree", "log_ml_word", "penalized_score",
    "EstimationResult", "EstimatorConfig", "Schedule", "context_estimator",
    "ctm_estimator", "delta", "exhaustive_pml", "is_acceptable",
    "SimConfig", "marginal_prob", "sample_path", "stationary_distribution",
]
