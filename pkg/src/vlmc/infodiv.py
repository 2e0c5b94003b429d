"""Kullback-Leibler divergences and maximum-likelihood scores, in nats.

Divergences return ``math.inf`` (never a large finite sentinel) when the first
argument puts mass where the second has none.
"""
from __future__ import annotations

import math

import numpy as np

from .core import ContextTree
from .counts import CountTrie, query
from .exceptions import DomainError

SUM_TOL = 1e-12


def _xlogx_over(p, q):
    if p == 0.0:
        return 0.0
    if q == 0.0:
        return math.inf
    return p * math.log(p / q)


def binary_kl(p: float, q: float) -> float:
    """d(p; q) between Bernoulli(p) and Bernoulli(q)."""
    for v in (p, q):
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"Bernoulli parameter {v!r} outside [0, 1]")
    return _xlogx_over(p, q) + _xlogx_over(1.0 - p, 1.0 - q)


def _check_dist(P, name):
    P = np.asarray(P, dtype=float)
    if P.ndim != 1 or P.size == 0:
        raise DomainError(f"{name} must be a non-empty vector")
    if np.any(P < 0) or np.any(P > 1) or abs(P.sum() - 1.0) > SUM_TOL:
        raise DomainError(f"{name} is not a probability vector (sum {P.sum():.17g})")
    return P


def kl_div(P, Q) -> float:
    """D(P; Q) = sum_a P(a) log(P(a) / Q(a))."""
    P = _check_dist(P, "P")
    Q = _check_dist(Q, "Q")
    if P.shape != Q.shape:
        raise DomainError(f"length mismatch {P.size} != {Q.size}")
    total = 0.0
    for p, q in zip(P.tolist(), Q.tolist()):
        total += _xlogx_over(p, q)
        if total == math.inf:
            return math.inf
    return total


def log_ml_counts(counts) -> float:
    """sum_a N_a log(N_a / N) for one count vector; 0 when N = 0."""
    counts = [int(c) for c in counts]
    total = sum(counts)
    if total == 0:
        return 0.0
    out = 0.0
    for c in counts:
        if c:
            out += c * math.log(c / total)
    return out


def log_ml_word(trie: CountTrie, w) -> float:
    """log of the maximum likelihood of the symbols that follow w."""
    _, vec = query(trie, w)
    return log_ml_counts(vec)


def log_ml_tree(trie: CountTrie, tree: ContextTree) -> float:
    """Sum of per-leaf log likelihoods, accumulated over sorted leaves."""
    total = 0.0
    for w in tree.sorted_leaves():
        total += log_ml_word(trie, w)
    return total


def penalized_score(trie: CountTrie, tree: ContextTree, f: float) -> float:
    return log_ml_tree(trie, tree) - len(tree) * f
