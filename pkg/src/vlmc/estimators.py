"""Context-tree estimators: algorithm Context, penalized ML via CTM, and a brute-force check.

Both estimators walk the count trie bottom-up.  Ties follow the defining
operators exactly: Context keeps the children when Delta(w) >= threshold, and
CTM expands a node only when the children's value is strictly larger, so a
score tie prefers the shallower tree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import EMPTY, ContextTree, proper_suffixes
from .counts import CountTrie, empirical_prob
from .exceptions import TooManyTrees
from .infodiv import kl_div, log_ml_word, penalized_score

MAX_EXHAUSTIVE_TREES = 10 ** 6


@dataclass(frozen=True)
class Schedule:
    """Penalty or threshold as a function of n: ``bic``, ``const:<v>`` or ``clogn:<c>``."""

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bic", "const", "clogn"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "bic" and not self.value > 0:
            raise ValueError("schedule value must be positive")

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        text = text.strip()
        if text == "bic":
            return cls("bic")
        kind, sep, val = text.partition(":")
        if not sep:
            raise ValueError(f"cannot parse schedule {text!r}")
        return cls(kind, float(val))

    def __call__(self, n: int, alphabet_size: int) -> float:
        if self.kind == "bic":
            return (alphabet_size - 1) / 2.0 * math.log(n)
        if self.kind == "const":
            return self.value
        return self.value * math.log(n)

    def __str__(self):
        return "bic" if self.kind == "bic" else f"{self.kind}:{self.value:g}"


@dataclass(frozen=True)
class EstimatorConfig:
    d: int
    threshold: float
    penalty: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("depth d must be >= 1")
        if not self.threshold > 0 or not self.penalty > 0:
            raise ValueError("threshold and penalty must be positive")

    @classmethod
    def from_schedule(cls, d, n, alphabet_size, penalty: Schedule, threshold: Schedule | None = None):
        """Threshold defaults to the penalty value (delta_n = f(n))."""
        f = penalty(n, alphabet_size)
        delta = threshold(n, alphabet_size) if threshold is not None else f
        return cls(d=d, threshold=delta, penalty=f)


@dataclass(frozen=True)
class EstimationResult:
    """Estimated tree plus per-node (statistic, indicator) diagnostics.

    For Context the statistic is Delta_n(w) and the indicator C_w; for CTM it is
    log V_w and chi_w.
    """

    tree: ContextTree
    diagnostics: dict = field(repr=False)
    score: float
    method: str


def is_acceptable(tree: ContextTree, trie: CountTrie) -> bool:
    """Candidate-tree test against the observed words of the trie.

    Every stored word must be a leaf, have a proper suffix among the leaves, or
    be an internal node of the tree.
    """
    leaves = tree.leaves
    if any(w not in trie for w in leaves):
        return False
    if tree.height > trie.d:
        return False
    internal = tree.internal_nodes()
    for w in trie.nodes:
        if w in leaves or w in internal:
            continue
        if not any(s in leaves for s in proper_suffixes(w)):
            return False
    return True


def delta(trie: CountTrie, w) -> float:
    """Count-weighted divergence of the children's empirical laws from w's."""
    w = tuple(w)
    parent = empirical_prob(trie, w)
    total = 0.0
    for child in trie.children(w):
        total += trie.total(child) * kl_div(empirical_prob(trie, child), parent)
    return total


def _bottom_up(trie: CountTrie):
    return sorted(trie.nodes, key=lambda w: (-len(w), w))


def _collect(trie: CountTrie, indicator: dict) -> ContextTree:
    leaves = []
    stack = [EMPTY]
    while stack:
        w = stack.pop()
        if indicator[w]:
            stack.extend(trie.children(w))
        else:
            leaves.append(w)
    return ContextTree(frozenset(leaves))


def context_estimator(trie: CountTrie, config: EstimatorConfig) -> EstimationResult:
    """Rissanen's pruning estimator with threshold ``config.threshold``."""
    d = min(config.d, trie.d)
    C, stats = {}, {}
    for w in _bottom_up(trie):
        if len(w) > d:
            continue
        if trie.total(w) <= 1 or len(w) >= d:
            C[w] = 0
            stats[w] = delta(trie, w) if len(w) < trie.d else 0.0
            continue
        dw = delta(trie, w)
        stats[w] = dw
        keep = 1 if dw >= config.threshold else 0
        C[w] = max([keep] + [C[c] for c in trie.children(w)])
    tree = _collect(trie, C)
    diagnostics = {w: (stats[w], C[w]) for w in C}
    return EstimationResult(tree, diagnostics, penalized_score(trie, tree, config.penalty), "context")


def ctm_estimator(trie: CountTrie, config: EstimatorConfig) -> EstimationResult:
    """Penalized maximum likelihood tree via the log-domain CTM recursion."""
    d = min(config.d, trie.d)
    f = config.penalty
    LV, chi = {}, {}
    for w in _bottom_up(trie):
        if len(w) > d:
            continue
        own = -f + log_ml_word(trie, w)
        kids = trie.children(w) if len(w) < d else []
        if not kids:
            LV[w], chi[w] = own, 0
            continue
        below = 0.0
        for c in kids:
            below += LV[c]
        if below > own:
            LV[w], chi[w] = below, 1
        else:
            LV[w], chi[w] = own, 0
    tree = _collect(trie, chi)
    diagnostics = {w: (LV[w], chi[w]) for w in LV}
    return EstimationResult(tree, diagnostics, penalized_score(trie, tree, f), "pml")


def count_acceptable_trees(trie: CountTrie, d: int | None = None, cap: int = MAX_EXHAUSTIVE_TREES) -> int:
    """Number of acceptable trees; stops counting once ``cap`` is exceeded."""
    d = trie.d if d is None else min(d, trie.d)
    count = {}
    for w in _bottom_up(trie):
        if len(w) > d:
            continue
        kids = trie.children(w) if len(w) < d else []
        prod = 1
        for c in kids:
            prod = min(prod * count[c], cap + 1)
        count[w] = min(1 + prod, cap + 1) if kids else 1
    return count[EMPTY]


def enumerate_acceptable_trees(trie: CountTrie, d: int | None = None):
    """Yield every acceptable tree as a frozenset of leaves."""
    d = trie.d if d is None else min(d, trie.d)

    def options(w):
        yield (w,)
        kids = trie.children(w) if len(w) < d else []
        if not kids:
            return
        yield from _product([list(options(c)) for c in kids])

    def _product(groups):
        if not groups:
            yield ()
            return
        for head in groups[0]:
            for tail in _product(groups[1:]):
                yield head + tail

    for leaves in options(EMPTY):
        yield frozenset(leaves)


def exhaustive_pml(trie: CountTrie, config: EstimatorConfig, limit: int = MAX_EXHAUSTIVE_TREES):
    """Maximize the penalized log likelihood by scoring every acceptable tree."""
    total = count_acceptable_trees(trie, config.d, cap=limit)
    if total > limit:
        raise TooManyTrees(f"more than {limit} acceptable trees")
    best, best_score = None, -math.inf
    for leaves in enumerate_acceptable_trees(trie, config.d):
        tree = ContextTree(leaves)
        score = penalized_score(trie, tree, config.penalty)
        if score > best_score:
            best, best_score = tree, score
    return best, best_score


def ranked_scores(trie: CountTrie, config: EstimatorConfig):
    """All (score, tree) pairs over acceptable trees, best first."""
    out = []
    for leaves in enumerate_acceptable_trees(trie, config.d):
        tree = ContextTree(leaves)
        out.append((penalized_score(trie, tree, config.penalty), tree))
    out.sort(key=lambda st: -st[0])
    return out


def diagnostics_rows(trie: CountTrie, result: EstimationResult):
    """(word, N(w), statistic, indicator) rows in shortest-first order."""
    rows = []
    for w in sorted(result.diagnostics, key=lambda x: (len(x), x)):
        stat, ind = result.diagnostics[w]
        rows.append((w, trie.total(w), stat, ind))
    return rows
