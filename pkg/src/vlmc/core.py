"""Alphabets, words and context trees.

A word is a tuple of alphabet indices stored oldest symbol first, so the
most recent symbol is ``w[-1]`` and a suffix is a trailing slice.  The empty
tuple is the empty word and is the root of every tree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import (
    IncompleteTree,
    InvalidDistribution,
    PastTooShort,
    SuffixViolation,
)

Word = tuple

EMPTY: Word = ()

DIST_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple
    index: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(symbols) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"duplicate symbols in alphabet {symbols!r}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "index", {s: i for i, s in enumerate(symbols)})

    def __len__(self):
        return len(self.symbols)

    def encode(self, tokens: Iterable) -> Word:
        """Map tokens to indices. A plain string is read one character per token."""
        try:
            return tuple(self.index[t] for t in tokens)
        except KeyError as exc:
            raise ValueError(f"symbol {exc.args[0]!r} not in alphabet") from None

    def decode(self, w: Sequence[int], sep: str = "") -> str:
        return sep.join(str(self.symbols[i]) for i in w)

    def all_words(self, k: int):
        """All words of length k in lexicographic index order."""
        return list(itertools.product(range(len(self)), repeat=k))


def is_suffix(s: Word, w: Word, proper: bool = False) -> bool:
    """True iff ``w = u s`` for some word u (|u| >= 1 when ``proper``)."""
    s, w = tuple(s), tuple(w)
    if len(s) > len(w) or (proper and len(s) == len(w)):
        return False
    return len(s) == 0 or w[len(w) - len(s):] == s


def proper_suffixes(w: Word):
    """Proper suffixes of w, longest first, ending with the empty word."""
    return [w[k:] for k in range(1, len(w) + 1)]


def _first_violation(leaves):
    for w in sorted(leaves, key=lambda x: (len(x), x)):
        for s in proper_suffixes(w):
            if s in leaves:
                return s, w
    return None


@dataclass(frozen=True)
class ContextTree:
    """A finite suffix-free set of words (the leaves)."""

    leaves: frozenset
    alphabet: Alphabet | None = field(default=None, compare=False)

    def __post_init__(self):
        leaves = frozenset(tuple(w) for w in self.leaves)
        object.__setattr__(self, "leaves", leaves)
        bad = _first_violation(leaves)
        if bad is not None:
            s, w = bad
            raise SuffixViolation(s, w, self._violation_message(s, w))

    def _violation_message(self, s, w):
        if self.alphabet is not None:
            fs = self.alphabet.decode(s) or "EPS"
            fw = self.alphabet.decode(w) or "EPS"
            return f"leaf {fs!r} is a proper suffix of leaf {fw!r}"
        return f"leaf {s!r} is a proper suffix of leaf {w!r}"

    def __len__(self):
        return len(self.leaves)

    def __iter__(self):
        return iter(self.sorted_leaves())

    def __contains__(self, w):
        return tuple(w) in self.leaves

    @property
    def height(self) -> int:
        return max((len(w) for w in self.leaves), default=0)

    def sorted_leaves(self):
        return sorted(self.leaves)

    def internal_nodes(self) -> set:
        """Proper suffixes of leaves."""
        out = set()
        for w in self.leaves:
            out.update(proper_suffixes(w))
        return out

    def nodes(self) -> set:
        return self.internal_nodes() | set(self.leaves)

    def format(self, alphabet: Alphabet | None = None) -> list[str]:
        alphabet = alphabet or self.alphabet
        if alphabet is None:
            return [" ".join(map(str, w)) or "EPS" for w in self.sorted_leaves()]
        return [alphabet.decode(w) or "EPS" for w in self.sorted_leaves()]


def validate_tree(leaves: Iterable, alphabet: Alphabet | None = None) -> ContextTree:
    """Build a ContextTree, raising SuffixViolation on the first offending pair."""
    return ContextTree(frozenset(tuple(w) for w in leaves), alphabet)


def truncate(tree: ContextTree, K: int) -> ContextTree:
    """T|_K: leaves of length <= K plus the length-K suffixes of longer leaves."""
    if K < 1:
        raise ValueError("truncation level must be >= 1")
    out = {w for w in tree.leaves if len(w) <= K}
    out.update(w[len(w) - K:] for w in tree.leaves if len(w) > K)
    return ContextTree(frozenset(out), tree.alphabet)


def tree_includes(t1: ContextTree, t2: ContextTree) -> bool:
    """T1 included in T2: every leaf of T1 is a leaf or internal node of T2."""
    nodes = t2.nodes()
    return all(w in nodes for w in t1.leaves)


def find_leaf(leaves, past: Word, max_len: int):
    """Leaf of ``leaves`` that is a suffix of ``past``, or None."""
    for k in range(min(max_len, len(past)) + 1):
        s = past[len(past) - k:] if k else EMPTY
        if s in leaves:
            return s
    return None


@dataclass(frozen=True, eq=False)
class VlmcModel:
    """A complete finite context tree with one next-symbol distribution per leaf."""

    tree: ContextTree
    dists: Mapping
    alphabet: Alphabet

    def __post_init__(self):
        m = len(self.alphabet)
        dists = {}
        for w, p in self.dists.items():
            w = tuple(w)
            p = np.asarray(p, dtype=float)
            if p.shape != (m,):
                raise InvalidDistribution(
                    f"leaf {self._fmt(w)}: expected {m} probabilities, got {p.size}"
                )
            if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > DIST_TOL:
                raise InvalidDistribution(
                    f"leaf {self._fmt(w)}: probabilities sum to {p.sum():.12g}"
                )
            p.setflags(write=False)
            dists[w] = p
        if set(dists) != set(self.tree.leaves):
            missing = sorted(set(self.tree.leaves) - set(dists))
            extra = sorted(set(dists) - set(self.tree.leaves))
            raise InvalidDistribution(
                f"distributions do not match leaves (missing {missing}, extra {extra})"
            )
        object.__setattr__(self, "dists", dists)
        check_complete(self.tree, m)

    def _fmt(self, w):
        return repr(self.alphabet.decode(w) or "EPS")

    @property
    def height(self) -> int:
        return self.tree.height

    @property
    def horizon(self) -> int:
        """Length of the embedding state space A^h (at least 1)."""
        return max(self.tree.height, 1)

    def prob(self, w: Word) -> np.ndarray:
        return self.dists[tuple(w)]


def check_complete(tree: ContextTree, alphabet_size: int) -> None:
    """Raise IncompleteTree unless every past in A^h(T) resolves to a leaf."""
    h = tree.height
    for past in itertools.product(range(alphabet_size), repeat=h):
        if find_leaf(tree.leaves, past, h) is None:
            raise IncompleteTree(past)


def context_of(model: VlmcModel, past: Word) -> Word:
    """The unique leaf of the model's tree that is a suffix of ``past``."""
    past = tuple(past)
    leaf = find_leaf(model.tree.leaves, past, model.height)
    if leaf is None:
        raise PastTooShort(
            f"past of length {len(past)} resolves to no leaf (tree height {model.height})"
        )
    return leaf
