"""Suffix counts N_n(w, a) for every word of length at most d."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import EMPTY, Alphabet, Word
from .exceptions import DepthExceeded, SampleTooShort


@dataclass(frozen=True)
class Sample:
    """A symbol sequence whose first ``d`` entries are the observed past.

    ``raw`` holds alphabet indices; the effective length is ``n = len(raw) - d``.
    """

    raw: np.ndarray
    d: int
    alphabet: Alphabet | None = field(default=None, compare=False)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.int64)
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        if self.d < 1:
            raise ValueError("past length d must be >= 1")
        if raw.size < self.d + 1:
            raise SampleTooShort(
                f"sample of length {raw.size} has no symbol after a past of length {self.d}"
            )

    @property
    def m(self) -> int:
        return int(self.raw.size)

    @property
    def n(self) -> int:
        return self.m - self.d

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.raw, other.raw)

    def __hash__(self):
        return hash((self.d, self.raw.tobytes()))


def default_depth(n: int, alphabet_size: int) -> int:
    """floor(log n / log |A|), at least 1, so that |A|^d <= n."""
    return max(1, int(math.floor(math.log(n) / math.log(alphabet_size) + 1e-12)))


class CountTrie:
    """Counts of every observed word of length <= d, keyed by the word.

    Only words with N(w) >= 1 are stored; the empty word is always present.
    Children of ``w`` are the stored words ``(b,) + w``.
    """

    def __init__(self, nodes: dict, alphabet_size: int, d: int, n: int):
        self.nodes = nodes
        self.alphabet_size = alphabet_size
        self.d = d
        self.n = n
        self._children = {w: [] for w in nodes}
        for w in nodes:
            if w:
                self._children[w[1:]].append(w)
        for kids in self._children.values():
            kids.sort()
        self._totals = {w: int(c.sum()) for w, c in nodes.items()}

    def __contains__(self, w):
        return tuple(w) in self.nodes

    def __len__(self):
        return len(self.nodes)

    def words(self):
        """Stored words, shortest first then lexicographic."""
        return sorted(self.nodes, key=lambda w: (len(w), w))

    def total(self, w: Word) -> int:
        return self._totals.get(tuple(w), 0)

    def children(self, w: Word) -> list:
        """Observed one-symbol extensions ``bw`` in order of b."""
        return self._children.get(tuple(w), [])


def _window_codes(x, past, n, k, m):
    """Integer code of the length-k window preceding each target position."""
    code = np.zeros(n, dtype=np.int64)
    for j in range(k, 0, -1):
        code = code * m + x[past - j: past - j + n]
    return code


def _decode(code, k, m):
    digits = []
    for _ in range(k):
        code, r = divmod(code, m)
        digits.append(r)
    return tuple(reversed(digits))


def build_counts(sample: Sample, d: int | None = None, alphabet_size: int | None = None) -> CountTrie:
    """Count every (word, next symbol) pair with |word| <= d in one pass per depth.

    The sample's past must be at least ``d`` long so every window is defined.
    """
    if d is None:
        d = sample.d
    if d < 1:
        raise ValueError("depth d must be >= 1")
    if d > sample.d:
        raise SampleTooShort(f"depth {d} needs at least {d} past symbols, sample has {sample.d}")
    if alphabet_size is None:
        if sample.alphabet is not None:
            alphabet_size = len(sample.alphabet)
        else:
            alphabet_size = int(sample.raw.max()) + 1 if sample.raw.size else 2
            alphabet_size = max(alphabet_size, 2)
    m = alphabet_size
    x = sample.raw
    if x.size and (x.min() < 0 or x.max() >= m):
        raise ValueError("sample contains indices outside the alphabet")
    past, n = sample.d, sample.n
    target = x[past:]

    nodes = {EMPTY: np.bincount(target, minlength=m).astype(np.int64)}
    if float(m) ** (d + 1) < 2.0 ** 62:
        for k in range(1, d + 1):
            keys = _window_codes(x, past, n, k, m) * m + target
            uniq, cnt = np.unique(keys, return_counts=True)
            for key, c in zip(uniq.tolist(), cnt.tolist()):
                wcode, a = divmod(key, m)
                w = _decode(wcode, k, m)
                vec = nodes.get(w)
                if vec is None:
                    vec = nodes[w] = np.zeros(m, dtype=np.int64)
                vec[a] = c
    else:
        for k in range(1, d + 1):
            rows = np.stack([x[past - j: past - j + n] for j in range(k, 0, -1)] + [target], axis=1)
            uniq, cnt = np.unique(rows, axis=0, return_counts=True)
            for row, c in zip(uniq.tolist(), cnt.tolist()):
                w = tuple(row[:-1])
                vec = nodes.get(w)
                if vec is None:
                    vec = nodes[w] = np.zeros(m, dtype=np.int64)
                vec[row[-1]] = c
    for vec in nodes.values():
        vec.setflags(write=False)
    return CountTrie(nodes, m, d, n)


def query(trie: CountTrie, w: Word):
    """(N(w), N(w, .)) with zeros for unobserved words."""
    w = tuple(w)
    if len(w) > trie.d:
        raise DepthExceeded(f"word of length {len(w)} exceeds trie depth {trie.d}")
    vec = trie.nodes.get(w)
    if vec is None:
        return 0, np.zeros(trie.alphabet_size, dtype=np.int64)
    return int(vec.sum()), vec.copy()


def empirical_prob(trie: CountTrie, w: Word) -> np.ndarray:
    """N(w, a) / N(w), or the uniform vector when w is unobserved."""
    total, vec = query(trie, w)
    if total == 0:
        return np.full(trie.alphabet_size, 1.0 / trie.alphabet_size)
    return vec / total
