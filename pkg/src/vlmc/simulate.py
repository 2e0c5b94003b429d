"""Stationary law and exact simulation of finite VLMC sources.

The source is embedded in the ordinary Markov chain on blocks of the last
``h`` symbols (``h`` = tree height, at least 1).  A block is encoded as an
integer in base |A| with the oldest symbol most significant, so appending
symbol ``a`` maps state ``s`` to ``(s * |A| + a) % |A|**h``.

Random numbers come from numpy's PCG64.  Per-replicate seeds are derived with
:func:`mix_seed`, a SplitMix64 finalizer chain, so replicate streams do not
depend on execution order.
"""
from __future__ import annotations

import weakref
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .core import VlmcModel, Word, find_leaf
from .counts import Sample
from .exceptions import HorizonTooLarge, NoConvergence, NotIrreducible

MAX_STATES = 2 ** 20
RESIDUAL_TOL = 1e-12
MAX_ITER = 10 ** 6
DIRECT_MAX = 2048  # recurrent classes up to this size get a dense starting solve

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 output function applied to the 64-bit integer ``x``."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(base: int, *keys: int) -> int:
    """Fold integer keys into a base seed: x <- splitmix64(x XOR key) per key."""
    x = splitmix64(base & _MASK64)
    for k in keys:
        x = splitmix64(x ^ (k & _MASK64))
    return x


@dataclass(frozen=True)
class SimConfig:
    n: int
    d: int
    seed: int
    init: str = "stationary"
    burn_in: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.burn_in < 0:
            raise ValueError("need n >= 1, d >= 1 and burn_in >= 0")
        if self.init not in ("stationary", "burn_in"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True, eq=False)
class StationaryTable:
    h: int
    alphabet_size: int
    pi: np.ndarray
    residual: float
    iterations: int

    def block_prob(self, w: Word) -> float:
        """Probability that the current h-block ends with w (|w| <= h)."""
        k = len(w)
        m = self.alphabet_size
        if k == 0:
            return 1.0
        code = 0
        for a in w:
            code = code * m + a
        states = np.arange(self.pi.size)
        return float(self.pi[states % m ** k == code].sum())


class _Chain:
    """Block-chain tables shared by the stationary solver and the samplers."""

    def __init__(self, model: VlmcModel):
        m = len(model.alphabet)
        h = model.horizon
        if float(m) ** h > MAX_STATES:
            raise HorizonTooLarge(f"|A|^h = {m}^{h} exceeds {MAX_STATES} states")
        N = m ** h
        leaves = model.tree.sorted_leaves()
        states = np.arange(N)
        leaf_of = np.full(N, -1, dtype=np.int64)
        for i, w in enumerate(leaves):
            code = 0
            for a in w:
                code = code * m + a
            leaf_of[states % m ** len(w) == code] = i
        assert (leaf_of >= 0).all()
        probs = np.array([model.prob(w) for w in leaves])
        cdf = np.cumsum(probs, axis=1)
        cdf[:, -1] = 1.0
        self.m, self.h, self.N = m, h, N
        self.leaves = leaves
        self.leaf_of = leaf_of
        self.probs = probs
        self.cdf = cdf

    def matrix(self):
        m, N = self.m, self.N
        rows = np.repeat(np.arange(N), m)
        cols = (rows * m + np.tile(np.arange(m), N)) % N
        vals = self.probs[self.leaf_of].ravel()
        keep = vals > 0
        return sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(N, N))


_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _chain(model):
    entry = _cache.get(model)
    if entry is None:
        entry = _cache[model] = {"chain": _Chain(model)}
    return entry


def _direct_guess(QT):
    """Solve pi (Q - I) = 0, sum(pi) = 1 densely; None if the system is singular."""
    A = QT.toarray() - np.eye(QT.shape[0])
    A[-1, :] = 1.0
    b = np.zeros(QT.shape[0])
    b[-1] = 1.0
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)) or np.any(x < -1e-12):
        return None
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def stationary_distribution(model: VlmcModel) -> StationaryTable:
    """Solve pi P = pi on the recurrent class by lazy power iteration.

    Small classes start from a dense linear solve, so the iteration only
    certifies the residual.
    """
    entry = _chain(model)
    if "table" in entry:
        return entry["table"]
    chain = entry["chain"]
    P = chain.matrix()
    ncomp, labels = connected_components(P, directed=True, connection="strong")
    # closed classes: no transition leaves the component
    coo = P.tocoo()
    leaving = np.zeros(ncomp, dtype=bool)
    leaving[labels[coo.row][labels[coo.row] != labels[coo.col]]] = True
    closed = np.flatnonzero(~leaving)
    if closed.size != 1:
        raise NotIrreducible(f"chain has {closed.size} closed communicating classes")
    members = np.flatnonzero(labels == closed[0])
    Q = P[members][:, members]
    QT = Q.T.tocsr()
    x = _direct_guess(QT) if members.size <= DIRECT_MAX else None
    if x is None:
        x = np.full(members.size, 1.0 / members.size)
    residual = np.inf
    it = 0
    while it < MAX_ITER:
        it += 1
        xp = QT @ x
        residual = float(np.max(np.abs(xp - x)))
        if residual <= RESIDUAL_TOL * 0.1:
            break
        x = 0.5 * (x + xp)
        x /= x.sum()
    pi = np.zeros(chain.N)
    pi[members] = x
    pi /= pi.sum()
    residual = float(np.max(np.abs(P.T @ pi - pi)))
    if residual > RESIDUAL_TOL:
        raise NoConvergence(residual, it)
    pi.setflags(write=False)
    table = StationaryTable(chain.h, chain.m, pi, residual, it)
    entry["table"] = table
    return table


def marginal_prob(model: VlmcModel, w: Word, table: StationaryTable | None = None) -> float:
    """Stationary probability p(w) that the next |w| symbols spell w."""
    w = tuple(w)
    table = table or stationary_distribution(model)
    h = table.h
    if len(w) <= h:
        return table.block_prob(w)
    p = table.block_prob(w[:h])
    leaves = model.tree.leaves
    for j in range(h, len(w)):
        if p == 0.0:
            return 0.0
        ctx = find_leaf(leaves, w[:j], model.height)
        p *= float(model.prob(ctx)[w[j]])
    return p


def conditional_prob(model: VlmcModel, w: Word, table: StationaryTable | None = None) -> np.ndarray | None:
    """p(. | w) = p(wa) / p(w), or None when p(w) = 0."""
    w = tuple(w)
    table = table or stationary_distribution(model)
    pw = marginal_prob(model, w, table)
    if pw <= 0.0:
        return None
    m = len(model.alphabet)
    return np.array([marginal_prob(model, w + (a,), table) for a in range(m)]) / pw


def _initial_state(chain, model, config, rng, u0):
    if config.init == "stationary":
        pi = stationary_distribution(model).pi
        cum = np.cumsum(pi)
        cum[-1] = 1.0
        return int(np.searchsorted(cum, u0, side="right"))
    s = 0
    cdf = chain.cdf.tolist()
    leaf_of = chain.leaf_of.tolist()
    burn = rng.random(config.burn_in).tolist()
    for u in burn:
        a = bisect_right(cdf[leaf_of[s]], u)
        s = (s * chain.m + a) % chain.N
    return s


def _digits(s, h, m):
    out = []
    for _ in range(h):
        s, r = divmod(s, m)
        out.append(r)
    return out[::-1]


def sample_path(model: VlmcModel, config: SimConfig) -> Sample:
    """Draw d + n symbols; the first d form the sample's observed past.

    One uniform picks the initial block (stationary init), then one uniform
    per symbol is inverted through the cumulative next-symbol law.
    """
    chain = _chain(model)["chain"]
    rng = np.random.default_rng(config.seed)
    total = config.d + config.n
    u0 = float(rng.random())
    s = _initial_state(chain, model, config, rng, u0)
    out = _digits(s, chain.h, chain.m)
    steps = max(0, total - len(out))
    u = rng.random(steps).tolist()
    cdf = chain.cdf.tolist()
    leaf_of = chain.leaf_of.tolist()
    m, N = chain.m, chain.N
    append = out.append
    for ui in u:
        a = bisect_right(cdf[leaf_of[s]], ui)
        append(a)
        s = (s * m + a) % N
    raw = np.asarray(out[:total], dtype=np.int64)
    return Sample(raw, config.d, model.alphabet)


def sample_paths(model: VlmcModel, n: int, d: int, replicates: int, seed: int) -> np.ndarray:
    """Stationary paths for many replicates at once, shape (replicates, d + n).

    Vectorized across replicates from a single PCG64 stream; not interchangeable
    with :func:`sample_path` for a given seed.
    """
    chain = _chain(model)["chain"]
    rng = np.random.default_rng(seed)
    total = d + n
    pi = stationary_distribution(model).pi
    cum = np.cumsum(pi)
    cum[-1] = 1.0
    s = np.searchsorted(cum, rng.random(replicates), side="right")
    h, m, N = chain.h, chain.m, chain.N
    out = np.empty((replicates, max(total, h)), dtype=np.int64)
    for j in range(h):
        out[:, j] = (s // m ** (h - 1 - j)) % m
    cdf = chain.cdf
    leaf_of = chain.leaf_of
    for t in range(h, total):
        u = rng.random(replicates)
        a = (u[:, None] >= cdf[leaf_of[s]]).sum(axis=1)
        out[:, t] = a
        s = (s * m + a) % N
    return out[:, :total]
