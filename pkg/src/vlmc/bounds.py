"""Closed-form evaluators for the over/under-estimation and deviation bounds.

Every evaluator returns a :class:`BoundReport` carrying the raw formula value,
the value clipped to [0, 1], and a validity flag with a reason.  A report with
``valid=False`` makes no probability claim.

Model coefficients (non-nullness, continuity rate, separation, minimal
transition probability) are computed exactly from the stationary law of a
finite model; see :func:`model_coefficients`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import VlmcModel, find_leaf, truncate
from .exceptions import DepthTooSmall, PreconditionViolated, ZeroProbabilityWord
from .simulate import StationaryTable, marginal_prob, stationary_distribution

E = math.e


@dataclass(frozen=True)
class BoundReport:
    name: str
    inputs: dict
    value: float
    clamped: float
    valid: bool
    reason: str = ""

    def row(self):
        return {"name": self.name, **self.inputs, "raw": self.value,
                "clamped": self.clamped, "valid": self.valid, "reason": self.reason}


def _clip(x):
    return min(1.0, max(0.0, x))


def _lower(name, inputs, tail):
    """Report for a bound of the form 1 - tail."""
    raw = 1.0 - tail
    if raw <= 0.0:
        return BoundReport(name, inputs, raw, _clip(raw), False, "vacuous")
    return BoundReport(name, inputs, raw, _clip(raw), True)


def _upper(name, inputs, raw):
    if raw > 1.0:
        return BoundReport(name, inputs, raw, 1.0, False, "vacuous")
    return BoundReport(name, inputs, raw, _clip(raw), True)


# ---------------------------------------------------------------------------
# model coefficients

@dataclass(frozen=True)
class ModelCoefficients:
    alpha0: float
    beta_sum: float
    p_min_d: float
    epsilon_Kd: float
    K: int
    d: int
    beta_k: tuple = ()
    alphabet_size: int = 2

    def __post_init__(self):
        if not (self.alpha0 <= 1.0 + 1e-12):
            raise ValueError("alpha0 must be <= 1")
        if not self.p_min_d > 0:
            raise ValueError("p_min_d must be positive")
        if self.epsilon_Kd < 0:
            raise ValueError("epsilon_Kd must be >= 0")


def alpha0(model: VlmcModel) -> float:
    """Sum over symbols of the smallest transition probability across leaves."""
    probs = np.array([model.prob(w) for w in model.tree.sorted_leaves()])
    return float(probs.min(axis=0).sum())


def cond(model: VlmcModel, v, table: StationaryTable | None = None):
    """p(. | v), or None when p(v) = 0.

    Pasts at least as long as the tree resolve to a leaf directly; shorter
    ones use the ratio p(va) / p(v) of stationary marginals.
    """
    v = tuple(v)
    table = table or stationary_distribution(model)
    pv = marginal_prob(model, v, table)
    if pv <= 0.0:
        return None
    if len(v) >= model.height:
        return model.prob(find_leaf(model.tree.leaves, v, model.height))
    m = len(model.alphabet)
    return np.array([marginal_prob(model, v + (a,), table) for a in range(m)]) / pv


def beta_wr(model: VlmcModel, w, r: int, table: StationaryTable | None = None) -> float:
    """max over u in A^r and a of |p(a|w) - p(a|uw)|, skipping p(uw) = 0."""
    if r < 1:
        raise ValueError("r must be >= 1")
    w = tuple(w)
    table = table or stationary_distribution(model)
    pw = cond(model, w, table)
    if pw is None:
        raise ZeroProbabilityWord(f"p({w!r}) = 0")
    best = 0.0
    for u in itertools.product(range(len(model.alphabet)), repeat=r):
        puw = cond(model, u + w, table)
        if puw is None:
            continue
        best = max(best, float(np.max(np.abs(pw - puw))))
    return best


def beta_k(model: VlmcModel, k: int, table: StationaryTable | None = None) -> float:
    """Continuity rate at length k; the sup over r is taken up to r = h - k + 2.

    For a finite tree beta(w, r) no longer changes once |uw| >= h, which is
    asserted on the last two extensions.
    """
    table = table or stationary_distribution(model)
    h = model.height
    r_max = max(h - k + 2, 2)
    best = 0.0
    for w in itertools.product(range(len(model.alphabet)), repeat=k):
        if marginal_prob(model, w, table) <= 0.0:
            continue
        vals = [beta_wr(model, w, r, table) for r in range(1, r_max + 1)]
        assert vals[-1] == vals[-2], "continuity rate not stabilized"
        best = max(best, max(vals))
    return best


def beta_sum(model: VlmcModel, table: StationaryTable | None = None) -> float:
    table = table or stationary_distribution(model)
    return float(sum(beta_k(model, k, table) for k in range(1, model.height)))


def epsilon_Kd(model: VlmcModel, K: int, d: int, table: StationaryTable | None = None) -> float:
    """Smallest separation of an internal node of T0|_K from its deeper pasts.

    ``math.inf`` when the truncated tree has no internal node.
    """
    tk = truncate(model.tree, K)
    if d < tk.height:
        raise DepthTooSmall(f"d = {d} is below the truncated tree height {tk.height}")
    table = table or stationary_distribution(model)
    internal = sorted(tk.internal_nodes(), key=lambda w: (len(w), w))
    if not internal:
        return math.inf
    return min(
        max(beta_wr(model, w, r, table) for r in range(1, d - len(w) + 1))
        for w in internal
    )


def p_min_d(model: VlmcModel, d: int, table: StationaryTable | None = None) -> float:
    """Smallest positive p(a|w) over a in A and w in A^d with p(w) > 0."""
    table = table or stationary_distribution(model)
    best = math.inf
    for w in itertools.product(range(len(model.alphabet)), repeat=d):
        p = cond(model, w, table)
        if p is None:
            continue
        pos = p[p > 0]
        if pos.size:
            best = min(best, float(pos.min()))
    return best


def model_coefficients(model: VlmcModel, K: int, d: int) -> ModelCoefficients:
    table = stationary_distribution(model)
    bk = tuple(beta_k(model, k, table) for k in range(1, model.height))
    return ModelCoefficients(
        alpha0=alpha0(model),
        beta_sum=float(sum(bk)),
        p_min_d=p_min_d(model, d, table),
        epsilon_Kd=epsilon_Kd(model, K, d, table),
        K=K,
        d=d,
        beta_k=bk,
        alphabet_size=len(model.alphabet),
    )


def _mixing_const(coeffs: ModelCoefficients, A: int, denom: float, square: bool = True) -> float:
    """exp(alpha0 / (denom e^2 |A|^2 (|A| beta + 2 alpha0))), |A|^2 omitted if not square."""
    a0 = coeffs.alpha0
    scale = A * A if square else 1
    return math.exp(a0 / (denom * E * E * scale * (A * coeffs.beta_sum + 2 * a0)))


# ---------------------------------------------------------------------------
# over- and under-estimation

def over_bound(n: int, delta: float, A_size: int) -> BoundReport:
    """Lower bound on P(estimated tree included in the true tree)."""
    if n < 1 or not delta > 0:
        raise ValueError("need n >= 1 and delta > 0")
    A2 = A_size * A_size
    tail = E * (delta * math.log(n) + A2) * float(n) ** 2 * math.exp(-delta / A2)
    return _lower("over", {"n": n, "delta": delta, "A": A_size}, tail)


def over_bound_restricted(n: int, delta: float, A_size: int, k_n: float) -> BoundReport:
    """Variant for candidate trees with at most ``k_n`` nodes."""
    if n < 1 or not delta > 0 or not k_n > 0:
        raise ValueError("need n >= 1, delta > 0 and k_n > 0")
    A2 = A_size * A_size
    tail = 2 * E * (delta * math.log(n) + A2) * k_n * math.exp(-delta / A2)
    return _lower("over_restricted", {"n": n, "delta": delta, "A": A_size, "k_n": k_n}, tail)


def under_bound(coeffs: ModelCoefficients, n: int, f_n: float, A_size: int, K: int, d: int) -> BoundReport:
    """Lower bound on P(T0|_K included in the estimate truncated at K).

    Valid only when the bracket p_min^d - 8|A| d f(n) / (eps^2 n) is positive.
    """
    inputs = {"n": n, "f": f_n, "A": A_size, "K": K, "d": d,
              "alpha0": coeffs.alpha0, "beta": coeffs.beta_sum,
              "p_min": coeffs.p_min_d, "epsilon": coeffs.epsilon_Kd}
    eps = coeffs.epsilon_Kd
    if math.isinf(eps):
        return BoundReport("under", inputs, 1.0, 1.0, True, "no internal node to under-estimate")
    if not eps > 0:
        return BoundReport("under", inputs, 0.0, 0.0, False, "epsilon not positive")
    if not coeffs.alpha0 > 0:
        return BoundReport("under", inputs, 0.0, 0.0, False, "alpha0 not positive")
    bracket = coeffs.p_min_d ** d - 8 * A_size * d * f_n / (eps * eps * n)
    if bracket <= 0:
        return BoundReport("under", inputs, 0.0, 0.0, False, "n below effective n0")
    const = 3 * _mixing_const(coeffs, A_size, 32) * float(A_size) ** (2 + K)
    tail = const * math.exp(-n * eps * eps * bracket * bracket / (16 * (d + 1)))
    return _lower("under", inputs, tail)


# ---------------------------------------------------------------------------
# self-normalized deviation bounds

def _dev_report(name, inputs, delta, raw):
    if delta <= 1:
        return BoundReport(name, inputs, raw, 1.0, False, "trivial regime")
    return _upper(name, inputs, raw)


def dev_bound_binary(delta: float, n: int) -> BoundReport:
    """Upper bound on P(N d(p_hat; p) > delta) for one symbol after one word."""
    if not delta > 0 or n < 2:
        raise ValueError("need delta > 0 and n >= 2")
    raw = 2 * E * math.ceil(delta * math.log(n)) * math.exp(-delta)
    return _dev_report("dev_binary", {"delta": delta, "n": n}, delta, raw)


def dev_bound_multi(delta: float, n: int, A_size: int) -> BoundReport:
    if not delta > 0 or n < 2:
        raise ValueError("need delta > 0 and n >= 2")
    if A_size < 2:
        raise ValueError("alphabet size must be >= 2")
    raw = 2 * E * (delta * math.log(n) + A_size) * math.exp(-delta / A_size)
    return _dev_report("dev_multi", {"delta": delta, "n": n, "A": A_size}, delta, raw)


def dev_bound_multi_conditional(delta: float, n: int, A_size: int) -> BoundReport:
    """Conditional-on-{N > 0} variant with |A| - 1 in place of |A|."""
    if not delta > 0 or n < 2:
        raise ValueError("need delta > 0 and n >= 2")
    if A_size < 2:
        raise ValueError("alphabet size must be >= 2")
    a1 = A_size - 1
    raw = 2 * E * (delta * math.log(n) + a1) * math.exp(-delta / a1)
    return _dev_report("dev_multi_conditional", {"delta": delta, "n": n, "A": A_size}, delta, raw)


# ---------------------------------------------------------------------------
# exponential inequalities under non-nullness and summable continuity

def appB_empirical_count_bound(coeffs: ModelCoefficients, w_len: int, n: int, t: float) -> BoundReport:
    """P(|N(w, a) - n p(wa)| > t) for |w| = w_len."""
    if not t > 0:
        raise PreconditionViolated("t > 0 fails")
    const = _mixing_const(coeffs, coeffs.alphabet_size, 8, square=False)
    raw = const * math.exp(-t * t / ((w_len + 1) * n))
    return _upper("count_deviation", {"w_len": w_len, "n": n, "t": t}, raw)


def appB_count_lower_tail(coeffs: ModelCoefficients, p_w: float, w_len: int, n: int, t: float,
                          A_size: int) -> BoundReport:
    """P(N(w) <= t), requiring 0 < t < n p(w)."""
    if not t > 0:
        raise PreconditionViolated("t > 0 fails")
    if not t < n * p_w:
        raise PreconditionViolated(f"t < n*p(w) fails: {t} >= {n * p_w}")
    const = _mixing_const(coeffs, A_size, 8)
    raw = const * A_size * math.exp(-n * (p_w - t / n) ** 2 / (w_len + 1))
    return _upper("count_lower_tail", {"p_w": p_w, "w_len": w_len, "n": n, "t": t, "A": A_size}, raw)


def appB_div_separation(coeffs: ModelCoefficients, p_u: float, p_w: float, u_len: int, w_len: int,
                        n: int, t: float, A_size: int, gap: float) -> BoundReport:
    """P(D(p_hat(.|u); p_hat(.|w)) <= t) when some symbol's conditional gap is ``gap``."""
    if not t > 0:
        raise PreconditionViolated("t > 0 fails")
    if not gap > 0:
        raise PreconditionViolated("gap > 0 fails")
    if not t < gap * gap / 8:
        raise PreconditionViolated(f"t < gap^2/8 fails: {t} >= {gap * gap / 8}")
    const = 2 * _mixing_const(coeffs, A_size, 32) * (A_size + 1)
    rate = min(p_w * p_w / (w_len + 1), p_u * p_u / (u_len + 1))
    raw = const * math.exp(-n * (t / 2) * rate)
    inputs = {"p_u": p_u, "p_w": p_w, "u_len": u_len, "w_len": w_len, "n": n, "t": t,
              "A": A_size, "gap": gap}
    return _upper("div_separation", inputs, raw)


# ---------------------------------------------------------------------------
# threshold schedules

@dataclass(frozen=True)
class ScheduleReport:
    n: np.ndarray = field(repr=False)
    terms: np.ndarray = field(repr=False)
    partial_sums: np.ndarray = field(repr=False)
    tail_exponent: float
    eventually_decreasing: bool
    skipped: int
    verdict: str


def consistency_schedule_check(schedule: Callable, A_size: int, n_max: int, n_min: int = 2) -> ScheduleReport:
    """Partial sums of delta_n log(n) exp(-delta_n / |A|^2) for n in [n_min, n_max].

    ``schedule`` maps n (and optionally |A|) to delta_n.  The tail exponent is the
    least-squares slope of log(term) against log(n) over the last decade; terms
    are called eventually decreasing when they decrease on n >= sqrt(n_max).
    Indices where delta_n log n <= 0 are skipped.
    """
    n = np.arange(n_min, n_max + 1, dtype=float)
    try:
        deltas = np.array([schedule(int(k), A_size) for k in n])
    except TypeError:
        deltas = np.array([schedule(int(k)) for k in n])
    prod = deltas * np.log(n)
    ok = prod > 0
    n, deltas, prod = n[ok], deltas[ok], prod[ok]
    log_terms = np.log(prod) - deltas / (A_size * A_size)
    terms = np.exp(log_terms)
    sums = np.cumsum(terms)
    tail = n >= max(n_min, n_max / 10)
    if tail.sum() >= 2:
        slope = float(np.polyfit(np.log(n[tail]), log_terms[tail], 1)[0])
    else:
        slope = math.nan
    late = n >= math.sqrt(n_max)
    decreasing = bool(late.sum() >= 2 and np.all(np.diff(terms[late]) < 0))
    verdict = "summable-looking" if decreasing and slope < -1 else "non-summable-looking"
    return ScheduleReport(n, terms, sums, slope, decreasing, int((~ok).sum()), verdict)
