"""Monte Carlo harness: recovery frequencies, estimator-comparison fuzzing and
deviation tails, all deterministic functions of their inputs and seeds.
"""
from __future__ import annotations

import csv
import io
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.stats import binomtest

from . import __version__
from .bounds import dev_bound_binary, model_coefficients, over_bound, under_bound
from .core import ContextTree, VlmcModel, tree_includes, truncate
from .counts import Sample, build_counts
from .estimators import EstimatorConfig, Schedule, context_estimator, ctm_estimator
from .fileio import load_model
from .infodiv import binary_kl
from .simulate import SimConfig, mix_seed, sample_path, sample_paths

ESTIMATORS = {"context": context_estimator, "pml": ctm_estimator}


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return f"{float(v):.12g}"
    if v is None:
        return ""
    return str(v)


def format_csv(table: Table) -> str:
    """Header plus rows with 12 significant digits and LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_csv(table: Table, path) -> Path:
    """Write :func:`format_csv` output as UTF-8; IO errors name the path."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(table))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def wilson(k: int, R: int, level: float = 0.95):
    ci = binomtest(k, R).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# ---------------------------------------------------------------------------
# recovery

@dataclass(frozen=True)
class ExperimentSpec:
    model_path: str | None
    n_grid: tuple
    replicates: int
    estimator: str = "both"
    schedule: Schedule = Schedule("bic")
    threshold: Schedule | None = None
    K: int = 1
    d: int = 1
    base_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1 or not self.n_grid:
            raise ValueError("need at least one replicate and one sample size")
        if self.estimator not in ("context", "pml", "both"):
            raise ValueError(f"unknown estimator {self.estimator!r}")

    @property
    def estimators(self):
        return ("context", "pml") if self.estimator == "both" else (self.estimator,)

    @classmethod
    def from_text(cls, text: str, base_dir=None) -> "ExperimentSpec":
        """Parse ``key = value`` lines (``#`` comments allowed)."""
        kv = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {raw!r}")
            kv[key.strip()] = val.strip()
        model = kv.pop("model", None)
        if model is not None and base_dir is not None and not Path(model).is_absolute():
            model = str(Path(base_dir) / model)
        spec = cls(
            model_path=model,
            n_grid=tuple(int(float(x)) for x in kv.pop("n", kv.pop("n_grid", "")).replace(",", " ").split()),
            replicates=int(kv.pop("replicates", kv.pop("R", "1"))),
            estimator=kv.pop("estimator", "both"),
            schedule=Schedule.parse(kv.pop("penalty", "bic")),
            threshold=Schedule.parse(kv["threshold"]) if "threshold" in kv else None,
            K=int(kv.pop("K", "1")),
            d=int(kv.pop("d", "1")),
            base_seed=int(kv.pop("seed", "0")),
            workers=int(kv.pop("workers", "1")),
        )
        kv.pop("threshold", None)
        if kv:
            raise ValueError(f"unknown keys in experiment spec: {sorted(kv)}")
        return spec

    def describe(self):
        out = asdict(self)
        out["schedule"] = str(self.schedule)
        out["threshold"] = str(self.threshold) if self.threshold else None
        out["n_grid"] = list(self.n_grid)
        return out


FREQ_COLUMNS = (
    "n", "estimator", "replicates", "penalty", "threshold",
    "freq_over", "freq_under", "freq_exact",
    "over_lo", "over_hi", "under_lo", "under_hi", "exact_lo", "exact_hi",
    "over_bound_raw", "over_bound", "over_bound_valid",
    "under_bound_raw", "under_bound", "under_bound_valid", "under_bound_reason",
)


class FrequencyTable(Table):
    def __init__(self, rows=None):
        super().__init__(FREQ_COLUMNS, rows or [])

    def get(self, n, estimator):
        for rec in self.records():
            if rec["n"] == n and rec["estimator"] == estimator:
                return rec
        raise KeyError((n, estimator))


def classify(estimate: ContextTree, truth: ContextTree, K: int):
    """(over, under, exact) outcome flags for one estimate."""
    over = not tree_includes(estimate, truth)
    tk, ek = truncate(truth, K), truncate(estimate, K)
    under = not tree_includes(tk, ek)
    exact = ek.leaves == tk.leaves
    return over, under, exact


def _replicate(args):
    model, n, d, r, base_seed, estimators, config = args
    seed = mix_seed(base_seed, n, r)
    sample = sample_path(model, SimConfig(n=n, d=d, seed=seed))
    trie = build_counts(sample, d, len(model.alphabet))
    return r, {name: ESTIMATORS[name](trie, config).tree for name in estimators}


def run_recovery(spec: ExperimentSpec, model: VlmcModel | None = None, keep_trees: bool = False):
    """Recovery frequencies of each estimator for every n in the grid.

    Returns the FrequencyTable, plus the per-replicate trees when ``keep_trees``.
    """
    if model is None:
        model = load_model(spec.model_path)
    truth = model.tree
    m = len(model.alphabet)
    tk = truncate(truth, spec.K)
    if spec.d < tk.height:
        raise ValueError(f"d = {spec.d} is below the height of the truncated tree ({tk.height})")
    coeffs = model_coefficients(model, spec.K, spec.d)
    table = FrequencyTable()
    trees = {}
    for n in spec.n_grid:
        config = EstimatorConfig.from_schedule(spec.d, n, m, spec.schedule, spec.threshold)
        jobs = [(model, n, spec.d, r, spec.base_seed, spec.estimators, config)
                for r in range(spec.replicates)]
        if spec.workers > 1:
            with ProcessPoolExecutor(spec.workers) as pool:
                results = list(pool.map(_replicate, jobs, chunksize=8))
        else:
            results = [_replicate(j) for j in jobs]
        results.sort(key=lambda x: x[0])
        ob = over_bound(n, config.threshold, m)
        ub = under_bound(coeffs, n, config.penalty, m, spec.K, spec.d)
        for name in spec.estimators:
            counts = {"over": 0, "under": 0, "exact": 0}
            for r, est in results:
                over, under, exact = classify(est[name], truth, spec.K)
                # exact failure must come with an over- or under-estimation event
                assert exact or over or under
                counts["over"] += over
                counts["under"] += under
                counts["exact"] += exact
                if keep_trees:
                    trees[(n, name, r)] = est[name]
            R = spec.replicates
            cis = [wilson(counts[k], R) for k in ("over", "under", "exact")]
            table.rows.append((
                n, name, R, config.penalty, config.threshold,
                counts["over"] / R, counts["under"] / R, counts["exact"] / R,
                *cis[0], *cis[1], *cis[2],
                ob.value, ob.clamped, ob.valid,
                ub.value, ub.clamped, ub.valid, ub.reason,
            ))
    return (table, trees) if keep_trees else table


def write_manifest(path, spec_description: dict, extra: dict | None = None) -> Path:
    manifest = {
        "inputs": spec_description,
        "seed_derivation": "replicate seed = mix_seed(base_seed, n, r); "
                           "mix_seed folds keys with x <- splitmix64(x ^ key) after x = splitmix64(base)",
        "generator": "numpy PCG64 via numpy.random.default_rng(seed)",
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# estimator comparison fuzz

@dataclass
class FuzzCase:
    sample: Sample
    alphabet_size: int
    d: int
    threshold: float
    penalty: float

    def dump(self):
        return {"raw": self.sample.raw.tolist(), "past": self.sample.d, "A": self.alphabet_size,
                "d": self.d, "threshold": self.threshold, "penalty": self.penalty}


@dataclass
class FuzzResult:
    checked: int
    violations: list
    boundary_cases: int
    outside_hypothesis: int
    outside_violations: int

    @property
    def passed(self):
        return not self.violations


def random_sample(rng: np.random.Generator, m: int, n: int, d: int) -> Sample:
    """A random sample from either an i.i.d. law or a random order-2 chain.

    Transition laws are drawn with a small Dirichlet concentration so that
    zero-count and near-deterministic contexts occur often.
    """
    total = n + d
    if rng.random() < 0.3:
        p = rng.dirichlet(np.full(m, 0.7))
        raw = rng.choice(m, size=total, p=p)
    else:
        order = int(rng.integers(1, 3))
        P = rng.dirichlet(np.full(m, 0.4), size=m ** order)
        raw = list(rng.integers(0, m, size=order))
        for _ in range(total - order):
            s = 0
            for a in raw[-order:]:
                s = s * m + int(a)
            raw.append(int(rng.choice(m, p=P[s])))
        raw = np.asarray(raw[:total])
    return Sample(np.asarray(raw, dtype=np.int64), d)


def fuzz_cases(count: int, seed: int, max_n: int = 200, max_d: int = 5, sizes=(2, 3, 4),
               boundary_every: int = 10):
    """Deterministic corpus of (sample, threshold <= penalty) configurations.

    Every ``boundary_every``-th case uses threshold == penalty exactly.
    """
    rng = np.random.default_rng(seed)
    for i in range(count):
        m = int(rng.choice(sizes))
        d = int(rng.integers(1, max_d + 1))
        n = int(rng.integers(1, max_n + 1))
        sample = random_sample(rng, m, n, d)
        f = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
        if i % boundary_every == 0:
            delta = f
        else:
            delta = float(f * rng.uniform(0.01, 1.0))
        yield FuzzCase(sample, m, d, delta, f)


def check_comparison(case: FuzzCase) -> bool:
    trie = build_counts(case.sample, case.d, case.alphabet_size)
    config = EstimatorConfig(case.d, case.threshold, case.penalty)
    pml = ctm_estimator(trie, config).tree
    ctx = context_estimator(trie, config).tree
    return tree_includes(pml, ctx)


def run_prop1_fuzz(cases: int = 1000, seed: int = 20240101, informational: int = 200, dump_path=None,
                   **kw) -> FuzzResult:
    """Check that the PML tree is included in the Context tree whenever threshold <= penalty.

    ``informational`` extra cases with threshold > penalty are run and counted
    but never fail the check.
    """
    violations, boundary = [], 0
    for case in fuzz_cases(cases, seed, **kw):
        boundary += case.threshold == case.penalty
        if not check_comparison(case):
            violations.append(case.dump())
    outside, outside_bad = 0, 0
    rng = np.random.default_rng(mix_seed(seed, 1))
    for case in fuzz_cases(informational, mix_seed(seed, 2), **kw):
        case.threshold = case.penalty * float(rng.uniform(1.01, 20.0))
        outside += 1
        outside_bad += not check_comparison(case)
    if violations and dump_path is not None:
        Path(dump_path).write_text(json.dumps(violations, indent=1), encoding="utf-8")
    return FuzzResult(cases, violations, boundary, outside, outside_bad)


# ---------------------------------------------------------------------------
# deviation tails

DEV_COLUMNS = ("case", "delta", "n", "replicates", "empirical", "bound_raw", "bound",
               "bound_valid", "slack", "passed")


def _kl_stat(N, S, p):
    """N * d(S/N; p) elementwise, zero where N = 0."""
    pairs, inverse = np.unique(np.stack([N, S], axis=1), axis=0, return_inverse=True)
    vals = np.array([nn * binary_kl(ss / nn, p) if nn else 0.0 for nn, ss in pairs.tolist()])
    return vals[inverse.ravel()]


def _tail_rows(case, stat, valid_mask, deltas, n):
    R = int(valid_mask.sum())
    rows = []
    for delta in deltas:
        emp = float(np.count_nonzero(stat[valid_mask] > delta)) / R if R else 0.0
        rep = dev_bound_binary(delta, n)
        b = rep.clamped
        slack = 3 * math.sqrt(b * (1 - b) / R) + 1.0 / R if R else math.inf
        ok = True if rep.value > 1 or not rep.valid else emp <= b + slack
        rows.append((case, float(delta), n, R, emp, rep.value, b, rep.valid, slack, ok))
    return rows


def iid_deviation_stats(p: float, n: int, R: int, seed: int) -> np.ndarray:
    """R draws of n * d(p_hat; p) for n i.i.d. Bernoulli(p) symbols."""
    rng = np.random.default_rng(seed)
    S = rng.binomial(n, p, size=R)
    return _kl_stat(np.full(R, n), S, p)


def markov_deviation_stats(model: VlmcModel, word, symbol: int, n: int, R: int, seed: int,
                           chunk: int = 10000):
    """(N_n(w), N_n(w) d(p_hat(b|w); p(b|w))) over R stationary paths of the model."""
    word = tuple(word)
    k = len(word)
    p = float(model.prob(word)[symbol])
    d = max(k, 1)
    Ns, stats = [], []
    for c, start in enumerate(range(0, R, chunk)):
        size = min(chunk, R - start)
        paths = sample_paths(model, n, d, size, mix_seed(seed, c))
        match = np.ones((size, n), dtype=bool)
        for j, a in enumerate(word):
            match &= paths[:, d - k + j: d - k + j + n] == a
        N = match.sum(axis=1)
        S = (match & (paths[:, d:d + n] == symbol)).sum(axis=1)
        Ns.append(N)
        stats.append(_kl_stat(N, S, p))
    return np.concatenate(Ns), np.concatenate(stats)


def run_deviation_tail(p: float, n: int, deltas, R: int, seed: int = 7, model: VlmcModel | None = None,
                       word=None, symbol: int = 1) -> Table:
    """Empirical tails of N d(p_hat; p) next to the binary deviation bound.

    Always runs the i.i.d. Bernoulli(p) case; with ``model`` and ``word`` also
    runs the Markov case, unconditional and conditional on N_n(w) > 0.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    deltas = sorted(float(x) for x in deltas)
    table = Table(DEV_COLUMNS)
    stat = iid_deviation_stats(p, n, R, mix_seed(seed, 0))
    table.rows += _tail_rows("iid", stat, np.ones(R, dtype=bool), deltas, n)
    if model is not None and word is not None:
        N, mstat = markov_deviation_stats(model, word, symbol, n, R, mix_seed(seed, 1))
        table.rows += _tail_rows("markov", mstat, np.ones(R, dtype=bool), deltas, n)
        table.rows += _tail_rows("markov_conditional", mstat, N > 0, deltas, n)
    return table


def tails_nonincreasing(table: Table) -> bool:
    recs = table.records()
    for case in {r["case"] for r in recs}:
        emp = [r["empirical"] for r in sorted((r for r in recs if r["case"] == case), key=lambda r: r["delta"])]
        if any(b > a for a, b in zip(emp, emp[1:])):
            return False
    return True
