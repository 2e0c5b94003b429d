"""Command line entry point: ``vlmc {estimate,simulate,bounds,experiment,check}``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import fileio
from .bounds import (
    dev_bound_binary,
    dev_bound_multi,
    dev_bound_multi_conditional,
    model_coefficients,
    over_bound,
    over_bound_restricted,
    under_bound,
)
from .core import Alphabet, ContextTree, check_complete, proper_suffixes
from .counts import build_counts, default_depth
from .estimators import EstimatorConfig, Schedule, context_estimator, ctm_estimator, diagnostics_rows
from .exceptions import FormatError, IncompleteTree, VlmcError
from .experiments import (
    ExperimentSpec,
    Table,
    emit_csv,
    format_csv,
    run_deviation_tail,
    run_prop1_fuzz,
    run_recovery,
    write_manifest,
)
from .simulate import SimConfig, sample_path


class UsageError(Exception):
    pass


def _schedule(text):
    try:
        return Schedule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _alphabet(args):
    if args.alphabet:
        toks = args.alphabet.split()
        if len(toks) == 1 and len(toks[0]) > 1:
            toks = list(toks[0])
        return Alphabet(tuple(toks))
    if not args.infer_alphabet:
        raise UsageError("declare the alphabet with --alphabet or pass --infer-alphabet")
    return None


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------

def cmd_estimate(args):
    alphabet = _alphabet(args)
    text = fileio.read_text(args.sample)
    tokens = fileio.tokenize(text, args.whitespace)
    size = len(alphabet) if alphabet else max(2, len(set(tokens)))
    depth = args.depth or default_depth(max(len(tokens) - 1, 2), size)
    past = args.past if args.past is not None else depth
    if past < depth:
        raise UsageError(f"--past {past} is shorter than --depth {depth}")
    sample = fileio.parse_sample(text, alphabet, past, args.whitespace, args.infer_alphabet, args.sample)
    alphabet = sample.alphabet
    trie = build_counts(sample, depth, len(alphabet))
    config = EstimatorConfig.from_schedule(depth, sample.n, len(alphabet), args.penalty, args.threshold)
    algos = ("context", "pml") if args.algo == "both" else (args.algo,)
    for algo in algos:
        est = context_estimator if algo == "context" else ctm_estimator
        result = est(trie, config)
        out = args.out
        if out and len(algos) > 1:
            out = f"{out}.{algo}"
        tree_text = fileio.format_tree(result.tree, alphabet)
        if out is None and len(algos) > 1:
            sys.stdout.write(f"# {algo}\n")
        _write(tree_text, out)
        if args.diagnostics:
            stat, ind = ("delta", "C") if algo == "context" else ("log_V", "chi")
            table = Table(("word", "N", stat, ind))
            for w, N, s, i in diagnostics_rows(trie, result):
                table.rows.append((alphabet.decode(w) or fileio.EPS, N, s, i))
            path = args.diagnostics if len(algos) == 1 else f"{args.diagnostics}.{algo}"
            emit_csv(table, path)
    return 0


def cmd_simulate(args):
    model = fileio.load_model(args.model)
    config = SimConfig(n=args.n, d=args.past, seed=args.seed, init=args.init, burn_in=args.burn_in)
    sample = sample_path(model, config)
    _write(fileio.format_sample(sample, model.alphabet, args.emit_past, args.whitespace), args.out)
    return 0


def bound_reports(model, n_values, penalty, threshold, K, d):
    m = len(model.alphabet)
    coeffs = model_coefficients(model, K, d)
    reports = []
    for n in n_values:
        f = penalty(n, m)
        delta = threshold(n, m) if threshold else f
        reports += [
            over_bound(n, delta, m),
            over_bound_restricted(n, delta, m, float(m) ** d),
            under_bound(coeffs, n, f, m, K, d),
            dev_bound_binary(delta, n),
            dev_bound_multi(delta, n, m),
            dev_bound_multi_conditional(delta, n, m),
        ]
    return coeffs, reports


BOUND_COLUMNS = ("name", "n", "delta", "f", "A", "K", "d", "k_n", "alpha0", "beta", "p_min",
                 "epsilon", "raw", "clamped", "valid", "reason")


def cmd_bounds(args):
    model = fileio.load_model(args.model)
    _, reports = bound_reports(model, args.n, args.penalty, args.threshold, args.K, args.d)
    table = Table(BOUND_COLUMNS)
    for rep in reports:
        row = rep.row()
        row.setdefault("K", args.K if rep.name == "under" else None)
        table.rows.append(tuple(row.get(c) for c in BOUND_COLUMNS))
    if args.out:
        emit_csv(table, args.out)
    else:
        sys.stdout.write(format_csv(table))
    return 0


def cmd_experiment(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "prop1":
        res = run_prop1_fuzz(cases=args.replicates or 1000, seed=args.seed,
                             dump_path=out / "prop1_violations.json")
        table = Table(("checked", "violations", "boundary_cases", "outside_hypothesis", "outside_violations"),
                      [(res.checked, len(res.violations), res.boundary_cases, res.outside_hypothesis,
                        res.outside_violations)])
        emit_csv(table, out / "prop1.csv")
        write_manifest(out / "manifest.json", {"kind": "prop1", "cases": res.checked, "seed": args.seed})
        print(f"prop1: {res.checked} cases, {len(res.violations)} violations")
        return 0 if res.passed else 1
    if args.kind == "deviation":
        model = fileio.load_model(args.model) if args.model else None
        word = model.alphabet.encode(args.word) if model and args.word else None
        deltas = [float(x) for x in args.deltas.split(",")]
        table = run_deviation_tail(args.p, args.n[0], deltas, args.replicates or 10000, args.seed,
                                   model=model, word=word, symbol=args.symbol)
        emit_csv(table, out / "deviation.csv")
        write_manifest(out / "manifest.json", {"kind": "deviation", "p": args.p, "n": args.n[0],
                                               "deltas": deltas, "replicates": args.replicates,
                                               "seed": args.seed, "model": args.model, "word": args.word})
        return 0 if all(table.column("passed")) else 1
    if args.spec:
        spec = ExperimentSpec.from_text(Path(args.spec).read_text(encoding="utf-8"), Path(args.spec).parent)
    else:
        if not args.model or not args.n:
            raise UsageError("recovery needs --spec or both --model and --n")
        spec = ExperimentSpec(model_path=args.model, n_grid=tuple(args.n), replicates=args.replicates or 100,
                              estimator=args.estimator, schedule=args.penalty, threshold=args.threshold,
                              K=args.K, d=args.d, base_seed=args.seed, workers=args.workers)
    table = run_recovery(spec)
    emit_csv(table, out / "recovery.csv")
    write_manifest(out / "manifest.json", {"kind": "recovery", **spec.describe()})
    return 0


# ---------------------------------------------------------------------------

def _check_model_text(text, path):
    """Run format and invariant checks; returns [(check, passed, detail)]."""
    results = []
    lines = list(fileio.content_lines(text))
    try:
        alphabet = fileio.parse_alphabet_line(lines[0][1] if lines else "", path)
        results.append(("alphabet line", True, " ".join(alphabet.symbols)))
    except FormatError as exc:
        return [("alphabet line", False, str(exc))]
    leaves, dists, ok = [], {}, True
    for i, line in lines[1:]:
        word_text, sep, probs = line.partition(":")
        try:
            w = fileio.parse_word(word_text, alphabet, path, i)
            vals = [float(x) for x in probs.split()] if sep else None
        except (FormatError, ValueError) as exc:
            results.append(("leaf syntax", False, str(exc)))
            ok = False
            continue
        leaves.append(w)
        if vals is not None:
            dists[w] = vals
    if ok:
        results.append(("leaf syntax", True, f"{len(leaves)} leaves"))
    leafset = set(leaves)
    bad = None
    for w in sorted(leafset, key=lambda x: (len(x), x)):
        for s in proper_suffixes(w):
            if s in leafset:
                bad = (s, w)
                break
        if bad:
            break
    if bad:
        fs, fw = (alphabet.decode(x) or fileio.EPS for x in bad)
        results.append(("suffix-free", False, f"{fs!r} is a proper suffix of {fw!r}"))
    else:
        results.append(("suffix-free", True, ""))
        try:
            check_complete(ContextTree(frozenset(leafset)), len(alphabet))
            results.append(("complete", True, ""))
        except IncompleteTree as exc:
            results.append(("complete", False, f"no leaf for past {alphabet.decode(exc.path) or fileio.EPS!r}"))
    if dists:
        for w in sorted(dists):
            vals = dists[w]
            name = alphabet.decode(w) or fileio.EPS
            if len(vals) != len(alphabet):
                results.append((f"distribution {name}", False, f"{len(vals)} values for {len(alphabet)} symbols"))
                continue
            s = sum(vals)
            good = all(0 <= v <= 1 for v in vals) and abs(s - 1) <= 1e-12
            results.append((f"distribution {name}", good, f"sum {s:.12g}"))
    return results


def _check_sample_text(text, path, args):
    alphabet = _alphabet(args)
    results = []
    try:
        tokens = fileio.tokenize(text, args.whitespace)
        size = len(alphabet) if alphabet else max(2, len(set(tokens)))
        depth = args.depth or default_depth(max(len(tokens) - 1, 2), size)
        sample = fileio.parse_sample(text, alphabet, depth, args.whitespace, args.infer_alphabet, path)
        results.append(("symbols in alphabet", True, f"{sample.m} symbols"))
    except FormatError as exc:
        return [("symbols in alphabet", False, str(exc))]
    trie = build_counts(sample, depth, len(sample.alphabet))
    sums = all(int(v.sum()) == trie.total(w) for w, v in trie.nodes.items())
    child = all(
        (sum(trie.nodes[c] for c in trie.children(w)) == v).all()
        for w, v in trie.nodes.items() if len(w) < trie.d
    )
    results.append(("count sums", sums, ""))
    results.append(("child-sum identity", child, f"depth {trie.d}"))
    return results


def cmd_check(args):
    text = fileio.read_text(args.path)
    first = next((line for _, line in fileio.content_lines(text)), "")
    if first.startswith("alphabet"):
        results = _check_model_text(text, args.path)
    else:
        results = _check_sample_text(text, args.path, args)
    width = max(len(r[0]) for r in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}".rstrip())
    return 0 if all(ok for _, ok, _ in results) else 1


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="vlmc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def sample_flags(sp):
        sp.add_argument("--alphabet", help="declared alphabet, e.g. 'a b' or 'ab'")
        sp.add_argument("--infer-alphabet", action="store_true",
                        help="use the sorted set of observed tokens as the alphabet")
        sp.add_argument("--whitespace", action="store_true",
                        help="tokens are whitespace separated (default: one character per token)")
        sp.add_argument("--depth", type=int, help="maximal context length d (default floor(log n / log |A|))")

    def schedule_flags(sp):
        sp.add_argument("--penalty", type=_schedule, default=Schedule("bic"),
                        help="penalty f(n): bic, const:<v> or clogn:<c> (default bic)")
        sp.add_argument("--threshold", type=_schedule, default=None,
                        help="Context threshold, same syntax (default: the penalty value)")

    e = sub.add_parser("estimate", help="estimate a context tree from a sample file")
    e.add_argument("sample")
    sample_flags(e)
    schedule_flags(e)
    e.add_argument("--past", type=int, help="number of leading past symbols (default: depth)")
    e.add_argument("--algo", choices=("context", "pml", "both"), default="pml")
    e.add_argument("--out", help="tree file (suffixed .context/.pml with --algo both); default stdout")
    e.add_argument("--diagnostics", help="per-node diagnostics CSV")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="draw a sample from a model file")
    s.add_argument("model")
    s.add_argument("--n", type=int, required=True, help="effective sample length")
    s.add_argument("--past", type=int, default=1, help="past symbols emitted before the sample")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init", choices=("stationary", "burn_in"), default="stationary")
    s.add_argument("--burn-in", type=int, default=0)
    s.add_argument("--emit-past", dest="emit_past", action="store_true", default=True,
                   help="include the past symbols (default)")
    s.add_argument("--no-emit-past", dest="emit_past", action="store_false")
    s.add_argument("--whitespace", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="evaluate the bounds for a model as CSV")
    b.add_argument("model")
    b.add_argument("--n", type=int, nargs="+", required=True)
    schedule_flags(b)
    b.add_argument("--K", type=int, default=1)
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    x = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    x.add_argument("--kind", choices=("recovery", "prop1", "deviation"), default="recovery")
    x.add_argument("--spec", help="key=value experiment file (recovery)")
    x.add_argument("--model")
    x.add_argument("--n", type=int, nargs="+")
    x.add_argument("--replicates", type=int)
    x.add_argument("--estimator", choices=("context", "pml", "both"), default="both")
    schedule_flags(x)
    x.add_argument("--K", type=int, default=1)
    x.add_argument("--d", type=int, default=1)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--workers", type=int, default=1)
    x.add_argument("--p", type=float, default=0.3, help="Bernoulli parameter (deviation)")
    x.add_argument("--deltas", default="2,3,4,5,6,7,8,9,10", help="comma-separated thresholds (deviation)")
    x.add_argument("--word", help="context word for the Markov deviation case")
    x.add_argument("--symbol", type=int, default=1, help="symbol index for the Markov deviation case")
    x.add_argument("--out-dir", default=".")
    x.set_defaults(func=cmd_experiment)

    c = sub.add_parser("check", help="validate a model, tree or sample file")
    c.add_argument("path")
    sample_flags(c)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, VlmcError, ValueError, OSError) as exc:
        print(f"vlmc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
