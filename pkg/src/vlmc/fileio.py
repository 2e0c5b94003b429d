"""Text formats for models, trees and samples.

Model / tree file::

    alphabet: 0 1
    1   : 0.7 0.3
    10  : 0.4 0.6
    00  : 0.1 0.9

Words are written oldest symbol first with single-character tokens; ``EPS``
is the empty word.  A tree file is the same without the probabilities.

Sample file: one line of symbols, either contiguous characters or
whitespace-separated tokens.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Alphabet, ContextTree, VlmcModel
from .counts import Sample
from .exceptions import FormatError, IncompleteTree, InvalidDistribution, SuffixViolation

EPS = "EPS"


def read_text(path):
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from None


def parse_alphabet_line(line: str, path=None, lineno=1) -> Alphabet:
    key, sep, rest = line.partition(":")
    if not sep or key.strip() != "alphabet":
        raise FormatError("first line must be 'alphabet: <tok> <tok> ...'", path, lineno)
    toks = rest.split()
    if any(len(t) != 1 for t in toks):
        raise FormatError("alphabet tokens must be single characters", path, lineno)
    try:
        return Alphabet(tuple(toks))
    except ValueError as exc:
        raise FormatError(str(exc), path, lineno) from None


def parse_word(text, alphabet, path, lineno):
    text = text.strip()
    if text == EPS:
        return ()
    for i, ch in enumerate(text):
        if ch not in alphabet.index:
            raise FormatError(f"symbol {ch!r} not in alphabet", path, lineno, i + 1)
    return alphabet.encode(text)


def content_lines(text):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


def load_tree(path) -> ContextTree:
    return parse_tree(read_text(path), path)


def load_model(path) -> VlmcModel:
    return parse_model(read_text(path), path)


def parse_tree(text: str, path=None) -> ContextTree:
    """Read leaves from tree or model text, ignoring any probabilities."""
    lines = list(content_lines(text))
    if not lines:
        raise FormatError("empty tree file", path)
    alphabet = parse_alphabet_line(lines[0][1], path, lines[0][0])
    leaves = [parse_word(line.partition(":")[0], alphabet, path, i) for i, line in lines[1:]]
    if len(set(leaves)) != len(leaves):
        raise FormatError("duplicate leaf", path)
    try:
        return ContextTree(frozenset(leaves), alphabet)
    except SuffixViolation as exc:
        raise FormatError(str(exc), path) from None


def parse_model(text: str, path=None) -> VlmcModel:
    """Read model text; rejects non-suffix-free, incomplete or unnormalized models."""
    lines = list(content_lines(text))
    if not lines:
        raise FormatError("empty model file", path)
    alphabet = parse_alphabet_line(lines[0][1], path, lines[0][0])
    dists = {}
    for i, line in lines[1:]:
        word_text, sep, probs = line.partition(":")
        if not sep:
            raise FormatError("expected '<word> : <probabilities>'", path, i)
        w = parse_word(word_text, alphabet, path, i)
        if w in dists:
            raise FormatError(f"duplicate leaf {word_text.strip()!r}", path, i)
        try:
            vals = [float(x) for x in probs.split()]
        except ValueError:
            raise FormatError("probabilities must be numbers", path, i) from None
        if len(vals) != len(alphabet):
            raise FormatError(f"expected {len(alphabet)} probabilities, got {len(vals)}", path, i)
        dists[w] = vals
    try:
        tree = ContextTree(frozenset(dists), alphabet)
        return VlmcModel(tree, dists, alphabet)
    except SuffixViolation as exc:
        raise FormatError(str(exc), path) from None
    except IncompleteTree as exc:
        where = alphabet.decode(exc.path) or EPS
        raise FormatError(f"tree is incomplete: no leaf is a suffix of past {where!r}", path) from None
    except InvalidDistribution as exc:
        raise FormatError(str(exc), path) from None


def format_tree(tree: ContextTree, alphabet: Alphabet | None = None) -> str:
    alphabet = alphabet or tree.alphabet
    lines = [f"alphabet: {' '.join(map(str, alphabet.symbols))}"]
    lines.extend(tree.format(alphabet))
    return "\n".join(lines) + "\n"


def format_model(model: VlmcModel) -> str:
    a = model.alphabet
    lines = [f"alphabet: {' '.join(map(str, a.symbols))}"]
    for w in model.tree.sorted_leaves():
        probs = " ".join(repr(float(p)) for p in model.prob(w))
        lines.append(f"{a.decode(w) or EPS} : {probs}")
    return "\n".join(lines) + "\n"


def tokenize(text: str, whitespace: bool = False) -> list:
    if whitespace:
        return text.split()
    return [c for c in text if not c.isspace()]


def load_sample(path, alphabet: Alphabet | None, d: int, whitespace: bool = False,
                infer_alphabet: bool = False) -> Sample:
    return parse_sample(read_text(path), alphabet, d, whitespace, infer_alphabet, path)


def parse_sample(text: str, alphabet: Alphabet | None, d: int, whitespace: bool = False,
                 infer_alphabet: bool = False, path=None) -> Sample:
    """Read a sample file into a Sample whose first ``d`` symbols are the past.

    The alphabet must be given unless ``infer_alphabet`` is set, in which case
    the sorted set of observed tokens is used.
    """
    tokens = tokenize(text, whitespace)
    if alphabet is None:
        if not infer_alphabet:
            raise FormatError("no alphabet declared (pass one or enable inference)", path)
        alphabet = Alphabet(tuple(sorted(set(tokens))))
    idx = alphabet.index
    raw = np.empty(len(tokens), dtype=np.int64)
    for i, t in enumerate(tokens):
        j = idx.get(t)
        if j is None:
            raise FormatError(f"symbol {t!r} not in alphabet", path, position=i + 1)
        raw[i] = j
    if raw.size < d + 1:
        raise FormatError(f"sample of length {raw.size} is too short for past length {d}", path)
    return Sample(raw, d, alphabet)


def format_sample(sample: Sample, alphabet: Alphabet | None = None, include_past: bool = True,
                  whitespace: bool = False) -> str:
    alphabet = alphabet or sample.alphabet
    raw = sample.raw if include_past else sample.raw[sample.d:]
    sep = " " if whitespace else ""
    return alphabet.decode(raw.tolist(), sep) + "\n"
