import sys

import numpy as np
import pytest

from vlmc.core import Alphabet, ContextTree, VlmcModel

BIN = Alphabet(("0", "1"))


def make_model(spec, alphabet=BIN):
    """Model from {'word': p(1|word)} over a binary alphabet."""
    dists = {alphabet.encode(w) if w != "EPS" else (): [round(1 - p, 12), p] for w, p in spec.items()}
    return VlmcModel(ContextTree(frozenset(dists), alphabet), dists, alphabet)


@pytest.fixture
def fixture_model():
    return make_model({"1": 0.3, "10": 0.6, "00": 0.9})


@pytest.fixture
def order1_model():
    return make_model({"0": 0.1, "1": 0.6})


@pytest.fixture
def iid_uniform():
    return make_model({"EPS": 0.5})


def finite_models():
    return {
        "fixture": make_model({"1": 0.3, "10": 0.6, "00": 0.9}),
        "order1": make_model({"0": 0.1, "1": 0.6}),
        "iid": make_model({"EPS": 0.5}),
        "deep": make_model({"1": 0.2, "10": 0.7, "100": 0.4, "000": 0.85}),
        "order2": make_model({"00": 0.2, "01": 0.5, "10": 0.75, "11": 0.4}),
    }


def naive_counts(raw, past, d, m):
    """N(w, a) for |w| <= d by slicing the window before every position."""
    raw = [int(x) for x in raw]
    out = {}
    for t in range(past, len(raw)):
        for k in range(d + 1):
            w = tuple(raw[t - k:t])
            out.setdefault(w, np.zeros(m, dtype=np.int64))[raw[t]] += 1
    return out


def all_binary_trees(max_height):
    """Every suffix-free set of binary words of length <= max_height (the empty set included)."""

    def antichains(w):
        # below w: either w alone, or any combination of antichains under its two children
        if len(w) == max_height:
            return [[], [w]]
        out = [[w]]
        for left in antichains((0,) + w):
            for right in antichains((1,) + w):
                out.append(left + right)
        return out

    return [ContextTree(frozenset(leaves)) for leaves in antichains(())]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
