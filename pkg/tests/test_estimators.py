import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlmc.core import Alphabet, ContextTree, is_suffix, tree_includes
from vlmc.counts import Sample, build_counts
from vlmc.estimators import (
    EstimatorConfig,
    Schedule,
    context_estimator,
    count_acceptable_trees,
    ctm_estimator,
    delta,
    enumerate_acceptable_trees,
    exhaustive_pml,
    is_acceptable,
)
from vlmc.exceptions import TooManyTrees
from vlmc.infodiv import penalized_score

AB = Alphabet(("a", "b"))


def trie_of(text, past=2, d=None, alphabet=AB):
    return build_counts(Sample(np.array(alphabet.encode(text)), past, alphabet), d)


def tree(*words):
    return ContextTree(frozenset(AB.encode(w) for w in words))


def test_schedule():
    assert Schedule.parse("bic")(1000, 2) == pytest.approx(0.5 * math.log(1000))
    assert Schedule.parse("bic")(1000, 4) == pytest.approx(1.5 * math.log(1000))
    assert Schedule.parse("const:0.6931")(10, 2) == 0.6931
    assert Schedule.parse("clogn:3")(100, 2) == pytest.approx(3 * math.log(100))
    with pytest.raises(ValueError):
        Schedule.parse("bogus")
    with pytest.raises(ValueError):
        EstimatorConfig(2, 0.0, 1.0)
    cfg = EstimatorConfig.from_schedule(3, 100, 2, Schedule.parse("const:2"))
    assert cfg.threshold == cfg.penalty == 2


def test_is_acceptable_examples():
    t = trie_of("ababab")
    assert is_acceptable(tree(""), t)
    assert is_acceptable(tree("a", "b"), t)
    assert not is_acceptable(tree("a"), t)
    assert not is_acceptable(tree("aa", "b"), t)  # "aa" unobserved


def test_delta_examples():
    t = trie_of("ababab")
    assert delta(t, ()) == pytest.approx(4 * math.log(2), abs=1e-12)
    assert delta(t, AB.encode("a")) == 0.0
    # one child with all of the parent's counts
    t2 = trie_of("aaaaab")
    assert delta(t2, AB.encode("a")) == 0.0


def test_context_examples():
    t = trie_of("ababab", d=1)
    assert context_estimator(t, EstimatorConfig(1, math.log(2), math.log(2))).tree == tree("a", "b")
    assert context_estimator(t, EstimatorConfig(1, 5, 5)).tree == tree("")
    # every depth-1 node seen at most once
    t3 = build_counts(Sample(np.array(AB.encode("aab")), 2, AB), 2)
    assert context_estimator(t3, EstimatorConfig(2, 1e-9, 1e-9)).tree == tree("")


def test_ctm_examples():
    t = trie_of("ababab", d=1)
    r = ctm_estimator(t, EstimatorConfig(1, math.log(2), math.log(2)))
    assert r.tree == tree("a", "b")
    assert r.score == pytest.approx(-2 * math.log(2), abs=1e-12)
    assert r.diagnostics[()][1] == 1
    r = ctm_estimator(t, EstimatorConfig(1, 5, 5))
    assert r.tree == tree("")
    assert r.score == pytest.approx(-5 - 4 * math.log(2), abs=1e-12)
    # identical counts down a single chain of children: a tie, so the root stays a leaf
    t2 = build_counts(Sample(np.array([0] * 10), 3, AB), 3)
    assert ctm_estimator(t2, EstimatorConfig(3, 0.01, 0.01)).tree == tree("")


def test_exhaustive_examples():
    t = trie_of("ababab", d=1)
    best, score = exhaustive_pml(t, EstimatorConfig(1, math.log(2), math.log(2)))
    assert best == tree("a", "b") and score == pytest.approx(-1.386294, abs=1e-6)
    best, score = exhaustive_pml(t, EstimatorConfig(1, 5, 5))
    assert best == tree("") and score == pytest.approx(-7.7726, abs=1e-4)
    t1 = build_counts(Sample(np.array([0, 1]), 1, AB), 1)
    assert [set(x) for x in enumerate_acceptable_trees(t1)] == [{()}, {(0,)}]
    assert exhaustive_pml(t1, EstimatorConfig(1, 1, 1))[0] == tree("")


def test_too_many_trees():
    rng = np.random.default_rng(0)
    t = build_counts(Sample(rng.integers(0, 4, 400), 4), 4, 4)
    assert count_acceptable_trees(t) > 10
    with pytest.raises(TooManyTrees):
        exhaustive_pml(t, EstimatorConfig(4, 1, 1), limit=10)


def _random_trie(rng, m=2, max_n=12, max_d=3):
    d = int(rng.integers(1, max_d + 1))
    n = int(rng.integers(1, max_n + 1))
    raw = rng.integers(0, m, size=n + d)
    return build_counts(Sample(raw, d), d, m)


def test_enumeration_matches_acceptability_predicate():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(200):
        t = _random_trie(rng)
        words = [w for w in t.words()]
        if len(words) > 14:
            continue
        brute = set()
        for r in range(1, len(words) + 1):
            for subset in itertools.combinations(words, r):
                s = set(subset)
                if any(is_suffix(u, w, proper=True) for u in s for w in s):
                    continue
                if is_acceptable(ContextTree(frozenset(s)), t):
                    brute.add(frozenset(s))
        listed = list(enumerate_acceptable_trees(t))
        assert len(listed) == len(set(listed)) == count_acceptable_trees(t)
        assert set(listed) == brute
        checked += 1
    assert checked > 50


def test_outputs_cover_observed_words():
    rng = np.random.default_rng(2)
    for _ in range(300):
        t = _random_trie(rng, m=int(rng.integers(2, 4)), max_n=40, max_d=4)
        f = float(rng.uniform(0.1, 5))
        cfg = EstimatorConfig(t.d, f, f)
        for est in (context_estimator, ctm_estimator):
            out = est(t, cfg).tree
            assert out.height <= t.d
            assert all(w in t for w in out.leaves)
            nodes = out.nodes()
            for w in t.words():
                assert any(w[k:] in nodes for k in range(len(w) + 1))
        assert is_acceptable(ctm_estimator(t, cfg).tree, t)


def test_ctm_matches_exhaustive():
    rng = np.random.default_rng(7)
    for _ in range(150):
        t = _random_trie(rng, max_n=30)
        f = float(rng.uniform(0.1, 5))
        cfg = EstimatorConfig(t.d, f, f)
        r = ctm_estimator(t, cfg)
        best, score = exhaustive_pml(t, cfg)
        assert penalized_score(t, r.tree, f) == pytest.approx(score, abs=1e-9)
        assert r.diagnostics[()][0] == pytest.approx(score, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_pml_included_in_context(data):
    m = data.draw(st.integers(2, 3))
    d = data.draw(st.integers(1, 4))
    raw = data.draw(st.lists(st.integers(0, m - 1), min_size=d + 1, max_size=d + 80))
    f = data.draw(st.floats(0.05, 10))
    frac = data.draw(st.sampled_from([1.0, 0.5, 0.1]) | st.floats(0.01, 1.0))
    t = build_counts(Sample(np.array(raw), d), d, m)
    cfg = EstimatorConfig(d, f * frac, f)
    assert tree_includes(ctm_estimator(t, cfg).tree, context_estimator(t, cfg).tree)


def test_deterministic():
    rng = np.random.default_rng(4)
    t = _random_trie(rng, max_n=100, max_d=4)
    cfg = EstimatorConfig(t.d, 1.0, 1.0)
    a, b = ctm_estimator(t, cfg), ctm_estimator(t, cfg)
    assert a.tree == b.tree and a.diagnostics == b.diagnostics
    a, b = context_estimator(t, cfg), context_estimator(t, cfg)
    assert a.tree == b.tree and a.diagnostics == b.diagnostics
