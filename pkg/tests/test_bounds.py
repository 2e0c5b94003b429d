import itertools
import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

import reference_bounds as ref
from conftest import finite_models, make_model
from exact_chain import exact_model
from vlmc.bounds import (
    ModelCoefficients,
    alpha0,
    appB_count_lower_tail,
    appB_div_separation,
    appB_empirical_count_bound,
    beta_k,
    beta_sum,
    beta_wr,
    consistency_schedule_check,
    cond,
    dev_bound_binary,
    dev_bound_multi,
    dev_bound_multi_conditional,
    epsilon_Kd,
    model_coefficients,
    over_bound,
    over_bound_restricted,
    p_min_d,
    under_bound,
)
from vlmc.exceptions import DepthTooSmall, PreconditionViolated, ZeroProbabilityWord
from vlmc.simulate import marginal_prob

MODELS = finite_models()
F = Fraction
EXACT = {
    "fixture": {"1": (F(7, 10), F(3, 10)), "10": (F(4, 10), F(6, 10)), "00": (F(1, 10), F(9, 10))},
    "deep": {"1": (F(8, 10), F(2, 10)), "10": (F(3, 10), F(7, 10)), "100": (F(6, 10), F(4, 10)),
             "000": (F(15, 100), F(85, 100))},
    "order2": {"00": (F(8, 10), F(2, 10)), "01": (F(5, 10), F(5, 10)), "10": (F(25, 100), F(75, 100)),
               "11": (F(6, 10), F(4, 10))},
    "order1": {"0": (F(9, 10), F(1, 10)), "1": (F(4, 10), F(6, 10))},
}


def exact(name):
    model = MODELS[name]
    probs = {tuple(int(c) for c in w): p for w, p in EXACT[name].items()}
    return model, exact_model(probs, model)


def rel(a, b):
    return abs(a - float(b)) <= 1e-12 * max(abs(float(b)), 1e-300)


# --- coefficients -----------------------------------------------------------

def test_alpha0_examples(fixture_model, iid_uniform):
    assert alpha0(fixture_model) == 0.4
    assert alpha0(iid_uniform) == 1.0
    assert alpha0(make_model({"0": 0.0, "1": 1.0})) == 0.0


def test_p_min_d_fixture(fixture_model):
    assert p_min_d(fixture_model, 2) == 0.1
    assert p_min_d(fixture_model, 3) == 0.1


def test_beta_zero_beyond_height():
    for name, model in MODELS.items():
        h = model.height
        for k in range(max(h, 1), h + 3):
            assert beta_k(model, k) == 0.0, (name, k)


def _beta_k_enumerated(cond_fn, m, k, r_max):
    best = F(0)
    for w in itertools.product(range(m), repeat=k):
        pw = cond_fn(w)
        if pw is None:
            continue
        for r in range(1, r_max + 1):
            for u in itertools.product(range(m), repeat=r):
                puw = cond_fn(u + w)
                if puw is None:
                    continue
                best = max(best, max(abs(x - y) for x, y in zip(pw, puw)))
    return best


@pytest.mark.parametrize("name", sorted(EXACT))
def test_beta_k_against_exact_enumeration(name):
    model, (marg, cond_fn) = exact(name)
    h = model.height
    for k in range(1, h + 1):
        want = _beta_k_enumerated(cond_fn, 2, k, h - k + 2)
        assert beta_k(model, k) == pytest.approx(float(want), abs=1e-14)


def test_beta_k_two_routes_exact():
    # maximizing beta_wr over w and r against a flat loop over A^k x A^r grids
    for name, model in MODELS.items():
        h = model.height
        for k in range(1, h + 1):
            flat = 0.0
            for w in itertools.product((0, 1), repeat=k):
                if marginal_prob(model, w) <= 0:
                    continue
                pw = cond(model, w)
                for r in range(1, h - k + 3):
                    for u in itertools.product((0, 1), repeat=r):
                        puw = cond(model, u + w)
                        if puw is not None:
                            flat = max(flat, float(np.max(np.abs(pw - puw))))
            assert beta_k(model, k) == flat


def test_fixture_beta_regression(fixture_model):
    model, (marg, cond_fn) = exact("fixture")
    p1_given_0 = marg((0, 1)) / marg((0,))
    assert cond(fixture_model, (0,))[1] == pytest.approx(float(p1_given_0), abs=1e-15)
    # pinned: p(1|0) = 9/13, beta(0, r) = 9/10 - 9/13 = 27/130
    assert p1_given_0 == F(9, 13)
    assert beta_wr(fixture_model, (0,), 1) == pytest.approx(27 / 130, abs=1e-15)
    assert beta_k(fixture_model, 1) == pytest.approx(27 / 130, abs=1e-15)
    assert beta_sum(fixture_model) == pytest.approx(27 / 130, abs=1e-15)


def test_epsilon_examples(order1_model, iid_uniform, fixture_model):
    assert epsilon_Kd(order1_model, 1, 1) == pytest.approx(0.4, abs=1e-15)
    assert epsilon_Kd(iid_uniform, 1, 1) == math.inf
    with pytest.raises(DepthTooSmall):
        epsilon_Kd(fixture_model, 2, 1)


def test_epsilon_against_exact(fixture_model):
    model, (marg, cond_fn) = exact("fixture")
    # internal nodes of T0|_3 are EPS and "0"
    vals = []
    for w in [(), (0,)]:
        pw = cond_fn(w)
        best = F(0)
        for r in range(1, 4 - len(w) + 1):
            for u in itertools.product((0, 1), repeat=r):
                puw = cond_fn(u + w)
                if puw is not None:
                    best = max(best, max(abs(x - y) for x, y in zip(pw, puw)))
        vals.append(best)
    assert epsilon_Kd(fixture_model, 3, 4) == pytest.approx(float(min(vals)), abs=1e-15)


def test_zero_probability_word():
    m = make_model({"0": 0.0, "1": 0.5})
    with pytest.raises(ZeroProbabilityWord):
        beta_wr(m, (1,), 1)


# --- evaluators -------------------------------------------------------------

def test_over_bound_examples():
    r = over_bound(10_000, 150, 2)
    assert r.valid and r.value == pytest.approx(0.99998, abs=1e-5)
    assert rel(r.value, ref.over(10_000, 150, 2))
    tail = 1 - mp.mpf(r.value)
    assert float(tail) == pytest.approx(float(1 - ref.over(10_000, 150, 2)), rel=1e-6)
    assert 1.9e-5 < float(tail) < 2.0e-5
    r = over_bound(10_000, 20, 2)
    assert r.value < 0 and r.clamped == 0 and not r.valid and r.reason == "vacuous"


def test_over_bound_monotone_in_delta():
    vals = [over_bound(1000, d, 2).value for d in np.linspace(10, 1000, 400)]
    turn = int(np.argmin(vals))
    assert all(b >= a for a, b in zip(vals[turn:], vals[turn + 1:]))
    assert vals[-1] == pytest.approx(1.0)


def test_dev_binary_example():
    r = dev_bound_binary(10, 100)
    assert math.ceil(10 * math.log(100)) == 47
    assert r.value == pytest.approx(0.0116, abs=1e-4)
    assert rel(r.value, ref.dev_binary(10, 100))
    r = dev_bound_binary(0.5, 100)
    assert r.clamped == 1.0 and not r.valid and r.reason == "trivial regime"
    with pytest.raises(ValueError):
        dev_bound_multi(5, 100, 1)


def test_under_bound_example():
    c = ModelCoefficients(alpha0=1.0, beta_sum=0.0, p_min_d=1.0, epsilon_Kd=1.0, K=1, d=1, alphabet_size=2)
    r = under_bound(c, 1000, 0.0, 2, 1, 1)
    want = ref.under(1, 0, 1, 1, 1000, 0, 2, 1, 1)
    assert r.valid and rel(r.value, want)
    tail = 3 * 8 * mp.exp(1 / (256 * mp.e ** 2)) * mp.exp(mp.mpf(-1000) / 32)
    assert float(1 - want) == pytest.approx(float(tail), rel=1e-12)
    assert r.value == pytest.approx(1 - 6.44e-13, abs=1e-15)


def test_under_bound_validity():
    c = ModelCoefficients(alpha0=0.4, beta_sum=0.2, p_min_d=0.1, epsilon_Kd=0.2, K=3, d=4)
    r = under_bound(c, 1000, 5.0, 2, 3, 4)
    assert not r.valid and r.reason == "n below effective n0" and r.clamped == 0
    inf = ModelCoefficients(alpha0=1, beta_sum=0, p_min_d=0.5, epsilon_Kd=math.inf, K=1, d=1)
    assert under_bound(inf, 10, 1, 2, 1, 1).clamped == 1.0


def test_under_bound_monotone_in_n():
    c = ModelCoefficients(alpha0=0.5, beta_sum=0.1, p_min_d=0.5, epsilon_Kd=0.5, K=1, d=1)
    vals = [under_bound(c, n, 0.5 * math.log(n), 2, 1, 1) for n in np.unique(np.logspace(2, 6, 60).astype(int))]
    vals = [v.value for v in vals if v.valid]
    assert len(vals) > 10
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_appendix_b_examples():
    c = ModelCoefficients(alpha0=1.0, beta_sum=0.0, p_min_d=1.0, epsilon_Kd=1.0, K=1, d=1, alphabet_size=2)
    r = appB_count_lower_tail(c, 0.5, 1, 1000, 100, 2)
    assert rel(r.value, ref.count_lower_tail(1, 0, 2, 0.5, 1, 1000, 100))
    assert r.value / math.exp(-80) == pytest.approx(2.0, abs=0.01)
    with pytest.raises(PreconditionViolated):
        appB_count_lower_tail(c, 0.5, 1, 1000, 500, 2)
    with pytest.raises(PreconditionViolated):
        appB_div_separation(c, 0.3, 0.3, 1, 1, 100, 0.1, 2, gap=0.5)
    with pytest.raises(PreconditionViolated):
        appB_empirical_count_bound(c, 1, 100, 0)


def test_appendix_b_nonincreasing_in_n():
    c = ModelCoefficients(alpha0=0.4, beta_sum=0.2, p_min_d=0.1, epsilon_Kd=0.2, K=1, d=1, alphabet_size=3)
    ns = [100, 200, 500, 1000, 5000]
    # deviation of N(w, a) at a fixed fraction of n
    a = [appB_empirical_count_bound(c, 2, n, 0.05 * n).value for n in ns]
    assert all(y <= x for x, y in zip(a, a[1:]))
    b = [appB_count_lower_tail(c, 0.3, 2, n, 20, 3).value for n in ns]
    assert all(y <= x for x, y in zip(b, b[1:]))
    s = [appB_div_separation(c, 0.3, 0.2, 2, 1, n, 0.01, 3, gap=0.5).value for n in ns]
    assert all(y <= x for x, y in zip(s, s[1:]))


def test_random_inputs_match_reference():
    rng = np.random.default_rng(123)
    for _ in range(100):
        n = int(rng.integers(10, 10 ** 7))
        A = int(rng.integers(2, 6))
        delta = float(rng.uniform(1.5, 400))
        K, d = int(rng.integers(1, 4)), int(rng.integers(3, 6))
        a0 = float(rng.uniform(0.05, 1))
        beta = float(rng.uniform(0, 2))
        pmin = float(rng.uniform(0.2, 0.9))
        eps = float(rng.uniform(0.1, 1))
        f = float(rng.uniform(0, 3))
        k_n = float(rng.uniform(1, 1e4))
        c = ModelCoefficients(a0, beta, pmin, eps, K, d, alphabet_size=A)
        assert rel(over_bound(n, delta, A).value, ref.over(n, delta, A))
        assert rel(over_bound_restricted(n, delta, A, k_n).value, ref.over_restricted(n, delta, A, k_n))
        assert rel(dev_bound_binary(delta, n).value, ref.dev_binary(delta, n))
        assert rel(dev_bound_multi(delta, n, A).value, ref.dev_multi(delta, n, A))
        assert rel(dev_bound_multi_conditional(delta, n, A).value, ref.dev_multi_conditional(delta, n, A))
        u = under_bound(c, n, f, A, K, d)
        if u.reason == "":
            assert rel(u.value, ref.under(a0, beta, pmin, eps, n, f, A, K, d))
        t = float(rng.uniform(1, n))
        assert rel(appB_empirical_count_bound(c, 2, n, t).value, ref.count_deviation(a0, beta, A, 2, n, t))
        pw = float(rng.uniform(0.01, 1))
        t2 = float(rng.uniform(0.01, 0.99)) * n * pw
        assert rel(appB_count_lower_tail(c, pw, 2, n, t2, A).value, ref.count_lower_tail(a0, beta, A, pw, 2, n, t2))
        gap = float(rng.uniform(0.05, 1))
        t3 = float(rng.uniform(0.01, 0.99)) * gap * gap / 8
        pu = float(rng.uniform(0.01, 1))
        got = appB_div_separation(c, pu, pw, 3, 2, n, t3, A, gap).value
        assert rel(got, ref.div_separation(a0, beta, A, pu, pw, 3, 2, n, t3))


def test_schedule_check():
    r = consistency_schedule_check(lambda n, A: 9 * math.log(n), 2, 10 ** 6)
    assert r.verdict == "summable-looking" and r.eventually_decreasing
    # log(term) = -9/4 log n + 2 log log n + const, local slope -9/4 + 2/log n
    assert r.tail_exponent == pytest.approx(-9 / 4 + 2 / math.log(10 ** 5.5), abs=0.02)
    r = consistency_schedule_check(lambda n: 4 * math.log(math.log(n)) if n > 2 else 1.0, 2, 10 ** 5)
    assert r.verdict == "non-summable-looking"
    r = consistency_schedule_check(lambda n, A: (A - 1) / 2 * math.log(n), 2, 10 ** 5)
    assert r.tail_exponent == pytest.approx(-1 / 8 + 2 / math.log(10 ** 4.5), abs=0.02)
    assert np.all(np.diff(r.partial_sums) > 0)


def test_model_coefficients(fixture_model):
    c = model_coefficients(fixture_model, 3, 4)
    assert c.alpha0 == 0.4 and c.p_min_d == 0.1
    assert c.beta_k == pytest.approx((27 / 130,), abs=1e-15)
