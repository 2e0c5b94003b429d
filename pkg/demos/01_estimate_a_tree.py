"""
Estimating a context tree from one simulated path
=================================================

Simulate the three-context fixture source, count every word up to depth 4
and run both estimators with the BIC penalty.
"""
from pathlib import Path

import numpy as np

from vlmc import fileio
from vlmc.counts import build_counts, query
from vlmc.estimators import EstimatorConfig, Schedule, context_estimator, ctm_estimator, diagnostics_rows
from vlmc.simulate import SimConfig, sample_path

model = fileio.load_model(Path(__file__).with_name("fixture.model"))
print(fileio.format_model(model))

# 20000 symbols after a past of 4 symbols
sample = sample_path(model, SimConfig(n=20_000, d=4, seed=1))
print("first symbols:", fileio.format_sample(sample)[:60])

trie = build_counts(sample, 4)
print("stored words:", len(trie), " N(eps) =", trie.total(()))

# counts after "10": the true law puts 0.6 on symbol 1
N, vec = query(trie, (1, 0))
print("N(10) =", N, " p_hat(.|10) =", np.round(vec / N, 3))

config = EstimatorConfig.from_schedule(4, sample.n, 2, Schedule("bic"))
print("penalty f(n) = %.3f" % config.penalty)

for est in (context_estimator, ctm_estimator):
    result = est(trie, config)
    print(result.method, "->", result.tree.format(model.alphabet), " score %.2f" % result.score)

# per-node statistics of algorithm Context, shallowest first
for w, N, stat, ind in diagnostics_rows(trie, context_estimator(trie, config))[:7]:
    print("%-5s N=%-6d delta=%9.3f keep=%d" % (model.alphabet.decode(w) or "EPS", N, stat, ind))
