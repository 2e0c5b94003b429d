"""
The CTM recursion against brute force
=====================================

On a short sample every acceptable tree can be scored.  The dynamic
program must land on the top of that list.
"""
import numpy as np

from vlmc.counts import Sample, build_counts
from vlmc.estimators import EstimatorConfig, count_acceptable_trees, ctm_estimator, ranked_scores

rng = np.random.default_rng(0)
raw = rng.integers(0, 2, size=40)
trie = build_counts(Sample(raw, 3), 3, 2)
print("acceptable trees:", count_acceptable_trees(trie))

for f in (0.3, 1.0, 2.5):
    config = EstimatorConfig(3, f, f)
    ranked = ranked_scores(trie, config)
    best = ctm_estimator(trie, config)
    print("f = %.1f  CTM score %.4f  best of %d: %.4f  runner-up %.4f" % (
        f, best.score, len(ranked), ranked[0][0], ranked[1][0]))
    print("   CTM tree", sorted(best.tree.leaves), " exhaustive", sorted(ranked[0][1].leaves))

# larger penalties prune harder; the tree shrinks toward the root
for f in (0.1, 0.5, 1, 2, 4, 8):
    print(f, len(ctm_estimator(trie, EstimatorConfig(3, f, f)).tree))
