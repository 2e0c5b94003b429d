"""
Model coefficients and the closed-form bounds
=============================================

The coefficients come from the exact stationary law of the source.  The
bounds are mostly vacuous at desk-scale n; the raw values show how far.
"""
from pathlib import Path

import numpy as np

from vlmc import fileio
from vlmc.bounds import (
    consistency_schedule_check,
    dev_bound_binary,
    model_coefficients,
    over_bound,
    under_bound,
)
from vlmc.simulate import marginal_prob, stationary_distribution

model = fileio.load_model(Path(__file__).with_name("fixture.model"))
table = stationary_distribution(model)
print("pi on A^2:", np.round(table.pi, 5), " residual", table.residual)
print("p(0) = %.5f, p(01) = %.5f" % (marginal_prob(model, (0,)), marginal_prob(model, (0, 1))))

coeffs = model_coefficients(model, K=3, d=4)
print(coeffs)

for n in (10 ** 3, 10 ** 5, 10 ** 7, 10 ** 9):
    f = 0.5 * np.log(n)
    ob = over_bound(n, f, 2)
    ub = under_bound(coeffs, n, f, 2, 3, 4)
    print("n=%-10d over raw=%-12.4g under raw=%-8.4g %s" % (n, ob.value, ub.value, ub.reason))

# the deviation bound becomes informative once delta is a few times log log n
for delta in (2, 5, 10, 20):
    r = dev_bound_binary(delta, 1000)
    print("delta=%-3d bound=%.4g valid=%s" % (delta, r.value, r.valid))

# which threshold schedules make the over-estimation terms summable
for name, sched in [("9 log n", lambda n: 9 * np.log(n)), ("BIC", lambda n: 0.5 * np.log(n))]:
    rep = consistency_schedule_check(sched, 2, 10 ** 5)
    print("%-8s tail exponent %.3f -> %s" % (name, rep.tail_exponent, rep.verdict))
