"""
Exponential sums, arcs and Dickman's function
=============================================

Near a rational a/q the Weyl sum factors into a complete sum S(q, a)
times an oscillatory integral.  The example compares the two sides
and then samples minor-arc points.
"""

import numpy as np

from diagsys import ArcParams, RangeSpec, classify_arc, complete_sum_S, dickman_rho, f_eval
from diagsys import parse_system, sqa_bound_scan, v_integral, weyl_diagnostic

P, q, a = 400, 7, 3
beta = 2e-6
alpha = a / q + beta
exact = f_eval([alpha], (2,), RangeSpec("full", P))
approx = complete_sum_S(q, [a], (2,)) / q * v_integral([beta], (2,), P)
print(f"f(alpha) = {exact:.3f}   S(q,a)/q * v(beta) = {approx:.3f}")

###############################################################################
# |S(q,a)| against the (q,a)^(1/k) q^(1-1/k) envelope.

for k in (2, 3):
    scan = sqa_bound_scan(100, (k,))
    print(f"k={k}: max ratio {scan.max_ratio:.4f} at q, a = {scan.argmax}")

###############################################################################
# Major or minor?

for x in (0.0, 0.5 + 1e-5, 0.5 + 1e-3, np.sqrt(2) % 1):
    print(x, classify_arc([x], 4, P, (2,)))

rep = weyl_diagnostic(parse_system("2: 1 1 -1 -1 1"), ArcParams(X=4, P=50), 200, seed=1)
print("minor-arc statistic: max", round(rep.max_stat, 3), "mean", round(rep.mean_stat, 3))

###############################################################################
# Dickman's function on a few points.

u = np.array([1.0, 1.5, 2.0, 3.0, 4.0, 5.0])
print(dict(zip(u.tolist(), np.round(dickman_rho(u), 8).tolist())))
