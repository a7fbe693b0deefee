"""
Counting solutions in a box
===========================

Solutions of an additive system with every variable in 1..P are counted
exactly by splitting the variables in two halves and joining the value
tables.  Mean values of Weyl sums are counts of this kind too.
"""

import numpy as np

from diagsys import RangeSpec, count_solutions, mean_value_J, parse_system, slope_estimate

system = parse_system("2: 1 1 -1 -1 1 -1")
for P in (25, 50, 100, 200):
    res = count_solutions(system, RangeSpec("full", P))
    print(f"P={P:4d}  N={res.count:14d}  N/P^4={res.count / P ** 4:.4f}  ({res.wall_time:.2f}s)")

###############################################################################
# Brute force agrees with the split count.

small = parse_system("3: 1 2 -1 -2\n2: 1 -1 1 -1")
rng = RangeSpec("full", 12)
print(count_solutions(small, rng, "brute").count, count_solutions(small, rng, "mitm").count)

###############################################################################
# The fourth moment of the quadratic Weyl sum grows like P^2 log P.

pts = [(P, mean_value_J(2, (2,), RangeSpec("full", P)).count) for P in 2 ** np.arange(5, 11)]
fit = slope_estimate(pts)
print("log-log slope", round(fit.slope, 3))
print("J / (P^2 log P):", [round(float(J / (P * P * np.log(P))), 3) for P, J in pts])

###############################################################################
# Smooth numbers are a thinner range; here only primes up to P^(1/2).

smooth = RangeSpec("smooth", 10 ** 4, 0.5)
print("smooth J_2:", mean_value_J(2, (2,), smooth).count)
