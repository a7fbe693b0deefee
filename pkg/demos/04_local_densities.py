"""
Local densities
===============

chi_p is the limit of p^(-i(s-r)) M(p^i), where M counts solutions
modulo p^i.  The increments A(p^i) can also be computed from complete
exponential sums; the two agree exactly.
"""

from fractions import Fraction

from diagsys import DepthPolicy, chi_p, parse_system
from diagsys.densities import singular_series_term

system = parse_system("2: 1 1 -1 -1 1 -1")
for p in (2, 3, 5, 7):
    f = chi_p(system, p, DepthPolicy(max_depth=4))
    print(p, [str(A) for A in f.A_values], "chi ~", float(f.chi))

print("A(9) from exponential sums:", singular_series_term(system, 9))

###############################################################################
# For odd p the factor is 1 + 1/(p(p+1)).

print([str(1 + Fraction(1, p * (p + 1))) for p in (3, 5, 7)])

###############################################################################
# A 2-adic obstruction: x^2 + y^2 + z^2 = 7 w^2 has only the zero solution
# in Q_2, and the estimates halve with every extra digit.

f = chi_p(parse_system("2: 1 1 1 -7"), 2)
print([str(c) for c in f.chi_estimates], "stabilized:", f.stabilized)
