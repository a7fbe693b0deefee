"""
Degree profiles and variable bounds
===================================

A diagonal system is summarized by how often each degree occurs.  The
bounds on the number of variables are read off level by level from that
profile, so two systems with the same degree multiset get the same bound.
"""

from diagsys import AdditiveSystem, derive_profile, kncor_bounds, quadcub_bounds, theorem1_bounds

# two cubics and a quadratic
system = AdditiveSystem.from_rows([3, 3, 2], [[1, 2, -3, 1], [2, -1, 1, 1], [1, 1, 1, -2]])
prof = derive_profile(system)
print("multiplicities", prof.mu, "level sizes", prof.nu, "exponents", prof.k_table)
print("K =", prof.K, " M =", prof.M)

rep = theorem1_bounds(prof)
for lv in rep.per_level_v0:
    print(f"level {lv.h}: plugin {lv.plugin.value}, threshold {lv.threshold}, uses {lv.s_value}")
print("variables needed (full range):", rep.tG_star_upper)

###############################################################################
# The (k,n,n) family switches formula at k = n(n-1); both sides agree there.

for k, n in [(5, 3), (6, 3), (7, 3)]:
    e = kncor_bounds(k, n).extra
    print(k, n, e["tG_star_knn"], e["knn_branch"])

###############################################################################
# Quadratic plus cubic systems.

print([quadcub_bounds(rq, 1).tG_star_upper for rq in range(1, 6)])
