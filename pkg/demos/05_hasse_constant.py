"""
The leading constant at desk scale
==================================

The number of solutions of x1^2+x2^2-x3^2-x4^2+x5^2-x6^2 = 0 in 1..P
grows like C P^4 with C the product of the real density and the local
factors.  The full pipeline computes both sides and compares them.
"""

import tempfile
from pathlib import Path

from diagsys import VerifyPlan, emit_report, run_verify

path = Path(tempfile.mkdtemp()) / "senary.txt"
path.write_text("2: 1 1 -1 -1 1 -1\n")

# a prime bound of 31 keeps this under half a minute; 97 is the default
rep = run_verify(VerifyPlan(str(path), (50, 100, 200, 400), prime_bound=31))
print(emit_report(rep, "text"))

###############################################################################
# The real density has a closed form for the quaternary form x1^2+x2^2-x3^2-x4^2
# (it equals log 2); both numerical methods recover it.

from diagsys import chi_inf, parse_system  # noqa: E402

quaternary = parse_system("2: 1 1 -1 -1")
for method in ("volume", "fourier"):
    r = chi_inf(quaternary, method)
    print(method, round(r.value, 5), "+-", round(r.error, 5))
