"""Statistics visited grow polynomially in the domain size.

The smoking-pairs model has width 2, so |T| = C(k+3, 3). Ground worlds grow
as 2**(2k) and the exhaustive oracle stops at its cap long before k = 100.
Run: python3 demos/scaling.py [k ...]
"""
import math
import sys
import time

from liftex import ground, lifted_marginal, monadic_decomposition, parse_model
from liftex.oracle import DEFAULT_CAP

ks = [int(a) for a in sys.argv[1:]] or [10, 25, 50, 100]
print("    k  statistics  C(k+3,3)  ground worlds  seconds  Pr(Cancer(C1))")
for k in ks:
    g = ground(parse_model(f"domain {k}\n1.3 Smokes(x) => Cancer(x)\n1.5 Smokes(x) & Smokes(y)\n"))
    start = time.perf_counter()
    r = lifted_marginal(g, monadic_decomposition(g.model), {g.lookup("Cancer", ["C1"]): 1})
    took = time.perf_counter() - start
    oracle = "" if g.n <= DEFAULT_CAP else " (oracle infeasible)"
    print(f"{k:>5} {r.statistics_visited:>11} {math.comb(k + 3, 3):>9}  2**{g.n:<10} {took:7.2f}  "
          f"{r.probability:.6f}{oracle}")
