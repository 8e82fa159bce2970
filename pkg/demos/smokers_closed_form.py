"""Independent smokers: the lifted answer matches exp(w)/(1+exp(w)) at any domain size.

Run: python3 demos/smokers_closed_form.py
"""
import math

from liftex import ground, lifted_marginal, monadic_decomposition, parse_model

W = 1.5

print("  k  statistics  Pr(Smokes(C1))")
for k in (1, 5, 50, 500):
    g = ground(parse_model(f"domain {k}\n{W} Smokes(x)\n"))
    r = lifted_marginal(g, monadic_decomposition(g.model), {g.lookup("Smokes", ["C1"]): 1})
    print(f"{k:>4} {r.statistics_visited:>10}  {r.probability:.12f}")
print(f"closed form      {math.exp(W) / (1 + math.exp(W)):.12f}")
# With one predicate the statistic is just the number of smokers, so the
# engine visits k+1 statistics instead of 2**k worlds.
