"""Counting worlds by statistic, with and without evidence.

Three people with two unary predicates give width 2: each person falls into
one of four bit patterns and a statistic counts people per pattern.
Run: python3 demos/orbit_counting.py
"""
from liftex import (enumerate_statistics, evidence_profile, ground, monadic_decomposition, orbit_size,
                    parse_model, representative, suborbit_size)
from liftex.exchange import bit_pattern
from liftex.oracle import brute_suborbit

g = ground(parse_model("constants A B C\n1.3 Smokes(x) => Cancer(x)\n1.5 Smokes(x) & Smokes(y)\n"))
d = monadic_decomposition(g.model)
names = g.atom_names()
print("blocks:", [[names[a] for a in b] for b in d.blocks])
print("patterns:", [bit_pattern(i, d.width) for i in range(1 << d.width)])

stats = list(enumerate_statistics(d.k, d.width))
print("atom order:", names)
print(f"{len(stats)} statistics, orbit sizes sum to {sum(orbit_size(t) for t in stats)} = 2**{g.n}")

evidence = {g.lookup("Smokes", ["A"]): 1, g.lookup("Cancer", ["B"]): 0}
print("evidence:", {names[a]: v for a, v in evidence.items()})
print("profile (evidence pattern -> blocks):", evidence_profile(evidence, d).by_pattern())
print("statistic        |S_t|  |S_t,e|  brute  representative (atom order)")
for t in stats:
    size = suborbit_size(t, evidence, d)
    if not size:
        continue
    rep = representative(t, evidence, d)
    world = "".join(str(rep[a]) for a in sorted(rep))
    print(f"{str(t):<16} {orbit_size(t):>5} {size:>8} {brute_suborbit(t, evidence, d):>6}  {world}")
