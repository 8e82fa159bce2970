"""Friends and smokers: a two-variable model checked against full enumeration.

Unary atoms and the reflexive Friends(x, x) form the exchangeable part; each
pair of people contributes Friends(x, y) and Friends(y, x), summed out pair by
pair. A query on one binary atom enumerates the atoms over its constants.
Run: python3 demos/friends_smokers.py
"""
from pathlib import Path

from liftex import bounded_binary_query, conditional_marginal, conditional_mpe, ground, parse_model, \
    two_var_structure
from liftex.oracle import oracle_for

text = (Path(__file__).parent / "models" / "friends_smokers.mln").read_text()
g = ground(parse_model(text))
s = two_var_structure(g.model, g)
oracle = oracle_for(g)
print(f"{g.n} ground atoms, Y width {s.y_decomp.width}, {len(s.pairs)} pairs")

evidence = {g.lookup("Smokes", ["A"]): 1}
for name, args in (("Smokes", ["B"]), ("Cancer", ["A"]), ("Friends", ["B", "B"])):
    q = {**evidence, g.lookup(name, args): 1}
    lifted = conditional_marginal(g, s, q).probability / conditional_marginal(g, s, evidence).probability
    exact = oracle.marginal(q) / oracle.marginal(evidence)
    print(f"Pr({name}({', '.join(args)}) | Smokes(A)) lifted {lifted:.12f} oracle {exact:.12f}")

q = {**evidence, g.lookup("Friends", ["A", "B"]): 1}
lifted = bounded_binary_query(g, s, q).probability / conditional_marginal(g, s, evidence).probability
print(f"Pr(Friends(A, B) | Smokes(A))  lifted {lifted:.12f} oracle "
      f"{oracle.marginal(q) / oracle.marginal(evidence):.12f}")

best = conditional_mpe(g, s, {})
print("most probable unary/reflexive assignment:",
      {g.atom_name(a): v for a, v in best.assignment.items()})
