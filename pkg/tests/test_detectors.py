from fractions import Fraction

import numpy as np
import pytest

from liftex.detectors import (Fragment, WrongFragmentError, classify, monadic_decomposition,
                              two_var_structure)
from liftex.logic import GroundAtom, eval_formula, ground, parse_model
from liftex.world import log_weight

from _support import FRIENDS, SMOKE_CANCER, random_monadic_text


def test_classify_examples():
    assert classify(parse_model(SMOKE_CANCER.format(k=3))).kind is Fragment.MONADIC
    fc = classify(parse_model(FRIENDS.format(k=3)))
    assert fc.kind is Fragment.TWO_VARIABLE and fc.decomposition.width == 3
    bad = classify(parse_model("domain 2\n1 R(x, y, z)\n"))
    assert bad.kind is Fragment.UNSUPPORTED and "arity" in bad.reason
    three = classify(parse_model("domain 2\n1 F(x, y) & F(y, z)\n"))
    assert three.kind is Fragment.UNSUPPORTED and "3 logical variables" in three.reason


def test_monadic_prefers_monadic_even_with_three_variables():
    assert classify(parse_model("domain 2\n1 S(x) & S(y) & S(z)\n")).kind is Fragment.MONADIC


def test_monadic_decomposition_example():
    m = parse_model(SMOKE_CANCER.replace("domain {k}", "constants A B Ch"))
    g = ground(m)
    d = monadic_decomposition(m)
    assert d.width == 2
    assert [[g.atom_name(a) for a in b] for b in d.blocks] == \
        [["Smokes(A)", "Cancer(A)"], ["Smokes(B)", "Cancer(B)"], ["Smokes(Ch)", "Cancer(Ch)"]]


def test_single_predicate_blocks():
    d = monadic_decomposition(parse_model("domain 5\n1 S(x)\n"))
    assert d.blocks == tuple((i,) for i in range(5)) and d.width == 1


def test_wrong_fragment():
    with pytest.raises(WrongFragmentError):
        monadic_decomposition(parse_model(FRIENDS.format(k=2)))
    with pytest.raises(WrongFragmentError):
        two_var_structure(parse_model("domain 2\n1 F(x, y) & F(y, z)\n"))


@pytest.mark.parametrize("seed", range(5))
def test_block_swaps_preserve_weight(seed):
    rng = np.random.default_rng(seed)
    m = parse_model(random_monadic_text(rng, 4))
    g = ground(m)
    d = monadic_decomposition(m)
    for _ in range(100):
        world = rng.integers(0, 2, g.n)
        i, j = rng.choice(d.k, 2, replace=False)
        swapped = world.copy()
        swapped[list(d.blocks[i])], swapped[list(d.blocks[j])] = world[list(d.blocks[j])], world[list(d.blocks[i])]
        assert log_weight(g, swapped) == log_weight(g, world)


def test_two_var_structure_friends(friends3):
    s = two_var_structure(friends3.model, friends3)
    names = friends3.atom_names()
    assert s.y_decomp.width == 3
    assert [[names[a] for a in b] for b in s.y_decomp.blocks] == [
        ["Smokes(C1)", "Cancer(C1)", "Friends(C1,C1)"],
        ["Smokes(C2)", "Cancer(C2)", "Friends(C2,C2)"],
        ["Smokes(C3)", "Cancer(C3)", "Friends(C3,C3)"]]
    assert {p: [names[a] for a in z] for p, z in s.pairs.items()} == {
        (0, 1): ["Friends(C1,C2)", "Friends(C2,C1)"],
        (0, 2): ["Friends(C1,C3)", "Friends(C3,C1)"],
        (1, 2): ["Friends(C2,C3)", "Friends(C3,C2)"]}
    # Smokes(x) & Friends(x, y) => Smokes(y) with x = C1, y = C2
    fi = next(i for i, f in enumerate(friends3.factors) if f.source == 1 and f.binding == (0, 1))
    assert fi in s.pair_factors[(0, 1)]
    # x = y groundings stay with Y
    reflexive = [i for i, f in enumerate(friends3.factors) if f.source == 1 and f.binding[0] == f.binding[1]]
    assert set(reflexive) <= set(s.y_factors)


def test_two_var_degenerate_z():
    m = parse_model("domain 3\n1 S(x)\n-0.5 F(x, x)\n")
    assert classify(m).kind is Fragment.TWO_VARIABLE
    s = two_var_structure(m)
    assert len(s.pairs) == 3
    assert all(not fs for fs in s.pair_factors.values())
    assert len(s.y_factors) == 6


def _exact(g, factors, world):
    return sum((Fraction(g.factors[f].weight) for f in factors if eval_formula(g.factors[f].formula, world)),
               Fraction(0))


def test_additive_split(friends3):
    s = two_var_structure(friends3.model, friends3)
    rng = np.random.default_rng(11)
    everything = range(len(friends3.factors))
    for _ in range(1000):
        world = rng.integers(0, 2, friends3.n)
        split = _exact(friends3, s.y_factors, world) + sum(
            (_exact(friends3, fs, world) for fs in s.pair_factors.values()), Fraction(0))
        assert split == _exact(friends3, everything, world)
        assert float(split) == log_weight(friends3, world)


def test_renaming_automorphism(friends3):
    g = friends3
    rng = np.random.default_rng(5)
    for _ in range(200):
        i, j = (int(c) for c in rng.choice(3, 2, replace=False))
        sigma = {i: j, j: i}
        world = rng.integers(0, 2, g.n)
        renamed = np.empty_like(world)
        for a, atom in enumerate(g.atoms):
            image = GroundAtom(atom.predicate, tuple(sigma.get(c, c) for c in atom.args))
            renamed[g.index[image]] = world[a]
        assert log_weight(g, renamed) == log_weight(g, world)
