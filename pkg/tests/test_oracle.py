import math

import numpy as np
import pytest

from liftex.logic import ground, parse_model
from liftex.oracle import (ExactOracle, OracleCapExceeded, brute_marginal, brute_mpe, brute_result,
                           oracle_for)
from liftex.world import log_weight, logsumexp, world_from_int

from _support import FRIENDS, PAIRS, SMOKERS, grounded, rel_err


def test_single_smoker_closed_form():
    g = grounded(SMOKERS, k=1)
    assert rel_err(brute_marginal(g, {0: 1}), math.exp(1.5) / (1 + math.exp(1.5))) < 1e-12


def test_empty_evidence_is_certain(friends2):
    assert brute_marginal(friends2, {}) == pytest.approx(1.0, abs=1e-15)


def test_pairs_marginal():
    g = grounded(PAIRS, consts="A B C")
    # worlds with S(A)=1 have n = 1 + (other smokers) smokers
    num = sum(math.comb(2, m) * math.exp(1.5 * (m + 1) ** 2) for m in range(3))
    den = sum(math.comb(3, n) * math.exp(1.5 * n ** 2) for n in range(4))
    assert rel_err(brute_marginal(g, {0: 1}), num / den) < 1e-12


def test_mpe_examples():
    assert brute_mpe(grounded(SMOKERS, k=2), {}) == ((1, 1), 3.0)
    zero = ground(parse_model("domain 3\n0 S(x) => T(x)\n0.0 S(x)\n"))
    assert brute_mpe(zero, {}) == ((0,) * 6, 0.0)


def test_mpe_ties_go_to_smallest_index():
    # S(x) <=> !S(y) over two constants: worlds 01 and 10 tie
    g = ground(parse_model("domain 2\n1 S(x) & !S(y)\n"))
    world, lw = brute_mpe(g, {})
    assert world == (1, 0) and lw == 1.0


@pytest.mark.parametrize("w", [1.5, -0.7, 3.0])
@pytest.mark.parametrize("k", [1, 5, 12, 20])
def test_partition_function_closed_form(w, k):
    g = ground(parse_model(f"domain {k}\n{w} S(x)\n"))
    exact = k * math.log1p(math.exp(w))
    # relative error of Z is the absolute error of log Z
    assert abs(oracle_for(g).log_partition - exact) < 1e-12


def test_consistent_with_explicit_sum():
    g = grounded(FRIENDS, k=2)
    weights = [log_weight(g, world_from_int(x, g.n)) for x in range(2 ** g.n)]
    e = {0: 1, 5: 0}
    compatible = [w for x, w in enumerate(weights) if all((x >> a) & 1 == v for a, v in e.items())]
    oracle = oracle_for(g)
    assert abs(oracle.log_prob(e) - logsumexp(compatible)) < 1e-12
    assert rel_err(brute_marginal(g, e) * math.exp(oracle.log_partition), math.exp(logsumexp(compatible))) < 1e-12


def test_order_independence():
    g = grounded(FRIENDS, k=2)
    rng = np.random.default_rng(0)
    order = rng.permutation(2 ** g.n)
    shuffled = [log_weight(g, world_from_int(int(x), g.n)) for x in order]
    assert abs(logsumexp(shuffled) - oracle_for(g).log_partition) < 1e-12


def test_chunked_and_cached_agree():
    g = grounded(FRIENDS, k=3)     # 15 atoms
    fresh = ExactOracle(g)
    first = fresh.log_partition    # chunked pass fills the cache
    assert fresh._cached is not None
    assert fresh.log_partition == first


def test_cap():
    g = grounded(FRIENDS, k=4)     # 24 atoms
    with pytest.raises(OracleCapExceeded):
        oracle_for(g, cap=20)
    with pytest.raises(OracleCapExceeded):
        brute_marginal(grounded(FRIENDS, k=5), {})


def test_brute_result(friends2):
    r = brute_result(friends2, {0: 1})
    assert r.probability == brute_marginal(friends2, {0: 1})
    m = brute_result(friends2, {}, mode="mpe")
    # the all-false world satisfies every implication too and wins the tie
    assert m.world == (0,) * 8 and m.log_weight == 8.6
