import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liftex.exchange import (CompletionMatrix, Decomposition, EvidenceProfile, bit_index, bit_pattern,
                             compatible_bits, count_completions, enumerate_completion_matrices,
                             enumerate_statistics, evidence_index, evidence_pattern, evidence_profile,
                             gamma_size, multinomial, orbit_size, patterns_compatible, representative,
                             statistic_chunks, statistic_count, statistic_of, suborbit_size)
from liftex.oracle import brute_suborbit, brute_suborbit_table

from _support import block_decomposition


# -- patterns ----------------------------------------------------------------------

@pytest.mark.parametrize("w", [0, 1, 2, 3])
def test_pattern_bijections(w):
    assert [bit_index(bit_pattern(i, w)) for i in range(2 ** w)] == list(range(2 ** w))
    assert [evidence_index(evidence_pattern(j, w)) for j in range(3 ** w)] == list(range(3 ** w))
    assert bit_pattern(0, w) == "0" * w
    assert evidence_pattern(3 ** w - 1, w) == "*" * w
    # lexicographic order over 0 < 1 < *
    assert sorted(evidence_pattern(j, w).translate(str.maketrans("01*", "abc")) for j in range(3 ** w)) == \
        [evidence_pattern(j, w).translate(str.maketrans("01*", "abc")) for j in range(3 ** w)]


def test_compatible_bits():
    assert compatible_bits(evidence_index("1*"), 2) == (bit_index("10"), bit_index("11"))
    assert compatible_bits(evidence_index("**"), 2) == (0, 1, 2, 3)
    for j in range(27):
        m = evidence_pattern(j, 3)
        assert compatible_bits(j, 3) == tuple(i for i in range(8) if patterns_compatible(bit_pattern(i, 3), m))


def test_decomposition_validation():
    with pytest.raises(ValueError):
        Decomposition(((0, 1), (2,)))
    with pytest.raises(ValueError):
        Decomposition(((0, 1), (1, 2)))
    d = Decomposition(((0, 1), (2, 3)))
    assert (d.k, d.width, d.scope) == (2, 2, frozenset(range(4)))


# -- statistics --------------------------------------------------------------------

def test_statistic_of_examples():
    assert statistic_of([1, 1, 0], block_decomposition(3, 1)) == (1, 2)
    d = Decomposition(((0, 1), (2, 3)))        # (S(A), C(A)), (S(B), C(B))
    assert statistic_of({0: 1, 1: 0, 2: 0, 3: 1}, d) == (0, 1, 1, 0)
    assert statistic_of({0: 0, 1: 1, 2: 1, 3: 0}, d) == (0, 1, 1, 0)


def test_statistic_of_unassigned():
    with pytest.raises(KeyError):
        statistic_of({0: 1}, block_decomposition(2, 1))


def test_enumerate_statistics_examples():
    assert list(enumerate_statistics(2, 1)) == [(0, 2), (1, 1), (2, 0)]
    for w in (1, 2, 3):
        assert list(enumerate_statistics(0, w)) == [(0,) * 2 ** w]
    assert len(list(enumerate_statistics(3, 2))) == 20 == math.comb(6, 3)


@pytest.mark.parametrize("k, w", [(k, w) for w in (1, 2) for k in range(6)] + [(3, 3), (2, 4)])
def test_enumerate_statistics_against_product(k, w):
    # independent route: filter the full product
    expected = [t for t in itertools.product(range(k + 1), repeat=2 ** w) if sum(t) == k]
    assert list(enumerate_statistics(k, w)) == expected
    assert len(expected) == statistic_count(k, w)


@pytest.mark.parametrize("size", [1, 5, 64])
def test_statistic_chunks_respect_size(size):
    chunks = list(statistic_chunks(6, 2, size))
    assert all(len(c) <= size for c in chunks)
    assert [tuple(r) for c in chunks for r in c.tolist()] == list(enumerate_statistics(6, 2))


def test_orbit_size_examples():
    assert orbit_size((2, 1)) == 3
    assert orbit_size((5, 0, 0, 0)) == 1
    assert orbit_size((1, 1, 1, 1)) == 24


def test_multinomial_big_and_degenerate():
    assert multinomial(300, [100, 100, 100]) == math.factorial(300) // math.factorial(100) ** 3
    assert multinomial(3, [1, 1]) == 0
    assert multinomial(0, []) == 1


@pytest.mark.parametrize("k, w", [(k, w) for w in (1, 2, 3) for k in range(6)])
def test_orbits_partition_worlds(k, w):
    assert sum(orbit_size(t) for t in enumerate_statistics(k, w)) == 2 ** (k * w)


# -- evidence profiles -------------------------------------------------------------

def test_profile_examples():
    d = block_decomposition(3, 1)
    assert evidence_profile({}, d).counts == ((2, 3),)
    p = evidence_profile({1: 1}, d)
    assert p.by_pattern() == {"1": 1, "*": 2}
    assert p[1] == 1 and p[2] == 2 and p[0] == 0
    full = evidence_profile({0: 1, 1: 0, 2: 1}, d)
    assert sum(n for j, n in full.counts if "*" not in evidence_pattern(j, 1)) == 3
    assert full.dense() == (1, 2, 0)


def test_profile_rejects_out_of_scope():
    with pytest.raises(ValueError):
        evidence_profile({7: 1}, block_decomposition(3, 1))


# -- completion matrices -----------------------------------------------------------

def _brute_matrices(t, d: EvidenceProfile):
    """Every 2**w x 3**w matrix with entries up to k, filtered by the three conditions."""
    w, k = d.width, d.k
    rows, cols = 2 ** w, 3 ** w
    dense_d = d.dense()
    found = set()
    for cells in itertools.product(range(k + 1), repeat=rows * cols):
        a = np.array(cells).reshape(rows, cols)
        if tuple(a.sum(axis=1)) != tuple(t) or tuple(a.sum(axis=0)) != dense_d:
            continue
        if all(a[i, j] == 0 or patterns_compatible(bit_pattern(i, w), evidence_pattern(j, w))
               for i in range(rows) for j in range(cols)):
            found.add(cells)
    return found


def test_completion_matrix_example():
    d = evidence_profile({0: 1}, block_decomposition(3, 1))
    mats = list(enumerate_completion_matrices((1, 2), d))
    assert mats == [CompletionMatrix(1, ((1, (0, 1)), (2, (1, 1))))]
    assert mats[0].row_sums() == (1, 2) and mats[0].column_sums() == {1: 1, 2: 2}


def test_completion_matrices_brute_w1():
    for k in range(1, 4):
        d = block_decomposition(k, 1)
        for values in itertools.product((0, 1, None), repeat=k):
            e = {a: v for a, v in enumerate(values) if v is not None}
            prof = evidence_profile(e, d)
            for t in enumerate_statistics(k, 1):
                mats = [tuple(m.dense().reshape(-1).tolist()) for m in enumerate_completion_matrices(t, prof)]
                assert len(mats) == len(set(mats))
                assert set(mats) == _brute_matrices(t, prof)


def test_fully_assigned_at_most_one_matrix():
    d = block_decomposition(3, 2)
    e = dict(enumerate([1, 0, 0, 1, 1, 0]))
    prof = evidence_profile(e, d)
    hits = {t: list(enumerate_completion_matrices(t, prof)) for t in enumerate_statistics(3, 2)}
    assert [t for t, m in hits.items() if m] == [statistic_of(e, d)]
    assert gamma_size(hits[statistic_of(e, d)][0], prof) == 1


def test_empty_evidence_single_matrix():
    d = block_decomposition(4, 1)
    prof = evidence_profile({}, d)
    mats = list(enumerate_completion_matrices((2, 2), prof))
    assert len(mats) == 1
    assert gamma_size(mats[0], prof) == 6 == orbit_size((2, 2))


def test_suborbit_examples():
    d = block_decomposition(3, 1)
    assert suborbit_size((1, 2), {0: 1}, d) == 2
    assert suborbit_size((2, 1), {0: 1, 1: 1, 2: 1}, d) == 0
    assert representative((2, 1), {0: 1, 1: 1, 2: 1}, d) is None
    for t in enumerate_statistics(3, 1):
        assert suborbit_size(t, {}, d) == orbit_size(t)


def test_representative_examples():
    d = block_decomposition(3, 1)
    assert representative((1, 2), {}, d) == {0: 0, 1: 1, 2: 1}
    e = {0: 1, 1: 0, 2: 1}
    assert representative((1, 2), e, d) == e


# -- invariants against brute force ----------------------------------------------------

@st.composite
def _cases(draw):
    w = draw(st.integers(1, 3))
    k = draw(st.integers(1, 12 // w))
    values = draw(st.lists(st.sampled_from((0, 1, None)), min_size=k * w, max_size=k * w))
    return w, k, {a: v for a, v in enumerate(values) if v is not None}


@settings(max_examples=120, deadline=None)
@given(_cases())
def test_suborbit_invariants(case):
    w, k, e = case
    d = block_decomposition(k, w)
    prof = evidence_profile(e, d)
    table = brute_suborbit_table(e, d)
    total = 0
    for t in enumerate_statistics(k, w):
        size = suborbit_size(t, e, d)
        assert size == table.get(t, 0)
        assert count_completions(t, prof) == size
        total += size
        rep = representative(t, e, d)
        if size == 0:
            assert rep is None
        else:
            assert statistic_of(rep, d) == t
            assert all(rep[a] == v for a, v in e.items())
    assert total == 2 ** (k * w - len(e))


@settings(max_examples=40, deadline=None)
@given(_cases())
def test_gamma_sum_independent_of_order(case):
    w, k, e = case
    d = block_decomposition(k, w)
    prof = evidence_profile(e, d)
    for t in itertools.islice(enumerate_statistics(k, w), 30):
        mats = list(enumerate_completion_matrices(t, prof))
        forward = sum(gamma_size(a, prof) for a in mats)
        assert forward == sum(gamma_size(a, prof) for a in reversed(mats))
        for a in mats:
            assert a.row_sums() == tuple(t)
            assert a.column_sums() == dict(prof.counts)


def test_brute_suborbit_matches_orbit():
    d = block_decomposition(3, 2)
    for t in enumerate_statistics(3, 2):
        assert brute_suborbit(t, {}, d) == orbit_size(t)
