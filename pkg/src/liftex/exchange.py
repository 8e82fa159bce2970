"""Sufficient statistics of exchangeable decompositions and orbit counting.

A decomposition splits (a subset of) the ground atoms into ``k`` blocks of
equal width ``w``. A world's statistic counts, for each of the ``2**w`` bit
patterns, how many blocks show that pattern. Worlds sharing a statistic form
an orbit; the worlds of an orbit that agree with some evidence form a
suborbit, whose size is obtained by summing over completion matrices.

Bit pattern ``i`` is the ``w``-digit binary expansion of ``i`` (position 0 is
the most significant digit), so pattern 0 is ``00..0``. Evidence patterns use
the digits ``0 < 1 < *`` in base 3 the same way.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import numpy as np

Statistic = tuple[int, ...]


@dataclass(frozen=True)
class Decomposition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        widths = {len(b) for b in self.blocks}
        if len(widths) > 1:
            raise ValueError(f"blocks must share one width, got {sorted(widths)}")
        flat = [a for b in self.blocks for a in b]
        if len(set(flat)) != len(flat):
            raise ValueError("blocks must be disjoint")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def width(self) -> int:
        return len(self.blocks[0]) if self.blocks else 0

    @property
    def scope(self) -> frozenset[int]:
        return frozenset(a for b in self.blocks for a in b)


# -- patterns ----------------------------------------------------------------

def bit_pattern(i: int, w: int) -> str:
    return format(i, f"0{w}b") if w else ""


def bit_index(b: str) -> int:
    return int(b, 2) if b else 0


def evidence_pattern(j: int, w: int) -> str:
    digits = []
    for _ in range(w):
        j, r = divmod(j, 3)
        digits.append("01*"[r])
    return "".join(reversed(digits))


def evidence_index(m: str) -> int:
    j = 0
    for ch in m:
        j = 3 * j + "01*".index(ch)
    return j


@lru_cache(maxsize=None)
def compatible_bits(j: int, w: int) -> tuple[int, ...]:
    """Bit patterns (ascending) that agree with evidence pattern ``j``."""
    m = evidence_pattern(j, w)
    choices = ["01" if ch == "*" else ch for ch in m]
    return tuple(bit_index("".join(p)) for p in itertools.product(*choices))


def patterns_compatible(b: str, m: str) -> bool:
    return all(y == "*" or x == y for x, y in zip(b, m))


# -- statistics --------------------------------------------------------------

def block_bits(world, decomp: Decomposition) -> list[int]:
    """Bit-pattern index of every block of ``world``."""
    out = []
    for block in decomp.blocks:
        i = 0
        for a in block:
            try:
                i = (i << 1) | int(world[a])
            except (KeyError, IndexError):
                raise KeyError(f"atom {a} in scope is unassigned") from None
        out.append(i)
    return out


def statistic_of(world, decomp: Decomposition) -> Statistic:
    counts = [0] * (1 << decomp.width)
    for i in block_bits(world, decomp):
        counts[i] += 1
    return tuple(counts)


def statistic_count(k: int, w: int) -> int:
    """Number of statistics: weak compositions of ``k`` into ``2**w`` parts."""
    p = 1 << w
    return math.comb(k + p - 1, p - 1)


def enumerate_statistics(k: int, w: int) -> Iterator[Statistic]:
    """All statistics for ``k`` blocks of width ``w`` in lexicographic order."""
    for chunk in statistic_chunks(k, w):
        yield from map(tuple, chunk.tolist())


_TABLE_ROWS = 1 << 20


@lru_cache(maxsize=4)
def _composition_tables(k: int, s: int) -> tuple[np.ndarray, ...]:
    """Entry ``r``: all weak compositions of ``r`` into ``s`` parts, lexicographic, as rows."""
    level = [np.array([[r]], dtype=np.int64) for r in range(k + 1)]
    for parts in range(2, s + 1):
        level = [np.vstack([np.hstack([np.full((len(level[r - first]), 1), first, dtype=np.int64),
                                       level[r - first]]) for first in range(r + 1)])
                 for r in range(k + 1)]
    return tuple(level)


def _prefixes(budget: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Tuples of ``parts`` non-negative ints with sum at most ``budget``, lexicographic."""
    if parts == 0:
        yield ()
        return
    for first in range(budget + 1):
        for tail in _prefixes(budget - first, parts - 1):
            yield (first,) + tail


def statistic_chunks(k: int, w: int, size: int = 1 << 16) -> Iterator[np.ndarray]:
    """The statistics of ``enumerate_statistics`` as ``(n, 2**w)`` int arrays.

    The last ``s`` counts come from a cached table of compositions, the
    leading ones from a lexicographic walk, so rows come out in order.
    """
    p = 1 << w
    s = 1
    while s < p and statistic_count_parts(k, s + 1) <= max(size, _TABLE_ROWS):
        s += 1
    tables = _composition_tables(k, s)
    pending, rows = [], 0
    for prefix in _prefixes(k, p - s):
        tail = tables[k - sum(prefix)]
        for lo in range(0, len(tail), size):
            part = tail[lo:lo + size]
            head = np.broadcast_to(np.array(prefix, dtype=np.int64), (len(part), p - s))
            pending.append(np.hstack([head, part]))
            rows += len(part)
            if rows >= size:
                yield np.vstack(pending)
                pending, rows = [], 0
    if pending:
        yield np.vstack(pending)


def statistic_count_parts(k: int, parts: int) -> int:
    return math.comb(k + parts - 1, parts - 1)


@lru_cache(maxsize=None)
def _factorials(n: int) -> tuple[int, ...]:
    out = [1]
    for i in range(1, n + 1):
        out.append(out[-1] * i)
    return tuple(out)


def factorials(n: int) -> tuple[int, ...]:
    # grow in powers of two so the cache stays small
    size = 16
    while size < n:
        size *= 2
    return _factorials(size)


def multinomial(n: int, parts: Sequence[int]) -> int:
    """``n! / prod(parts!)`` exactly; 0 when the parts do not sum to ``n``."""
    if sum(parts) != n or min(parts, default=0) < 0:
        return 0
    fact = factorials(n)
    den = 1
    for a in parts:
        den *= fact[a]
    return fact[n] // den


def orbit_size(t: Sequence[int]) -> int:
    """Number of worlds with statistic ``t``: the multinomial ``k! / prod c_i!``."""
    return multinomial(sum(t), t)


# -- evidence ----------------------------------------------------------------

@dataclass(frozen=True)
class EvidenceProfile:
    """How many blocks carry each evidence pattern (sparse, ascending index)."""
    counts: tuple[tuple[int, int], ...]
    width: int

    @property
    def k(self) -> int:
        return sum(d for _, d in self.counts)

    def __getitem__(self, j: int) -> int:
        return dict(self.counts).get(j, 0)

    def dense(self) -> tuple[int, ...]:
        d = [0] * 3 ** self.width
        for j, n in self.counts:
            d[j] = n
        return tuple(d)

    def by_pattern(self) -> dict[str, int]:
        return {evidence_pattern(j, self.width): n for j, n in self.counts}


def block_evidence(evidence: Mapping[int, int], decomp: Decomposition) -> list[int]:
    """Evidence-pattern index of every block."""
    stray = set(evidence) - decomp.scope
    if stray:
        raise ValueError(f"evidence on atoms outside the decomposition: {sorted(stray)}")
    out = []
    for block in decomp.blocks:
        j = 0
        for a in block:
            j = 3 * j + evidence.get(a, 2)
        out.append(j)
    return out


def evidence_profile(evidence: Mapping[int, int], decomp: Decomposition) -> EvidenceProfile:
    counts: dict[int, int] = {}
    for j in block_evidence(evidence, decomp):
        counts[j] = counts.get(j, 0) + 1
    return EvidenceProfile(tuple(sorted(counts.items())), decomp.width)


# -- completion matrices -----------------------------------------------------

@dataclass(frozen=True)
class CompletionMatrix:
    """Sparse ``2**w x 3**w`` matrix: only columns with ``d_j > 0`` are stored."""
    width: int
    columns: tuple[tuple[int, tuple[int, ...]], ...]   # (j, full column over bit patterns)

    def entry(self, i: int, j: int) -> int:
        for jj, col in self.columns:
            if jj == j:
                return col[i]
        return 0

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(col[i] for _, col in self.columns) for i in range(1 << self.width))

    def column_sums(self) -> dict[int, int]:
        return {j: sum(col) for j, col in self.columns}

    def dense(self) -> np.ndarray:
        a = np.zeros((1 << self.width, 3 ** self.width), dtype=object)
        for j, col in self.columns:
            a[:, j] = col
        return a


def _capped_compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``total`` with part ``p`` at most ``caps[p]``, lexicographic."""
    if not caps:
        if total == 0:
            yield ()
        return
    rest = sum(caps[1:])
    for a in range(max(0, total - rest), min(caps[0], total) + 1):
        for tail in _capped_compositions(total - a, caps[1:]):
            yield (a,) + tail


def enumerate_completion_matrices(t: Sequence[int], d: EvidenceProfile) -> Iterator[CompletionMatrix]:
    """Matrices with row sums ``t``, column sums ``d``, zero on incompatible cells.

    Columns are filled in ascending evidence-pattern order; each column runs
    over the compositions of ``d_j`` onto its compatible bit patterns, capped
    by what is left of each row sum.
    """
    w = d.width
    if len(t) != 1 << w:
        raise ValueError("statistic and profile widths differ")
    if sum(t) != d.k:
        return
    remaining = list(t)
    cols = [(j, n, compatible_bits(j, w)) for j, n in d.counts]
    chosen: list[tuple[int, tuple[int, ...]]] = []

    def rec(c):
        if c == len(cols):
            if not any(remaining):
                yield CompletionMatrix(w, tuple(chosen))
            return
        j, n, compat = cols[c]
        for comp in _capped_compositions(n, [remaining[i] for i in compat]):
            col = [0] * (1 << w)
            for i, a in zip(compat, comp):
                col[i] = a
                remaining[i] -= a
            chosen.append((j, tuple(col)))
            yield from rec(c + 1)
            chosen.pop()
            for i, a in zip(compat, comp):
                remaining[i] += a

    yield from rec(0)


def gamma_size(a: CompletionMatrix, d: EvidenceProfile) -> int:
    """Completions represented by ``a``: per column, the ways to split its ``d_j``
    blocks into the column's bit-pattern counts."""
    out = 1
    for j, col in a.columns:
        out *= multinomial(d[j], col)
    return out


def count_completions(t: Sequence[int], d: EvidenceProfile) -> int:
    """Suborbit size from a profile without materialising matrices.

    Same recursion as ``enumerate_completion_matrices`` except the last column
    is forced (it must absorb whatever is left of each row).
    """
    w = d.width
    if sum(t) != d.k:
        return 0
    fact = factorials(d.k)
    remaining = list(t)
    cols = [(n, compatible_bits(j, w)) for j, n in d.counts]
    last = len(cols) - 1

    def rec(c):
        n, compat = cols[c]
        if c == last:
            den = 1
            s = 0
            for i in compat:
                s += remaining[i]
                den *= fact[remaining[i]]
            # sum(remaining) == n always, so s == n means incompatible rows are empty
            return fact[n] // den if s == n else 0
        total = 0
        for comp in _capped_compositions(n, [remaining[i] for i in compat]):
            for i, a in zip(compat, comp):
                remaining[i] -= a
            sub = rec(c + 1)
            if sub:
                den = 1
                for a in comp:
                    den *= fact[a]
                total += fact[n] // den * sub
            for i, a in zip(compat, comp):
                remaining[i] += a
        return total

    return rec(0) if cols else int(not any(t))


def suborbit_size(t: Sequence[int], evidence: Mapping[int, int], decomp: Decomposition) -> int:
    """Worlds over the scope with statistic ``t`` that agree with ``evidence``."""
    d = evidence_profile(evidence, decomp)
    return sum(gamma_size(a, d) for a in enumerate_completion_matrices(t, d))


def representative(t: Sequence[int], evidence: Mapping[int, int],
                   decomp: Decomposition) -> dict[int, int] | None:
    """One world of the suborbit, or None if it is empty.

    Built from the first completion matrix: inside each evidence-pattern
    column, blocks (in block order) take bit patterns in ascending order.
    """
    blocks_by_pattern: dict[int, list[int]] = {}
    for b, j in enumerate(block_evidence(evidence, decomp)):
        blocks_by_pattern.setdefault(j, []).append(b)
    d = EvidenceProfile(tuple(sorted((j, len(bs)) for j, bs in blocks_by_pattern.items())), decomp.width)
    a = next(enumerate_completion_matrices(t, d), None)
    if a is None:
        return None
    w = decomp.width
    world: dict[int, int] = {}
    for j, col in a.columns:
        blocks = iter(blocks_by_pattern[j])
        for i, n in enumerate(col):
            bits = bit_pattern(i, w)
            for _ in range(n):
                for atom, bit in zip(decomp.blocks[next(blocks)], bits):
                    world[atom] = int(bit)
    return world
