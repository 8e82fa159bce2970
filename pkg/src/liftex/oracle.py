"""Exact inference by enumerating every world. Slow on purpose, and obviously right.

Worlds are visited in the integer order of their bit string with atom 0 as
the least significant bit.
"""
from __future__ import annotations

import math
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exchange import Decomposition, Statistic
from .logic import GroundModel, eval_formula_array
from .world import log_weight, logsumexp

DEFAULT_CAP = 25
_CHUNK_BITS = 18
_CACHE_BITS = 22


class OracleCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    log_partition: float
    probability: float | None = None
    world: tuple[int, ...] | None = None
    log_weight: float | None = None


def _bits(idx: np.ndarray, n: int) -> list[np.ndarray]:
    return [((idx >> a) & 1).astype(bool) for a in range(n)]


def _evidence_mask(idx: np.ndarray, evidence: Mapping[int, int]) -> np.ndarray:
    mask = np.ones(len(idx), dtype=bool)
    for a, v in evidence.items():
        mask &= ((idx >> a) & 1) == v
    return mask


class ExactOracle:
    """Log weights of all ``2**n`` worlds, computed chunk by chunk."""

    def __init__(self, model: GroundModel, cap: int = DEFAULT_CAP):
        if model.n > cap:
            raise OracleCapExceeded(f"{model.n} ground atoms exceed the oracle cap of {cap}")
        self.model = model
        self._cached: np.ndarray | None = None

    def _chunk_weights(self, idx: np.ndarray) -> np.ndarray:
        cols = _bits(idx, self.model.n)
        # integer counts per distinct weight, so equal count vectors give bit-identical sums
        counts: dict[float, np.ndarray] = {}
        for f in self.model.factors:
            sat = eval_formula_array(f.formula, cols)
            if f.weight in counts:
                counts[f.weight] += sat
            else:
                counts[f.weight] = sat.astype(np.int64)
        lw = np.zeros(len(idx))
        for w in sorted(counts):
            lw += w * counts[w]
        return lw

    def chunks(self):
        """Yield ``(world indices, log weights)`` covering every world once."""
        if self._cached is not None:
            yield np.arange(len(self._cached), dtype=np.int64), self._cached
            return
        total = 1 << self.model.n
        step = 1 << _CHUNK_BITS
        parts = []
        for start in range(0, total, step):
            idx = np.arange(start, min(total, start + step), dtype=np.int64)
            lw = self._chunk_weights(idx)
            if self.model.n <= _CACHE_BITS:
                parts.append(lw)
            yield idx, lw
        if parts:
            self._cached = np.concatenate(parts)

    def log_prob(self, evidence: Mapping[int, int]) -> float:
        """``log`` of the summed weight of worlds agreeing with ``evidence``."""
        partial = [logsumexp(lw[_evidence_mask(idx, evidence)]) if evidence else logsumexp(lw)
                   for idx, lw in self.chunks()]
        return float(logsumexp(partial))

    @property
    def log_partition(self) -> float:
        return self.log_prob({})

    def marginal(self, evidence: Mapping[int, int]) -> float:
        return math.exp(self.log_prob(evidence) - self.log_partition)

    def mpe(self, evidence: Mapping[int, int]) -> tuple[tuple[int, ...], float]:
        """Highest-weight world agreeing with ``evidence``; ties go to the smallest index."""
        near: list[tuple[np.ndarray, np.ndarray]] = []
        for idx, lw in self.chunks():
            mask = _evidence_mask(idx, evidence)
            if mask.any():
                top = lw[mask].max()
                keep = mask & (lw >= top - 1e-9 * max(1.0, abs(top)))
                near.append((lw[keep], idx[keep]))
        if not near:
            raise ValueError("no world agrees with the evidence")
        best = max(v.max() for v, _ in near)
        tol = 1e-9 * max(1.0, abs(best))
        candidates = [x for v, i in near for x in i[v >= best - tol].tolist()]
        n = self.model.n
        # vectorised sums carry rounding; settle near-ties with exact sums
        scored = []
        for x in candidates:
            world = tuple((x >> a) & 1 for a in range(n))
            scored.append((-log_weight(self.model, world), x, world))
        neg, _, world = min(scored)
        return world, -neg


_oracles: "weakref.WeakKeyDictionary[GroundModel, ExactOracle]" = weakref.WeakKeyDictionary()


def oracle_for(model: GroundModel, cap: int = DEFAULT_CAP) -> ExactOracle:
    if model.n > cap:
        raise OracleCapExceeded(f"{model.n} ground atoms exceed the oracle cap of {cap}")
    if model not in _oracles:
        _oracles[model] = ExactOracle(model, cap)
    return _oracles[model]


def brute_marginal(model: GroundModel, evidence: Mapping[int, int], cap: int = DEFAULT_CAP) -> float:
    """Pr(evidence) by summing over all worlds."""
    return oracle_for(model, cap).marginal(evidence)


def brute_mpe(model: GroundModel, evidence: Mapping[int, int],
              cap: int = DEFAULT_CAP) -> tuple[tuple[int, ...], float]:
    return oracle_for(model, cap).mpe(evidence)


def brute_result(model: GroundModel, evidence: Mapping[int, int], mode: str = "marginal",
                 cap: int = DEFAULT_CAP) -> OracleResult:
    oracle = oracle_for(model, cap)
    if mode == "mpe":
        world, lw = oracle.mpe(evidence)
        return OracleResult(oracle.log_partition, world=world, log_weight=lw)
    return OracleResult(oracle.log_partition, probability=oracle.marginal(evidence))


def brute_suborbit_table(evidence: Mapping[int, int], decomp: Decomposition,
                         cap: int = DEFAULT_CAP) -> Counter:
    """Statistic -> number of scope assignments agreeing with ``evidence``."""
    scope = sorted(decomp.scope)
    if len(scope) > cap:
        raise OracleCapExceeded(f"{len(scope)} scope atoms exceed the oracle cap of {cap}")
    pos = {a: p for p, a in enumerate(scope)}
    local_ev = {pos[a]: v for a, v in evidence.items()}
    w = decomp.width
    table: Counter = Counter()
    total = 1 << len(scope)
    step = 1 << _CHUNK_BITS
    for start in range(0, total, step):
        idx = np.arange(start, min(total, start + step), dtype=np.int64)
        idx = idx[_evidence_mask(idx, local_ev)]
        counts = np.zeros((len(idx), 1 << w), dtype=np.int64)
        rows = np.arange(len(idx))
        for block in decomp.blocks:
            pattern = np.zeros(len(idx), dtype=np.int64)
            for a in block:
                pattern = (pattern << 1) | ((idx >> pos[a]) & 1)
            np.add.at(counts, (rows, pattern), 1)
        stats, freq = np.unique(counts, axis=0, return_counts=True)
        for s, f in zip(stats.tolist(), freq.tolist()):
            table[tuple(s)] += f
    return table


def brute_suborbit(t: Sequence[int], evidence: Mapping[int, int], decomp: Decomposition,
                   cap: int = DEFAULT_CAP) -> int:
    """|{x over the scope : T(x) = t and x agrees with evidence}| by enumeration."""
    return brute_suborbit_table(evidence, decomp, cap)[tuple(t)]
