"""Orbit-sum inference over exchangeable decompositions.

Every query is answered by one pass over the statistics of a decomposition:
for each statistic ``t`` we need a log weight ``W(t)`` shared by all worlds
of the orbit and the suborbit size ``|S_{t,e}|``; then

    log Pr(e) = logsumexp_t(log|S_{t,e}| + W(t)) - logsumexp_t(log|S_t| + W(t)).

``W`` is either computed per statistic from a representative world (the
direct route) or for a whole chunk of statistics at once from small
pattern tables (the statistic-level route). Both are kept so that each can
check the other.

Two-variable models are handled through a :class:`PairwiseProblem`: Y-blocks
(unary and reflexive atoms per constant, optionally widened by atoms linked
to a set ``K`` of query constants) that are exchangeable under ``Pr(Y)``,
and pair components ``Z_{i,j}`` that are summed out independently given Y.
"""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import exchange
from .detectors import ConditionalStructure, Fragment, WrongFragmentError, classify, monadic_decomposition
from .exchange import Decomposition, EvidenceProfile, bit_pattern, evidence_profile, statistic_chunks
from .logic import GroundModel, atoms_of, eval_formula, substitute
from .world import log_int, log_weight, logsumexp

TIE_TOL = 1e-12


class EngineError(ValueError):
    """The requested lifted engine cannot answer this query."""


class InfeasibleEvidenceError(ValueError):
    """No world agrees with the evidence."""


@dataclass
class QueryResult:
    mode: str
    probability: float | None = None
    assignment: dict[int, int] | None = None
    log_weight: float | None = None
    log_partition: float | None = None
    statistics_visited: int = 0
    infeasible: int = 0
    elapsed_ms: float = 0.0
    log_probability: float | None = None


# -- weights for a chunk of statistics -------------------------------------------

class MonadicTables:
    """Statistic-level log weights for a monadic model.

    A formula with ``v`` variables has, per tuple of block patterns
    ``(a_1..a_v)``, exactly ``prod c_{a_p}`` satisfied groundings when it is
    true under those patterns, and none otherwise.
    """

    def __init__(self, model: GroundModel):
        mln = model.model
        w = len(mln.predicates)
        self.n_patterns = 1 << w
        self.tables = []
        for wf in mln.formulas:
            variables = wf.variables
            slots = {}

            def leaf(atom):
                key = (mln.predicate_index(atom.predicate), variables.index(atom.args[0]))
                return slots.setdefault(key, len(slots))

            f = substitute(wf.formula, leaf)
            v = len(variables)
            truth = np.zeros((self.n_patterns,) * v)
            for tau in itertools.product(range(self.n_patterns), repeat=v):
                bits = [0] * len(slots)
                for (pred, var), s in slots.items():
                    bits[s] = (tau[var] >> (w - 1 - pred)) & 1
                truth[tau] = eval_formula(f, bits)
            self.tables.append((wf.weight, truth))

    def satisfied_counts(self, stats: np.ndarray) -> np.ndarray:
        """``(n, formulas)`` counts of satisfied groundings per statistic."""
        c = stats.astype(float)
        out = np.empty((len(stats), len(self.tables)))
        for f, (_, truth) in enumerate(self.tables):
            if truth.ndim == 0:
                out[:, f] = float(truth)
                continue
            x = c @ truth.reshape(self.n_patterns, -1)
            while x.shape[1] > 1:
                x = np.einsum("sa,sab->sb", c, x.reshape(len(c), self.n_patterns, -1))
            out[:, f] = x[:, 0]
        return out

    def __call__(self, stats: np.ndarray) -> np.ndarray:
        weights = np.array([w for w, _ in self.tables])
        return self.satisfied_counts(stats) @ weights if len(weights) else np.zeros(len(stats))


class DirectWeights:
    """Log weight of one canonical world per statistic (full-scope decompositions)."""

    def __init__(self, model: GroundModel, decomp: Decomposition):
        self.model = model
        self.decomp = decomp

    def __call__(self, stats: np.ndarray) -> np.ndarray:
        out = np.empty(len(stats))
        for s, t in enumerate(stats.tolist()):
            world = exchange.representative(t, {}, self.decomp)
            out[s] = log_weight(self.model, world)
        return out


# -- the orbit pass -----------------------------------------------------------

def _log_counts(stats: np.ndarray, profile: EvidenceProfile) -> np.ndarray:
    if len(profile.counts) == 1 and profile.counts[0][0] == 3 ** profile.width - 1:
        return np.array([log_int(exchange.orbit_size(t)) for t in stats.tolist()])
    return np.array([log_int(exchange.count_completions(t, profile)) for t in stats.tolist()])


def _chunk_work(stats, weigh, profiles, cache=None, n=0):
    if cache is None:
        return stats, weigh(stats), [_log_counts(stats, p) for p in profiles]
    counts = []
    for p in profiles:
        if (p, n) not in cache:
            cache[p, n] = _log_counts(stats, p)
        counts.append(cache[p, n])
    return stats, weigh(stats), counts


@dataclass
class _Pass:
    logs: list[float]                   # one per evidence set
    visited: int = 0
    infeasible: int = 0                 # for the first evidence set
    best: tuple[float, tuple[int, ...]] | None = None


def _orbit_pass(width: int, k: int, profiles: Sequence[EvidenceProfile], weigh, *,
                track_best: bool = False, jobs: int = 1, chunk: int = 1 << 14,
                count_cache: dict | None = None) -> _Pass:
    """Accumulate ``logsumexp_t(log|S_{t,e}| + W(t))`` for every profile.

    With ``track_best`` the highest ``W`` among statistics feasible for the
    first profile is kept; near-ties go to the lexicographically first one.
    ``count_cache`` keeps log suborbit sizes between passes over the same
    ``(width, k)`` (serial passes only).
    """
    partial: list[list[float]] = [[] for _ in profiles]
    result = _Pass([])
    chunks = statistic_chunks(k, width, chunk)
    if jobs > 1:
        pool = ProcessPoolExecutor(jobs)
        work = pool.map(_chunk_work, chunks, itertools.repeat(weigh), itertools.repeat(profiles))
    else:
        pool = None
        work = (_chunk_work(c, weigh, profiles, count_cache, n) for n, c in enumerate(chunks))
    try:
        for stats, w, counts in work:
            result.visited += len(stats)
            feasible = np.isfinite(counts[0])
            result.infeasible += int((~feasible).sum())
            for p, lc in enumerate(counts):
                ok = np.isfinite(lc)
                if ok.any():
                    partial[p].append(float(logsumexp(lc[ok] + w[ok])))
            if track_best and feasible.any():
                top = w[feasible].max()
                tol = TIE_TOL * max(1.0, abs(top))
                s = int(np.flatnonzero(feasible & (w >= top - tol))[0])
                if result.best is None or w[s] > result.best[0] + TIE_TOL * max(1.0, abs(result.best[0])):
                    result.best = (float(w[s]), tuple(stats[s].tolist()))
    finally:
        if pool is not None:
            pool.shutdown()
    result.logs = [float(logsumexp(p)) if p else -math.inf for p in partial]
    return result


def _empty_profile(decomp: Decomposition) -> EvidenceProfile:
    return evidence_profile({}, decomp)


# -- full-scope decompositions ------------------------------------------------

def _full_scope_weights(model: GroundModel, decomp: Decomposition, direct: bool | None):
    if decomp.scope != frozenset(range(model.n)):
        raise EngineError("decomposition does not cover every ground atom")
    statistic_level = False
    if not direct and classify(model.model).kind is Fragment.MONADIC:
        statistic_level = decomp == monadic_decomposition(model.model)
    if direct is False and not statistic_level:
        raise EngineError("statistic-level weights need the monadic decomposition")
    return MonadicTables(model) if statistic_level else DirectWeights(model, decomp)


def lifted_log_probs(model: GroundModel, decomp: Decomposition, evidences: Sequence[Mapping[int, int]], *,
                     direct: bool | None = None, jobs: int = 1) -> tuple[list[float], _Pass]:
    """Unnormalised ``log Pr(e)`` for each evidence set plus ``log Z`` last."""
    weigh = _full_scope_weights(model, decomp, direct)
    profiles = [evidence_profile(e, decomp) for e in evidences] + [_empty_profile(decomp)]
    res = _orbit_pass(decomp.width, decomp.k, profiles, weigh, jobs=jobs)
    return res.logs, res


def lifted_marginal(model: GroundModel, decomp: Decomposition, evidence: Mapping[int, int], *,
                    direct: bool | None = None, jobs: int = 1) -> QueryResult:
    """Pr(evidence) for a decomposition covering every ground atom.

    ``direct=None`` picks statistic-level weights whenever ``decomp`` is the
    monadic decomposition; ``True`` forces per-representative evaluation.
    """
    start = time.perf_counter()
    logs, res = lifted_log_probs(model, decomp, [evidence], direct=direct, jobs=jobs)
    lp = logs[0] - logs[1]
    return QueryResult("marginal", probability=math.exp(lp), log_probability=lp, log_partition=logs[1],
                       statistics_visited=res.visited, infeasible=res.infeasible,
                       elapsed_ms=(time.perf_counter() - start) * 1e3)


def lifted_mpe(model: GroundModel, decomp: Decomposition, evidence: Mapping[int, int], *,
               direct: bool | None = None, jobs: int = 1) -> QueryResult:
    """Most probable world agreeing with ``evidence``.

    Ties go to the lexicographically smallest statistic, then its canonical
    representative. The reported weight is re-evaluated on that world.
    """
    start = time.perf_counter()
    weigh = _full_scope_weights(model, decomp, direct)
    profiles = [evidence_profile(evidence, decomp), _empty_profile(decomp)]
    res = _orbit_pass(decomp.width, decomp.k, profiles, weigh, track_best=True, jobs=jobs)
    if res.best is None:
        raise InfeasibleEvidenceError("evidence is infeasible under every statistic")
    world = exchange.representative(res.best[1], evidence, decomp)
    return QueryResult("mpe", assignment=dict(sorted(world.items())), log_weight=log_weight(model, world),
                       log_partition=res.logs[1], statistics_visited=res.visited, infeasible=res.infeasible,
                       elapsed_ms=(time.perf_counter() - start) * 1e3)


# -- two-variable models --------------------------------------------------------

def _fsum_satisfied(model: GroundModel, factors: Sequence[int], world) -> float:
    return math.fsum(model.factors[f].weight for f in factors if eval_formula(model.factors[f].formula, world))


class PairwiseProblem:
    """Y-blocks for the constants outside ``K`` plus independent pair components.

    With ``K`` empty this is exactly the conditional structure of a
    two-variable model. Otherwise every atom whose arguments all lie in ``K``
    moves to the enumerated set ``Q``, and each remaining block is widened by
    its binary atoms linking to ``K`` (predicate, K-constant, direction order).
    """

    def __init__(self, model: GroundModel, structure: ConditionalStructure, K: Sequence[int] = ()):
        mln = model.model
        self.model = model
        self.K = tuple(sorted(K))
        kset = set(self.K)
        self.rest = tuple(i for i in range(mln.k) if i not in kset)
        binary = [i for i, p in enumerate(mln.predicates) if p.arity == 2]
        blocks = []
        for r in self.rest:
            base = structure.y_decomp.blocks[r]
            linked = tuple(mln.atom_index(q, args) for q in binary for c in self.K
                           for args in ((r, c), (c, r)))
            blocks.append(base + linked)
        self.decomp = Decomposition(tuple(blocks))
        self.width = len(structure.y_decomp.blocks[0]) + 2 * len(binary) * len(self.K)
        self.q_atoms = tuple(sorted(a for a, atom in enumerate(model.atoms) if set(atom.args) <= kset))
        self.pairs = {(r, s): structure.pairs[(r, s)] for r, s in itertools.combinations(self.rest, 2)}
        z_atoms = {a: p for p, atoms in self.pairs.items() for a in atoms}

        self.fixed: list[int] = []
        self.single: dict[int, list[int]] = {r: [] for r in self.rest}
        self.pair_y: dict[tuple[int, int], list[int]] = {p: [] for p in self.pairs}
        self.pair_z: dict[tuple[int, int], list[int]] = {p: [] for p in self.pairs}
        for fi, f in enumerate(model.factors):
            outside = sorted(f.constants - kset)
            if not outside:
                self.fixed.append(fi)
            elif len(outside) == 1:
                self.single[outside[0]].append(fi)
            elif len(outside) == 2:
                p = tuple(outside)
                touches_z = any(a in z_atoms for a in atoms_of(f.formula))
                (self.pair_z if touches_z else self.pair_y)[p].append(fi)
            else:
                raise WrongFragmentError(f"ground formula {fi} mentions more than two constants")
        self._table_cache: dict = {}
        self._q_used: tuple[int, ...] | None = None
        if not self.K:
            assert {p: sorted(fs) for p, fs in self.pair_z.items()} == \
                {p: sorted(fs) for p, fs in structure.pair_factors.items()}

    # direct evaluation ---------------------------------------------------

    def pair_log_sum(self, pair: tuple[int, int], y: Mapping[int, int]) -> float:
        """log of the sum over Z_{i,j} of exp(weights of the pair's Z-formulas)."""
        z = self.pairs[pair]
        factors = self.pair_z[pair]
        world = dict(y)
        terms = []
        for bits in itertools.product((0, 1), repeat=len(z)):
            world.update(zip(z, bits))
            terms.append(_fsum_satisfied(self.model, factors, world))
        return float(logsumexp(terms))

    def log_weight(self, y: Mapping[int, int], q: Mapping[int, int]) -> float:
        """log of the sum over all Z of the weight of (y, q, z), evaluated directly."""
        world = {**y, **q}
        parts = [_fsum_satisfied(self.model, self.fixed, world)]
        for r in self.rest:
            parts.append(_fsum_satisfied(self.model, self.single[r], world))
        for p in self.pairs:
            parts.append(_fsum_satisfied(self.model, self.pair_y[p], world))
            parts.append(self.pair_log_sum(p, world))
        return math.fsum(parts)

    # pattern tables ------------------------------------------------------

    def _block_assignment(self, r_pos: int, pattern: int) -> dict[int, int]:
        bits = bit_pattern(pattern, self.width)
        return {a: int(b) for a, b in zip(self.decomp.blocks[r_pos], bits)}

    def _used_positions(self, r_pos: int, factors) -> list[int]:
        mentioned = {a for f in factors for a in atoms_of(self.model.factors[f].formula)}
        return [p for p, a in enumerate(self.decomp.blocks[r_pos]) if a in mentioned]

    def _project(self, pattern: int, positions: Sequence[int]) -> tuple[int, ...]:
        return tuple((pattern >> (self.width - 1 - p)) & 1 for p in positions)

    def tables(self, q: Mapping[int, int]) -> tuple[float, np.ndarray, np.ndarray]:
        """(constant, single[a], pair[a, b]) for the first constants outside K.

        By the renaming symmetry these tables are the same for every constant
        and every pair, so ``W(t)`` only needs the statistic.
        """
        key = tuple(q.get(a) for a in self._table_q_atoms())
        if key not in self._table_cache:
            self._table_cache[key] = self._build_tables(q)
        return self._table_cache[key]

    def _table_q_atoms(self) -> tuple[int, ...]:
        if self._q_used is None:
            factors = list(self.fixed)
            if self.rest:
                factors += self.single[self.rest[0]]
            if len(self.rest) > 1:
                p = (self.rest[0], self.rest[1])
                factors += self.pair_y[p] + self.pair_z[p]
            qset = set(self.q_atoms)
            self._q_used = tuple(sorted({a for f in factors for a in atoms_of(self.model.factors[f].formula)
                                         if a in qset}))
        return self._q_used

    def _build_tables(self, q: Mapping[int, int]) -> tuple[float, np.ndarray, np.ndarray]:
        n = 1 << self.width
        const = _fsum_satisfied(self.model, self.fixed, q)
        single = np.zeros(n)
        pair = np.zeros((n, n))
        if not self.rest:
            return const, single, pair
        r0 = self.rest[0]
        used = self._used_positions(0, self.single[r0])
        memo: dict = {}
        for a in range(n):
            key = self._project(a, used)
            if key not in memo:
                memo[key] = _fsum_satisfied(self.model, self.single[r0], {**q, **self._block_assignment(0, a)})
            single[a] = memo[key]
        if len(self.rest) > 1:
            p = (self.rest[0], self.rest[1])
            factors = self.pair_y[p] + self.pair_z[p]
            used0, used1 = self._used_positions(0, factors), self._used_positions(1, factors)
            memo = {}
            for a in range(n):
                for b in range(n):
                    key = (self._project(a, used0), self._project(b, used1))
                    if key not in memo:
                        y = {**self._block_assignment(0, a), **self._block_assignment(1, b)}
                        memo[key] = _fsum_satisfied(self.model, self.pair_y[p], y) + self.pair_log_sum(p, y)
                    pair[a, b] = memo[key]
        return const, single, pair


class PairwiseTables:
    """``W(t) = const + sum_a c_a g_a + sum over unordered block pairs of F``."""

    def __init__(self, const: float, single: np.ndarray, pair: np.ndarray):
        self.const = const
        self.single = single
        self.pair = pair

    def __call__(self, stats: np.ndarray) -> np.ndarray:
        c = stats.astype(float)
        ordered = ((c @ self.pair) * c).sum(axis=1)
        return self.const + c @ self.single + 0.5 * (ordered - c @ np.diag(self.pair))


class PairwiseDirect:
    """Per-statistic evaluation of the same quantity, from a representative y."""

    def __init__(self, problem: PairwiseProblem, q: Mapping[int, int]):
        self.problem = problem
        self.q = dict(q)

    def __call__(self, stats: np.ndarray) -> np.ndarray:
        out = np.empty(len(stats))
        for s, t in enumerate(stats.tolist()):
            y = exchange.representative(t, {}, self.problem.decomp)
            out[s] = self.problem.log_weight(y, self.q)
        return out


def _pairwise_pass(problem: PairwiseProblem, q: Mapping[int, int], evidences, *, memo: bool,
                   track_best: bool = False, jobs: int = 1, count_cache: dict | None = None) -> _Pass:
    weigh = PairwiseTables(*problem.tables(q)) if memo else PairwiseDirect(problem, q)
    if not problem.rest:
        w = float(weigh(np.zeros((1, 1 << problem.width), dtype=np.int64))[0])
        return _Pass([w for _ in evidences], visited=1, best=(w, ()) if track_best else None)
    profiles = [evidence_profile(e, problem.decomp) for e in evidences]
    return _orbit_pass(problem.width, len(problem.rest), profiles, weigh, track_best=track_best, jobs=jobs,
                       count_cache=count_cache)


def _check_y_evidence(structure: ConditionalStructure, evidence: Mapping[int, int]):
    stray = [a for a in evidence if a not in structure.y_atoms]
    if stray:
        raise EngineError(f"evidence on off-diagonal binary atoms {stray}; use bounded_binary_query")


def conditional_log_probs(model: GroundModel, structure: ConditionalStructure,
                          evidences: Sequence[Mapping[int, int]], *, memo: bool = True,
                          jobs: int = 1) -> tuple[list[float], _Pass]:
    for e in evidences:
        _check_y_evidence(structure, e)
    problem = PairwiseProblem(model, structure)
    res = _pairwise_pass(problem, {}, list(evidences) + [{}], memo=memo, jobs=jobs)
    return res.logs, res


def conditional_marginal(model: GroundModel, structure: ConditionalStructure, evidence: Mapping[int, int], *,
                         memo: bool = True, jobs: int = 1) -> QueryResult:
    """Pr(evidence) for evidence on Y atoms only, summing Z out pair by pair."""
    start = time.perf_counter()
    logs, res = conditional_log_probs(model, structure, [evidence], memo=memo, jobs=jobs)
    lp = logs[0] - logs[1]
    return QueryResult("marginal", probability=math.exp(lp), log_probability=lp, log_partition=logs[1],
                       statistics_visited=res.visited, infeasible=res.infeasible,
                       elapsed_ms=(time.perf_counter() - start) * 1e3)


def conditional_mpe(model: GroundModel, structure: ConditionalStructure, evidence: Mapping[int, int], *,
                    memo: bool = True, jobs: int = 1) -> QueryResult:
    """argmax over Y of the marginal Pr(y) (Z summed out, not maximised)."""
    start = time.perf_counter()
    _check_y_evidence(structure, evidence)
    problem = PairwiseProblem(model, structure)
    res = _pairwise_pass(problem, {}, [evidence, {}], memo=memo, track_best=True, jobs=jobs)
    if res.best is None:
        raise InfeasibleEvidenceError("evidence is infeasible under every statistic")
    y = exchange.representative(res.best[1], evidence, problem.decomp)
    return QueryResult("mpe", assignment=dict(sorted(y.items())), log_weight=problem.log_weight(y, {}),
                       log_partition=res.logs[1], statistics_visited=res.visited, infeasible=res.infeasible,
                       elapsed_ms=(time.perf_counter() - start) * 1e3)


def pair_factor_sum(model: GroundModel, structure: ConditionalStructure, pattern_i: int | str,
                    pattern_j: int | str, pair: tuple[int, int]) -> float:
    """log-sum over Z_{i,j} of the pair's factor, with Y-blocks i and j set to the patterns."""
    i, j = sorted(pair)
    w = structure.y_decomp.width
    y = {}
    for const, pattern in ((i, pattern_i), (j, pattern_j)):
        bits = pattern if isinstance(pattern, str) else bit_pattern(pattern, w)
        y.update({a: int(b) for a, b in zip(structure.y_decomp.blocks[const], bits)})
    return PairwiseProblem(model, structure).pair_log_sum((i, j), y)


def query_constants(structure: ConditionalStructure, evidence: Mapping[int, int]) -> tuple[int, ...]:
    """Constants of the off-diagonal binary atoms in ``evidence``."""
    return tuple(sorted({c for a in evidence if a in structure.z_pair for c in structure.z_pair[a]}))


def bounded_log_probs(model: GroundModel, structure: ConditionalStructure,
                      evidences: Sequence[Mapping[int, int]], *, k_bound: int = 2, memo: bool = True,
                      jobs: int = 1) -> tuple[list[float], int]:
    """Like :func:`conditional_log_probs` but evidence may touch binary atoms.

    The states of Q (atoms over the query constants K) are enumerated; each
    one leaves a problem whose Y-blocks are exchangeable again.
    """
    K = sorted({c for e in evidences for c in query_constants(structure, e)})
    if len(K) > k_bound:
        raise EngineError(f"query mentions {len(K)} constants in binary atoms, bound is {k_bound}")
    if not K:
        logs, res = conditional_log_probs(model, structure, evidences, memo=memo, jobs=jobs)
        return logs, res.visited
    problem = PairwiseProblem(model, structure, K)
    qset = set(problem.q_atoms)
    split = [({a: v for a, v in e.items() if a in qset}, {a: v for a, v in e.items() if a not in qset})
             for e in evidences]
    parts: list[list[float]] = [[] for _ in range(len(evidences) + 1)]
    visited = 0
    counts: dict = {}     # suborbit sizes do not depend on the Q state
    for bits in itertools.product((0, 1), repeat=len(problem.q_atoms)):
        q = dict(zip(problem.q_atoms, bits))
        live = [i for i, (eq, _) in enumerate(split) if all(q[a] == v for a, v in eq.items())]
        res = _pairwise_pass(problem, q, [split[i][1] for i in live] + [{}], memo=memo, jobs=jobs,
                             count_cache=counts)
        visited += res.visited
        for i, lp in zip(live, res.logs):
            parts[i].append(lp)
        parts[-1].append(res.logs[-1])
    return [float(logsumexp(p)) if p else -math.inf for p in parts], visited


def bounded_binary_query(model: GroundModel, structure: ConditionalStructure, evidence: Mapping[int, int], *,
                         k_bound: int = 2, memo: bool = True, jobs: int = 1) -> QueryResult:
    """Pr(evidence) where evidence may fix a bounded number of binary atoms."""
    start = time.perf_counter()
    if not query_constants(structure, evidence):
        return conditional_marginal(model, structure, evidence, memo=memo, jobs=jobs)
    logs, visited = bounded_log_probs(model, structure, [evidence], k_bound=k_bound, memo=memo, jobs=jobs)
    lp = logs[0] - logs[1]
    return QueryResult("marginal", probability=math.exp(lp), log_probability=lp, log_partition=logs[1],
                       statistics_visited=visited, elapsed_ms=(time.perf_counter() - start) * 1e3)


def bounded_mpe(model: GroundModel, structure: ConditionalStructure, evidence: Mapping[int, int], *,
                k_bound: int = 2, memo: bool = True, jobs: int = 1) -> QueryResult:
    """argmax over (Q, Y) of their marginal, Z summed out."""
    start = time.perf_counter()
    K = query_constants(structure, evidence)
    if not K:
        return conditional_mpe(model, structure, evidence, memo=memo, jobs=jobs)
    if len(K) > k_bound:
        raise EngineError(f"query mentions {len(K)} constants in binary atoms, bound is {k_bound}")
    problem = PairwiseProblem(model, structure, K)
    qset = set(problem.q_atoms)
    e_rest = {a: v for a, v in evidence.items() if a not in qset}
    best = None
    visited = 0
    counts: dict = {}
    z_parts = []
    for bits in itertools.product((0, 1), repeat=len(problem.q_atoms)):
        q = dict(zip(problem.q_atoms, bits))
        if any(q[a] != v for a, v in evidence.items() if a in qset):
            res = _pairwise_pass(problem, q, [{}], memo=memo, jobs=jobs, count_cache=counts)
            z_parts.append(res.logs[0])
            visited += res.visited
            continue
        res = _pairwise_pass(problem, q, [e_rest, {}], memo=memo, track_best=True, jobs=jobs,
                             count_cache=counts)
        z_parts.append(res.logs[1])
        visited += res.visited
        if res.best is not None and (best is None or res.best[0] > best[0] + TIE_TOL * max(1.0, abs(best[0]))):
            best = (res.best[0], res.best[1], q)
    if best is None:
        raise InfeasibleEvidenceError("evidence is infeasible under every statistic")
    _, t, q = best
    y = exchange.representative(t, e_rest, problem.decomp) if problem.rest else {}
    return QueryResult("mpe", assignment=dict(sorted({**y, **q}.items())), log_weight=problem.log_weight(y, q),
                       log_partition=float(logsumexp(z_parts)), statistics_visited=visited,
                       elapsed_ms=(time.perf_counter() - start) * 1e3)
