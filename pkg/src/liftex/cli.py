"""Command line front end: ``liftex {infer,validate,bench,describe}``.

Exit codes: 0 ok, 1 validation failure, 2 parse/usage error, 3 no engine can
answer (unsupported fragment and oracle over its cap), 4 infeasible evidence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import inference
from .detectors import Fragment, classify, in_two_variable_fragment, two_var_structure
from .exchange import statistic_count
from .logic import GroundModel, ModelSyntaxError, format_formula, ground, parse_model
from .oracle import DEFAULT_CAP, OracleCapExceeded, oracle_for
from .world import InconsistentEvidenceError, merge_evidence, parse_assignments, parse_evidence

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_INFEASIBLE = 0, 1, 2, 3, 4
VALIDATE_TOL = 1e-10


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    model: str
    evidence: str | None = None
    query: str | None = None
    mode: str = "marginal"
    engine: str = "auto"
    k_bound: int = 2
    memo: bool = True
    fmt: str = "json"
    jobs: int = 1
    seed: int = 0
    oracle_cap: int = DEFAULT_CAP
    queries: int = 200
    ks: list[int] = field(default_factory=lambda: [25, 50, 100, 200])


# -- engine selection -----------------------------------------------------------

@dataclass
class Answer:
    engine: str
    fragment: str
    log_probability: float | None = None      # log Pr(query | evidence)
    assignment: dict[int, int] | None = None
    log_weight: float | None = None
    log_partition: float | None = None
    statistics_visited: int = 0


def _route(g: GroundModel, atoms, engine: str, k_bound: int, cap: int) -> tuple[str, str]:
    """Pick (engine, path) for the atoms a query touches."""
    kind = classify(g.model).kind
    lifted = None
    if kind is Fragment.MONADIC:
        lifted = "monadic"
    elif kind is Fragment.TWO_VARIABLE:
        structure_atoms = set(classify(g.model).decomposition.scope)
        off = {c for a in atoms if a not in structure_atoms for c in g.atoms[a].args}
        lifted = "conditional" if not off else ("bounded" if len(off) <= k_bound else None)
    if engine == "lifted" or (engine == "auto" and lifted):
        if lifted is None:
            reason = "unsupported fragment" if kind is Fragment.UNSUPPORTED else \
                f"query needs more than {k_bound} constants in binary atoms"
            raise CliError(f"lifted engine cannot answer: {reason}", EXIT_UNSUPPORTED)
        return "lifted", lifted
    if g.n > cap:
        raise CliError(f"{kind.value} model with {g.n} atoms: oracle cap {cap} exceeded", EXIT_UNSUPPORTED)
    return "oracle", "oracle"


def answer(g: GroundModel, evidence, query, *, mode: str = "marginal", engine: str = "auto",
           k_bound: int = 2, memo: bool = True, jobs: int = 1, cap: int = DEFAULT_CAP) -> Answer:
    """Pr(query | evidence), or the MPE completion of evidence and query."""
    try:
        joint = merge_evidence(evidence, query)
    except InconsistentEvidenceError as exc:
        raise CliError(f"infeasible evidence: {exc}", EXIT_INFEASIBLE) from None
    used, path = _route(g, joint, engine, k_bound, cap)
    fragment = classify(g.model).kind.value
    try:
        if mode == "mpe":
            return _mpe(g, joint, used, path, fragment, k_bound, memo, jobs, cap)
        evs = [joint, evidence]
        if path == "monadic":
            decomp = classify(g.model).decomposition
            logs, res = inference.lifted_log_probs(g, decomp, evs, jobs=jobs)
            visited = res.visited
        elif path == "conditional":
            logs, res = inference.conditional_log_probs(g, two_var_structure(g.model, g), evs, memo=memo,
                                                        jobs=jobs)
            visited = res.visited
        elif path == "bounded":
            logs, visited = inference.bounded_log_probs(g, two_var_structure(g.model, g), evs, k_bound=k_bound,
                                                        memo=memo, jobs=jobs)
        else:
            oracle = oracle_for(g, cap)
            logs = [oracle.log_prob(joint), oracle.log_prob(evidence), oracle.log_partition]
            visited = 0
    except InconsistentEvidenceError as exc:
        raise CliError(f"infeasible evidence: {exc}", EXIT_INFEASIBLE) from None
    if logs[1] == -math.inf:
        raise CliError("infeasible evidence: no world agrees with it", EXIT_INFEASIBLE)
    return Answer(used, fragment, log_probability=logs[0] - logs[1], log_partition=logs[2],
                  statistics_visited=visited)


def _mpe(g, joint, used, path, fragment, k_bound, memo, jobs, cap) -> Answer:
    try:
        if path == "monadic":
            r = inference.lifted_mpe(g, classify(g.model).decomposition, joint, jobs=jobs)
        elif path in ("conditional", "bounded"):
            r = inference.bounded_mpe(g, two_var_structure(g.model, g), joint, k_bound=k_bound, memo=memo,
                                      jobs=jobs)
        else:
            world, lw = oracle_for(g, cap).mpe(joint)
            return Answer(used, fragment, assignment=dict(enumerate(world)), log_weight=lw,
                          log_partition=oracle_for(g, cap).log_partition)
    except inference.InfeasibleEvidenceError as exc:
        raise CliError(f"infeasible evidence: {exc}", EXIT_INFEASIBLE) from None
    return Answer(used, fragment, assignment=r.assignment, log_weight=r.log_weight, log_partition=r.log_partition,
                  statistics_visited=r.statistics_visited)


# -- commands -------------------------------------------------------------------

def _load(cfg: RunConfig) -> tuple[GroundModel, dict, dict]:
    source = cfg.model
    try:
        g = ground(parse_model(Path(cfg.model).read_text(encoding="utf-8")))
        source = cfg.evidence
        evidence = parse_evidence(Path(cfg.evidence).read_text(encoding="utf-8"), g) if cfg.evidence else {}
        source = "--query"
        query = parse_assignments(cfg.query, g) if cfg.query else {}
    except (ModelSyntaxError, OSError) as exc:
        raise CliError(f"{source}: {exc}", EXIT_PARSE) from None
    return g, evidence, query


def _emit(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            value = ", ".join(f"{k}={v}" for k, v in value.items())
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def cmd_infer(cfg: RunConfig) -> tuple[int, str]:
    start = time.perf_counter()
    g, evidence, query = _load(cfg)
    a = answer(g, evidence, query, mode=cfg.mode, engine=cfg.engine, k_bound=cfg.k_bound, memo=cfg.memo,
               jobs=cfg.jobs, cap=cfg.oracle_cap)
    report = {"mode": cfg.mode, "engine": a.engine, "fragment": a.fragment}
    if cfg.mode == "mpe":
        report["mpe_assignment"] = {g.atom_name(i): v for i, v in sorted(a.assignment.items())}
        report["log_weight"] = a.log_weight
    else:
        report["probability"] = math.exp(a.log_probability)
    report["log_partition"] = a.log_partition
    report["statistics_visited"] = a.statistics_visited
    report["elapsed_ms"] = round((time.perf_counter() - start) * 1e3, 3)
    return EXIT_OK, _emit(report, cfg.fmt)


def _random_query(rng: np.random.Generator, g: GroundModel, y_atoms: list[int], binary: list[int]):
    """One query atom plus up to two evidence atoms, at most one of them off-diagonal binary."""
    pool = list(y_atoms)
    chosen = [int(a) for a in rng.choice(pool, size=min(len(pool), int(rng.integers(1, 4))), replace=False)]
    if binary and rng.random() < 0.25:
        chosen[int(rng.integers(len(chosen)))] = int(rng.choice(binary))
    values = [int(v) for v in rng.integers(0, 2, size=len(chosen))]
    query = {chosen[0]: values[0]}
    evidence = dict(zip(chosen[1:], values[1:]))
    return query, evidence


def cmd_validate(cfg: RunConfig) -> tuple[int, str]:
    g, _, _ = _load(cfg)
    fc = classify(g.model)
    if fc.kind is Fragment.UNSUPPORTED:
        raise CliError("validate needs a liftable model; this one is Unsupported", EXIT_UNSUPPORTED)
    try:
        oracle = oracle_for(g, cfg.oracle_cap)
    except OracleCapExceeded as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from None
    y_atoms = sorted(fc.decomposition.scope)
    binary = [] if fc.kind is Fragment.MONADIC else \
        [a for a in range(g.n) if a not in fc.decomposition.scope]
    rng = np.random.default_rng(cfg.seed)
    lines = [f"model: {Path(cfg.model).name}", f"fragment: {fc.kind.value}", f"seed: {cfg.seed}",
             f"queries: {cfg.queries}"]
    worst = 0.0
    for n in range(cfg.queries):
        query, evidence = _random_query(rng, g, y_atoms, binary)
        a = answer(g, evidence, query, engine="lifted", k_bound=max(cfg.k_bound, 2), memo=cfg.memo,
                   jobs=cfg.jobs, cap=cfg.oracle_cap)
        lifted = math.exp(a.log_probability)
        exact = math.exp(oracle.log_prob({**evidence, **query}) - oracle.log_prob(evidence))
        err = abs(lifted - exact) / abs(exact) if exact else abs(lifted)
        worst = max(worst, err)
        q = ",".join(f"{g.atom_name(i)}={v}" for i, v in query.items())
        e = ",".join(f"{g.atom_name(i)}={v}" for i, v in sorted(evidence.items())) or "-"
        lines.append(f"{n:04d} P({q} | {e}) lifted={lifted!r} oracle={exact!r} relerr={err:.3e}")
    ok = worst <= VALIDATE_TOL
    lines.append(f"max_relative_error: {worst:.3e}")
    lines.append(f"status: {'PASS' if ok else 'FAIL'} (tolerance {VALIDATE_TOL:g})")
    return (EXIT_OK if ok else EXIT_FAIL), "\n".join(lines) + "\n"


def cmd_bench(cfg: RunConfig) -> tuple[int, str]:
    g0, _, _ = _load(cfg)
    fc = classify(g0.model)
    if fc.kind is Fragment.UNSUPPORTED:
        raise CliError("bench needs a liftable model", EXIT_UNSUPPORTED)
    rows = ["k,statistics,elapsed_ms,engine,oracle"]
    for k in cfg.ks:
        g = ground(g0.model.with_domain(k))
        # default query: the first ground atom is true
        query = parse_assignments(cfg.query, g) if cfg.query else {0: 1}
        start = time.perf_counter()
        a = answer(g, {}, query, engine="lifted", k_bound=cfg.k_bound, memo=cfg.memo, jobs=cfg.jobs)
        ms = (time.perf_counter() - start) * 1e3
        oracle = "infeasible" if g.n > cfg.oracle_cap else "feasible"
        rows.append(f"{k},{a.statistics_visited},{ms:.1f},lifted,{oracle}")
    return EXIT_OK, "\n".join(rows) + "\n"


def describe(g: GroundModel) -> dict:
    fc = classify(g.model)
    out = {"fragment": fc.kind.value, "domain_size": g.k, "ground_atoms": g.n, "ground_formulas": len(g.factors)}
    names = g.atom_names()
    if fc.kind is Fragment.UNSUPPORTED:
        out["summary"] = "Unsupported (oracle only)"
        out["reason"] = fc.reason
        return out
    d = fc.decomposition
    p = 1 << d.width
    size = statistic_count(d.k, d.width)
    formula = f"C({d.k + p - 1},{p - 1}) = {size}"
    out["width"] = d.width
    out["blocks"] = [[names[a] for a in b] for b in d.blocks]
    out["statistics"] = size
    if fc.kind is Fragment.MONADIC:
        out["summary"] = f"Monadic, width {d.width}, {d.k} blocks, |T| = {formula}"
    else:
        s = two_var_structure(g.model, g)
        out["pairs"] = len(s.pairs)
        out["pair_width"] = len(next(iter(s.pairs.values()))) if s.pairs else 0
        out["summary"] = f"TwoVariable, Y width {d.width}, {len(s.pairs)} pairs, |T| = {formula}"
    return out


def cmd_describe(cfg: RunConfig) -> tuple[int, str]:
    g, _, _ = _load(cfg)
    info = describe(g)
    if cfg.fmt == "json":
        return EXIT_OK, json.dumps(info, indent=2) + "\n"
    lines = [info["summary"]]
    if "reason" in info:
        lines.append(f"reason: {info['reason']}")
    for key in ("domain_size", "ground_atoms", "ground_formulas"):
        lines.append(f"{key}: {info[key]}")
    for i, b in enumerate(info.get("blocks", [])):
        lines.append(f"block {i}: {{{', '.join(b)}}}")
    formulas = [f"{wf.weight!r} {format_formula(wf.formula)}" for wf in g.model.formulas]
    lines += [f"formula {i}: {f}" for i, f in enumerate(formulas, 1)]
    return EXIT_OK, "\n".join(lines) + "\n"


# -- argument parsing -------------------------------------------------------------

def _ks(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model file")
    common.add_argument("--evidence", help="evidence file (Atom(args) = 0|1 per line)")
    common.add_argument("--query", help='query atoms, e.g. "Smokes(A)=1,Friends(A,B)=0"')
    common.add_argument("--mode", choices=["marginal", "mpe"], default="marginal")
    common.add_argument("--engine", choices=["auto", "lifted", "oracle"], default="auto")
    common.add_argument("--k-bound", type=int, default=2, help="max constants in binary query atoms")
    common.add_argument("--no-memo", dest="memo", action="store_false", help="disable pair-type memoisation")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", dest="fmt", choices=["json", "text"], default="json")
    common.add_argument("--oracle-cap", type=int, default=DEFAULT_CAP)

    parser = argparse.ArgumentParser(prog="liftex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("infer", parents=[common], help="answer a marginal or MPE query")
    v = sub.add_parser("validate", parents=[common], help="compare lifted and exhaustive answers")
    v.add_argument("--queries", type=int, default=200)
    b = sub.add_parser("bench", parents=[common], help="statistics visited and time per domain size (CSV)")
    b.add_argument("--ks", type=_ks, default=[25, 50, 100, 200])
    sub.add_parser("describe", parents=[common], help="fragment, decomposition and statistic space")
    return parser


COMMANDS = {"infer": cmd_infer, "validate": cmd_validate, "bench": cmd_bench, "describe": cmd_describe}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k != "command"})
    try:
        code, out = COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"liftex: error: {exc}", file=sys.stderr)
        return exc.code
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
