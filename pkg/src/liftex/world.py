"""World weights in log space, evidence handling and exact-integer logs."""
from __future__ import annotations

import math
import re
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .logic import GroundModel, ModelSyntaxError, eval_formula

__all__ = [
    "log_weight", "compatible", "parse_evidence", "parse_assignments", "format_evidence",
    "merge_evidence", "log_int", "logsumexp", "InconsistentEvidenceError",
]

Evidence = Mapping[int, int]


class InconsistentEvidenceError(ValueError):
    """An atom is assigned two different values."""


def log_weight(model: GroundModel, world) -> float:
    """Sum of weights of the ground formulas ``world`` satisfies.

    This is ``log Pr(world) + log Z``.
    """
    return math.fsum(f.weight for f in model.factors if eval_formula(f.formula, world))


def compatible(world, evidence: Evidence) -> bool:
    return all(world[a] == v for a, v in evidence.items())


def log_int(n: int) -> float:
    """Natural log of a non-negative arbitrary-precision integer (``-inf`` for 0)."""
    if n == 0:
        return -math.inf
    return math.log(n)


def merge_evidence(*parts: Evidence) -> dict[int, int]:
    out: dict[int, int] = {}
    for part in parts:
        for a, v in part.items():
            if out.setdefault(a, v) != v:
                raise InconsistentEvidenceError(f"atom {a} assigned both 0 and 1")
    return out


_ASSIGN = re.compile(r"\s*([A-Z][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*=\s*([01])\s*\Z")


def _assign(model: GroundModel, text: str, line: int = 0) -> tuple[int, int]:
    m = _ASSIGN.match(text)
    if m is None:
        raise ModelSyntaxError(f"expected 'Atom(args) = 0|1', got {text.strip()!r}", line, 1)
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
    try:
        atom = model.lookup(m.group(1), args)
    except KeyError as exc:
        raise ModelSyntaxError(str(exc.args[0]), line, 1) from None
    return atom, int(m.group(3))


def _collect(pairs) -> dict[int, int]:
    out: dict[int, int] = {}
    for (atom, value), line in pairs:
        if atom in out:
            raise ModelSyntaxError(f"atom {atom} assigned twice", line, 1)
        out[atom] = value
    return out


def parse_evidence(text: str, model: GroundModel) -> dict[int, int]:
    """Parse an evidence file: one ``Atom(C1,C2) = 0|1`` per line, ``#`` comments."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            pairs.append((_assign(model, line, lineno), lineno))
    return _collect(pairs)


def parse_assignments(text: str, model: GroundModel) -> dict[int, int]:
    """Parse a comma separated query such as ``Smokes(A)=1, Friends(A,B)=0``."""
    items = re.findall(r"[^,()]+\([^()]*\)\s*=\s*[01]", text)
    if not items or re.sub(r"[\s,]", "", "".join(items)) != re.sub(r"[\s,]", "", text):
        raise ModelSyntaxError(f"malformed query {text!r}")
    return _collect((_assign(model, item), 0) for item in items)


def format_evidence(model: GroundModel, evidence: Evidence) -> str:
    return "".join(f"{model.atom_name(a)} = {v}\n" for a, v in sorted(evidence.items()))


def world_from_int(x: int, n: int) -> np.ndarray:
    """World with atom ``i`` set to bit ``i`` of ``x`` (atom 0 least significant)."""
    return (x >> np.arange(n)) & 1


def world_to_int(world: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(world))
