"""Recognise liftable MLN fragments and build their decompositions."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .exchange import Decomposition
from .logic import GroundModel, MLNModel, atoms_of, ground as ground_model


class Fragment(str, enum.Enum):
    MONADIC = "Monadic"
    TWO_VARIABLE = "TwoVariable"
    UNSUPPORTED = "Unsupported"


class WrongFragmentError(ValueError):
    pass


@dataclass(frozen=True)
class FragmentClass:
    kind: Fragment
    decomposition: Decomposition | None = None   # full scope (monadic) or the Y part (two-variable)
    reason: str = ""


def classify(model: MLNModel) -> FragmentClass:
    """Monadic beats TwoVariable when both apply: its width is smaller."""
    arities = [p.arity for p in model.predicates]
    if all(a == 1 for a in arities):
        return FragmentClass(Fragment.MONADIC, monadic_decomposition(model))
    if max(arities, default=0) > 2:
        big = [p.name for p in model.predicates if p.arity > 2]
        return FragmentClass(Fragment.UNSUPPORTED, reason=f"predicates of arity > 2: {', '.join(big)}")
    for i, wf in enumerate(model.formulas):
        if len(wf.variables) > 2:
            return FragmentClass(Fragment.UNSUPPORTED,
                                 reason=f"formula {i + 1} has {len(wf.variables)} logical variables")
    return FragmentClass(Fragment.TWO_VARIABLE, _y_decomposition(model))


def in_two_variable_fragment(model: MLNModel) -> bool:
    return all(p.arity <= 2 for p in model.predicates) and all(len(wf.variables) <= 2 for wf in model.formulas)


def monadic_decomposition(model: MLNModel) -> Decomposition:
    """Block ``i`` holds ``P(i)`` for every predicate ``P``, in predicate order."""
    if any(p.arity != 1 for p in model.predicates):
        raise WrongFragmentError("monadic decomposition needs unary predicates only")
    offsets = model.predicate_offsets()
    return Decomposition(tuple(tuple(off + i for off in offsets) for i in range(model.k)))


def _unary_binary(model: MLNModel) -> tuple[list[int], list[int]]:
    unary = [i for i, p in enumerate(model.predicates) if p.arity == 1]
    binary = [i for i, p in enumerate(model.predicates) if p.arity == 2]
    return unary, binary


def _y_decomposition(model: MLNModel) -> Decomposition:
    unary, binary = _unary_binary(model)
    blocks = []
    for i in range(model.k):
        blocks.append(tuple(model.atom_index(p, (i,)) for p in unary)
                      + tuple(model.atom_index(q, (i, i)) for q in binary))
    return Decomposition(tuple(blocks))


@dataclass(frozen=True)
class ConditionalStructure:
    """Y (unary and reflexive binary atoms, one block per constant) and the
    independent pair components Z_{i,j} of the off-diagonal binary atoms."""
    y_decomp: Decomposition
    pairs: Mapping[tuple[int, int], tuple[int, ...]]     # (i, j), i < j -> Z_{i,j}
    y_factors: tuple[int, ...]
    pair_factors: Mapping[tuple[int, int], tuple[int, ...]]
    z_pair: Mapping[int, tuple[int, int]]               # Z atom -> its pair

    @property
    def y_atoms(self) -> frozenset[int]:
        return self.y_decomp.scope


def two_var_structure(model: MLNModel, ground: GroundModel | None = None) -> ConditionalStructure:
    """Split a two-variable model into Y-blocks and per-pair Z components.

    Every ground formula that mentions no off-diagonal binary atom goes to the
    Y group; every other one mentions the Z atoms of exactly one pair.
    """
    # monadic models with at most two variables per formula are a degenerate case (empty Z)
    if not in_two_variable_fragment(model):
        raise WrongFragmentError("model is not in the two-variable fragment")
    if ground is None:
        ground = ground_model(model)
    elif ground.model != model:
        raise ValueError("ground model does not belong to this model")
    _, binary = _unary_binary(model)
    k = model.k
    pairs = {}
    z_pair = {}
    for i in range(k):
        for j in range(i + 1, k):
            atoms = tuple(model.atom_index(q, (i, j)) for q in binary) \
                + tuple(model.atom_index(q, (j, i)) for q in binary)
            pairs[(i, j)] = atoms
            for a in atoms:
                z_pair[a] = (i, j)
    y_factors = []
    pair_factors: dict[tuple[int, int], list[int]] = {p: [] for p in pairs}
    for fi, f in enumerate(ground.factors):
        touched = {z_pair[a] for a in atoms_of(f.formula) if a in z_pair}
        if not touched:
            y_factors.append(fi)
        elif len(touched) == 1:
            pair_factors[touched.pop()].append(fi)
        else:
            raise AssertionError(f"ground formula {fi} spans pairs {sorted(touched)}")
    return ConditionalStructure(
        _y_decomposition(model), pairs, tuple(y_factors),
        {p: tuple(fs) for p, fs in pair_factors.items()}, z_pair)
