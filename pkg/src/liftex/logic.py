"""Function-free first-order Markov logic: formulas, model files and grounding.

Model file format::

    # comment
    domain 3                 (or: constants Alice Bob Carol)
    1.3   Smokes(x) => Cancer(x)
    1.5   Smokes(x) & Friends(x, y) => Smokes(y)

Connectives by decreasing precedence: ``!``, ``&``, ``|``, ``=>``, ``<=>``.
``=>`` and ``<=>`` associate to the right, ``&`` and ``|`` to the left.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

import numpy as np


class ModelSyntaxError(ValueError):
    """Raised for malformed model or evidence text."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class UnassignedAtomError(KeyError):
    pass


# -- formula tree ------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """A first-order atom ``Pred(x, y)`` or, once grounded, an atom index leaf."""
    predicate: str
    args: tuple[str, ...]

    def __str__(self):
        return f"{self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


# Ground formulas use the same connectives with int leaves (ground atom indices).
Formula = Union[Atom, Not, And, Or, Implies, Iff, int]

_BINARY = {And: "&", Or: "|", Implies: "=>", Iff: "<=>"}


def atoms_of(formula: Formula) -> Iterator:
    """Yield the leaves of ``formula`` left to right (with repeats)."""
    if isinstance(formula, (Atom, int)):
        yield formula
    elif isinstance(formula, Not):
        yield from atoms_of(formula.arg)
    else:
        yield from atoms_of(formula.left)
        yield from atoms_of(formula.right)


def variables_of(formula: Formula) -> tuple[str, ...]:
    """Distinct logical variables in order of first occurrence."""
    seen: dict[str, None] = {}
    for atom in atoms_of(formula):
        for v in atom.args:
            seen.setdefault(v, None)
    return tuple(seen)


def format_formula(formula: Formula, names: Sequence[str] | None = None) -> str:
    """Render a formula in model-file syntax.

    Binary sub-formulas are always parenthesised, so the output re-parses to
    an identical tree. Integer leaves are rendered through ``names`` if given.
    """
    if isinstance(formula, Atom):
        return str(formula)
    if isinstance(formula, int):
        return names[formula] if names is not None else f"#{formula}"
    if isinstance(formula, Not):
        inner = format_formula(formula.arg, names)
        if not isinstance(formula.arg, (Atom, int, Not)):
            inner = f"({inner})"
        return "!" + inner

    def side(f):
        s = format_formula(f, names)
        return f"({s})" if type(f) in _BINARY else s

    return f"{side(formula.left)} {_BINARY[type(formula)]} {side(formula.right)}"


def substitute(formula: Formula, leaf) -> Formula:
    """Rebuild ``formula`` with every atom replaced by ``leaf(atom)``."""
    if isinstance(formula, (Atom, int)):
        return leaf(formula)
    if isinstance(formula, Not):
        return Not(substitute(formula.arg, leaf))
    return type(formula)(substitute(formula.left, leaf), substitute(formula.right, leaf))


def eval_formula(formula: Formula, world) -> bool:
    """Truth value of a ground formula.

    ``world`` is a sequence or mapping indexed by ground atom index.
    """
    if isinstance(formula, int):
        try:
            return bool(world[formula])
        except (KeyError, IndexError):
            raise UnassignedAtomError(formula) from None
    if isinstance(formula, Not):
        return not eval_formula(formula.arg, world)
    if isinstance(formula, And):
        return eval_formula(formula.left, world) and eval_formula(formula.right, world)
    if isinstance(formula, Or):
        return eval_formula(formula.left, world) or eval_formula(formula.right, world)
    if isinstance(formula, Implies):
        return (not eval_formula(formula.left, world)) or eval_formula(formula.right, world)
    if isinstance(formula, Iff):
        return eval_formula(formula.left, world) == eval_formula(formula.right, world)
    raise TypeError(f"not a ground formula: {formula!r}")


def eval_formula_array(formula: Formula, columns) -> np.ndarray:
    """Vectorised evaluation; ``columns[i]`` is a boolean array for atom ``i``."""
    if isinstance(formula, int):
        return columns[formula]
    if isinstance(formula, Not):
        return ~eval_formula_array(formula.arg, columns)
    a = eval_formula_array(formula.left, columns)
    b = eval_formula_array(formula.right, columns)
    if isinstance(formula, And):
        return a & b
    if isinstance(formula, Or):
        return a | b
    if isinstance(formula, Implies):
        return ~a | b
    return a == b


# -- models ------------------------------------------------------------------

@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int


@dataclass(frozen=True)
class WeightedFormula:
    weight: float
    formula: Formula

    @property
    def variables(self) -> tuple[str, ...]:
        return variables_of(self.formula)


@dataclass(frozen=True)
class MLNModel:
    predicates: tuple[Predicate, ...]
    formulas: tuple[WeightedFormula, ...]
    domain: tuple[str, ...]
    named_domain: bool = False

    def __post_init__(self):
        if not self.domain:
            raise ValueError("domain must contain at least one constant")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("domain constants must be distinct")
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise ValueError("duplicate predicate names")
        arity = {p.name: p.arity for p in self.predicates}
        for wf in self.formulas:
            if not np.isfinite(wf.weight):
                raise ValueError(f"weight must be finite, got {wf.weight}")
            for atom in atoms_of(wf.formula):
                if arity.get(atom.predicate) != len(atom.args):
                    raise ValueError(f"undeclared predicate or wrong arity: {atom}")

    @property
    def k(self) -> int:
        return len(self.domain)

    def predicate_index(self, name: str) -> int:
        for i, p in enumerate(self.predicates):
            if p.name == name:
                return i
        raise KeyError(name)

    def predicate_offsets(self) -> list[int]:
        """First ground-atom index of every predicate."""
        offsets, total = [], 0
        for p in self.predicates:
            offsets.append(total)
            total += self.k ** p.arity
        return offsets

    def atom_index(self, predicate: int, args: Sequence[int]) -> int:
        """Canonical index of ``predicate(args)`` (args are constant indices)."""
        index = 0
        for a in args:
            index = index * self.k + a
        return self.predicate_offsets()[predicate] + index

    def with_domain(self, domain: int | Sequence[str]) -> "MLNModel":
        """Same formulas over a different domain (an int means ``C1..Ck``)."""
        if isinstance(domain, int):
            return MLNModel(self.predicates, self.formulas, default_constants(domain), False)
        return MLNModel(self.predicates, self.formulas, tuple(domain), True)


def default_constants(k: int) -> tuple[str, ...]:
    return tuple(f"C{i}" for i in range(1, k + 1))


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(<=>|=>|[!&|(),])|([A-Za-z_][A-Za-z0-9_]*)|(\S))")
_PRED = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
_VAR = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class _FormulaParser:
    def __init__(self, text: str, line: int, col0: int):
        self.tokens = []
        self.line = line
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:  # trailing whitespace
                break
            if m.group(3):
                raise ModelSyntaxError(f"unexpected character {m.group(3)!r}", line, col0 + m.start(3) + 1)
            kind = "op" if m.group(1) else "name"
            start = m.start(1) if m.group(1) else m.start(2)
            self.tokens.append((kind, m.group(1) or m.group(2), col0 + start + 1))
            pos = m.end()
        self.end_col = col0 + len(text) + 1
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "", self.end_col)

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            shown = "end of line" if tok[0] == "eof" else repr(tok[1])
            raise ModelSyntaxError(f"expected {value!r}, found {shown}", self.line, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.iff()
        tok = self.peek()
        if tok[0] != "eof":
            raise ModelSyntaxError(f"unexpected {tok[1]!r}", self.line, tok[2])
        return f

    def iff(self):
        left = self.implies()
        if self.peek()[1] == "<=>":
            self.take()
            return Iff(left, self.iff())
        return left

    def implies(self):
        left = self.disj()
        if self.peek()[1] == "=>":
            self.take()
            return Implies(left, self.implies())
        return left

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self):
        tok = self.peek()
        if tok[1] == "!":
            self.take()
            return Not(self.unary())
        if tok[1] == "(":
            self.take()
            f = self.iff()
            self.take(")")
            return f
        if tok[0] == "name":
            return self.atom()
        shown = "end of line" if tok[0] == "eof" else repr(tok[1])
        raise ModelSyntaxError(f"expected a formula, found {shown}", self.line, tok[2])

    def atom(self):
        _, name, col = self.take()
        if not _PRED.match(name):
            raise ModelSyntaxError(f"predicate names start with an upper-case letter: {name!r}", self.line, col)
        self.take("(")
        args = []
        while True:
            kind, arg, acol = self.take()
            if kind != "name":
                raise ModelSyntaxError(f"expected an argument, found {arg!r}", self.line, acol)
            if not _VAR.match(arg):
                raise ModelSyntaxError(f"constant {arg!r} in formula; only logical variables are allowed",
                                       self.line, acol)
            args.append(arg)
            if self.peek()[1] == ",":
                self.take()
                continue
            self.take(")")
            return Atom(name, tuple(args))


def parse_formula(text: str, line: int = 0, column: int = 0) -> Formula:
    return _FormulaParser(text, line, column).parse()


def parse_model(text: str) -> MLNModel:
    """Parse a model file. Predicates are declared by their first use."""
    domain = None
    named = False
    header_line = 0
    formulas = []
    arities: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        indent = len(line) - len(stripped)
        head, *rest = stripped.split(None, 1)
        rest = rest[0] if rest else ""
        if head in ("domain", "constants"):
            if domain is not None:
                raise ModelSyntaxError(f"second domain declaration (first on line {header_line})", lineno, indent + 1)
            header_line = lineno
            if head == "domain":
                try:
                    k = int(rest.strip())
                except ValueError:
                    raise ModelSyntaxError("domain size must be an integer", lineno, indent + 8) from None
                if k < 1:
                    raise ModelSyntaxError("domain size must be at least 1", lineno, indent + 8)
                domain = default_constants(k)
            else:
                domain = tuple(rest.split())
                named = True
                if not domain:
                    raise ModelSyntaxError("empty constants declaration", lineno, indent + 1)
                if len(set(domain)) != len(domain):
                    raise ModelSyntaxError("duplicate constant", lineno, indent + 1)
            continue
        m = re.match(r"(\S+)\s+", stripped)
        if m is None:
            raise ModelSyntaxError("expected '<weight> <formula>'", lineno, indent + 1)
        try:
            weight = float(m.group(1))
        except ValueError:
            raise ModelSyntaxError(f"invalid weight {m.group(1)!r}", lineno, indent + 1) from None
        if not np.isfinite(weight):
            raise ModelSyntaxError("weights must be finite", lineno, indent + 1)
        formula = parse_formula(stripped[m.end():], lineno, indent + m.end())
        for atom in atoms_of(formula):
            n = arities.setdefault(atom.predicate, len(atom.args))
            if n != len(atom.args):
                raise ModelSyntaxError(f"predicate {atom.predicate} used with arity {len(atom.args)} and {n}",
                                       lineno, 1)
        formulas.append(WeightedFormula(weight, formula))
    if domain is None:
        raise ModelSyntaxError("no domain declared (expected 'domain <k>' or 'constants ...')")
    preds = tuple(Predicate(name, n) for name, n in arities.items())
    return MLNModel(preds, tuple(formulas), domain, named)


def format_model(model: MLNModel) -> str:
    if model.named_domain:
        head = "constants " + " ".join(model.domain)
    else:
        head = f"domain {model.k}"
    lines = [head]
    lines += [f"{wf.weight!r}\t{format_formula(wf.formula)}" for wf in model.formulas]
    return "\n".join(lines) + "\n"


# -- grounding ---------------------------------------------------------------

@dataclass(frozen=True)
class GroundAtom:
    predicate: int
    args: tuple[int, ...]


@dataclass(frozen=True)
class GroundFactor:
    weight: float
    formula: Formula          # int leaves
    source: int               # index of the first-order formula
    binding: tuple[int, ...]  # constant index per logical variable

    @property
    def constants(self) -> frozenset[int]:
        return frozenset(self.binding)

    @property
    def atoms(self) -> tuple[int, ...]:
        return tuple(sorted(set(atoms_of(self.formula))))


@dataclass(frozen=True, eq=False)
class GroundModel:
    model: MLNModel
    atoms: tuple[GroundAtom, ...]
    factors: tuple[GroundFactor, ...]
    index: Mapping[GroundAtom, int] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def k(self) -> int:
        return self.model.k

    def atom_name(self, i: int) -> str:
        a = self.atoms[i]
        p = self.model.predicates[a.predicate]
        return f"{p.name}({','.join(self.model.domain[c] for c in a.args)})"

    def atom_names(self) -> list[str]:
        return [self.atom_name(i) for i in range(self.n)]

    def lookup(self, name: str, args: Sequence[str]) -> int:
        """Index of the ground atom ``name(args)``; args are constant names."""
        try:
            pred = self.model.predicate_index(name)
        except KeyError:
            raise KeyError(f"unknown predicate {name!r}") from None
        consts = {c: i for i, c in enumerate(self.model.domain)}
        try:
            key = GroundAtom(pred, tuple(consts[a] for a in args))
        except KeyError as exc:
            raise KeyError(f"unknown constant {exc.args[0]!r}") from None
        if key not in self.index:
            raise KeyError(f"{name}/{len(args)} has arity {self.model.predicates[pred].arity}")
        return self.index[key]


def ground(model: MLNModel) -> GroundModel:
    """All groundings of all formulas, in canonical order.

    Variable assignments run lexicographically over (variable order of first
    occurrence, domain order); groundings with repeated constants are kept.
    """
    k = model.k
    atoms = []
    for p, pred in enumerate(model.predicates):
        atoms += [GroundAtom(p, args) for args in itertools.product(range(k), repeat=pred.arity)]
    index = {a: i for i, a in enumerate(atoms)}
    pidx = {p.name: i for i, p in enumerate(model.predicates)}
    factors = []
    for src, wf in enumerate(model.formulas):
        variables = wf.variables
        pos = {v: i for i, v in enumerate(variables)}
        for binding in itertools.product(range(k), repeat=len(variables)):
            def leaf(atom, binding=binding):
                return index[GroundAtom(pidx[atom.predicate], tuple(binding[pos[v]] for v in atom.args))]
            factors.append(GroundFactor(wf.weight, substitute(wf.formula, leaf), src, binding))
    return GroundModel(model, tuple(atoms), tuple(factors), index)
