"""Propositional formulas over integer variables and their clausal lowering.

Atoms are positive ints.  ``Not``/``And``/``Or`` nodes are hashable and
:func:`canonical` sorts and flattens them so structurally equal formulas
compare equal, which is what duplicate merging relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

HARD = None  # weight marker for hard formulas


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


Formula = Union[int, Not, And, Or]


def neg(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def conj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else Or(tuple(args))


def evaluate(f: Formula, assignment: Mapping[int, bool]) -> bool:
    if isinstance(f, int):
        return bool(assignment[f])
    if isinstance(f, Not):
        return not evaluate(f.arg, assignment)
    if isinstance(f, And):
        return all(evaluate(a, assignment) for a in f.args)
    return any(evaluate(a, assignment) for a in f.args)


def atoms(f: Formula) -> set[int]:
    if isinstance(f, int):
        return {f}
    if isinstance(f, Not):
        return atoms(f.arg)
    out: set[int] = set()
    for a in f.args:
        out |= atoms(a)
    return out


def _sort_key(f):
    if isinstance(f, int):
        return (0, f, ())
    if isinstance(f, Not):
        return (0, _sort_key(f.arg)[1], (1,)) if isinstance(f.arg, int) else (1, 0, _sort_key(f.arg))
    tag = 2 if isinstance(f, And) else 3
    return (tag, len(f.args), tuple(_sort_key(a) for a in f.args))


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Push negations down to atoms."""
    if isinstance(f, int):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    kids = tuple(nnf(a, positive) for a in f.args)
    if isinstance(f, And) == positive:
        return And(kids)
    return Or(kids)


def canonical(f: Formula) -> Formula:
    """NNF, flattened, deduplicated and sorted; single-child nodes collapse."""
    f = nnf(f)

    def go(g):
        if isinstance(g, (int, Not)):
            return g
        cls = type(g)
        kids = []
        for a in g.args:
            a = go(a)
            if isinstance(a, cls):
                kids.extend(a.args)
            else:
                kids.append(a)
        kids = sorted(set(kids), key=_sort_key)
        return kids[0] if len(kids) == 1 else cls(tuple(kids))

    return go(f)


def is_literal(f: Formula) -> bool:
    return isinstance(f, int) or (isinstance(f, Not) and isinstance(f.arg, int))


def lit_int(f: Formula) -> int:
    return f if isinstance(f, int) else -f.arg


def as_clause(f: Formula):
    """Tuple of signed ints if ``f`` (canonical) is a literal or a disjunction of literals."""
    if is_literal(f):
        return (lit_int(f),)
    if isinstance(f, Or) and all(is_literal(a) for a in f.args):
        return tuple(lit_int(a) for a in f.args)
    return None


class Lowering:
    """Polarity-aware Tseitin lowering into clauses.

    Only the implication ``aux -> subformula`` is emitted, which is enough
    for maximisation: an auxiliary can always be set false, and it can be set
    true exactly when its subformula holds.  Auxiliaries are shared between
    identical subformulas.
    """

    def __init__(self, first_aux: int):
        self.next_var = first_aux
        self.aux: list[int] = []
        self.hard: list[tuple[int, ...]] = []
        self._defs: dict[Formula, int] = {}

    def _new(self) -> int:
        v = self.next_var
        self.next_var += 1
        self.aux.append(v)
        return v

    def define(self, f: Formula) -> int:
        if is_literal(f):
            return lit_int(f)
        if f in self._defs:
            return self._defs[f]
        if isinstance(f, And):
            kids = [self.define(a) for a in f.args]
            a = self._new()
            self.hard.extend((-a, k) for k in kids)
        else:
            kids = [self.define(x) for x in f.args]
            a = self._new()
            self.hard.append((-a, *kids))
        self._defs[f] = a
        return a

    def hard_formula(self, f: Formula) -> None:
        f = canonical(f)
        clause = as_clause(f)
        if clause is not None:
            self.hard.append(clause)
        elif isinstance(f, And):
            for a in f.args:
                self.hard_formula(a)
        else:
            self.hard.append(tuple(self.define(a) for a in f.args))

    def soft_formula(self, f: Formula) -> tuple[int, ...]:
        """Clause to carry the formula's weight (a unit on an auxiliary if needed)."""
        f = canonical(f)
        clause = as_clause(f)
        if clause is not None:
            return clause
        return (self.define(f),)


def lower(
    formulas: Iterable[tuple[Formula, object]], num_vars: int
) -> tuple[list[tuple[tuple[int, ...], object]], list[int], int]:
    """Lower (formula, weight) pairs; ``weight is HARD`` marks hard formulas.

    Returns:
        ``(clauses, aux_ids, num_vars_total)`` where hard clauses carry the
        :data:`HARD` marker and soft clauses their weight.
    """
    low = Lowering(num_vars + 1)
    soft: list[tuple[tuple[int, ...], object]] = []
    for f, w in formulas:
        if w is HARD:
            low.hard_formula(f)
        elif w > 0:
            soft.append((low.soft_formula(f), w))
    clauses = [(c, HARD) for c in low.hard] + soft
    return clauses, low.aux, low.next_var - 1
