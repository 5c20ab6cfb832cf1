"""Weighted partial MaxSAT instances, solutions, and DIMACS WCNF text."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..errors import AmdnSyntaxError, AmdnError

Clause = tuple[int, ...]


@dataclass(frozen=True)
class WcnfInstance:
    """Clauses with integer weights; a weight ``>= top`` marks a hard clause.

    ``offset`` holds the weight of empty soft clauses, which are folded into a
    constant cost at construction.
    """

    num_vars: int
    clauses: tuple[tuple[Clause, int], ...]
    top: int
    offset: int = 0

    def __post_init__(self):
        kept = []
        offset = self.offset
        for lits, w in self.clauses:
            lits = tuple(int(x) for x in lits)
            w = int(w)
            if w <= 0:
                raise AmdnError(f"clause {lits} has non-positive weight {w}")
            for x in lits:
                if x == 0 or abs(x) > self.num_vars:
                    raise AmdnError(f"literal {x} out of range for {self.num_vars} variables")
            if not lits and w < self.top:
                offset += w
                continue
            kept.append((lits, w))
        object.__setattr__(self, "clauses", tuple(kept))
        object.__setattr__(self, "offset", offset)

    @classmethod
    def build(cls, num_vars: int, clauses: Iterable[tuple[Sequence[int], Optional[int]]]) -> "WcnfInstance":
        """Build from clauses whose hard ones carry weight ``None``; top = soft sum + 1."""
        clauses = [(tuple(c), w) for c, w in clauses]
        top = sum(w for _, w in clauses if w is not None) + 1
        return cls(num_vars, tuple((c, top if w is None else w) for c, w in clauses), top)

    def is_hard(self, weight: int) -> bool:
        return weight >= self.top

    @property
    def hard(self) -> list[Clause]:
        return [c for c, w in self.clauses if w >= self.top]

    @property
    def soft(self) -> list[tuple[Clause, int]]:
        return [(c, w) for c, w in self.clauses if w < self.top]

    def evaluate(self, values: Sequence[bool]) -> tuple[int, bool]:
        """(cost, hard_ok) of a full assignment; ``values[v - 1]`` is variable ``v``."""
        cost = self.offset
        hard_ok = True
        for lits, w in self.clauses:
            if any((values[x - 1] if x > 0 else not values[-x - 1]) for x in lits):
                continue
            if w >= self.top:
                hard_ok = False
            else:
                cost += w
        return cost, hard_ok

    def with_clause(self, lits: Sequence[int], weight: int) -> "WcnfInstance":
        return WcnfInstance(self.num_vars, self.clauses + ((tuple(lits), weight),), self.top, self.offset)


@dataclass(frozen=True)
class Solution:
    values: tuple[bool, ...]
    cost: int
    hard_ok: bool
    optimal: bool = False
    stats: dict = field(default_factory=dict, compare=False)

    @classmethod
    def of(cls, instance: WcnfInstance, values: Sequence[bool], optimal=False, **stats) -> "Solution":
        values = tuple(bool(v) for v in values)
        cost, ok = instance.evaluate(values)
        return cls(values, cost, ok, optimal, stats)

    def check(self, instance: WcnfInstance) -> None:
        cost, ok = instance.evaluate(self.values)
        if (cost, ok) != (self.cost, self.hard_ok):
            raise AmdnError(f"reported cost {self.cost} does not match recomputed {cost}")

    def literals(self) -> list[int]:
        return [i + 1 if v else -(i + 1) for i, v in enumerate(self.values)]


# ---------------------------------------------------------------------------
# DIMACS WCNF


def read_wcnf(text: str) -> WcnfInstance:
    """Classic WCNF: ``p wcnf <vars> <clauses> <top>`` then ``<w> <lits...> 0`` lines.

    Clauses with weight ``>= top`` are hard.  Errors report 1-based line numbers.
    """
    header = None
    clauses = []
    pending: list[int] = []
    pending_line = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise AmdnSyntaxError("duplicate header", lineno, 1)
            if len(parts) != 5 or parts[1] != "wcnf":
                raise AmdnSyntaxError("malformed header", lineno, 1, expected="p wcnf <vars> <clauses> <top>")
            try:
                header = tuple(int(x) for x in parts[2:])
            except ValueError:
                raise AmdnSyntaxError("non-integer header field", lineno, 1) from None
            continue
        if header is None:
            raise AmdnSyntaxError("clause before header", lineno, 1, expected="p wcnf header")
        try:
            nums = [int(x) for x in line.split()]
        except ValueError:
            raise AmdnSyntaxError("non-integer token", lineno, 1) from None
        if not pending:
            pending_line = lineno
        pending.extend(nums)
        while 0 in pending:
            k = pending.index(0)
            chunk, pending = pending[:k], pending[k + 1 :]
            if not chunk:
                raise AmdnSyntaxError("clause without weight", pending_line, 1, expected="<weight>")
            w, lits = chunk[0], tuple(chunk[1:])
            if w <= 0:
                raise AmdnSyntaxError(f"non-positive weight {w}", pending_line, 1)
            for x in lits:
                if abs(x) > header[0]:
                    raise AmdnSyntaxError(f"literal {x} exceeds declared variable count", pending_line, 1)
            clauses.append((lits, w))
            pending_line = lineno
    if header is None:
        raise AmdnSyntaxError("missing header", 0, 0, expected="p wcnf <vars> <clauses> <top>")
    if pending:
        raise AmdnSyntaxError("unterminated clause", pending_line, 1, expected="0")
    nv, nc, top = header
    if nc != len(clauses):
        raise AmdnSyntaxError(f"header declares {nc} clauses, found {len(clauses)}", 0, 0)
    return WcnfInstance(nv, tuple(clauses), top)


def write_wcnf(instance: WcnfInstance) -> str:
    clauses = list(instance.clauses)
    if instance.offset:
        clauses.append(((), instance.offset))
    lines = [f"p wcnf {instance.num_vars} {len(clauses)} {instance.top}"]
    lines += [" ".join(str(x) for x in (w, *lits, 0)) for lits, w in clauses]
    return "\n".join(lines) + "\n"


def read_model(text: str, num_vars: int) -> list[bool]:
    """Model file: space-separated signed literals (``v``/``s`` prefixed lines tolerated)."""
    values = [False] * num_vars
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "cs":
            continue
        if line[0] == "v":
            line = line[1:]
        for tok in line.split():
            x = int(tok)
            if x == 0:
                continue
            if abs(x) > num_vars:
                raise AmdnSyntaxError(f"literal {x} exceeds {num_vars} variables")
            values[abs(x) - 1] = x > 0
    return values


def write_model(solution: Solution) -> str:
    return " ".join(str(x) for x in solution.literals()) + "\n"
