"""Exact weighted partial MaxSAT by depth-first branch and bound."""

from __future__ import annotations

import time
from typing import Optional

from ..errors import BudgetExceeded, HardUnsat
from .wcnf import Solution, WcnfInstance


class _Search:
    def __init__(self, inst: WcnfInstance, deadline: Optional[float]):
        self.inst = inst
        self.deadline = deadline
        n = inst.num_vars
        self.n = n
        self.lits = [c for c, _ in inst.clauses]
        self.weight = [w for _, w in inst.clauses]
        self.hard = [w >= inst.top for w in self.weight]
        self.occ: dict[int, list[int]] = {v: [] for v in range(-n, n + 1) if v}
        for ci, lits in enumerate(self.lits):
            for x in set(lits):
                self.occ[x].append(ci)
        self.sat = [0] * len(self.lits)
        self.free = [len(set(c)) for c in self.lits]
        self.val = [None] * (n + 1)
        self.cost = inst.offset
        self.conflicts = 0
        self.best_cost: Optional[int] = None
        self.best_vals: Optional[list[bool]] = None
        self.nodes = 0
        # static order: weighted occurrence, ties by lowest id
        score = [0] * (n + 1)
        pol = [0] * (n + 1)
        for ci, lits in enumerate(self.lits):
            w = min(self.weight[ci], inst.top)
            for x in set(lits):
                score[abs(x)] += w
                pol[abs(x)] += w if x > 0 else -w
        self.order = sorted(range(1, n + 1), key=lambda v: (-score[v], v))
        self.first = {v: pol[v] > 0 for v in range(1, n + 1)}
        for ci, lits in enumerate(self.lits):
            if not lits:
                self._falsify(ci)

    def _falsify(self, ci):
        if self.hard[ci]:
            self.conflicts += 1
        else:
            self.cost += self.weight[ci]

    def _unfalsify(self, ci):
        if self.hard[ci]:
            self.conflicts -= 1
        else:
            self.cost -= self.weight[ci]

    def assign(self, v: int, value: bool, trail: list[int]) -> None:
        self.val[v] = value
        trail.append(v)
        t, f = (v, -v) if value else (-v, v)
        for ci in self.occ[t]:
            self.sat[ci] += 1
            self.free[ci] -= 1
        for ci in self.occ[f]:
            self.free[ci] -= 1
            if self.sat[ci] == 0 and self.free[ci] == 0:
                self._falsify(ci)

    def unassign(self, v: int) -> None:
        value = self.val[v]
        t, f = (v, -v) if value else (-v, v)
        for ci in self.occ[t]:
            self.sat[ci] -= 1
            self.free[ci] += 1
        for ci in self.occ[f]:
            if self.sat[ci] == 0 and self.free[ci] == 0:
                self._unfalsify(ci)
            self.free[ci] += 1
        self.val[v] = None

    def _free_lit(self, ci) -> int:
        for x in self.lits[ci]:
            if self.val[abs(x)] is None:
                return x
        raise AssertionError("clause has no free literal")

    def propagate(self, trail: list[int]) -> bool:
        """Hard-clause unit propagation; False on conflict."""
        changed = True
        while changed:
            if self.conflicts:
                return False
            changed = False
            for ci in range(len(self.lits)):
                if self.hard[ci] and self.sat[ci] == 0 and self.free[ci] == 1:
                    x = self._free_lit(ci)
                    self.assign(abs(x), x > 0, trail)
                    changed = True
                    if self.conflicts:
                        return False
        return not self.conflicts

    def lower_bound(self) -> int:
        """Current cost plus disjoint complementary soft units."""
        units: dict[int, int] = {}
        for ci in range(len(self.lits)):
            if not self.hard[ci] and self.sat[ci] == 0 and self.free[ci] == 1:
                x = self._free_lit(ci)
                units[x] = units.get(x, 0) + self.weight[ci]
        extra = 0
        for x, w in units.items():
            if x > 0 and -x in units:
                extra += min(w, units[-x])
        return self.cost + extra

    def run(self):
        trail: list[int] = []
        if not self.propagate(trail):
            return
        self._dfs()

    def _dfs(self):
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            raise TimeoutError
        if self.best_cost is not None and self.lower_bound() >= self.best_cost:
            return
        v = next((v for v in self.order if self.val[v] is None), None)
        if v is None:
            self.best_cost = self.cost
            self.best_vals = [bool(self.val[i]) for i in range(1, self.n + 1)]
            return
        for value in (self.first[v], not self.first[v]):
            trail: list[int] = []
            self.assign(v, value, trail)
            if self.propagate(trail):
                if self.best_cost is None or self.cost < self.best_cost:
                    self._dfs()
            for u in reversed(trail):
                self.unassign(u)
            if self.best_cost is not None and self.best_cost == self.inst.offset:
                return


def solve_exact(instance: WcnfInstance, time_budget: Optional[float] = None) -> Solution:
    """Minimum-cost assignment satisfying every hard clause.

    Raises:
        HardUnsat: the hard clauses alone are unsatisfiable.
        BudgetExceeded: ``time_budget`` seconds elapsed; carries the incumbent.
    """
    deadline = None if time_budget is None else time.monotonic() + time_budget
    s = _Search(instance, deadline)
    try:
        s.run()
    except TimeoutError:
        inc = None if s.best_vals is None else Solution.of(instance, s.best_vals, nodes=s.nodes)
        raise BudgetExceeded(
            f"exact search exceeded {time_budget}s after {s.nodes} nodes", incumbent=inc, lower_bound=instance.offset
        ) from None
    if s.best_vals is None:
        raise HardUnsat("hard clauses are unsatisfiable")
    sol = Solution.of(instance, s.best_vals, optimal=True, nodes=s.nodes)
    assert sol.cost == s.best_cost and sol.hard_ok
    return sol
