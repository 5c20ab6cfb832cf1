"""MaxSAT as a 0-1 integer program solved by HiGHS through scipy."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from ..errors import BudgetExceeded, HardUnsat
from .wcnf import Solution, WcnfInstance


def solve_milp(instance: WcnfInstance, time_budget: Optional[float] = None) -> Solution:
    """Optimal assignment via a clause-relaxation integer program.

    Each non-unit soft clause gets a 0-1 relaxation column paying its weight.
    Soft unit clauses go straight into the objective.  The returned cost is
    recomputed from the assignment, never taken from the solver.
    """
    n = instance.num_vars
    c = np.zeros(n, dtype=float)
    rows, cols, data, lb = [], [], [], []
    n_cols = n
    relax_w = []
    for lits, w in instance.clauses:
        hard = w >= instance.top
        lits = sorted(set(lits))
        if not hard and len(lits) == 1:
            x = lits[0]
            # violated when the literal is false
            c[abs(x) - 1] += -w if x > 0 else w
            continue
        if any(-x in lits for x in lits):
            continue  # tautology
        r = len(lb)
        negs = 0
        for x in lits:
            rows.append(r)
            cols.append(abs(x) - 1)
            data.append(1.0 if x > 0 else -1.0)
            negs += x < 0
        if not hard:
            rows.append(r)
            cols.append(n_cols)
            data.append(1.0)
            relax_w.append(w)
            n_cols += 1
        lb.append(1.0 - negs)
    obj = np.concatenate([c, np.asarray(relax_w, dtype=float)])
    constraints = []
    if lb:
        a = coo_matrix((data, (rows, cols)), shape=(len(lb), n_cols)).tocsr()
        constraints.append(LinearConstraint(a, np.asarray(lb), np.inf))
    options = {"mip_rel_gap": 0.0, "disp": False}
    if time_budget is not None:
        options["time_limit"] = float(time_budget)
    if n_cols == 0:
        return Solution.of(instance, [], optimal=True)
    res = milp(
        obj,
        constraints=constraints,
        integrality=np.ones(n_cols),
        bounds=Bounds(0, 1),
        options=options,
    )
    if res.status == 2:
        raise HardUnsat("hard clauses are unsatisfiable")
    if res.x is None:
        raise BudgetExceeded(f"integer program stopped: {res.message}", incumbent=None, lower_bound=instance.offset)
    values = [bool(v > 0.5) for v in res.x[:n]]
    sol = Solution.of(instance, values, optimal=res.status == 0, backend="milp")
    if res.status != 0:
        raise BudgetExceeded(f"integer program stopped: {res.message}", incumbent=sol, lower_bound=instance.offset)
    return sol
