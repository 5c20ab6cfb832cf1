"""Seeded weighted WalkSAT for partial MaxSAT."""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from ..errors import NoFeasibleFound
from .wcnf import Solution, WcnfInstance


@dataclass(frozen=True)
class SlsParams:
    max_flips: int = 100_000
    restarts: int = 10
    noise: float = 0.3
    # a restart also ends after this many flips without improving its best
    patience: Optional[int] = 5_000


class _IndexedSet:
    __slots__ = ("items", "pos")

    def __init__(self):
        self.items: list[int] = []
        self.pos: dict[int, int] = {}

    def add(self, x):
        if x not in self.pos:
            self.pos[x] = len(self.items)
            self.items.append(x)

    def discard(self, x):
        i = self.pos.pop(x, None)
        if i is None:
            return
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.pos[last] = i

    def __len__(self):
        return len(self.items)


def _walk(inst: WcnfInstance, seed: int, params: SlsParams):
    rng = random.Random(seed)
    n = inst.num_vars
    lits = [tuple(set(c)) for c, _ in inst.clauses]
    weight = [w for _, w in inst.clauses]
    hard = [w >= inst.top for w in weight]
    big = inst.top
    eff = [big if h else w for h, w in zip(hard, weight)]
    occ: list[list[int]] = [[] for _ in range(2 * n + 1)]  # index lit + n
    for ci, c in enumerate(lits):
        for x in c:
            occ[x + n].append(ci)

    best_key = None
    best_vals = None
    flips_total = 0

    for _restart in range(max(1, params.restarts)):
        vals = [False] + [rng.random() < 0.5 for _ in range(n)]
        ntrue = [sum(1 for x in c if (vals[x] if x > 0 else not vals[-x])) for c in lits]
        unsat_h, unsat_s = _IndexedSet(), _IndexedSet()
        soft_cost = inst.offset
        for ci, k in enumerate(ntrue):
            if k == 0:
                if hard[ci]:
                    unsat_h.add(ci)
                else:
                    unsat_s.add(ci)
                    soft_cost += weight[ci]

        def key():
            return (len(unsat_h), soft_cost)

        cur_best = key()
        if best_key is None or cur_best < best_key:
            best_key, best_vals = cur_best, vals[1:]
        since = 0
        for _ in range(params.max_flips):
            if not unsat_h and not unsat_s:
                break
            if unsat_h:
                ci = unsat_h.items[rng.randrange(len(unsat_h))]
            else:
                total = sum(weight[c] for c in unsat_s.items)
                r = rng.random() * total
                acc = 0
                ci = unsat_s.items[-1]
                for c in unsat_s.items:
                    acc += weight[c]
                    if r < acc:
                        ci = c
                        break
            cand = sorted(abs(x) for x in lits[ci])
            if not cand:
                break
            if rng.random() < params.noise:
                v = cand[rng.randrange(len(cand))]
            else:
                v, best_gain = cand[0], None
                for u in cand:
                    t = u if vals[u] else -u
                    gain = 0
                    for c in occ[t + n]:
                        if ntrue[c] == 1:
                            gain -= eff[c]
                    for c in occ[-t + n]:
                        if ntrue[c] == 0:
                            gain += eff[c]
                    if best_gain is None or gain > best_gain:
                        v, best_gain = u, gain
            # flip v
            t = v if vals[v] else -v
            vals[v] = not vals[v]
            for c in occ[t + n]:
                ntrue[c] -= 1
                if ntrue[c] == 0:
                    if hard[c]:
                        unsat_h.add(c)
                    else:
                        unsat_s.add(c)
                        soft_cost += weight[c]
            for c in occ[-t + n]:
                ntrue[c] += 1
                if ntrue[c] == 1:
                    if hard[c]:
                        unsat_h.discard(c)
                    else:
                        unsat_s.discard(c)
                        soft_cost -= weight[c]
            flips_total += 1
            k = key()
            if k < cur_best:
                cur_best, since = k, 0
                if k < best_key:
                    best_key, best_vals = k, vals[1:]
            else:
                since += 1
                if params.patience is not None and since >= params.patience:
                    break
    return best_vals, flips_total


def _run_one(args):
    inst, seed, params = args
    return seed, _walk(inst, seed, params)


def solve_sls(
    instance: WcnfInstance, seed: int = 0, params: SlsParams = SlsParams(), workers: int = 1
) -> Solution:
    """Best assignment found by weighted WalkSAT.

    Hard clauses dominate every soft consideration.  With ``workers > 1``
    independent walks run on seeds ``seed, seed + 1, ...`` and the best by
    (cost, seed) wins, so the result does not depend on scheduling.

    Raises:
        NoFeasibleFound: no walk satisfied all hard clauses; ``best`` holds the
            least-violating assignment.
    """
    jobs = [(instance, seed + k, params) for k in range(max(1, workers))]
    if len(jobs) == 1:
        results = [_run_one(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_run_one, jobs))
    best = None
    for s, (vals, flips) in results:
        sol = Solution.of(instance, vals, flips=flips, seed=s)
        k = (not sol.hard_ok, sol.cost, s)
        if best is None or k < best[0]:
            best = (k, sol)
    sol = best[1]
    if not sol.hard_ok:
        raise NoFeasibleFound("no assignment satisfying all hard clauses was found", best=sol)
    return sol
