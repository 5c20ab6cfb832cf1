"""Synthesize ground-truth plans and corrupt them into noisy, disordered traces."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import InapplicableModel, NoPlanWithinBudget
from .pddl import Domain, GroundAction, Problem, Proposition
from .traces import PlanTrace, Step

log = logging.getLogger(__name__)

# stream ids keep the random draws of the three stages independent
_PLAN_STREAM, _DISORDER_STREAM, _STATE_STREAM, _PROBLEM_STREAM = 1, 2, 3, 4


def derived_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Generator for (seed, stage, trace index); independent of scheduling order."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, index])


@dataclass(frozen=True)
class CorruptionConfig:
    disorder_prior: float = 0.0
    noise_rate: float = 0.0
    observation_rate: float = 1.0
    seed: int = 0
    horizon: Optional[int] = None

    def __post_init__(self):
        for name in ("disorder_prior", "noise_rate", "observation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be a positive integer or None")


# ---------------------------------------------------------------------------
# execution


def apply(domain: Domain, state: frozenset, action: GroundAction) -> frozenset:
    pre, add, dele = domain.ground(action)
    if not pre <= state:
        missing = ", ".join(str(p) for p in sorted(pre - state))
        raise InapplicableModel(f"{action} is not applicable: missing {missing}")
    return (state - dele) | add


def execute(domain: Domain, init: frozenset, plan: Iterable[GroundAction]) -> list[frozenset]:
    """Replay ``plan`` from ``init``; returns the state sequence including ``init``."""
    states = [frozenset(init)]
    for a in plan:
        states.append(apply(domain, states[-1], a))
    return states


# ---------------------------------------------------------------------------
# planning


@dataclass(frozen=True)
class _Op:
    action: GroundAction
    pre: frozenset
    add: frozenset
    dele: frozenset


def _ground_ops(domain: Domain, objects: Mapping[str, str]) -> list[_Op]:
    # parameters bind pairwise-distinct objects, the usual reading of
    # domains that cannot state inequality
    ops = []
    for a in domain.all_ground_actions(objects):
        if len(set(a.args)) != len(a.args):
            continue
        pre, add, dele = domain.ground(a)
        ops.append(_Op(a, pre, add, dele))
    return ops


def synthesize_plan(
    domain: Domain,
    problem: Problem,
    budget: int = 20000,
    seed: int = 0,
    restarts: int = 5,
) -> tuple[list[GroundAction], list[frozenset]]:
    """Greedy best-first search on the goal-count heuristic.

    Ties are broken randomly; when an attempt exhausts its share of the
    expansion budget (or its frontier) the search restarts with fresh
    tie-breaking.

    Returns:
        The plan and the full state sequence (``len(plan) + 1`` states).

    Raises:
        NoPlanWithinBudget: no attempt reached the goal.
    """
    ops = _ground_ops(domain, problem.objects)
    goal = problem.goal
    init = frozenset(problem.init)
    if goal <= init:
        return [], [init]
    rng = derived_rng(seed, _PLAN_STREAM)
    per_attempt = max(1, budget // max(1, restarts))
    for _ in range(restarts):
        plan = _gbfs(ops, init, goal, per_attempt, rng)
        if plan is not None:
            return plan, execute(domain, init, plan)
    raise NoPlanWithinBudget(f"no plan for {problem.name} within {budget} expansions")


def _gbfs(ops, init, goal, budget, rng) -> Optional[list[GroundAction]]:
    counter = itertools.count()
    parent: dict[frozenset, tuple] = {init: (None, None)}
    frontier = [(len(goal - init), rng.random(), next(counter), init)]
    expansions = 0
    while frontier and expansions < budget:
        _, _, _, state = heapq.heappop(frontier)
        expansions += 1
        for op in ops:
            if not op.pre <= state:
                continue
            nxt = (state - op.dele) | op.add
            if nxt in parent:
                continue
            parent[nxt] = (state, op.action)
            if goal <= nxt:
                plan = []
                cur = nxt
                while parent[cur][0] is not None:
                    prev, act = parent[cur]
                    plan.append(act)
                    cur = prev
                return plan[::-1]
            heapq.heappush(frontier, (len(goal - nxt), rng.random(), next(counter), nxt))
    return None


# ---------------------------------------------------------------------------
# parallel grouping


def group_parallel(
    domain: Domain, problem: Problem, plan: Sequence[GroundAction], states: Sequence[frozenset]
) -> PlanTrace:
    """Greedy left-to-right grouping of a totally ordered plan into parallel sets.

    An action joins the current set iff its grounded PRE/ADD/DEL propositions
    are disjoint from those of every member; otherwise it opens a new set.
    Each step carries the full state reached after its last member.
    """
    if not plan:
        raise ValueError("cannot build a trace from an empty plan")
    if len(states) != len(plan) + 1:
        raise ValueError("states must hold one entry per action plus the initial state")
    steps: list[Step] = []
    current: list[GroundAction] = []
    touched: set[Proposition] = set()
    for k, a in enumerate(plan):
        pre, add, dele = domain.ground(a)
        props = pre | add | dele
        if current and touched.isdisjoint(props) and a not in current:
            current.append(a)
            touched |= props
        else:
            if current:
                steps.append(Step(tuple(current), states[k]))
            current, touched = [a], set(props)
    steps.append(Step(tuple(current), states[len(plan)]))
    return PlanTrace(dict(problem.objects), frozenset(states[0]), tuple(steps), frozenset(problem.goal))


# ---------------------------------------------------------------------------
# disorder


@dataclass(frozen=True)
class Swap:
    trace: int
    i: int
    j: int
    a: str
    b: str

    def to_json(self) -> dict:
        return {"trace": self.trace, "i": self.i, "j": self.j, "a": self.a, "b": self.b}


def inject_disorder(
    trace: PlanTrace, config: CorruptionConfig, trace_index: int = 0
) -> tuple[PlanTrace, list[Swap]]:
    """Exchange actions across parallel sets with probability ``p / d``.

    Pairs of sets are visited in (i, j) order and cross pairs by position;
    each decision consumes one draw, and later decisions see earlier swaps.
    A swap that would put two copies of one ground action in the same set is
    skipped.
    """
    p = config.disorder_prior
    rng = derived_rng(config.seed, _DISORDER_STREAM, trace_index)
    sets = [list(s.actions) for s in trace.steps]
    swaps: list[Swap] = []
    n = len(sets)
    if p > 0:
        for i in range(n):
            for j in range(i + 1, n):
                d = j - i
                if config.horizon is not None and d > config.horizon:
                    break
                prob = p / d
                for x in range(len(sets[i])):
                    for y in range(len(sets[j])):
                        if rng.random() >= prob:
                            continue
                        a, b = sets[i][x], sets[j][y]
                        if a == b or b in sets[i] or a in sets[j]:
                            continue
                        sets[i][x], sets[j][y] = b, a
                        swaps.append(Swap(trace_index, i, j, str(a), str(b)))
    steps = tuple(Step(tuple(acts), s.obs) for acts, s in zip(sets, trace.steps))
    return trace.replace(steps=steps), swaps


# ---------------------------------------------------------------------------
# partial / noisy states


@dataclass
class CorruptionStats:
    kept: int = 0
    removed: int = 0
    survivors: int = 0
    replaced: int = 0


def corrupt_states(
    trace: PlanTrace,
    config: CorruptionConfig,
    domain: Domain,
    trace_index: int = 0,
    stats: Optional[CorruptionStats] = None,
) -> PlanTrace:
    """Make every intermediate observation partial and noisy.

    Each true proposition is first observed with probability
    ``observation_rate``; of the observed ones a fraction ``noise_rate`` is
    removed, and of the survivors a fraction ``noise_rate`` is replaced by a
    random proposition of R_O that is neither true in the state nor already
    chosen.  The initial state and the goal are left untouched.
    """
    rng = derived_rng(config.seed, _STATE_STREAM, trace_index)
    universe = domain.all_propositions(trace.objects)
    xi, rate = config.noise_rate, config.observation_rate
    steps = []
    for s in trace.steps:
        if s.obs is None:
            steps.append(s)
            continue
        out: set[Proposition] = set()
        replacements = []
        for prop in sorted(s.obs):
            if rng.random() >= rate:
                continue
            if stats:
                stats.kept += 1
            if rng.random() < xi:
                if stats:
                    stats.removed += 1
                continue
            if stats:
                stats.survivors += 1
            if rng.random() < xi:
                replacements.append(prop)
            else:
                out.add(prop)
        for _ in replacements:
            taken = s.obs | out
            if len(taken) >= len(universe):
                break
            while True:
                cand = universe[int(rng.integers(len(universe)))]
                if cand not in taken:
                    break
            out.add(cand)
            if stats:
                stats.replaced += 1
        steps.append(Step(s.actions, frozenset(out)))
    return trace.replace(steps=tuple(steps))


# ---------------------------------------------------------------------------
# problem generators and corpus assembly


def random_blocks_problem(domain: Domain, n_blocks: int, rng: np.random.Generator, name: str = "p") -> Problem:
    """Random start and goal towers over ``n_blocks`` blocks."""
    blocks = [f"b{i}" for i in range(n_blocks)]

    def towers():
        order = list(rng.permutation(blocks))
        out, cur = [], []
        for b in order:
            cur.append(b)
            if rng.random() < 0.4:
                out.append(cur)
                cur = []
        if cur:
            out.append(cur)
        return out

    def facts(ts):
        fs = set()
        for t in ts:
            fs.add(Proposition("ontable", (t[0],)))
            for lo, hi in zip(t, t[1:]):
                fs.add(Proposition("on", (hi, lo)))
            fs.add(Proposition("clear", (t[-1],)))
        return fs

    init = facts(towers())
    goal = {f for f in facts(towers()) if f.predicate == "on"}
    return Problem(name, domain.name, {b: "block" for b in blocks}, frozenset(init), frozenset(goal))


def random_walk_problem(
    domain: Domain, template: Problem, rng: np.random.Generator, steps: int = 12, name: str = "p"
) -> Problem:
    """Goal = propositions made true by a random walk from ``template``'s initial state."""
    ops = _ground_ops(domain, template.objects)
    state = frozenset(template.init)
    for _ in range(steps):
        applicable = [op for op in ops if op.pre <= state]
        if not applicable:
            break
        op = applicable[int(rng.integers(len(applicable)))]
        state = (state - op.dele) | op.add
    gained = sorted(state - template.init)
    if not gained:
        return Problem(name, domain.name, dict(template.objects), template.init, template.goal)
    k = max(1, min(len(gained), int(rng.integers(1, 4))))
    picks = rng.choice(len(gained), size=k, replace=False)
    return Problem(name, domain.name, dict(template.objects), template.init, frozenset(gained[i] for i in picks))


@dataclass
class ForgeResult:
    traces: list[PlanTrace]
    swaps: list[Swap] = field(default_factory=list)
    plan_lengths: list[int] = field(default_factory=list)


def forge_trace(
    domain: Domain, problem: Problem, config: CorruptionConfig, index: int, budget: int = 20000
) -> tuple[PlanTrace, list[Swap], int]:
    plan, states = synthesize_plan(domain, problem, budget=budget, seed=config.seed * 1_000_003 + index)
    trace = group_parallel(domain, problem, plan, states)
    trace, swaps = inject_disorder(trace, config, index)
    trace = corrupt_states(trace, config, domain, index)
    return trace, swaps, len(plan)


def forge_corpus(
    domain: Domain,
    n_traces: int,
    config: CorruptionConfig,
    problems: Optional[Sequence[Problem]] = None,
    n_blocks: tuple[int, int] = (4, 6),
    budget: int = 20000,
) -> ForgeResult:
    """Generate ``n_traces`` corrupted traces.

    With ``problems`` given they are used round-robin; otherwise random
    blocks problems are drawn (only meaningful for the bundled blocks
    domain).  Problems whose goal already holds are redrawn.
    """
    result = ForgeResult([])
    for idx in range(n_traces):
        rng = derived_rng(config.seed, _PROBLEM_STREAM, idx)
        for attempt in range(100):
            if problems:
                base = problems[idx % len(problems)]
                problem = base if attempt == 0 else random_walk_problem(domain, base, rng, name=f"{base.name}-w{attempt}")
            else:
                lo, hi = n_blocks
                problem = random_blocks_problem(domain, int(rng.integers(lo, hi + 1)), rng, name=f"p{idx}")
            if not problem.goal <= problem.init:
                break
        else:
            raise NoPlanWithinBudget(f"could not draw a non-trivial problem for trace {idx}")
        trace, swaps, length = forge_trace(domain, problem, config, idx, budget)
        result.traces.append(trace)
        result.swaps.extend(swaps)
        result.plan_lengths.append(length)
    return result
