"""Turn solver assignments into action models, and run the whole learner."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .compiler import CompileConfig, Theory, VariableCatalog, compile_theory
from .errors import HardViolation, UnknownVariable
from .maxsat import SlsParams, Solution, solve
from .pddl import Domain

log = logging.getLogger(__name__)


def decode(values: Sequence[bool], catalog: VariableCatalog, skeleton: Domain) -> Domain:
    """Bodies from the true schema variables; entries past the catalog are auxiliaries.

    Raises:
        HardViolation: an add is also a precondition, or a delete is not one.
        UnknownVariable: the catalog names a schema or literal the skeleton lacks.
    """
    if len(values) < len(catalog):
        raise UnknownVariable(f"assignment covers {len(values)} of {len(catalog)} variables")
    bodies = {name: {"pre": set(), "add": set(), "del": set()} for name in skeleton.actions}
    for v in catalog:
        if v.schema not in bodies:
            raise UnknownVariable(f"schema {v.schema} is not in the domain")
        if v.literal not in skeleton._candidate_sets[v.schema]:
            raise UnknownVariable(f"{v.literal} is not a candidate of {v.schema}")
        if values[v.id - 1]:
            bodies[v.schema][v.slot].add(v.literal)
    actions = []
    for name in sorted(skeleton.actions):
        b = bodies[name]
        bad_add = b["add"] & b["pre"]
        bad_del = b["del"] - b["pre"]
        if bad_add or bad_del:
            lit = sorted(bad_add | bad_del)[0]
            raise HardViolation(f"{name}: {lit} breaks the STRIPS rules (add and pre, or del without pre)")
        actions.append(skeleton.actions[name].with_body(b["pre"], b["add"], b["del"]))
    return skeleton.replace_actions(actions)


def encode(domain: Domain, catalog: VariableCatalog) -> list[bool]:
    """Assignment over ``catalog`` whose true variables are exactly ``domain``'s bodies."""
    values = [False] * len(catalog)
    for v in catalog:
        values[v.id - 1] = v.literal in domain.actions[v.schema].slot(v.slot)
    return values


@dataclass(frozen=True)
class LearnConfig:
    compile: CompileConfig = CompileConfig()
    solver: str = "auto"
    seed: int = 0
    time_budget: Optional[float] = None
    sls: SlsParams = SlsParams()


@dataclass
class LearnResult:
    domain: Domain
    theory: Theory
    solution: Solution
    report: dict
    timings: dict = field(default_factory=dict)


def family_weights(theory: Theory, values: Sequence[bool]) -> dict:
    """Satisfied and violated soft weight per family for an assignment over all variables."""
    out: dict = {}
    for (lits, w), fam in zip(theory.wcnf.soft, theory.lowered.soft_families):
        row = out.setdefault(fam, {"clauses": 0, "satisfied": 0, "violated": 0})
        row["clauses"] += 1
        ok = any((values[x - 1] if x > 0 else not values[-x - 1]) for x in lits)
        row["satisfied" if ok else "violated"] += w
    return dict(sorted(out.items()))


def learn(skeleton: Domain, traces, config: LearnConfig = LearnConfig()) -> LearnResult:
    """Compile, solve and decode.

    The report holds only quantities that are a function of the inputs and
    the configuration; wall times are returned separately in ``timings``.
    """
    skeleton = skeleton.skeleton()
    timings = {}
    t0 = time.perf_counter()
    theory = compile_theory(skeleton, traces, config.compile)
    timings["compile"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    sol = solve(theory.wcnf, config.solver, seed=config.seed, time_budget=config.time_budget, sls=config.sls)
    sol.check(theory.wcnf)
    timings["solve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    learned = decode(sol.values, theory.catalog, skeleton)
    timings["decode"] = time.perf_counter() - t0
    wcnf = theory.wcnf
    report = {
        "traces": len(traces),
        "variables": len(theory.catalog),
        "auxiliaries": len(theory.lowered.aux),
        "hard_clauses": len(wcnf.hard),
        "soft_clauses": len(wcnf.soft),
        "top": wcnf.top,
        "generated": theory.raw_counts,
        "families": family_weights(theory, sol.values),
        "solver": {"method": config.solver, "cost": sol.cost, "optimal": sol.optimal},
        "config": _jsonable(asdict(config)),
    }
    return LearnResult(learned, theory, sol, report, timings)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x
