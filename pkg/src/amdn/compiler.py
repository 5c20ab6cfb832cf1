"""Compile a trace corpus into a weighted theory over schema variables.

Three constraint families are produced, each from a different kind of
evidence in the traces:

* ordering constraints between adjacent parallel sets (``DC1``/``DC2``),
* the hard STRIPS rules plus non-interference inside a parallel set
  (``P1``/``P2``/``PC1``/``PC2``),
* frequency constraints from observed states (``NC1``/``NC2``/``NC3``).

The ``DC2``/``PC2`` copies encode the same relation with the two actions
exchanged and carry the share of ``w_max`` that the disorder prior assigns to
that exchange, so every ordered/swapped pair sums to exactly ``w_max``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import PairOutOfScope, UnknownVariable
from .formula import HARD, Formula, Not, Or, canonical, conj, disj, lower
from .maxsat.wcnf import WcnfInstance
from .pddl import SLOTS, Domain, GroundAction, Literal, Proposition, bind, unbind
from .traces import PlanTrace, occurrence_tables

log = logging.getLogger(__name__)

FAMILIES = ("P1", "P2", "DC1", "DC2", "PC1", "PC2", "NC1", "NC2", "NC3", "EV", "MIN")


# ---------------------------------------------------------------------------
# variables


@dataclass(frozen=True)
class SchemaVariable:
    schema: str
    literal: Literal
    slot: str
    id: int

    def describe(self, domain: Optional[Domain] = None) -> str:
        names = tuple(f"?{i}" for i in range(max(self.literal.args, default=-1) + 1))
        if domain is not None:
            names = domain.actions[self.schema].param_names
        return f"{self.slot}({self.schema}, {self.literal.render(names)})"


class VariableCatalog:
    """Bijection between (schema, candidate literal, slot) and ids ``1..n``.

    Ids follow schema name, then candidate order, then slot order
    ``pre, add, del``, so the numbering depends only on the domain.
    """

    def __init__(self, variables: Sequence[SchemaVariable]):
        self.variables = tuple(variables)
        self._ids = {(v.schema, v.literal, v.slot): v.id for v in self.variables}
        for k, v in enumerate(self.variables, 1):
            if v.id != k:
                raise ValueError("variable ids must be contiguous from 1")
        if len(self._ids) != len(self.variables):
            raise ValueError("duplicate (schema, literal, slot) in catalog")

    def __len__(self):
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def __getitem__(self, vid: int) -> SchemaVariable:
        if not 1 <= vid <= len(self.variables):
            raise UnknownVariable(f"variable {vid} is not in the catalog")
        return self.variables[vid - 1]

    def id(self, schema: str, literal: Literal, slot: str) -> int:
        try:
            return self._ids[(schema, literal, slot)]
        except KeyError:
            raise UnknownVariable(f"no variable for {slot}({schema}, {literal})") from None

    def pre(self, schema, lit):
        return self.id(schema, lit, "pre")

    def add(self, schema, lit):
        return self.id(schema, lit, "add")

    def dele(self, schema, lit):
        return self.id(schema, lit, "del")

    def to_json(self, aux: Sequence[int] = ()) -> str:
        rows = [
            {"id": v.id, "schema": v.schema, "predicate": v.literal.predicate, "args": list(v.literal.args), "slot": v.slot}
            for v in self.variables
        ]
        return json.dumps({"variables": rows, "aux": list(aux)}, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> tuple["VariableCatalog", list[int]]:
        data = json.loads(text)
        vs = [
            SchemaVariable(r["schema"], Literal(r["predicate"], tuple(r["args"])), r["slot"], r["id"])
            for r in sorted(data["variables"], key=lambda r: r["id"])
        ]
        return cls(vs), list(data.get("aux", []))


def build_variables(domain: Domain, traces: Iterable[PlanTrace] = ()) -> VariableCatalog:
    """One variable per (schema, candidate literal, slot).

    The catalog covers the whole hypothesis space, so it does not depend on
    which schemas the traces happen to mention.
    """
    out = []
    for name in sorted(domain.actions):
        for lit in domain.candidates(name):
            for slot in SLOTS:
                out.append(SchemaVariable(name, lit, slot, len(out) + 1))
    return VariableCatalog(out)


# ---------------------------------------------------------------------------
# disorder prior

Feature = Callable[[GroundAction, GroundAction], float]


def shared_objects(a: GroundAction, b: GroundAction) -> float:
    return float(len(set(a.args) & set(b.args)))


def equal_arity(a: GroundAction, b: GroundAction) -> float:
    return 1.0 if len(a.args) == len(b.args) else 0.0


FEATURES: dict[str, Feature] = {"shared_objects": shared_objects, "equal_arity": equal_arity}


def disorder_scope(traces: Iterable[PlanTrace]) -> list[tuple[GroundAction, GroundAction]]:
    """Ordered pairs of distinct actions that co-occur in some window of two adjacent sets."""
    pairs = set()
    for t in traces:
        sets = [s.actions for s in t.steps]
        windows = [sets[i] + sets[i + 1] for i in range(len(sets) - 1)] or [sets[0]]
        for w in windows:
            for a, b in itertools.permutations(set(w), 2):
                pairs.add((a, b))
    return sorted(pairs)


class DisorderPrior:
    """Log-linear distribution over the ordered action pairs of a scope.

    ``theta`` defaults to ``1/k`` for each of the ``k`` features.  ``p`` is
    the normalized probability; :meth:`swap_probability` applies ``scale``
    and clips to 1, and is what constraint weights use.
    """

    def __init__(
        self,
        scope: Iterable[tuple[GroundAction, GroundAction]],
        features: Sequence[Feature] = (shared_objects, equal_arity),
        theta: Optional[Sequence[float]] = None,
        scale: float = 1.0,
    ):
        self.features = tuple(features)
        k = len(self.features)
        self.theta = tuple(theta) if theta is not None else tuple(1.0 / k for _ in range(k))
        if len(self.theta) != k:
            raise ValueError("theta must have one entry per feature")
        self.scale = scale
        scope = sorted(set(scope))
        logits = {pair: self.score(*pair) for pair in scope}
        if logits:
            m = max(logits.values())
            log_z = m + math.log(math.fsum(math.exp(v - m) for v in logits.values()))
        else:
            log_z = 0.0
        self.table = {pair: math.exp(v - log_z) for pair, v in logits.items()}

    def score(self, a: GroundAction, b: GroundAction) -> float:
        return math.fsum(t * f(a, b) for t, f in zip(self.theta, self.features))

    def p(self, a: GroundAction, b: GroundAction) -> float:
        if a == b:
            raise PairOutOfScope(f"pair ({a}, {a}) has identical actions")
        try:
            return self.table[(a, b)]
        except KeyError:
            raise PairOutOfScope(f"pair ({a}, {b}) is outside the normalization scope") from None

    def swap_probability(self, a: GroundAction, b: GroundAction) -> float:
        return min(1.0, self.scale * self.p(a, b))

    @classmethod
    def from_traces(cls, traces: Sequence[PlanTrace], **kw) -> "DisorderPrior":
        return cls(disorder_scope(traces), **kw)


# ---------------------------------------------------------------------------
# weighted formulas


@dataclass(frozen=True)
class WeightedFormula:
    """A formula with its family, a weight (``None`` for hard) and its origin."""

    formula: Formula
    weight: object
    family: str
    trace: Optional[int] = None
    steps: tuple[int, ...] = ()

    @property
    def hard(self) -> bool:
        return self.weight is HARD


@dataclass(frozen=True)
class DualPair:
    """Weights of an ordered constraint and its swapped copy."""

    kind: str
    trace: int
    step: int
    actions: tuple[str, ...]
    ordered: int
    swapped: int


def _shared_liftings(domain: Domain, x: GroundAction, y: GroundAction, evidence: Optional[frozenset] = None):
    """Pairs (lx, ly) of candidate literals binding to one proposition over shared objects.

    With ``evidence`` given, only propositions in it are considered.
    """
    shared = sorted(set(x.args) & set(y.args))
    if not shared:
        return []
    out = []
    for pred in sorted(domain.predicates):
        ar = domain.predicates[pred].arity
        for args in itertools.product(shared, repeat=ar):
            r = Proposition(pred, args)
            if evidence is not None and r not in evidence:
                continue
            lx, ly = unbind(x, r, domain), unbind(y, r, domain)
            for a in sorted(lx):
                for b in sorted(ly):
                    out.append((a, b))
    return list(dict.fromkeys(out))


def _interaction(cat: VariableCatalog, x: GroundAction, lx: Literal, y: GroundAction, ly: Literal) -> Formula:
    """The four ways ``x`` can enable or conflict with a later ``y`` through one proposition."""
    sx, sy = x.name, y.name
    return disj(
        conj(cat.pre(sx, lx), Not(cat.dele(sx, lx)), cat.dele(sy, ly)),
        conj(cat.add(sx, lx), cat.pre(sy, ly)),
        conj(cat.add(sx, lx), cat.dele(sy, ly)),
        conj(cat.dele(sx, lx), cat.add(sy, ly)),
    )


def _split(w_max: int, p: float) -> tuple[int, int]:
    swapped = int(round(p * w_max))
    return w_max - swapped, swapped


def build_dc(
    domain: Domain,
    traces: Sequence[PlanTrace],
    prior: DisorderPrior,
    cat: VariableCatalog,
    w_max: int,
    aggregate: str = "max",
    evidence: Optional[frozenset] = None,
) -> tuple[list[WeightedFormula], list[DualPair]]:
    """Ordering constraints between each action and the set before it.

    For every ``a_y`` in set ``i + 1`` the ordered form says some ``a_x`` in
    set ``i`` interacts with it; the swapped form says the reverse.  The
    prior of the pair is aggregated over the ``a_x`` that share a literal.
    """
    out: list[WeightedFormula] = []
    pairs: list[DualPair] = []
    for ti, t in enumerate(traces):
        for i in range(len(t.steps) - 1):
            for y in t.steps[i + 1].actions:
                fwd, bwd, probs, xs = [], [], [], []
                for x in t.steps[i].actions:
                    if x == y:
                        continue
                    lifts = _shared_liftings(domain, x, y, evidence)
                    if not lifts:
                        continue
                    fwd += [_interaction(cat, x, lx, y, ly) for lx, ly in lifts]
                    bwd += [_interaction(cat, y, ly, x, lx) for lx, ly in lifts]
                    probs.append(prior.swap_probability(x, y))
                    xs.append(str(x))
                if not fwd:
                    log.debug("trace %d step %d: %s shares no literal with the previous set", ti, i + 1, y)
                    continue
                p_bar = max(probs) if aggregate == "max" else math.fsum(probs) / len(probs)
                w1, w2 = _split(w_max, p_bar)
                steps = (i, i + 1)
                out.append(WeightedFormula(disj(*fwd), w1, "DC1", ti, steps))
                out.append(WeightedFormula(disj(*bwd), w2, "DC2", ti, steps))
                pairs.append(DualPair("DC", ti, i, (*xs, str(y)), w1, w2))
    return out, pairs


def _no_conflict(cat: VariableCatalog, u: GroundAction, v: GroundAction, domain: Domain, evidence=None) -> Optional[Formula]:
    """No shared literal is added or deleted by both ``u`` and ``v``."""
    clauses = []
    for lu, lv in _shared_liftings(domain, u, v, evidence):
        for su in ("add", "del"):
            for sv in ("add", "del"):
                clauses.append(Or((Not(cat.id(u.name, lu, su)), Not(cat.id(v.name, lv, sv)))))
    if not clauses:
        return None
    return conj(*clauses)


def build_pc(
    domain: Domain,
    traces: Sequence[PlanTrace],
    prior: DisorderPrior,
    cat: VariableCatalog,
    w_max: int,
    evidence: Optional[frozenset] = None,
) -> tuple[list[WeightedFormula], list[DualPair]]:
    """Hard STRIPS rules plus pairwise non-interference inside parallel sets.

    For ``a'_x, a_x`` in set ``i`` and ``a_y`` in set ``i + 1`` the ordered
    copy constrains ``(a'_x, a_x)`` and the swapped copy ``(a'_x, a_y)``.
    In the final set there is no ``a_y`` and the ordered copy gets all of
    ``w_max``.
    """
    out: list[WeightedFormula] = []
    for v in cat:
        if v.slot == "add":
            out.append(WeightedFormula(Or((Not(v.id), Not(cat.pre(v.schema, v.literal)))), HARD, "P1"))
        elif v.slot == "del":
            out.append(WeightedFormula(Or((Not(v.id), cat.pre(v.schema, v.literal))), HARD, "P2"))
    pairs: list[DualPair] = []
    for ti, t in enumerate(traces):
        for i, step in enumerate(t.steps):
            acts = step.actions
            nxt = t.steps[i + 1].actions if i + 1 < len(t.steps) else ()
            for xp, x in itertools.permutations(acts, 2):
                ordered = _no_conflict(cat, xp, x, domain, evidence)
                if not nxt:
                    if ordered is not None:
                        out.append(WeightedFormula(ordered, w_max, "PC1", ti, (i,)))
                    continue
                for y in nxt:
                    if y == xp:
                        continue
                    swapped = _no_conflict(cat, xp, y, domain, evidence)
                    if ordered is None and swapped is None:
                        continue
                    w1, w2 = _split(w_max, prior.swap_probability(x, y) if x != y else 0.0)
                    if ordered is not None:
                        out.append(WeightedFormula(ordered, w1, "PC1", ti, (i, i + 1)))
                    if swapped is not None:
                        out.append(WeightedFormula(swapped, w2, "PC2", ti, (i, i + 1)))
                    pairs.append(DualPair("PC", ti, i, (str(xp), str(x), str(y)), w1, w2))
    return out, pairs


def build_nc(
    domain: Domain,
    traces: Sequence[PlanTrace],
    cat: VariableCatalog,
    w_max: int,
    delta: float = 2,
    support: float = 0.0,
) -> list[WeightedFormula]:
    """Frequency constraints from observed states.

    ``NC1``/``NC3`` fire for lifted (schema, literal) pairs seen more than
    ``delta`` times after/before the schema; their weight is the lifted count
    over all observed propositions times ``w_max``.  ``NC2`` asks that every
    observed proposition absent from the initial state be added by some
    earlier action, weighted by that proposition's frequency.

    ``support`` additionally requires the literal to be seen in at least that
    fraction of the schema's observed instances, which keeps literals that
    merely happen to hold often out of ``NC1``/``NC3``.
    """
    tables = occurrence_tables(traces, domain)
    total = tables.total
    out: list[WeightedFormula] = []
    if total == 0:
        return out
    seen_before: Counter = Counter()
    seen_after: Counter = Counter()
    for t in traces:
        for i, step in enumerate(t.steps):
            for a in step.actions:
                seen_before[a.name] += t.before(i) is not None
                seen_after[a.name] += t.after(i) is not None
    for (schema, lit), n in sorted(tables.after.items()):
        if n > delta and n >= support * seen_after[schema]:
            out.append(WeightedFormula(Not(cat.dele(schema, lit)), Fraction(n) / total * w_max, "NC1"))
    for (schema, lit), n in sorted(tables.before.items()):
        if n > delta and n >= support * seen_before[schema]:
            out.append(WeightedFormula(cat.pre(schema, lit), Fraction(n) / total * w_max, "NC3"))
    for ti, t in enumerate(traces):
        seen: list[GroundAction] = []
        for i, step in enumerate(t.steps):
            seen.extend(step.actions)
            obs = t.after(i)
            if not obs:
                continue
            for r in sorted(obs - t.init):
                adds = []
                for a in dict.fromkeys(seen):
                    adds += [cat.add(a.name, lit) for lit in sorted(unbind(a, r, domain))]
                if not adds:
                    log.debug("trace %d: %s cannot be added by any earlier action", ti, r)
                    continue
                w = Fraction(tables.prop_count[r]) / total * w_max
                out.append(WeightedFormula(disj(*dict.fromkeys(adds)), w, "NC2", ti, (i,)))
    return out


def build_evidence(
    domain: Domain,
    traces: Sequence[PlanTrace],
    cat: VariableCatalog,
    unit: float,
    threshold: float = 0.7,
) -> list[WeightedFormula]:
    """Per-slot evidence from the states around each observed action instance.

    For a candidate literal bound by an instance, "held before" supports a
    precondition, "absent before, present after" supports an add and
    "present before, absent after" supports a delete.  Each slot gets a unit
    for the slot weighted ``hits * (1 - threshold) * unit`` and a unit
    against it weighted ``misses * threshold * unit``, so the evidence favours
    the slot exactly when its hit rate exceeds ``threshold``.
    """
    stats: dict = {}
    for t in traces:
        for i, step in enumerate(t.steps):
            before, after = t.before(i), t.after(i)
            if before is None:
                continue
            for a in step.actions:
                for lit in domain.candidates(a.name):
                    r = bind(a, lit)
                    row = stats.setdefault((a.name, lit), [0, 0, 0, 0, 0])
                    held = r in before
                    row[0] += 1
                    row[1] += held
                    if after is not None:
                        now = r in after
                        row[2] += 1
                        row[3] += (not held) and now
                        row[4] += held and not now
    out: list[WeightedFormula] = []
    lo, hi = Fraction(threshold).limit_denominator(10**6), 1 - Fraction(threshold).limit_denominator(10**6)
    unit = Fraction(unit).limit_denominator(10**6)
    for (schema, lit), (nb, held, nba, appear, vanish) in sorted(stats.items()):
        for slot, hits, n in (("pre", held, nb), ("add", appear, nba), ("del", vanish, nba)):
            if n == 0:
                continue
            v = cat.id(schema, lit, slot)
            if hits:
                out.append(WeightedFormula(v, hits * hi * unit, "EV"))
            if n - hits:
                out.append(WeightedFormula(Not(v), (n - hits) * lo * unit, "EV"))
    return out


# ---------------------------------------------------------------------------
# merging and lowering


def merge(formulas: Iterable[WeightedFormula], w_max: int, cap: bool = False) -> list[WeightedFormula]:
    """Merge identical (family, formula) entries, summing soft weights.

    Summed weights are rounded to integers, at least 1, and with ``cap`` at
    most ``w_max - 1``; zero-weight soft formulas are dropped.  Order is by
    family, then first appearance.
    """
    hard: dict = {}
    soft: dict = {}
    for wf in formulas:
        key = (wf.family, canonical(wf.formula))
        if wf.hard:
            hard.setdefault(key, wf)
        elif wf.weight > 0:
            soft[key] = soft.get(key, 0) + Fraction(wf.weight)
    out = [WeightedFormula(f, HARD, fam) for (fam, f) in hard]
    for (fam, f), w in soft.items():
        w = max(1, int(round(w)))
        if cap:
            w = min(w, max(1, w_max - 1))
        out.append(WeightedFormula(f, w, fam))
    order = {fam: k for k, fam in enumerate(FAMILIES)}
    return sorted(out, key=lambda wf: order.get(wf.family, len(order)))


def with_parsimony(formulas: Sequence[WeightedFormula], cat: VariableCatalog) -> list[WeightedFormula]:
    """Lexicographic tie-break toward false schema variables.

    Every soft weight is multiplied by ``len(cat) + 1`` and each variable gets
    a unit-weight ``not x``.  The unit terms sum to less than one scaled step,
    so every optimum of the result is an optimum of the input.
    """
    k = len(cat) + 1
    out = [wf if wf.hard else WeightedFormula(wf.formula, wf.weight * k, wf.family, wf.trace, wf.steps) for wf in formulas]
    out += [WeightedFormula(Not(v.id), 1, "MIN") for v in cat]
    return out


@dataclass
class LoweredTheory:
    wcnf: WcnfInstance
    aux: list[int]
    soft_families: list[str]  # family of each soft clause, in wcnf.soft order


def lower_to_wcnf(formulas: Sequence[WeightedFormula], num_vars: int) -> LoweredTheory:
    """Clausal form with auxiliaries; hard clauses get ``top`` = soft sum + 1."""
    for wf in formulas:
        if not wf.hard and wf.weight != int(wf.weight):
            raise ValueError("lower_to_wcnf expects integer soft weights; merge first")
    kept = [wf for wf in formulas if wf.hard or wf.weight > 0]
    clauses, aux, n = lower(((wf.formula, None if wf.hard else int(wf.weight)) for wf in kept), num_vars)
    families = [wf.family for wf in kept if not wf.hard]
    return LoweredTheory(WcnfInstance.build(n, clauses), aux, families)


# ---------------------------------------------------------------------------
# whole corpus


@dataclass(frozen=True)
class CompileConfig:
    w_max: int = 10_000
    delta: float = 2
    prior_scale: float = 1.0
    aggregate: str = "max"
    features: tuple[str, ...] = ("shared_objects", "equal_arity")
    # among equally good models prefer the one with fewest true variables
    parsimony: bool = True
    # restrict the shared-proposition expansion of DC/PC to observed propositions
    observed_only: bool = True
    # minimum fraction of a schema's instances a literal must be seen with for NC1/NC3
    support: float = 0.8
    # per-instance weight of state evidence, as a fraction of w_max (0 disables it)
    evidence_rate: float = 0.3
    evidence_threshold: float = 0.7
    # clip merged soft weights to w_max - 1 (loses how often a constraint recurs)
    cap_merged: bool = False

    def __post_init__(self):
        if self.w_max < 2:
            raise ValueError("w_max must be at least 2")
        if self.aggregate not in ("max", "mean"):
            raise ValueError("aggregate must be 'max' or 'mean'")
        unknown = set(self.features) - set(FEATURES)
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")


@dataclass
class Theory:
    catalog: VariableCatalog
    formulas: list[WeightedFormula]
    pairs: list[DualPair]
    lowered: LoweredTheory
    raw_counts: dict = field(default_factory=dict)

    @property
    def wcnf(self) -> WcnfInstance:
        return self.lowered.wcnf


def compile_theory(domain: Domain, traces: Sequence[PlanTrace], config: CompileConfig = CompileConfig()) -> Theory:
    cat = build_variables(domain, traces)
    prior = DisorderPrior.from_traces(
        traces, features=[FEATURES[f] for f in config.features], scale=config.prior_scale
    )
    evidence = None
    if config.observed_only:
        evidence = frozenset(p for t in traces for obs in t.observations() for p in obs)
    dc, dc_pairs = build_dc(domain, traces, prior, cat, config.w_max, config.aggregate, evidence)
    pc, pc_pairs = build_pc(domain, traces, prior, cat, config.w_max, evidence)
    nc = build_nc(domain, traces, cat, config.w_max, config.delta, config.support)
    raw = dc + pc + nc
    if config.evidence_rate > 0:
        raw += build_evidence(domain, traces, cat, config.evidence_rate * config.w_max, config.evidence_threshold)
    counts: dict = defaultdict(int)
    for wf in raw:
        counts[wf.family] += 1
    merged = merge(raw, config.w_max, config.cap_merged)
    if config.parsimony:
        merged = with_parsimony(merged, cat)
    lowered = lower_to_wcnf(merged, len(cat))
    return Theory(cat, merged, dc_pairs + pc_pairs, lowered, dict(sorted(counts.items())))
