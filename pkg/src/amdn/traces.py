"""Plan traces with parallel action sets and partial, possibly noisy observations."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import AmdnSyntaxError, SchemaMismatch, ValidationError
from .pddl import Domain, GroundAction, Literal, Proposition, unbind
from .sexp import Atom, SList, parse_many, position


@dataclass(frozen=True)
class Step:
    """One parallel action set and the (optional) observation taken after it."""

    actions: tuple[GroundAction, ...]
    obs: Optional[frozenset[Proposition]] = None

    def __post_init__(self):
        if not self.actions:
            raise ValidationError("parallel action set is empty")
        if len(set(self.actions)) != len(self.actions):
            raise ValidationError(f"duplicate action in parallel set {[str(a) for a in self.actions]}")


@dataclass(frozen=True)
class PlanTrace:
    objects: Mapping[str, str]
    init: frozenset[Proposition]
    steps: tuple[Step, ...]
    goal: frozenset[Proposition] = frozenset()

    def __post_init__(self):
        if not self.steps:
            raise ValidationError("a trace needs at least one step")

    def __eq__(self, other):
        if not isinstance(other, PlanTrace):
            return NotImplemented
        return (
            dict(self.objects) == dict(other.objects)
            and self.init == other.init
            and self.steps == other.steps
            and self.goal == other.goal
        )

    __hash__ = None

    def __len__(self):
        return len(self.steps)

    @property
    def actions(self) -> list[GroundAction]:
        return [a for s in self.steps for a in s.actions]

    def set_index(self, action: GroundAction) -> int:
        for i, s in enumerate(self.steps):
            if action in s.actions:
                return i
        raise KeyError(str(action))

    def distance(self, a: GroundAction, b: GroundAction) -> int:
        return abs(self.set_index(a) - self.set_index(b))

    def before(self, i: int) -> Optional[frozenset[Proposition]]:
        """Observation immediately preceding step ``i`` (the initial state for i == 0)."""
        return self.init if i == 0 else self.steps[i - 1].obs

    def after(self, i: int) -> Optional[frozenset[Proposition]]:
        """Observation immediately following step ``i``; the goal joins it after the last step."""
        obs = self.steps[i].obs
        if i == len(self.steps) - 1:
            return self.goal if obs is None else obs | self.goal
        return obs

    def observations(self) -> list[frozenset[Proposition]]:
        """Init, every attached step observation, then the goal."""
        out = [self.init]
        out += [s.obs for s in self.steps if s.obs is not None]
        out.append(self.goal)
        return out

    def replace(self, **kw) -> "PlanTrace":
        fields_ = dict(objects=self.objects, init=self.init, steps=self.steps, goal=self.goal)
        fields_.update(kw)
        return PlanTrace(**fields_)


# ---------------------------------------------------------------------------
# reading / writing


def _atoms(node, what):
    if not isinstance(node, SList) or not node:
        raise AmdnSyntaxError(f"expected {what}", *position(node), expected=what)
    for x in node:
        if not isinstance(x, Atom):
            raise AmdnSyntaxError(f"expected symbol in {what}", *position(x), expected="symbol")
    return [str(x).lower() for x in node]


def _props(items) -> frozenset[Proposition]:
    out = set()
    for n in items:
        s = _atoms(n, "proposition")
        out.add(Proposition(s[0], tuple(s[1:])))
    return frozenset(out)


def _keyword(node) -> str:
    if not isinstance(node, SList) or not node or not isinstance(node[0], Atom):
        raise AmdnSyntaxError("expected a (:keyword ...) section", *position(node), expected="section")
    return str(node[0]).lower()


def _parse_trace(form) -> PlanTrace:
    if not isinstance(form, SList) or not form or str(form[0]).lower() != "trace":
        raise AmdnSyntaxError("expected (trace ...)", *position(form), expected="(trace")
    objects: dict[str, str] = {}
    init: frozenset = frozenset()
    steps: list[Step] = []
    goal = None
    for sec in form[1:]:
        key = _keyword(sec)
        if key == ":objects":
            pending = []
            items = list(sec[1:])
            i = 0
            while i < len(items):
                x = items[i]
                if not isinstance(x, Atom):
                    raise AmdnSyntaxError("expected object name", *position(x), expected="object")
                if x == "-":
                    if i + 1 >= len(items) or not isinstance(items[i + 1], Atom):
                        raise AmdnSyntaxError("type expected after '-'", *position(x), expected="type")
                    for o in pending:
                        objects[o] = str(items[i + 1]).lower()
                    pending = []
                    i += 2
                else:
                    pending.append(str(x).lower())
                    i += 1
            for o in pending:
                objects[o] = "object"
        elif key == ":init":
            init = _props(sec[1:])
        elif key == ":step":
            actions = None
            obs = None
            for sub in sec[1:]:
                sk = _keyword(sub)
                if sk == ":actions":
                    acts = []
                    for n in sub[1:]:
                        s = _atoms(n, "action")
                        acts.append(GroundAction(s[0], tuple(s[1:])))
                    actions = tuple(acts)
                elif sk == ":obs":
                    obs = _props(sub[1:])
                else:
                    raise AmdnSyntaxError(f"unexpected {sk} in :step", *position(sub), expected=":actions or :obs")
            if actions is None:
                raise AmdnSyntaxError(":step without :actions", *position(sec), expected=":actions")
            steps.append(Step(actions, obs))
        elif key == ":goal":
            goal = _props(sec[1:])
        else:
            raise AmdnSyntaxError(f"unexpected section {key}", *position(sec), expected="trace section")
    if goal is None:
        raise AmdnSyntaxError(":goal is required", *position(form), expected=":goal")
    return PlanTrace(objects, init, tuple(steps), goal)


def validate_trace(trace: PlanTrace, domain: Domain) -> None:
    """Check action names, arities and typing of every symbol against ``domain``."""
    for o, t in trace.objects.items():
        if t not in domain.types:
            raise ValidationError(f"object {o!r} has undeclared type {t!r}")

    def check_args(what, args, types_):
        for a, t in zip(args, types_):
            if a not in trace.objects:
                raise ValidationError(f"{what}: untyped object {a!r}")
            if not domain.types.is_subtype(trace.objects[a], t):
                raise ValidationError(f"{what}: object {a!r} is not a {t}")

    def check_prop(p: Proposition):
        pred = domain.predicates.get(p.predicate)
        if pred is None:
            raise ValidationError(f"unknown predicate in {p}")
        if pred.arity != len(p.args):
            raise ValidationError(f"arity mismatch in {p}")
        check_args(str(p), p.args, pred.param_types)

    for obs in trace.observations():
        for p in obs:
            check_prop(p)
    for step in trace.steps:
        for a in step.actions:
            try:
                schema = domain.schema_of(a)
            except SchemaMismatch as exc:
                raise ValidationError(str(exc)) from None
            check_args(str(a), a.args, schema.param_types)


def read_traces(text: str, domain: Optional[Domain] = None) -> list[PlanTrace]:
    traces = [_parse_trace(f) for f in parse_many(text)]
    if domain is not None:
        for t in traces:
            validate_trace(t, domain)
    return traces


def _fmt_props(props) -> str:
    return " ".join(str(p) for p in sorted(props))


def _section(key: str, body: str) -> str:
    return f"({key} {body})" if body else f"({key})"


def write_trace(trace: PlanTrace) -> str:
    by_type: dict[str, list[str]] = {}
    for o, t in trace.objects.items():
        by_type.setdefault(t, []).append(o)
    objs = " ".join(" ".join(sorted(by_type[t])) + f" - {t}" for t in sorted(by_type))
    lines = ["(trace", "  " + _section(":objects", objs), "  " + _section(":init", _fmt_props(trace.init))]
    for s in trace.steps:
        line = "  (:step " + _section(":actions", " ".join(str(a) for a in s.actions))
        if s.obs is not None:
            line += " " + _section(":obs", _fmt_props(s.obs))
        lines.append(line + ")")
    lines.append("  " + _section(":goal", _fmt_props(trace.goal)) + ")")
    return "\n".join(lines) + "\n"


def write_traces(traces: Iterable[PlanTrace]) -> str:
    return "".join(write_trace(t) for t in traces)


# ---------------------------------------------------------------------------
# occurrence statistics

LiftedKey = tuple[str, Literal]


@dataclass
class OccurrenceTables:
    """Lifted co-occurrence counts between schemas and observed propositions.

    ``after[(schema, lit)]`` counts observed propositions in the observation
    right after a parallel set containing an instance of ``schema`` that lift
    to ``lit``; ``before`` is the same for the observation right before.  A
    proposition that lifts several ways contributes ``1/k`` to each lifting.
    ``prop_count`` counts ground propositions over every observation
    (init, steps, goal) and ``total`` is its sum.
    """

    after: Counter = field(default_factory=Counter)
    before: Counter = field(default_factory=Counter)
    prop_count: Counter = field(default_factory=Counter)
    total: int = 0

    def merge(self, other: "OccurrenceTables") -> "OccurrenceTables":
        return OccurrenceTables(
            self.after + other.after,
            self.before + other.before,
            self.prop_count + other.prop_count,
            self.total + other.total,
        )


def _lift_into(table: Counter, domain: Domain, action: GroundAction, props) -> None:
    for p in props:
        lits = unbind(action, p, domain)
        if lits:
            share = Fraction(1, len(lits))
            for lit in lits:
                table[(action.name, lit)] += share


def occurrence_tables(traces: Iterable[PlanTrace], domain: Domain) -> OccurrenceTables:
    out = OccurrenceTables()
    for t in traces:
        for obs in t.observations():
            out.prop_count.update(obs)
            out.total += len(obs)
        for i, step in enumerate(t.steps):
            before, after = t.before(i), t.after(i)
            for a in step.actions:
                if before is not None:
                    _lift_into(out.before, domain, a, before)
                if after is not None:
                    _lift_into(out.after, domain, a, after)
    return out
