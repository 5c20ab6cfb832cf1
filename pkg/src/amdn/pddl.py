"""Typed-STRIPS domains: parsing, emission, grounding and the candidate-literal vocabulary.

Lifted literals refer to the parameters of their host schema by *position*,
so two schemas that differ only in parameter names compare equal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .errors import AmdnSyntaxError, SchemaMismatch, SemanticError, UnsupportedFeature
from .sexp import Atom, SList, parse_many, position

ROOT_TYPE = "object"
SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})
SLOTS = ("pre", "add", "del")


@dataclass(frozen=True)
class TypeTree:
    """Single-inheritance type hierarchy rooted at ``object``."""

    parent: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for t in self.parent:
            seen = {t}
            cur = t
            while cur != ROOT_TYPE:
                cur = self.parent.get(cur)
                if cur is None:
                    raise SemanticError(f"type {t!r} has an undeclared ancestor")
                if cur in seen:
                    raise SemanticError(f"type hierarchy is cyclic at {t!r}")
                seen.add(cur)

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self.parent) | {ROOT_TYPE}

    def __contains__(self, name: str) -> bool:
        return name == ROOT_TYPE or name in self.parent

    def is_subtype(self, t: str, ancestor: str) -> bool:
        """Reflexive-transitive subtype test."""
        cur = t
        while True:
            if cur == ancestor:
                return True
            if cur == ROOT_TYPE:
                return False
            cur = self.parent[cur]


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    param_types: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True, order=True)
class Literal:
    """A lifted literal: predicate applied to positions of the host schema's parameters.

    This is also the candidate-literal type: repeated positions are allowed,
    constants are not.
    """

    predicate: str
    args: tuple[int, ...]

    def render(self, names: tuple[str, ...]) -> str:
        return "(" + " ".join([self.predicate] + [f"?{names[i]}" for i in self.args]) + ")"


CandidateLiteral = Literal


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    pre: frozenset[Literal] = frozenset()
    add: frozenset[Literal] = frozenset()
    delete: frozenset[Literal] = frozenset()

    def __post_init__(self):
        names = [p for p, _ in self.params]
        if len(set(names)) != len(names):
            raise SemanticError(f"action {self.name}: duplicate parameter names")
        for lit in self.pre | self.add | self.delete:
            if any(i < 0 or i >= len(self.params) for i in lit.args):
                raise SemanticError(f"action {self.name}: literal {lit} uses an undeclared parameter")

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.params)

    @property
    def param_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.params)

    def slot(self, name: str) -> frozenset[Literal]:
        return {"pre": self.pre, "add": self.add, "del": self.delete}[name]

    def with_body(self, pre=(), add=(), delete=()) -> "ActionSchema":
        return ActionSchema(self.name, self.params, frozenset(pre), frozenset(add), frozenset(delete))

    def skeleton(self) -> "ActionSchema":
        return ActionSchema(self.name, self.params)

    def is_strips_consistent(self) -> bool:
        return not (self.add & self.pre) and self.delete <= self.pre


@dataclass(frozen=True, order=True)
class Proposition:
    predicate: str
    args: tuple[str, ...]

    def __str__(self):
        return "(" + " ".join((self.predicate,) + self.args) + ")"


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple[str, ...]

    def __str__(self):
        return "(" + " ".join((self.name,) + self.args) + ")"

    @property
    def objects(self) -> frozenset[str]:
        return frozenset(self.args)


@dataclass(frozen=True)
class Domain:
    name: str
    types: TypeTree
    predicates: Mapping[str, PredicateSchema]
    actions: Mapping[str, ActionSchema]
    requirements: tuple[str, ...] = (":strips", ":typing")

    def __eq__(self, other):
        if not isinstance(other, Domain):
            return NotImplemented
        return (
            self.name == other.name
            and dict(self.types.parent) == dict(other.types.parent)
            and dict(self.predicates) == dict(other.predicates)
            and dict(self.actions) == dict(other.actions)
            and set(self.requirements) == set(other.requirements)
        )

    __hash__ = None

    @cached_property
    def _candidates(self) -> dict[str, tuple[Literal, ...]]:
        return {name: candidate_literals(a, self) for name, a in self.actions.items()}

    def candidates(self, action_name: str) -> tuple[Literal, ...]:
        """Cached :func:`candidate_literals` for the named schema."""
        try:
            return self._candidates[action_name]
        except KeyError:
            raise SchemaMismatch(f"unknown action {action_name!r}") from None

    @cached_property
    def _candidate_sets(self) -> dict[str, frozenset[Literal]]:
        return {k: frozenset(v) for k, v in self._candidates.items()}

    def replace_actions(self, actions: Iterable[ActionSchema]) -> "Domain":
        return Domain(self.name, self.types, dict(self.predicates), {a.name: a for a in actions}, self.requirements)

    def skeleton(self) -> "Domain":
        return self.replace_actions(a.skeleton() for a in self.actions.values())

    # grounding -------------------------------------------------------

    def schema_of(self, ground: GroundAction) -> ActionSchema:
        schema = self.actions.get(ground.name)
        if schema is None:
            raise SchemaMismatch(f"unknown action {ground.name!r}")
        if schema.arity != len(ground.args):
            raise SchemaMismatch(f"{ground}: expected {schema.arity} arguments")
        return schema

    def ground(self, ground: GroundAction) -> tuple[frozenset, frozenset, frozenset]:
        """Grounded (PRE, ADD, DEL) of ``ground`` under this domain's bodies."""
        schema = self.schema_of(ground)
        return tuple(frozenset(bind(ground, lit) for lit in schema.slot(s)) for s in SLOTS)

    def objects_of_type(self, objects: Mapping[str, str], t: str) -> list[str]:
        return sorted(o for o, ot in objects.items() if self.types.is_subtype(ot, t))

    def all_propositions(self, objects: Mapping[str, str]) -> list[Proposition]:
        """Every well-typed proposition over ``objects`` (R_O), sorted."""
        out = []
        for pred in sorted(self.predicates.values(), key=lambda p: p.name):
            pools = [self.objects_of_type(objects, t) for t in pred.param_types]
            out.extend(Proposition(pred.name, combo) for combo in itertools.product(*pools))
        return out

    def all_ground_actions(self, objects: Mapping[str, str]) -> list[GroundAction]:
        out = []
        for schema in sorted(self.actions.values(), key=lambda a: a.name):
            pools = [self.objects_of_type(objects, t) for t in schema.param_types]
            out.extend(GroundAction(schema.name, combo) for combo in itertools.product(*pools))
        return out


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: Mapping[str, str]
    init: frozenset[Proposition]
    goal: frozenset[Proposition]


# ---------------------------------------------------------------------------
# candidate literals, bind / unbind


def candidate_literals(schema: ActionSchema, domain: Domain) -> tuple[Literal, ...]:
    """All literals formable by binding predicate arguments to type-compatible parameters.

    A parameter may fill a predicate slot when its declared type is a subtype
    of the slot's type, so every binding is well-typed.  Result is sorted.
    """
    out = []
    ptypes = schema.param_types
    for pred in domain.predicates.values():
        pools = [
            [i for i, pt in enumerate(ptypes) if domain.types.is_subtype(pt, t)]
            for t in pred.param_types
        ]
        out.extend(Literal(pred.name, combo) for combo in itertools.product(*pools))
    return tuple(sorted(out))


def bind(ground: GroundAction, lit: Literal) -> Proposition:
    try:
        return Proposition(lit.predicate, tuple(ground.args[i] for i in lit.args))
    except IndexError:
        raise SchemaMismatch(f"literal {lit} does not fit {ground}") from None


def unbind(ground: GroundAction, prop: Proposition, domain: Domain) -> frozenset[Literal]:
    """Every candidate literal of ``ground``'s schema that binds to ``prop``."""
    domain.schema_of(ground)
    cands = domain._candidate_sets[ground.name]
    pools = []
    for obj in prop.args:
        idx = [i for i, a in enumerate(ground.args) if a == obj]
        if not idx:
            return frozenset()
        pools.append(idx)
    found = (Literal(prop.predicate, combo) for combo in itertools.product(*pools))
    return frozenset(lit for lit in found if lit in cands)


# ---------------------------------------------------------------------------
# parsing


def _sym(node, what="symbol") -> str:
    if not isinstance(node, Atom):
        raise AmdnSyntaxError(f"expected {what}", *position(node), expected=what)
    return str(node).lower()


def _expect_list(node, what) -> SList:
    if not isinstance(node, SList):
        raise AmdnSyntaxError(f"expected {what}", *position(node), expected=what)
    return node


def parse_typed_list(items, what="name") -> list[tuple[str, str, Atom]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)] with source atoms."""
    out: list[tuple[str, str, Atom]] = []
    pending: list[Atom] = []
    i = 0
    while i < len(items):
        node = items[i]
        if not isinstance(node, Atom):
            if isinstance(node, SList) and node and str(node[0]).lower() == "either":
                raise UnsupportedFeature("'either' types are not supported")
            raise AmdnSyntaxError(f"expected {what}", *position(node), expected=what)
        if node == "-":
            if i + 1 >= len(items):
                raise AmdnSyntaxError("type expected after '-'", *position(node), expected="type")
            tnode = items[i + 1]
            if isinstance(tnode, SList) and tnode and str(tnode[0]).lower() == "either":
                raise UnsupportedFeature("'either' types are not supported")
            t = _sym(tnode, "type")
            if not pending:
                raise AmdnSyntaxError("'-' without preceding names", *position(node))
            out.extend((str(a).lower(), t, a) for a in pending)
            pending = []
            i += 2
        else:
            pending.append(node)
            i += 1
    out.extend((str(a).lower(), ROOT_TYPE, a) for a in pending)
    return out


def _parse_types(items) -> dict[str, str]:
    parent: dict[str, str] = {}
    for name, t, atom in parse_typed_list(items, "type name"):
        if name == ROOT_TYPE:
            continue
        if name in parent and parent[name] != t:
            raise SemanticError(f"type {name!r} declared with two parents")
        parent[name] = t
    for name, t in list(parent.items()):
        if t != ROOT_TYPE and t not in parent:
            parent[t] = ROOT_TYPE
    return parent


def _parse_literal(node, params: dict[str, int], ptypes, domain_preds, types: TypeTree, where) -> Literal:
    node = _expect_list(node, "literal")
    if not node:
        raise AmdnSyntaxError("empty literal", *position(node), expected="predicate")
    head = _sym(node[0], "predicate")
    if head == "not":
        raise UnsupportedFeature(f"{where}: negative preconditions are not supported")
    if head == "=":
        raise UnsupportedFeature(f"{where}: equality is not supported")
    if head in ("or", "imply", "exists", "forall", "when", "and"):
        raise UnsupportedFeature(f"{where}: '{head}' is not supported here")
    pred = domain_preds.get(head)
    if pred is None:
        raise SemanticError(f"{where}: undeclared predicate {head!r}")
    args = []
    for a in node[1:]:
        s = _sym(a, "argument")
        if not s.startswith("?"):
            raise UnsupportedFeature(f"{where}: constant {s!r} in operator body")
        if s[1:] not in params:
            raise SemanticError(f"{where}: undeclared parameter {s!r}")
        args.append(params[s[1:]])
    if len(args) != pred.arity:
        raise SemanticError(f"{where}: arity mismatch for {head!r}: expected {pred.arity}, got {len(args)}")
    for k, i in enumerate(args):
        if not types.is_subtype(ptypes[i], pred.param_types[k]):
            raise SemanticError(
                f"{where}: parameter ?{list(params)[i]} of type {ptypes[i]!r} "
                f"cannot fill argument {k + 1} of {head!r} ({pred.param_types[k]!r})"
            )
    return Literal(head, tuple(args))


def _conjuncts(node) -> list:
    node = _expect_list(node, "formula")
    if not node:
        return []
    if isinstance(node[0], Atom) and str(node[0]).lower() == "and":
        return list(node[1:])
    return [node]


def _parse_action(form, preds, types: TypeTree) -> ActionSchema:
    name = _sym(form[1], "action name")
    where = f"action {name}"
    keys = {}
    i = 2
    while i < len(form):
        key = _sym(form[i], "action keyword")
        if key not in (":parameters", ":precondition", ":effect"):
            raise UnsupportedFeature(f"{where}: unsupported keyword {key}")
        if i + 1 >= len(form):
            raise AmdnSyntaxError(f"{where}: missing value for {key}", *position(form[i]))
        keys[key] = form[i + 1]
        i += 2
    params_raw = parse_typed_list(_expect_list(keys.get(":parameters", SList()), "parameter list"), "variable")
    params = []
    for pname, ptype, atom in params_raw:
        if not pname.startswith("?"):
            raise AmdnSyntaxError(f"{where}: parameter must start with '?'", *position(atom))
        if ptype not in types:
            raise SemanticError(f"{where}: undeclared type {ptype!r}")
        params.append((pname[1:], ptype))
    index = {}
    for k, (p, _) in enumerate(params):
        if p in index:
            raise SemanticError(f"{where}: duplicate parameter ?{p}")
        index[p] = k
    ptypes = [t for _, t in params]
    pre = set()
    if ":precondition" in keys:
        for c in _conjuncts(keys[":precondition"]):
            pre.add(_parse_literal(c, index, ptypes, preds, types, where))
    add, dele = set(), set()
    if ":effect" in keys:
        for c in _conjuncts(keys[":effect"]):
            c = _expect_list(c, "effect")
            if c and isinstance(c[0], Atom) and str(c[0]).lower() == "not":
                if len(c) != 2:
                    raise AmdnSyntaxError(f"{where}: malformed 'not'", *position(c))
                dele.add(_parse_literal(c[1], index, ptypes, preds, types, where))
            else:
                add.add(_parse_literal(c, index, ptypes, preds, types, where))
    return ActionSchema(name, tuple(params), frozenset(pre), frozenset(add), frozenset(dele))


def parse_domain(text: str) -> Domain:
    """Parse the ``:strips`` + ``:typing`` fragment of PDDL.

    Raises:
        AmdnSyntaxError: malformed S-expressions or section layout.
        SemanticError: undeclared types/predicates/parameters, arity mismatch.
        UnsupportedFeature: requirements or constructs outside the fragment.
    """
    forms = parse_many(text)
    if len(forms) != 1:
        raise AmdnSyntaxError(f"expected one (define ...) form, found {len(forms)}")
    top = _expect_list(forms[0], "(define ...)")
    if not top or _sym(top[0], "define") != "define":
        raise AmdnSyntaxError("expected 'define'", *position(top), expected="define")
    if len(top) < 2:
        raise AmdnSyntaxError("missing domain header", *position(top), expected="(domain NAME)")
    header = _expect_list(top[1], "(domain NAME)")
    if len(header) != 2 or _sym(header[0]) != "domain":
        raise AmdnSyntaxError("expected (domain NAME)", *position(header), expected="(domain NAME)")
    name = _sym(header[1], "domain name")

    requirements: list[str] = []
    type_parent: dict[str, str] = {}
    pred_forms = None
    action_forms = []
    for sec in top[2:]:
        sec = _expect_list(sec, "domain section")
        if not sec:
            raise AmdnSyntaxError("empty section", *position(sec), expected="section keyword")
        key = _sym(sec[0], "section keyword")
        if key == ":requirements":
            for r in sec[1:]:
                r = _sym(r, "requirement")
                if r not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(f"requirement {r} is not supported")
                requirements.append(r)
        elif key == ":types":
            type_parent = _parse_types(sec[1:])
        elif key == ":predicates":
            pred_forms = sec[1:]
        elif key == ":action":
            action_forms.append(sec)
        else:
            raise UnsupportedFeature(f"section {key} is not supported")

    types = TypeTree(type_parent)
    preds: dict[str, PredicateSchema] = {}
    for pf in pred_forms or []:
        pf = _expect_list(pf, "predicate declaration")
        pname = _sym(pf[0], "predicate name")
        if pname in preds:
            raise SemanticError(f"predicate {pname!r} declared twice")
        ptypes = []
        for var, t, atom in parse_typed_list(pf[1:], "variable"):
            if t not in types:
                raise SemanticError(f"predicate {pname}: undeclared type {t!r}")
            ptypes.append(t)
        preds[pname] = PredicateSchema(pname, tuple(ptypes))

    actions: dict[str, ActionSchema] = {}
    for af in action_forms:
        if len(af) < 2:
            raise AmdnSyntaxError("action without name", *position(af), expected="action name")
        a = _parse_action(af, preds, types)
        if a.name in actions:
            raise SemanticError(f"action {a.name!r} declared twice")
        actions[a.name] = a
    return Domain(name, types, preds, actions, tuple(requirements))


def _parse_ground_atom(node, domain: Domain, objects: Mapping[str, str], what: str) -> Proposition:
    node = _expect_list(node, what)
    if not node:
        raise AmdnSyntaxError(f"empty {what}", *position(node))
    head = _sym(node[0], "predicate")
    if head == "not":
        raise UnsupportedFeature(f"negative {what} is not supported")
    pred = domain.predicates.get(head)
    if pred is None:
        raise SemanticError(f"undeclared predicate {head!r}")
    args = tuple(_sym(a, "object") for a in node[1:])
    if len(args) != pred.arity:
        raise SemanticError(f"arity mismatch for {head!r}: expected {pred.arity}, got {len(args)}")
    for a, t in zip(args, pred.param_types):
        if a not in objects:
            raise SemanticError(f"undeclared object {a!r}")
        if not domain.types.is_subtype(objects[a], t):
            raise SemanticError(f"object {a!r} of type {objects[a]!r} cannot fill {t!r} in {head!r}")
    return Proposition(head, args)


def parse_problem(text: str, domain: Domain) -> Problem:
    top = _expect_list(parse_many(text)[0], "(define ...)")
    if _sym(top[0]) != "define":
        raise AmdnSyntaxError("expected 'define'", *position(top), expected="define")
    header = _expect_list(top[1], "(problem NAME)")
    name = _sym(header[1], "problem name")
    dname = domain.name
    objects: dict[str, str] = {}
    init: set[Proposition] = set()
    goal: set[Proposition] = set()
    for sec in top[2:]:
        sec = _expect_list(sec, "problem section")
        key = _sym(sec[0], "section keyword")
        if key == ":domain":
            dname = _sym(sec[1], "domain name")
        elif key == ":requirements":
            continue
        elif key == ":objects":
            for o, t, atom in parse_typed_list(sec[1:], "object"):
                if t not in domain.types:
                    raise SemanticError(f"undeclared type {t!r}")
                objects[o] = t
        elif key == ":init":
            init.update(_parse_ground_atom(n, domain, objects, "init fact") for n in sec[1:])
        elif key == ":goal":
            goal.update(_parse_ground_atom(n, domain, objects, "goal") for n in _conjuncts(sec[1]))
        else:
            raise UnsupportedFeature(f"problem section {key} is not supported")
    return Problem(name, dname, objects, frozenset(init), frozenset(goal))


# ---------------------------------------------------------------------------
# emission


def _emit_typed(pairs: Iterable[tuple[str, str]], prefix="") -> str:
    return " ".join(f"{prefix}{n} - {t}" for n, t in pairs)


def _emit_block(keyword: str, lits: list[str], indent: str) -> list[str]:
    if not lits:
        return [f"{indent}{keyword} (and)"]
    lines = [f"{indent}{keyword} (and"]
    lines += [f"{indent}  {x}" for x in lits[:-1]]
    lines.append(f"{indent}  {lits[-1]})")
    return lines


def emit_domain(domain: Domain) -> str:
    """Render ``domain`` as PDDL text (2-space indentation, one literal per line)."""
    lines = [f"(define (domain {domain.name})"]
    reqs = sorted(set(domain.requirements))
    if reqs:
        lines.append("  (:requirements " + " ".join(reqs) + ")")
    if domain.types.parent:
        by_parent: dict[str, list[str]] = {}
        for t, p in domain.types.parent.items():
            by_parent.setdefault(p, []).append(t)
        lines.append("  (:types")
        for p in sorted(by_parent):
            lines.append("    " + " ".join(sorted(by_parent[p])) + f" - {p}")
        lines[-1] += ")"
    lines.append("  (:predicates")
    for pred in sorted(domain.predicates.values(), key=lambda p: p.name):
        vars_ = [(f"?x{i}", t) for i, t in enumerate(pred.param_types)]
        body = " ".join([pred.name] + ([_emit_typed(vars_)] if vars_ else []))
        lines.append(f"    ({body})")
    lines[-1] += ")"
    for a in sorted(domain.actions.values(), key=lambda a: a.name):
        names = a.param_names
        lines.append(f"  (:action {a.name}")
        lines.append("    :parameters (" + _emit_typed(a.params, "?") + ")")
        lines += _emit_block(":precondition", [l.render(names) for l in sorted(a.pre)], "    ")
        effects = [l.render(names) for l in sorted(a.add)]
        effects += [f"(not {l.render(names)})" for l in sorted(a.delete)]
        lines += _emit_block(":effect", effects, "    ")
        lines[-1] += ")"
    lines.append(")")
    return "\n".join(lines) + "\n"


def emit_problem(problem: Problem) -> str:
    by_type: dict[str, list[str]] = {}
    for o, t in problem.objects.items():
        by_type.setdefault(t, []).append(o)
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})", "  (:objects"]
    for t in sorted(by_type):
        lines.append("    " + " ".join(sorted(by_type[t])) + f" - {t}")
    lines[-1] += ")"
    lines.append("  (:init")
    lines += [f"    {p}" for p in sorted(problem.init)]
    lines[-1] += ")"
    lines.append("  (:goal (and")
    lines += [f"    {p}" for p in sorted(problem.goal)]
    lines[-1] += "))"
    lines.append(")")
    return "\n".join(lines) + "\n"
