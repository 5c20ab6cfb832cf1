import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amdn.errors import EmptyInput, MixedVariation, SchemaMismatch
from amdn.metrics import accuracy, err_rates, trend_report
from amdn.pddl import SLOTS, ActionSchema, Literal, parse_domain

TEN = parse_domain(
    "(define (domain ten) (:requirements :strips) (:predicates "
    + " ".join(f"(p{i} ?x)" for i in range(10))
    + ") (:action a :parameters (?x) :precondition (and (p0 ?x) (p1 ?x) (p2 ?x)) :effect (and (p3 ?x) (not (p0 ?x)))))"
)


def with_slots(domain, name, **slots):
    a = domain.actions[name]
    body = {"pre": a.pre, "add": a.add, "delete": a.delete}
    body.update(slots)
    return domain.replace_actions([*(x for n, x in domain.actions.items() if n != name), a.with_body(**body)])


def complement(domain):
    out = []
    for name, a in domain.actions.items():
        cands = set(domain.candidates(name))
        out.append(a.with_body(cands - a.pre, cands - a.add, cands - a.delete))
    return domain.replace_actions(out)


def random_model(domain, rng):
    out = []
    for name, a in domain.actions.items():
        cands = sorted(domain.candidates(name))
        pick = lambda: {c for c in cands if rng.random() < 0.3}  # noqa: E731
        out.append(a.with_body(pick(), pick(), pick()))
    return domain.replace_actions(out)


def test_identity(blocks, depots):
    for d in (blocks, depots, TEN):
        s = err_rates(d, d)
        assert s.err == 0 and s.acc == 1


def test_one_missing_precondition():
    # drop (p1 ?x), which the truth only needs as a precondition
    learned = with_slots(TEN, "a", pre=TEN.actions["a"].pre - {Literal("p1", (0,))})
    s = err_rates(learned, TEN)
    [d] = s.diffs
    assert d.candidates == 10
    assert d.rate("pre") == pytest.approx(0.1) and d.rate("add") == 0 and d.rate("del") == 0
    assert s.err == pytest.approx(0.1 / 3)
    assert s.acc == pytest.approx(0.9667, abs=1e-4)


@pytest.mark.parametrize("name", ["blocks", "depots", "driverlog"])
def test_complement_scores_zero(request, name):
    d = request.getfixturevalue(name)
    assert accuracy(complement(d), d) == pytest.approx(0.0)


def test_parameter_names_do_not_matter(blocks):
    renamed = []
    for a in blocks.actions.values():
        params = tuple((f"q{i}", t) for i, (_, t) in enumerate(a.params))
        renamed.append(ActionSchema(a.name, params, a.pre, a.add, a.delete))
    assert accuracy(blocks.replace_actions(renamed), blocks) == 1.0


def test_mismatched_schemas(blocks, depots):
    with pytest.raises(SchemaMismatch):
        err_rates(depots, blocks)
    shorter = ActionSchema("move-b-to-t", (("b", "block"),))
    changed = blocks.replace_actions([shorter if x.name == shorter.name else x for x in blocks.actions.values()])
    with pytest.raises(SchemaMismatch):
        err_rates(changed, blocks)


def test_schema_without_candidates_counts_zero():
    d = parse_domain("(define (domain z) (:requirements :strips) (:predicates (p ?x)) (:action noop :parameters ()))")
    s = err_rates(d, d)
    assert s.diffs[0].candidates == 0 and s.acc == 1


def test_json_view(blocks):
    js = err_rates(blocks.skeleton(), blocks).to_json()
    assert set(js) == {"schemas", "err", "acc"}
    row = js["schemas"]["move-b-to-b"]
    assert row["missing_pre"] == 3 and row["extra_pre"] == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_symmetry_and_range(seed):
    rng = random.Random(seed)
    a, b = random_model(TEN, rng), random_model(TEN, rng)
    ab, ba = err_rates(a, b), err_rates(b, a)
    for x, y in zip(ab.diffs, ba.diffs):
        for s in SLOTS:
            assert x.slots[s].errors == y.slots[s].errors
            assert x.slots[s].errors <= 2 * x.candidates
    assert 0.0 <= ab.acc <= 1.0
    assert (ab.acc == 1.0) == (a == b)


def test_single_run_single_row():
    key, rows = trend_report([({"traces": 20}, 0.9)])
    assert key == "" and len(rows) == 1 and rows[0].mean == 0.9 and rows[0].stdev == 0.0


def test_four_cells_of_twenty():
    rng = np.random.default_rng(0)
    runs, accs = [], {}
    for n in (20, 40, 60, 80):
        xs = rng.uniform(0.8, 1.0, size=20)
        accs[n] = xs
        runs += [({"traces": n, "noise": 0.05}, float(x)) for x in xs]
    key, rows = trend_report(runs)
    assert key == "traces" and [r.value for r in rows] == [20, 40, 60, 80]
    for r in rows:
        assert r.n == 20
        assert r.mean == pytest.approx(accs[r.value].mean(), rel=1e-12)
        assert r.stdev == pytest.approx(accs[r.value].std(ddof=1), rel=1e-9)


def test_trend_errors():
    with pytest.raises(EmptyInput):
        trend_report([])
    with pytest.raises(MixedVariation):
        trend_report([({"traces": 20, "noise": 0.0}, 1.0), ({"traces": 40, "noise": 0.1}, 1.0)])
