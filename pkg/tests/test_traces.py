from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amdn.errors import AmdnSyntaxError, ValidationError
from amdn.forge import CorruptionConfig, forge_corpus
from amdn.pddl import GroundAction, Literal, Proposition, bind
from amdn.traces import PlanTrace, Step, occurrence_tables, read_traces, write_traces


def recount(traces, domain):
    """Lifted before/after tables by binding every candidate, independent of unbind."""
    before, after = Counter(), Counter()
    for t in traces:
        for i, step in enumerate(t.steps):
            for table, obs in ((before, t.before(i)), (after, t.after(i))):
                if obs is None:
                    continue
                for a in step.actions:
                    for p in obs:
                        hits = [lit for lit in domain.candidates(a.name) if bind(a, lit) == p]
                        for lit in hits:
                            table[(a.name, lit)] += Fraction(1, len(hits))
    return before, after


def test_single_step_trace():
    [t] = read_traces("(trace (:step (:actions (noop))) (:goal))")
    assert len(t) == 1
    assert t.steps[0].obs is None
    assert t.steps[0].actions == (GroundAction("noop", ()),)


def test_depots_pair_first_trace(depots_pair):
    t1 = depots_pair[0]
    assert len(t1) == 5
    assert [s.obs for s in t1.steps if s.obs is not None] == [frozenset({Proposition("at", ("t0", "dp0"))})]
    assert t1.steps[0].actions == (
        GroundAction("lift", ("h0", "c0", "p0", "ds0")),
        GroundAction("drive", ("t0", "dp1", "dp0")),
    )
    assert t1.distance(GroundAction("drop", ("h1", "c0", "p1", "dp1")), GroundAction("load", ("h0", "c0", "t0", "dp0"))) == 3


def test_goal_is_required():
    with pytest.raises(AmdnSyntaxError):
        read_traces("(trace (:step (:actions (noop))))")


@pytest.mark.parametrize(
    "step",
    [
        "(:step (:actions (fly t0 dp0 dp1)))",
        "(:step (:actions (drive t0 dp0)))",
        "(:step (:actions (drive t0 dp0 nowhere)))",
        "(:step (:actions (drive dp0 dp0 dp1)))",
    ],
)
def test_validation_errors(depots, step):
    text = f"(trace (:objects t0 - truck dp0 dp1 - depot) {step} (:goal))"
    with pytest.raises(ValidationError):
        read_traces(text, depots)


def test_duplicate_action_in_a_set_is_rejected():
    a = GroundAction("noop", ())
    with pytest.raises(ValidationError):
        Step((a, a))


def test_round_trip_large_corpus(blocks):
    corpus = forge_corpus(blocks, 120, CorruptionConfig(disorder_prior=0.1, noise_rate=0.1, observation_rate=0.6, seed=4)).traces
    text = write_traces(corpus)
    back = read_traces(text, blocks)
    assert back == corpus
    assert write_traces(back) == text


def test_depots_pair_round_trip(depots_pair):
    assert read_traces(write_traces(depots_pair)) == depots_pair


def test_count_after_a_drive(depots):
    drive = GroundAction("drive", ("t0", "dp1", "dp0"))
    t = PlanTrace(
        {"t0": "truck", "dp0": "depot", "dp1": "depot"},
        frozenset(),
        (Step((drive,), frozenset({Proposition("at", ("t0", "dp0"))})), Step((drive,))),
    )
    tables = occurrence_tables([t], depots)
    assert tables.after[("drive", Literal("at", (0, 2)))] == 1


def test_empty_observations_give_empty_tables(depots):
    drive = GroundAction("drive", ("t0", "dp1", "dp0"))
    t = PlanTrace({"t0": "truck", "dp0": "depot", "dp1": "depot"}, frozenset(), (Step((drive,)),))
    tables = occurrence_tables([t], depots)
    assert not tables.after and not tables.before and not tables.prop_count and tables.total == 0


def test_depots_pair_tables_match_recount(depots_pair, depots):
    tables = occurrence_tables(depots_pair, depots)
    before, after = recount(depots_pair, depots)
    assert +tables.before == +before
    assert +tables.after == +after
    assert sum(tables.prop_count.values()) == tables.total
    assert tables.total == sum(len(o) for t in depots_pair for o in t.observations())


def test_tables_merge_per_trace(depots_pair, depots):
    parts = [occurrence_tables([t], depots) for t in depots_pair]
    whole = occurrence_tables(depots_pair, depots)
    merged = parts[0].merge(parts[1])
    assert (merged.after, merged.before, merged.prop_count, merged.total) == (
        whole.after, whole.before, whole.prop_count, whole.total)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_tables_invariant_under_within_set_permutation(depots_pair, depots, data):
    steps = []
    for t in depots_pair:
        steps.append(tuple(Step(tuple(data.draw(st.permutations(s.actions))), s.obs) for s in t.steps))
    shuffled = [t.replace(steps=s) for t, s in zip(depots_pair, steps)]
    a, b = occurrence_tables(depots_pair, depots), occurrence_tables(shuffled, depots)
    assert (a.after, a.before, a.prop_count, a.total) == (b.after, b.before, b.prop_count, b.total)
