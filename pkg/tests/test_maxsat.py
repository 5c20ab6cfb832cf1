import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amdn.errors import AmdnSyntaxError, BudgetExceeded, HardUnsat, NoFeasibleFound
from amdn.maxsat import (
    SlsParams,
    Solution,
    WcnfInstance,
    read_model,
    read_wcnf,
    solve,
    solve_exact,
    solve_milp,
    solve_sls,
    write_model,
    write_wcnf,
)

from .oracles import brute_wcnf, random_wcnf

FAST = SlsParams(max_flips=20_000, restarts=3, patience=2_000)


def test_two_complementary_units():
    inst = WcnfInstance.build(1, [((1,), 3), ((-1,), 5)])
    for sol in (solve_exact(inst), solve_milp(inst), solve_sls(inst, params=FAST)):
        assert sol.values == (False,) and sol.cost == 3


def test_hard_disjunction_with_soft_negations():
    inst = WcnfInstance.build(2, [((1, 2), None), ((-1,), 2), ((-2,), 1)])
    assert brute_wcnf(inst) == 1
    for sol in (solve_exact(inst), solve_milp(inst), solve_sls(inst, params=FAST)):
        assert sol.values == (False, True) and sol.cost == 1 and sol.hard_ok


def test_contradictory_hard_units():
    inst = WcnfInstance.build(1, [((1,), None), ((-1,), None)])
    with pytest.raises(HardUnsat):
        solve_exact(inst)
    with pytest.raises(HardUnsat):
        solve_milp(inst)
    with pytest.raises(NoFeasibleFound) as exc:
        solve_sls(inst, params=FAST)
    assert exc.value.best is not None and not exc.value.best.hard_ok


def test_empty_soft_clause_is_a_constant():
    inst = WcnfInstance(1, (((), 4), ((1,), 2)), top=7)
    assert inst.offset == 4 and solve_exact(inst).cost == 4
    assert read_wcnf(write_wcnf(inst)) == inst


@pytest.mark.parametrize("seed", range(60))
def test_exact_and_milp_match_brute_force(seed):
    inst = random_wcnf(random.Random(seed), 12, 30)
    best = brute_wcnf(inst)
    for solver in (solve_exact, solve_milp):
        if best is None:
            with pytest.raises(HardUnsat):
                solver(inst)
        else:
            sol = solver(inst)
            assert sol.cost == best and sol.hard_ok and sol.optimal
            sol.check(inst)


@pytest.mark.parametrize("seed", range(15))
def test_sls_is_never_below_optimum(seed):
    inst = random_wcnf(random.Random(1000 + seed), 14, 40)
    best = brute_wcnf(inst)
    try:
        sol = solve_sls(inst, seed=seed, params=FAST)
    except NoFeasibleFound:
        return
    assert best is not None and sol.cost >= best
    sol.check(inst)


def test_sls_without_flips_reports_its_start():
    inst = random_wcnf(random.Random(7), 10, 20, hard_rate=0.0)
    sol = solve_sls(inst, seed=3, params=SlsParams(max_flips=0, restarts=1))
    assert (sol.cost, sol.hard_ok) == inst.evaluate(sol.values)


def test_sls_is_deterministic_per_seed():
    inst = random_wcnf(random.Random(8), 18, 40)
    a, b = solve_sls(inst, seed=5, params=FAST), solve_sls(inst, seed=5, params=FAST)
    assert a == b


def test_sls_workers_pick_the_best_seed():
    inst = random_wcnf(random.Random(9), 18, 40, hard_rate=0.0)
    weak = SlsParams(max_flips=30, restarts=1)
    merged = solve_sls(inst, seed=0, params=weak, workers=3)
    singles = [solve_sls(inst, seed=s, params=weak) for s in range(3)]
    assert merged.cost == min(s.cost for s in singles)


def test_exact_budget_keeps_an_incumbent():
    rng = random.Random(3)
    clauses = [([rng.choice((1, -1)) * rng.randint(1, 90) for _ in range(3)], rng.randint(1, 9)) for _ in range(400)]
    inst = WcnfInstance.build(90, clauses)
    with pytest.raises(BudgetExceeded) as exc:
        solve_exact(inst, time_budget=0.0)
    inc = exc.value.incumbent
    assert inc is None or inc.cost == inst.evaluate(inc.values)[0]


def test_dispatch():
    small = random_wcnf(random.Random(2), 10, 20, hard_rate=0.0)
    assert solve(small).cost == brute_wcnf(small)
    with pytest.raises(ValueError):
        solve(small, method="magic")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), lits=st.lists(st.integers(-8, 8).filter(bool), min_size=1, max_size=3),
       w=st.integers(1, 30))
def test_adding_a_soft_clause_never_lowers_the_optimum(seed, lits, w):
    inst = random_wcnf(random.Random(seed), 8, 20)
    lits = [x for x in lits if abs(x) <= inst.num_vars] or [1]
    bigger = inst.with_clause(lits, w)
    a, b = brute_wcnf(inst), brute_wcnf(bigger)
    if a is not None:
        assert b >= a


def test_parse_single_hard_unit():
    inst = read_wcnf("p wcnf 1 1 10\n10 1 0\n")
    assert inst.hard == [(1,)] and inst.soft == []


def test_heavy_soft_clause_reads_as_hard():
    inst = read_wcnf("c weights at or above top are hard\np wcnf 2 2 5\n7 1 2 0\n3 -1 0\n")
    assert inst.hard == [(1, 2)] and inst.soft == [((-1,), 3)]


def test_clauses_may_span_lines():
    inst = read_wcnf("p wcnf 3 1 9\n2 1\n-2 3 0\n")
    assert inst.soft == [((1, -2, 3), 2)]


@pytest.mark.parametrize(
    "text, line",
    [
        ("1 1 0\n", 1),
        ("p wcnf 1 1\n", 1),
        ("p wcnf 1 1 10\n3 2 0\n", 2),
        ("p wcnf 1 1 10\n3 x 0\n", 2),
        ("p wcnf 1 1 10\n\n-1 1 0\n", 3),
        ("p wcnf 1 1 10\n3 1\n", 2),
    ],
)
def test_format_errors_carry_line_numbers(text, line):
    with pytest.raises(AmdnSyntaxError) as exc:
        read_wcnf(text)
    assert exc.value.line == line


def test_clause_count_must_match_header():
    with pytest.raises(AmdnSyntaxError):
        read_wcnf("p wcnf 1 2 10\n3 1 0\n")


@pytest.mark.parametrize("seed", range(100))
def test_wcnf_round_trip(seed):
    inst = random_wcnf(random.Random(seed), 20, 40, hard_rate=0.3)
    text = write_wcnf(inst)
    assert read_wcnf(text) == inst
    assert write_wcnf(read_wcnf(text)) == text


def test_model_round_trip():
    inst = random_wcnf(random.Random(4), 12, 20, hard_rate=0.0)
    sol = solve_exact(inst)
    values = read_model(write_model(sol), inst.num_vars)
    assert Solution.of(inst, values) == Solution.of(inst, sol.values)
    assert read_model("s OPTIMUM\nv 1 -2 3\n", 3) == [True, False, True]
    with pytest.raises(AmdnSyntaxError):
        read_model("4\n", 3)
