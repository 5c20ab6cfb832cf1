import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amdn.formula import HARD, And, Not, Or, atoms, canonical, evaluate, lower, nnf
from amdn.maxsat import WcnfInstance

from .oracles import project, random_theory, theory_costs, wcnf_costs


def lowered(n, formulas):
    clauses, aux, total = lower(formulas, n)
    return WcnfInstance.build(total, clauses), aux


def test_soft_unit_passes_through():
    inst, aux = lowered(3, [(Not(2), 4)])
    assert aux == [] and inst.clauses == (((-2,), 4),)


def test_clausal_soft_formula_needs_no_auxiliary():
    inst, aux = lowered(3, [(Or((1, Not(3))), 5)])
    assert aux == [] and inst.soft == [((1, -3), 5)]


def test_nested_soft_formula():
    f = Or((And((1, Not(2))), 3))
    inst, aux = lowered(3, [(f, 7)])
    assert aux and inst.num_vars == 3 + len(aux)
    assert len(inst.soft) == 1 and inst.soft[0][1] == 7
    assert inst.top == 8
    proj = project(wcnf_costs(inst), inst.num_vars, 3)
    assert list(proj) == list(theory_costs(3, [(f, 7)]))


def test_all_hard_theory_is_plain_sat():
    inst, _ = lowered(2, [(Or((1, 2)), HARD), (Not(1), HARD)])
    assert inst.soft == [] and inst.top == 1
    assert all(inst.is_hard(w) for _, w in inst.clauses)


def test_shared_subformulas_share_an_auxiliary():
    g = And((1, 2))
    _, aux = lowered(3, [(Or((g, 3)), 2), (Or((g, Not(3))), 2)])
    assert len(aux) == 3


@pytest.mark.parametrize("seed", range(40))
def test_lowering_preserves_cost_per_assignment(seed):
    n, formulas = random_theory(seed, max_vars=6, max_formulas=4)
    inst, _ = lowered(n, formulas)
    if inst.num_vars > 20:
        pytest.skip("too many auxiliaries for a full projection")
    assert list(project(wcnf_costs(inst), inst.num_vars, n)) == list(theory_costs(n, formulas))


formulas_st = st.recursive(
    st.integers(1, 4) | st.integers(1, 4).map(Not),
    lambda kids: st.lists(kids, min_size=2, max_size=3).map(lambda k: And(tuple(k)))
    | st.lists(kids, min_size=2, max_size=3).map(lambda k: Or(tuple(k)))
    | kids.map(Not),
    max_leaves=8,
)


@settings(max_examples=200, deadline=None)
@given(formulas_st)
def test_normal_forms_keep_meaning(f):
    for bits in range(16):
        env = {v: bool(bits >> (v - 1) & 1) for v in range(1, 5)}
        assert evaluate(canonical(f), env) == evaluate(f, env)
        assert evaluate(nnf(f), env) == evaluate(f, env)
    assert atoms(canonical(f)) <= atoms(f)


def test_canonical_identifies_reordered_formulas():
    assert canonical(Or((2, And((3, 1))))) == canonical(Or((And((1, 3)), 2)))
    assert canonical(Not(Not(5))) == 5


def test_theory_oracle_indexing():
    # variable v is bit v - 1 of the row index: rows are (x1, x2) = FF, TF, FT, TT
    assert list(theory_costs(2, [(1, 3), (Not(2), 4)])) == [3, 0, 7, 4]
