import random

import pytest

from deon.logic import Atom, GroundClauseSet, LogicError
from deon.sat import (
    BudgetExhausted,
    ConflictExplanation,
    Model,
    SatResult,
    brute_force,
    solve,
)


def clause_set(n: int, clauses: list[tuple[int, ...]]) -> GroundClauseSet:
    return GroundClauseSet(tuple(Atom(f"v{i}") for i in range(n)), 0, tuple(clauses))


def random_clause_set(rng: random.Random, max_atoms: int = 12) -> GroundClauseSet:
    n = rng.randint(1, max_atoms)
    m = rng.randint(1, 2 * n + 4)
    clauses = []
    for _ in range(m):
        width = rng.randint(1, 3)
        clauses.append(tuple(rng.choice([1, -1]) * rng.randint(1, n) for _ in range(width)))
    return clause_set(n, clauses)


# -- basic outcomes -----------------------------------------------------------


def test_empty_clause_set_is_satisfiable_with_empty_model():
    cs = GroundClauseSet((), 0, ())
    result = solve(cs)
    assert result.satisfiable
    assert result.model == Model(())
    brute = brute_force(cs)
    assert brute.satisfiable and brute.model == Model(())


def test_unit_contradiction_unsat():
    cs = clause_set(1, [(1,), (-1,)])
    assert not solve(cs).satisfiable
    assert not brute_force(cs).satisfiable


def test_brute_force_witness_is_first_in_counting_order():
    # all-false first, last atom is the fastest bit: (p or q) -> p=F, q=T
    cs = clause_set(2, [(1, 2)])
    result = brute_force(cs)
    assert result.model.values == (False, True)


def test_solve_branches_lowest_index_true_first():
    cs = clause_set(2, [(1, 2)])
    assert solve(cs).model.values == (True, True)


def test_bus_style_antecedent_conjunction_unsat():
    # c1 and c2 and (not c3) and c4 and c3: two clashing units
    cs = clause_set(4, [(1,), (2,), (-3,), (4,), (3,)])
    assert not brute_force(cs).satisfiable
    assert not solve(cs).satisfiable


def test_budget_exhaustion_raises_distinct_outcome():
    clauses = []
    for i in range(0, 12, 2):
        clauses.append((i + 1, i + 2))
        clauses.append((-(i + 1), -(i + 2)))
    cs = clause_set(12, clauses)
    with pytest.raises(BudgetExhausted):
        solve(cs, budget=1)
    assert solve(cs, budget=100).satisfiable


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        solve(clause_set(1, [(1,)]), budget=0)


def test_brute_force_enumeration_bound():
    cs = clause_set(25, [(1,)])
    with pytest.raises(ValueError):
        brute_force(cs)


def test_sat_result_variant_invariant():
    with pytest.raises(LogicError):
        SatResult(satisfiable=True)
    with pytest.raises(LogicError):
        SatResult(satisfiable=False)


def test_clause_set_invariants():
    with pytest.raises(LogicError):
        GroundClauseSet((Atom("p"),), 0, ((),))
    with pytest.raises(LogicError):
        GroundClauseSet((Atom("p"),), 0, ((2,),))


# -- randomized agreement with the exhaustive oracle ---------------------------


def test_solve_agrees_with_brute_force_on_random_sets():
    rng = random.Random(987654)
    unsat_seen = sat_seen = 0
    for _ in range(3000):
        cs = random_clause_set(rng)
        fast = solve(cs)
        slow = brute_force(cs)
        assert fast.satisfiable == slow.satisfiable
        if fast.satisfiable:
            sat_seen += 1
            assert fast.model.satisfies(cs)
            assert slow.model.satisfies(cs)
        else:
            unsat_seen += 1
    assert sat_seen > 0 and unsat_seen > 0


def test_conflict_explanation_subset_is_unsatisfiable():
    rng = random.Random(13579)
    checked = 0
    while checked < 300:
        cs = random_clause_set(rng, max_atoms=8)
        result = solve(cs)
        if result.satisfiable:
            continue
        checked += 1
        subset = result.conflict.subset(cs)
        assert len(subset.clauses) >= 1
        assert not brute_force(subset).satisfiable


def test_determinism_identical_runs():
    rng = random.Random(24680)
    for _ in range(200):
        cs = random_clause_set(rng)
        first = solve(cs)
        second = solve(cs)
        assert first == second


def test_witness_never_violates_a_clause():
    rng = random.Random(112233)
    for _ in range(500):
        cs = random_clause_set(rng)
        result = solve(cs)
        if result.satisfiable:
            for clause in cs.clauses:
                assert result.model.satisfies_clause(clause)


def test_conflict_render_maps_atoms_back():
    cs = GroundClauseSet(
        (Atom("p"), Atom("q")), 0, ((1,), (-1, 2), (-2,)),
        ("fact", "rule", "denial"),
    )
    result = solve(cs)
    assert not result.satisfiable
    rendered = result.conflict.render(cs)
    assert any("fact: p" in line for line in rendered)
    assert any("not p or q" in line for line in rendered)


def test_explanation_indices_point_into_input():
    cs = clause_set(2, [(1,), (2,), (-1, -2), (1, 2)])
    result = solve(cs)
    assert not result.satisfiable
    assert all(0 <= i < len(cs.clauses) for i in result.conflict.clause_indices)
    explanation = ConflictExplanation(result.conflict.clause_indices)
    assert not brute_force(explanation.subset(cs)).satisfiable
