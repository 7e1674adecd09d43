import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quacq import model, solver
from quacq.model import (
    ConstraintVec,
    LanguageEntry,
    assignment,
    build_basis,
    canonical_constraint,
    conjunction,
    violates,
    vocabulary,
)
from quacq.solver import Not, SolveRequest, entails, equivalent, solve


def C(v, fam, scope, p=None):
    return canonical_constraint(v, fam, scope, p)


# ---------------------------------------------------------------------------
# solve outcomes
# ---------------------------------------------------------------------------


def test_solve_contradiction_unsat():
    v = vocabulary(["X1", "X2"], [1, 2, 3])
    res = solve(SolveRequest(v, [C(v, "lt", ("X1", "X2")), C(v, "lt", ("X2", "X1"))],
                             required=("X1", "X2")))
    assert res.status == "unsat"


def test_solve_negated_ne_forces_equality():
    v = vocabulary(["X1", "X2"], [1, 2])
    # enumeration oracle: of the 4 tuples only (1,1) and (2,2) satisfy not(!=)
    res = solve(SolveRequest(v, [Not(C(v, "ne", ("X1", "X2")))], required=("X1", "X2")))
    assert res.status == "sat"
    e = res.assignment
    assert e.value("X1") == e.value("X2")


def test_solve_zero_budget_times_out():
    v = vocabulary([f"X{i}" for i in range(6)], range(6))
    B = [C(v, "ne", (a, b)) for a, b in itertools.combinations(v.variables, 2)]
    res = solve(SolveRequest(v, B, budget_ms=0))
    assert res.status == "timeout"
    assert res.assignment is None


def test_solve_partial_mode_returns_scope_sized():
    v = vocabulary(["A", "B", "C"], [1, 2, 3])
    res = solve(SolveRequest(v, [C(v, "lt", ("A", "B"))], required=("A", "B"),
                             assign_all=False))
    assert res.status == "sat"
    assert res.assignment.Y == {"A", "B"}


def test_solution_satisfies_all_covered_constraints():
    v = vocabulary([f"X{i}" for i in range(5)], range(1, 5))
    cs = [C(v, "lt", ("X0", "X1")), C(v, "ne", ("X2", "X3")),
          C(v, "abs_diff_eq", ("X3", "X4"), 2)]
    res = solve(SolveRequest(v, cs, seed=3))
    assert res.status == "sat"
    for c in cs:
        assert not violates(res.assignment, c)


def test_negated_conjunction_requires_some_member_violated():
    v = vocabulary(["A", "B"], [1, 2, 3])
    lt = conjunction([C(v, "le", ("A", "B")), C(v, "ne", ("A", "B"))])
    res = solve(SolveRequest(v, [Not(lt)], required=("A", "B")))
    assert res.status == "sat"
    assert violates(res.assignment, lt)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


def brute_max_violated(v, L, B):
    best = -1
    for tup in itertools.product(*(v.domains[i] for i in range(v.n))):
        e = assignment(dict(zip(v.variables, tup)), v)
        if any(violates(e, c) for c in L):
            continue
        best = max(best, sum(1 for c in B if violates(e, c)))
    return best


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_max_violated_matches_enumeration(data):
    n = data.draw(st.integers(2, 4))
    v = vocabulary([f"X{i}" for i in range(n)], range(0, data.draw(st.integers(2, 4))))
    pool = build_basis(v, [LanguageEntry("le"), LanguageEntry("ne"), LanguageEntry("eq")])
    L = data.draw(st.lists(st.sampled_from(pool), max_size=2))
    B = data.draw(st.lists(st.sampled_from(pool), min_size=1, max_size=6, unique=True))
    vec = ConstraintVec(v, B)
    alive = np.ones(len(B), dtype=bool)
    res = solve(SolveRequest(v, list(L), objective=("max_violated", vec, alive)))
    expect = brute_max_violated(v, L, B)
    if expect < 0:
        assert res.status == "unsat"
    else:
        assert res.status == "sat" and res.optimal
        assert res.objective_value == expect


def test_max_assigned_prefers_complete_assignments():
    v = vocabulary(["A", "B", "C"], [1, 2, 3])
    res = solve(SolveRequest(v, [C(v, "lt", ("A", "B"))], required=("A",),
                             objective="max_assigned"))
    assert res.status == "sat"
    assert len(res.assignment) == 3


def test_budget_overshoot_is_bounded():
    v = vocabulary([f"X{i}" for i in range(12)], range(12))
    B = [C(v, "ne", (a, b)) for a, b in itertools.combinations(v.variables, 2)]
    t0 = time.monotonic()
    res = solve(SolveRequest(v, B + [Not(B[0])], budget_ms=50, objective="max_assigned"))
    wall = (time.monotonic() - t0) * 1000
    if res.status in ("timeout",) or not res.optimal:
        assert wall <= 50 + 100


# ---------------------------------------------------------------------------
# entailment / equivalence
# ---------------------------------------------------------------------------


def test_entails_member_trivial():
    v = vocabulary(["X1", "X2"], [1, 2, 3])
    c = C(v, "lt", ("X1", "X2"))
    assert entails(v, [c], c)


def test_entails_transitivity():
    v = vocabulary(["X1", "X2", "X3"], [1, 2, 3])
    L = [C(v, "lt", ("X1", "X2")), C(v, "lt", ("X2", "X3"))]
    assert entails(v, L, C(v, "lt", ("X1", "X3")))


def test_entails_witness_counterexample():
    v = vocabulary(["X1", "X2", "X3"], [1, 2, 3])
    assert not entails(v, [C(v, "lt", ("X1", "X2"))], C(v, "lt", ("X1", "X3")))


def test_entails_vacuous_when_unsatisfiable():
    # an unsatisfiable network entails everything, including on foreign scopes
    v = vocabulary(["A", "B", "C", "D", "E"], [0, 1])
    clique = [C(v, "ne", ("C", "D")), C(v, "ne", ("C", "E")), C(v, "ne", ("D", "E"))]
    assert entails(v, clique, C(v, "eq", ("A", "B")))


def test_equivalent_examples():
    v = vocabulary(["X1", "X2", "X3"], [1, 2, 3])
    C1 = [C(v, "lt", ("X1", "X2")), C(v, "lt", ("X2", "X3")), C(v, "lt", ("X1", "X3"))]
    C2 = C1[:2]
    assert equivalent(v, C1, C1)
    assert equivalent(v, C1, C2)
    assert not equivalent(v, [C(v, "ne", ("X1", "X2"))], [])


def brute_entails(v, L, c):
    for tup in itertools.product(*(v.domains[i] for i in range(v.n))):
        e = assignment(dict(zip(v.variables, tup)), v)
        if not any(violates(e, x) for x in L) and violates(e, c):
            return False
    return True


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_entails_matches_enumeration(data):
    n = data.draw(st.integers(2, 5))
    v = vocabulary([f"X{i}" for i in range(n)], range(0, data.draw(st.integers(2, 4))))
    pool = build_basis(v, [LanguageEntry(f) for f in ("le", "lt", "eq", "ne")])
    L = data.draw(st.lists(st.sampled_from(pool), max_size=5))
    c = data.draw(st.sampled_from(pool))
    assert entails(v, L, c) == brute_entails(v, L, c)


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_unsat_agrees_with_enumeration(data):
    n = data.draw(st.integers(2, 5))
    v = vocabulary([f"X{i}" for i in range(n)], range(0, data.draw(st.integers(2, 4))))
    pool = build_basis(v, [LanguageEntry(f) for f in ("lt", "eq", "ne")])
    L = data.draw(st.lists(st.sampled_from(pool), max_size=7))
    res = solve(SolveRequest(v, list(L)))
    assert (res.status == "unsat") == (len(solver.solutions(v, L, limit=1)) == 0)


def test_entails_reflexive_transitive_spotcheck():
    v = vocabulary(["X1", "X2", "X3"], [1, 2, 3, 4])
    pool = build_basis(v, [LanguageEntry(f) for f in ("le", "lt", "ne")])
    import random

    rng = random.Random(5)
    for _ in range(20):
        a, b, c = rng.sample(pool, 3)
        assert entails(v, [a], a)
        if entails(v, [a], b) and entails(v, [b], c):
            assert entails(v, [a], c)


# ---------------------------------------------------------------------------
# heuristics
# ---------------------------------------------------------------------------


def test_choose_variable_bdeg_degree():
    v = vocabulary(["X1", "X2", "X3"], [1, 2])
    B = [C(v, "ne", ("X1", "X2")), C(v, "ne", ("X1", "X3"))]
    assert solver.choose_variable(v, ["X1", "X2", "X3"], "bdeg", basis=B) == "X1"


def test_choose_variable_single_candidate():
    v = vocabulary(["X1", "X2"], [1, 2])
    assert solver.choose_variable(v, ["X2"], "domwdeg") == "X2"


def test_choose_variable_domwdeg_ratio():
    v = Vocabulary = vocabulary(["A", "B"], {"A": (1, 2), "B": (1, 2, 3, 4, 5)})
    B = [C(v, "ne", ("A", "B"))]
    got = solver.choose_variable(v, ["A", "B"], "domwdeg",
                                 domain_sizes={"A": 2, "B": 5}, basis=B)
    assert got == "A"


def test_count_solutions_zebra_style():
    v = vocabulary(["A", "B"], [1, 2])
    assert solver.count_solutions(v, [C(v, "ne", ("A", "B"))]) == 2
    assert solver.count_solutions(v, [C(v, "ne", ("A", "B")),
                                      C(v, "lt", ("A", "B"))]) == 1
    assert solver.count_solutions(v, [C(v, "lt", ("A", "B")),
                                      C(v, "gt", ("A", "B"))]) == 0
