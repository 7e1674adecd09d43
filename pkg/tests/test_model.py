import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quacq import model
from quacq.model import (
    Assignment,
    LanguageEntry,
    assignment,
    build_basis,
    canonical_constraint,
    conjunction,
    describe,
    join,
    kappa,
    violates,
    vocabulary,
)


def comparison_language():
    return [LanguageEntry(f) for f in ("ge", "le", "lt", "gt", "ne", "eq")]


def example_42_vocab():
    return vocabulary([f"X{i}" for i in range(1, 6)], range(-10, 11))


def example_42_basis(vocab):
    lang = [LanguageEntry("le"), LanguageEntry("ne"), LanguageEntry("sum_ne")]
    return build_basis(vocab, lang)


# ---------------------------------------------------------------------------
# violates
# ---------------------------------------------------------------------------


def test_violates_ge_pair():
    v = example_42_vocab()
    c = canonical_constraint(v, "ge", ("X1", "X2"))
    e = assignment({"X1": 0, "X2": 1}, v)
    assert violates(e, c) is True


def test_violates_sum_ne_from_worked_example():
    v = example_42_vocab()
    c = canonical_constraint(v, "sum_ne", ("X2", "X3", "X4"))
    e = assignment({"X2": 1, "X3": 2, "X4": 3}, v)
    assert violates(e, c) is True


def test_violates_uncovered_scope_is_false():
    v = example_42_vocab()
    c = canonical_constraint(v, "ge", ("X1", "X2"))
    e = assignment({"X1": 0}, v)
    assert violates(e, c) is False


def test_violates_conjunction_any_member():
    v = example_42_vocab()
    lt = conjunction([canonical_constraint(v, "le", ("X2", "X3")),
                      canonical_constraint(v, "ne", ("X2", "X3"))])
    assert violates(assignment({"X2": 2, "X3": 2}, v), lt) is True
    assert violates(assignment({"X2": 1, "X3": 2}, v), lt) is False


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------


def brute_kappa(C, e):
    # independent oracle: evaluate every constraint member by member
    out = []
    b = e.as_dict()
    for c in C:
        ms = model.members_of(c)
        if all(set(m.scope) <= set(b) for m in ms):
            if any(not m.relation.holds(tuple(b[x] for x in m.scope)) for m in ms):
                out.append(c)
    return out


def test_kappa_on_worked_example_tuple():
    v = example_42_vocab()
    B = example_42_basis(v)
    e = assignment({f"X{i}": i - 1 for i in range(1, 6)}, v)
    got = set(kappa(B, e))
    expected = set(brute_kappa(B, e))
    assert got == expected
    # ten mirrored <= constraints are violated by the increasing tuple
    ge_like = {c for c in got if c.relation.family == "le"}
    assert len(ge_like) == 10
    sums = {c for c in got if c.relation.family == "sum_ne"}
    assert {c.scope for c in sums} == {("X2", "X3", "X4"), ("X2", "X4", "X5")}
    assert not any(c.relation.family == "ne" for c in got)


def test_kappa_empty_assignment():
    v = example_42_vocab()
    B = example_42_basis(v)
    assert kappa(B, Assignment(())) == []


def test_kappa_all_distinct_triple():
    v = vocabulary(["X1", "X2", "X3"], [0, 1, 2])
    C = [canonical_constraint(v, "ne", ("X1", "X2")),
         canonical_constraint(v, "ne", ("X1", "X3")),
         canonical_constraint(v, "ne", ("X2", "X3"))]
    e = assignment({"X1": 0, "X2": 1, "X3": 2}, v)
    assert kappa(C, e) == []


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_kappa_matches_per_constraint_evaluation(data):
    n = data.draw(st.integers(2, 4))
    dom = data.draw(st.lists(st.integers(-3, 3), min_size=2, max_size=4, unique=True))
    v = vocabulary([f"X{i}" for i in range(n)], dom)
    B = build_basis(v, comparison_language())
    sub = data.draw(st.lists(st.sampled_from(B), max_size=12))
    bound = data.draw(st.dictionaries(st.sampled_from(list(v.variables)),
                                      st.sampled_from(dom), max_size=n))
    e = assignment(bound, v)
    assert kappa(sub, e) == brute_kappa(sub, e)


def test_kappa_projection_law():
    v = example_42_vocab()
    B = example_42_basis(v)
    e = assignment({"X1": 3, "X2": 1, "X3": 1}, v)
    Y = e.Y
    BY = [c for c in B if c.varset <= Y]
    assert set(kappa(BY, e)) == {c for c in kappa(B, e) if c.varset <= Y}


# ---------------------------------------------------------------------------
# join
# ---------------------------------------------------------------------------


def test_join_le_with_ne_gives_lt():
    v = example_42_vocab()
    le23 = canonical_constraint(v, "le", ("X2", "X3"))
    ne23 = canonical_constraint(v, "ne", ("X2", "X3"))
    out = join([le23], [ne23], v)
    assert out == {conjunction([le23, ne23])}


def test_join_drops_contradiction():
    v = example_42_vocab()
    lt12 = canonical_constraint(v, "lt", ("X1", "X2"))
    gt12 = canonical_constraint(v, "gt", ("X1", "X2"))
    assert join([lt12], [gt12], v) == set()


def test_join_table2_row0():
    v = example_42_vocab()
    s234 = canonical_constraint(v, "sum_ne", ("X2", "X3", "X4"))
    s243 = canonical_constraint(v, "sum_ne", ("X2", "X4", "X3"))
    s342 = canonical_constraint(v, "sum_ne", ("X3", "X4", "X2"))
    out = join([s234, s243, s342], [s234], v)
    assert out == {s234, conjunction([s234, s243]), conjunction([s234, s342])}


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_join_properties(data):
    dom = data.draw(st.lists(st.integers(0, 3), min_size=2, max_size=4, unique=True))
    v = vocabulary(["A", "B"], dom)
    pool = [canonical_constraint(v, f, ("A", "B"))
            for f in ("le", "lt", "eq", "ne")] + [
            canonical_constraint(v, "ge", ("A", "B")),
            canonical_constraint(v, "gt", ("A", "B"))]
    s1 = data.draw(st.lists(st.sampled_from(pool), min_size=1, max_size=3))
    s2 = data.draw(st.lists(st.sampled_from(pool), min_size=1, max_size=3))
    j12 = join(s1, s2, v)
    # commutative up to set equality
    assert j12 == join(s2, s1, v)
    for c in j12:
        ms = model.members_of(c)
        # no unsatisfiable output
        assert model.conjunction_satisfiable(ms, v)
        # every output extends one input from each side
        assert any(model.members_of(a) <= ms for a in s1)
        assert any(model.members_of(b) <= ms for b in s2)


# ---------------------------------------------------------------------------
# basis construction
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,count", [(12, 396), (50, 7350), (81, 19440)])
def test_basis_sizes_comparison_language(n, count):
    v = vocabulary([f"X{i}" for i in range(n)], range(1, 5))
    assert len(build_basis(v, comparison_language())) == count


def test_basis_worked_example_composition():
    v = example_42_vocab()
    B = example_42_basis(v)
    assert len(B) == 60
    by_family = {}
    for c in B:
        by_family.setdefault(c.relation.family, []).append(c)
    assert len(by_family["le"]) == 20  # both orientations of each pair
    assert len(by_family["ne"]) == 10
    assert len(by_family["sum_ne"]) == 30


def test_basis_mirror_deduplication():
    v = vocabulary(["A", "B"], [0, 1])
    only_le = build_basis(v, [LanguageEntry("le")])
    both = build_basis(v, [LanguageEntry("le"), LanguageEntry("ge")])
    assert only_le == both
    assert {c.scope for c in only_le} == {("A", "B"), ("B", "A")}


def test_basis_rejects_unknown_family():
    v = vocabulary(["A", "B"], [0, 1])
    with pytest.raises(ValueError):
        build_basis(v, [LanguageEntry("alldifferent")])


def test_pair_family_scope_counts():
    v = vocabulary([f"M{i}" for i in range(8)], range(0, 35))
    B = build_basis(v, [LanguageEntry("abs_diff_pair_eq"),
                        LanguageEntry("abs_diff_pair_ne")])
    ternary = [c for c in B if len(c.scope) == 3]
    quaternary = [c for c in B if len(c.scope) == 4]
    assert len(ternary) == 2 * 336
    assert len(quaternary) == 2 * 420


# ---------------------------------------------------------------------------
# vectorised evaluation agrees with the scalar path
# ---------------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_constraintvec_matches_violates(data):
    n = data.draw(st.integers(2, 5))
    v = vocabulary([f"X{i}" for i in range(n)], range(-2, 3))
    lang = comparison_language() + [LanguageEntry("abs_diff_eq", 1),
                                    LanguageEntry("sum_ne")]
    B = build_basis(v, lang)
    vec = model.ConstraintVec(v, B)
    vals = np.array(data.draw(st.lists(st.integers(-2, 2), min_size=n, max_size=n)),
                    dtype=np.int64)
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    e = assignment({v.variables[i]: int(vals[i]) for i in range(n) if mask[i]}, v)
    got = vec.violated(vals, mask)
    expect = np.array([violates(e, c) for c in B])
    assert np.array_equal(got, expect)


# ---------------------------------------------------------------------------
# canonical forms, problem files
# ---------------------------------------------------------------------------


def test_ge_stored_as_mirrored_le():
    v = vocabulary(["A", "B"], [0, 1])
    assert canonical_constraint(v, "ge", ("A", "B")) == \
        canonical_constraint(v, "le", ("B", "A"))


def test_eq_scope_follows_vocabulary_order():
    v = vocabulary(["X2", "X10"], [0, 1])  # not lexicographic
    c = canonical_constraint(v, "eq", ("X10", "X2"))
    assert c.scope == ("X2", "X10")


def test_describe_round_trip_readable():
    v = example_42_vocab()
    c = canonical_constraint(v, "sum_ne", ("X2", "X3", "X4"))
    assert describe(c) == "X2+X3 != X4"
    lt = conjunction([canonical_constraint(v, "le", ("X2", "X3")),
                      canonical_constraint(v, "ne", ("X2", "X3"))])
    assert "X2 <= X3" in describe(lt) and "X2 != X3" in describe(lt)


def test_problem_round_trip(tmp_path):
    v = vocabulary(["X1", "X2", "X3"], range(1, 4))
    lang = [LanguageEntry("le"), LanguageEntry("ne"), LanguageEntry("abs_diff_eq", 1)]
    target = [canonical_constraint(v, "ne", ("X1", "X2")),
              conjunction([canonical_constraint(v, "le", ("X2", "X3")),
                           canonical_constraint(v, "ne", ("X2", "X3"))])]
    data = model.problem_dict(v, lang, target=target, layout={"type": "grid", "rows": 1, "cols": 3})
    path = tmp_path / "toy.json"
    path.write_text(__import__("json").dumps(data), encoding="utf-8")
    v2, lang2, target2, bg2, layout = model.load_problem_file(str(path))
    assert v2 == v
    assert lang2 == lang
    assert set(target2) == set(target)
    assert bg2 == []
    assert layout["rows"] == 1


def test_parse_problem_rejects_bad_input():
    with pytest.raises(ValueError):
        model.parse_problem({"variables": [], "language": [{"family": "le"}]})
    with pytest.raises(ValueError):
        model.parse_problem({"variables": [{"name": "A", "domain": [1]}],
                             "language": []})
    with pytest.raises(ValueError):
        model.parse_problem({"variables": [{"name": "A", "domain": [1]}],
                             "language": [{"family": "nope"}]})


def test_domain_grid_order_magnitude_first():
    v = vocabulary(["A"], range(-2, 3))
    g = model.domain_grid(v, ["A"])
    assert list(g[:, 0]) == [0, 1, -1, 2, -2]
