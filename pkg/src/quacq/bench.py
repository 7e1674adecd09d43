"""Benchmark problem builders, random targets, metrics, experiment runner."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import model, solver
from .acquisition import Acquisition, GenerationTimeout
from .model import (
    AnyConstraint,
    Constraint,
    LanguageEntry,
    Network,
    Vocabulary,
    build_basis,
    canonical_constraint,
    conjunction,
    members_of,
    vocabulary,
)
from .oracle import SimulatedOracle
from .solver import SolveRequest, count_solutions, entails, solve


@dataclass
class ProblemSpec:
    name: str
    vocab: Vocabulary
    language: list
    basis: list
    target: list
    background: list = field(default_factory=list)
    layout: Optional[dict] = None

    def check(self):
        pool = set(self.basis)
        for c in self.target:
            for m in members_of(c):
                if m not in pool:
                    raise ValueError(f"target member outside the basis: {model.describe(m)}")
        return self


BENCHMARKS = ("purdey", "zebra", "golomb8", "random", "rlfap_like", "sudoku", "jigsaw")

COMPARISONS = [LanguageEntry(f) for f in ("ge", "le", "lt", "gt", "ne", "eq")]

_single_solution_checked: set = set()


def _assert_single_solution(spec: ProblemSpec):
    if spec.name in _single_solution_checked:
        return
    n = solver.count_solutions(spec.vocab, spec.target, cap=2)
    if n != 1:
        raise AssertionError(f"{spec.name} must have exactly one solution, found {n}")
    _single_solution_checked.add(spec.name)


# ---------------------------------------------------------------------------
# Purdey
# ---------------------------------------------------------------------------


def build_purdey() -> ProblemSpec:
    """Four families, four items bought, four payment means; slots 1..4.

    Three groups of four variables with all-different structure plus nine
    binary clues pinning a unique matching.
    """
    fams = [f"Fam{i}" for i in range(1, 5)]
    items = [f"Item{i}" for i in range(1, 5)]
    pays = [f"Pay{i}" for i in range(1, 5)]
    names = fams + items + pays
    v = vocabulary(names, range(1, 5))

    def c(fam, scope, p=None):
        return canonical_constraint(v, fam, scope, p)

    cliques = []
    for group in (fams, items, pays):
        for a_i in range(4):
            for b_i in range(a_i + 1, 4):
                cliques.append(c("ne", (group[a_i], group[b_i])))
    clues = [
        c("lt", ("Fam1", "Fam2")),
        c("lt", ("Fam2", "Fam3")),
        c("lt", ("Fam3", "Fam4")),
        c("eq", ("Item1", "Fam2")),
        c("lt", ("Item2", "Item1")),
        c("gt", ("Item3", "Item4")),
        c("eq", ("Pay1", "Fam3")),
        c("gt", ("Pay2", "Pay1")),
        c("lt", ("Pay3", "Pay4")),
    ]
    target = cliques + clues
    basis = build_basis(v, COMPARISONS)
    layout = {"type": "columns",
              "columns": [{"label": "family", "vars": fams},
                          {"label": "bought", "vars": items},
                          {"label": "paid", "vars": pays}]}
    spec = ProblemSpec("purdey", v, list(COMPARISONS), basis, target,
                       background=cliques, layout=layout).check()
    _assert_single_solution(spec)
    return spec


# ---------------------------------------------------------------------------
# Zebra
# ---------------------------------------------------------------------------


def build_zebra() -> ProblemSpec:
    """The five-houses puzzle: 25 variables over house positions 1..5."""
    groups = {
        "nat": ["NatEnglish", "NatSpaniard", "NatUkrainian", "NatNorwegian", "NatJapanese"],
        "col": ["ColRed", "ColGreen", "ColIvory", "ColYellow", "ColBlue"],
        "drink": ["DrCoffee", "DrTea", "DrMilk", "DrJuice", "DrWater"],
        "cig": ["CigOldGold", "CigKools", "CigChesterfield", "CigLucky", "CigParliament"],
        "pet": ["PetDog", "PetSnails", "PetFox", "PetHorse", "PetZebra"],
    }
    names = [x for g in groups.values() for x in g]
    v = vocabulary(names, range(1, 6))

    def c(fam, scope, p=None):
        return canonical_constraint(v, fam, scope, p)

    cliques = []
    for g in groups.values():
        for i in range(5):
            for j in range(i + 1, 5):
                cliques.append(c("ne", (g[i], g[j])))
    clues = [
        c("eq", ("NatEnglish", "ColRed")),
        c("eq", ("NatSpaniard", "PetDog")),
        c("eq", ("DrCoffee", "ColGreen")),
        c("eq", ("NatUkrainian", "DrTea")),
        conjunction([c("gt", ("ColGreen", "ColIvory")),
                     c("abs_diff_eq", ("ColGreen", "ColIvory"), 1)]),
        c("eq", ("CigOldGold", "PetSnails")),
        c("eq", ("CigKools", "ColYellow")),
        c("unary_eq", ("DrMilk",), 3),
        c("unary_eq", ("NatNorwegian",), 1),
        c("abs_diff_eq", ("CigChesterfield", "PetFox"), 1),
        c("abs_diff_eq", ("CigKools", "PetHorse"), 1),
        c("eq", ("CigLucky", "DrJuice")),
        c("eq", ("NatJapanese", "CigParliament")),
        c("abs_diff_eq", ("NatNorwegian", "ColBlue"), 1),
    ]
    target = cliques + clues
    language = list(COMPARISONS)
    for op in ("ge", "le", "lt", "gt", "eq", "ne"):
        for val in (1, 3):
            language.append(LanguageEntry(f"unary_{op}", val))
    language += [LanguageEntry("abs_diff_eq", 1), LanguageEntry("abs_diff_ne", 1)]
    basis = build_basis(v, language)
    spec = ProblemSpec("zebra", v, language, basis, target,
                       background=cliques).check()
    _assert_single_solution(spec)
    return spec


# ---------------------------------------------------------------------------
# Golomb ruler, 8 marks
# ---------------------------------------------------------------------------


def build_golomb8() -> ProblemSpec:
    """Eight ruler marks with ordered positions and distance-distinctness.

    The target mixes the 28 ordering constraints with 112 ternary and 210
    quaternary distance disequalities, many of which are mutually redundant
    given the ordering; that redundancy is the point of the instance.
    """
    names = [f"M{i}" for i in range(1, 9)]
    v = vocabulary(names, range(0, 35))

    def c(fam, scope, p=None):
        return canonical_constraint(v, fam, scope, p)

    target = []
    for i in range(8):
        for j in range(i + 1, 8):
            target.append(c("lt", (names[i], names[j])))
    ordering = list(target)
    for a in range(8):
        for b in range(a + 1, 8):
            for cc in range(b + 1, 8):
                # pairs sharing the low mark and pairs sharing the high mark
                target.append(c("abs_diff_pair_ne", (names[a], names[b], names[cc])))
                target.append(c("abs_diff_pair_ne", (names[cc], names[a], names[b])))
    import itertools

    for w, x, y, z in itertools.combinations(range(8), 4):
        target.append(c("abs_diff_pair_ne", (names[w], names[x], names[y], names[z])))
        target.append(c("abs_diff_pair_ne", (names[w], names[y], names[x], names[z])))
        target.append(c("abs_diff_pair_ne", (names[w], names[z], names[x], names[y])))
    language = list(COMPARISONS) + [LanguageEntry("abs_diff_pair_eq"),
                                    LanguageEntry("abs_diff_pair_ne")]
    basis = build_basis(v, language)
    return ProblemSpec("golomb8", v, language, basis, target,
                       background=ordering).check()


# ---------------------------------------------------------------------------
# Random binary networks
# ---------------------------------------------------------------------------


def random_target(vocab: Vocabulary, basis_pool: list, m: int, seed: int = 0,
                  max_attempts_factor: int = 600) -> list:
    """Draw m constraints, one per variable pair, none implied or conflicting.

    Dense comparison networks can reach states where no candidate on a free
    pair passes the checks; after a burst of consecutive rejections a seeded
    sample of earlier insertions is dropped and the walk continues.
    Removals preserve the invariants: deleting constraints can neither
    entail a remaining member nor make the network unsatisfiable.
    """
    rng = random.Random(seed)
    target: list = []
    linked: set = set()
    attempts = 0
    consecutive_rejects = 0
    limit = max_attempts_factor * max(m, 1)
    while len(target) < m:
        attempts += 1
        if attempts > limit:
            raise ValueError(f"could not place {m} constraints in {limit} attempts")
        if consecutive_rejects >= 120 and target:
            drop = max(1, len(target) // 10)
            for _ in range(drop):
                k = rng.randrange(len(target))
                linked.discard(target[k].varset)
                target.pop(k)
            consecutive_rejects = 0
        c = basis_pool[rng.randrange(len(basis_pool))]
        if c.varset in linked:
            consecutive_rejects += 1
            continue
        res = solve(SolveRequest(vocab, target + [c], seed=rng.randrange(2 ** 30)))
        if res.status != "sat":
            consecutive_rejects += 1
            continue
        if entails(vocab, target, c):
            consecutive_rejects += 1
            continue
        target.append(c)
        linked.add(c.varset)
        consecutive_rejects = 0
    return target


def build_random(seed: int = 0) -> ProblemSpec:
    names = [f"X{i:02d}" for i in range(1, 51)]
    v = vocabulary(names, range(1, 11))
    basis = build_basis(v, COMPARISONS)
    target = random_target(v, basis, 122, seed=seed)
    return ProblemSpec("random", v, list(COMPARISONS), basis, target).check()


# ---------------------------------------------------------------------------
# Frequency-assignment style generator
# ---------------------------------------------------------------------------

RLFAP_VALS = (12, 14, 28, 35, 56, 84, 238)


def build_rlfap_like(seed: int = 0) -> ProblemSpec:
    """50 variables over 40 channels; comparisons plus per-pair distance relations.

    Every pair carries the six comparisons and distance relations
    |x-y|=val and |x-y|>val for two seeded values, which sizes the basis at
    exactly 12,250; the target picks 125 of those constraints.
    """
    rng = random.Random(seed)
    names = [f"F{i:02d}" for i in range(1, 51)]
    v = vocabulary(names, range(1, 41))
    basis = build_basis(v, COMPARISONS)
    per_pair: dict = {}
    for i in range(50):
        for j in range(i + 1, 50):
            vals = rng.sample(RLFAP_VALS, 2)
            opts = []
            for val in vals:
                opts.append(canonical_constraint(v, "abs_diff_eq",
                                                 (names[i], names[j]), val))
                opts.append(canonical_constraint(v, "abs_diff_gt",
                                                 (names[i], names[j]), val))
            per_pair[(i, j)] = opts
            basis.extend(opts)
    target: list = []
    linked: set = set()
    attempts = 0
    consecutive_rejects = 0
    while len(target) < 125:
        attempts += 1
        if attempts > 80000:
            raise ValueError("rlfap generator exhausted its attempts")
        if consecutive_rejects >= 120 and target:
            for _ in range(max(1, len(target) // 10)):
                k = rng.randrange(len(target))
                linked.discard(target[k].varset)
                target.pop(k)
            consecutive_rejects = 0
        i, j = sorted(rng.sample(range(50), 2))
        pool = per_pair[(i, j)] + [
            canonical_constraint(v, f.family, (names[i], names[j]))
            for f in COMPARISONS]
        c = pool[rng.randrange(len(pool))]
        if c.varset in linked:
            consecutive_rejects += 1
            continue
        if solve(SolveRequest(v, target + [c], seed=rng.randrange(2 ** 30))).status != "sat":
            consecutive_rejects += 1
            continue
        if entails(v, target, c):
            consecutive_rejects += 1
            continue
        target.append(c)
        linked.add(c.varset)
        consecutive_rejects = 0
    language = list(COMPARISONS) + [LanguageEntry("abs_diff_eq", val) for val in RLFAP_VALS] \
        + [LanguageEntry("abs_diff_gt", val) for val in RLFAP_VALS]
    return ProblemSpec("rlfap_like", v, language, basis, target).check()


# ---------------------------------------------------------------------------
# Sudoku and its jigsaw variant
# ---------------------------------------------------------------------------

JIGSAW_REGIONS = [
    "002111111",
    "002222111",
    "000002222",
    "333444555",
    "333444555",
    "333444555",
    "666777888",
    "666777888",
    "666777888",
]


def _grid_spec(name: str, region_of) -> ProblemSpec:
    names = [f"R{r}C{c}" for r in range(1, 10) for c in range(1, 10)]
    v = vocabulary(names, range(1, 10))

    def cell(r, c):
        return f"R{r + 1}C{c + 1}"

    pairs = set()
    for r in range(9):
        for c1 in range(9):
            for c2 in range(c1 + 1, 9):
                pairs.add((cell(r, c1), cell(r, c2)))
    for c in range(9):
        for r1 in range(9):
            for r2 in range(r1 + 1, 9):
                pairs.add((cell(r1, c), cell(r2, c)))
    regions: dict = {}
    for r in range(9):
        for c in range(9):
            regions.setdefault(region_of(r, c), []).append((r, c))
    for cells in regions.values():
        for k1 in range(9):
            for k2 in range(k1 + 1, 9):
                a, b = cells[k1], cells[k2]
                key = tuple(sorted((cell(*a), cell(*b))))
                pairs.add(key)
    target = [canonical_constraint(v, "ne", p) for p in sorted(pairs)]
    basis = build_basis(v, COMPARISONS)
    layout = {"type": "grid", "rows": 9, "cols": 9, "vars": names,
              "regions": ["".join(str(region_of(r, c)) for c in range(9))
                          for r in range(9)]}
    row_cliques = []
    for r in range(9):
        for c1 in range(9):
            for c2 in range(c1 + 1, 9):
                row_cliques.append(canonical_constraint(v, "ne", (cell(r, c1), cell(r, c2))))
    for c in range(9):
        for r1 in range(9):
            for r2 in range(r1 + 1, 9):
                row_cliques.append(canonical_constraint(v, "ne", (cell(r1, c), cell(r2, c))))
    return ProblemSpec(name, v, list(COMPARISONS), basis, target,
                       background=row_cliques, layout=layout).check()


def build_sudoku() -> ProblemSpec:
    return _grid_spec("sudoku", lambda r, c: (r // 3) * 3 + c // 3)


def build_jigsaw() -> ProblemSpec:
    return _grid_spec("jigsaw", lambda r, c: int(JIGSAW_REGIONS[r][c]))


_spec_cache: dict = {}


def build_benchmark(name: str, seed: int = 0) -> ProblemSpec:
    builders = {
        "purdey": lambda: build_purdey(),
        "zebra": lambda: build_zebra(),
        "golomb8": lambda: build_golomb8(),
        "random": lambda: build_random(seed),
        "rlfap_like": lambda: build_rlfap_like(seed),
        "sudoku": lambda: build_sudoku(),
        "jigsaw": lambda: build_jigsaw(),
    }
    if name not in builders:
        raise ValueError(f"unknown benchmark {name!r}; choose from {BENCHMARKS}")
    key = (name, seed if name in ("random", "rlfap_like") else 0)
    if key not in _spec_cache:
        _spec_cache[key] = builders[name]()
    return _spec_cache[key]


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    completed: bool
    q_c: Optional[int]
    q_a: Optional[int]
    l_size: Optional[int]
    mean_q: Optional[float]
    time_a_s: Optional[float]
    time_c_s: Optional[float]
    t_max_s: float
    t_max_plain_s: float = 0.0
    t_max_burst_s: float = 0.0
    equivalent: Optional[bool] = None


@dataclass
class MetricsRow:
    instance: str
    n_vars: int
    t_size: int
    l_size: Optional[float]
    q_a: Optional[float]
    q_c: Optional[float]
    mean_q: Optional[float]
    time_a_s: Optional[float]
    time_c_s: Optional[float]
    t_avg_s: Optional[float]
    t_max_s: Optional[float]
    completed: int
    runs: int
    records: list = field(default_factory=list)


def _cheap_entails(vocab, network, c, implies_cache) -> bool:
    members = [m for x in network for m in members_of(x)]
    ok = True
    for mt in members_of(c):
        if mt in members:
            continue
        ok = False
        break
    if ok:
        return True
    return entails(vocab, network, c)


def verify_equivalence(vocab, learned: list, target: list) -> bool:
    """Both-way entailment with a syntactic fast path on literal members."""
    cache: dict = {}
    return (all(_cheap_entails(vocab, learned, t, cache) for t in target)
            and all(_cheap_entails(vocab, target, c, cache) for c in learned))


def run_single(spec: ProblemSpec, strategy: str, seed: int,
               cutoff_ms: float = 1000.0, bk_fraction: Optional[float] = None,
               background: Optional[list] = None,
               query_gen_timeout_ms: Optional[float] = None,
               verify: bool = True) -> RunRecord:
    rng = random.Random(seed)
    K = list(background) if background else []
    if bk_fraction:
        k = int(bk_fraction * len(spec.target))
        K = rng.sample(spec.target, k)
    oracle = SimulatedOracle(spec.vocab, spec.target)
    eng = Acquisition(spec.vocab, spec.basis, oracle, strategy=strategy,
                      cutoff_ms=cutoff_ms, seed=seed, background=K,
                      equivalence_target=spec.target,
                      query_gen_timeout_ms=query_gen_timeout_ms)
    completed = True
    try:
        eng.run()
    except GenerationTimeout:
        completed = False
    counters = oracle.counters
    mean_q = counters.total_size / counters.asked if counters.asked else 0.0
    eq = None
    if completed and verify:
        eq = verify_equivalence(spec.vocab, eng.learned, spec.target)
    return RunRecord(
        completed=completed,
        q_c=counters.asked if completed else None,
        q_a=eng.q_a,
        l_size=len(eng.learned) if completed else None,
        mean_q=mean_q if completed else None,
        time_a_s=(eng.time_a_ms or 0.0) / 1000.0 if eng.q_a is not None else None,
        time_c_s=eng.compute_ms() / 1000.0 if completed else None,
        t_max_s=eng.max_wait_ms / 1000.0,
        t_max_plain_s=eng.max_wait_plain_ms / 1000.0,
        t_max_burst_s=eng.max_wait_burst_ms / 1000.0,
        equivalent=eq,
    )


def _avg(values):
    values = [x for x in values if x is not None]
    return sum(values) / len(values) if values else None


def run_experiment(spec: ProblemSpec, strategy: str, runs: int, seed: int,
                   cutoff_ms: float = 1000.0, bk_fraction: Optional[float] = None,
                   background: Optional[list] = None,
                   query_gen_timeout_ms: Optional[float] = None,
                   verify: bool = True, jobs: int = 1) -> MetricsRow:
    """Averages over seeded runs; runs that exceed the per-query generation
    limit count against the completed-run tally and contribute only their
    queries-to-equivalence numbers."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    args = [(spec, strategy, seed + r, cutoff_ms, bk_fraction, background,
             query_gen_timeout_ms, verify) for r in range(runs)]
    if jobs > 1:
        import multiprocessing as mp

        with mp.Pool(jobs) as pool:
            records = pool.starmap(run_single, args)
    else:
        records = [run_single(*a) for a in args]
    completed = [r for r in records if r.completed]
    q_c = _avg([r.q_c for r in completed])
    time_c = _avg([r.time_c_s for r in completed])
    return MetricsRow(
        instance=spec.name,
        n_vars=spec.vocab.n,
        t_size=len(spec.target),
        l_size=_avg([r.l_size for r in completed]),
        q_a=_avg([r.q_a for r in records]),
        q_c=q_c,
        mean_q=_avg([r.mean_q for r in completed]),
        time_a_s=_avg([r.time_a_s for r in records]),
        time_c_s=time_c,
        t_avg_s=(time_c / q_c) if (time_c is not None and q_c) else None,
        t_max_s=max((r.t_max_s for r in records), default=None),
        completed=len(completed),
        runs=runs,
        records=records,
    )


CSV_HEADER = ["instance", "T", "L", "QA", "QC", "meanQ",
              "timeA", "timeC", "tAvg", "tMax", "completed"]


def _fmt(x, digits=2, zero_times=False, is_time=False):
    if x is None:
        return "--"
    if is_time and zero_times:
        return f"{0:.2f}"
    if isinstance(x, float):
        return f"{x:.{digits}f}"
    return str(x)


def metrics_csv(rows: Iterable[MetricsRow], zero_times: bool = False) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            r.instance,
            r.t_size,
            _fmt(r.l_size, 1),
            _fmt(r.q_a, 1),
            _fmt(r.q_c, 1),
            _fmt(r.mean_q, 1),
            _fmt(r.time_a_s, 2, zero_times, True),
            _fmt(r.time_c_s, 2, zero_times, True),
            _fmt(r.t_avg_s, 2, zero_times, True),
            _fmt(r.t_max_s, 2, zero_times, True),
            r.completed,
        ])
    return out.getvalue()


def metrics_table(rows: Iterable[MetricsRow], zero_times: bool = False) -> str:
    header = ["Instance", "|T|", "|L|", "#QA", "#QC", "q/|X|",
              "timeA", "timeC", "tAvg", "tMax", "#C"]
    body = []
    for r in rows:
        mean_over = (f"{r.mean_q:.1f}/{r.n_vars}" if r.mean_q is not None
                     else f"--/{r.n_vars}")
        body.append([
            r.instance, str(r.t_size), _fmt(r.l_size, 1), _fmt(r.q_a, 1),
            _fmt(r.q_c, 1), mean_over,
            _fmt(r.time_a_s, 2, zero_times, True),
            _fmt(r.time_c_s, 2, zero_times, True),
            _fmt(r.t_avg_s, 2, zero_times, True),
            _fmt(r.t_max_s, 2, zero_times, True),
            str(r.completed),
        ])
    widths = [max(len(header[k]), *(len(row[k]) for row in body)) if body
              else len(header[k]) for k in range(len(header))]
    lines = ["  ".join(h.ljust(widths[k]) for k, h in enumerate(header))]
    for row in body:
        lines.append("  ".join(x.ljust(widths[k]) for k, x in enumerate(row)))
    return "\n".join(lines) + "\n"


def spec_to_problem_dict(spec: ProblemSpec, include_target: bool = True) -> dict:
    return model.problem_dict(
        spec.vocab, spec.language,
        target=spec.target if include_target else None,
        background=None, layout=spec.layout, name=spec.name)


def problem_spec_from_dict(data: dict, basis: Optional[list] = None) -> ProblemSpec:
    vocab, language, target, background, layout = model.parse_problem(data)
    if basis is None:
        basis = build_basis(vocab, language)
    return ProblemSpec(data.get("name", "problem"), vocab, language, basis,
                       target if target is not None else [], background, layout)
