"""Finite-domain solver used for example generation and entailment checking.

Backtracking search over bitmask domains with arc-consistency filtering on
binary constraints and forward checking on ternary/quaternary ones.
Supports negated constraints, a wall-clock budget checked once per search
node, and three objectives: none (first solution), maximising the number of
assigned variables (anytime), and maximising the number of violated
constraints from a given set (anytime branch and bound).
"""

from __future__ import annotations

import itertools
import random
import time
from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    AnyConstraint,
    Assignment,
    Conjunction,
    Constraint,
    Vocabulary,
    assignment as make_assignment,
    complement_constraint,
    members_of,
    violates,
)


@dataclass(frozen=True)
class Not:
    """Negation of a constraint; elementary ones become their complement."""

    constraint: AnyConstraint


@dataclass
class SolveRequest:
    vocab: Vocabulary
    constraints: list
    required: tuple = ()
    objective: Optional[object] = None  # None | "max_assigned" | ("max_violated", vec, alive)
    budget_ms: Optional[float] = None
    seed: int = 0
    heuristic: str = "domwdeg"
    bdeg: Optional[np.ndarray] = None
    assign_all: bool = True
    extra_filters: list = field(default_factory=list)


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "timeout"
    assignment: Optional[Assignment]
    elapsed_ms: float
    objective_value: Optional[int] = None
    optimal: bool = True


class _Wipeout(Exception):
    def __init__(self, prop_id):
        self.prop_id = prop_id


class _Budget(Exception):
    pass


class _Found(Exception):
    def __init__(self, payload):
        self.payload = payload


class _State:
    """Search state: one bitmask per variable, bits ordered by value."""

    def __init__(self, vocab: Vocabulary, seed: int):
        self.vocab = vocab
        self.n = vocab.n
        universe = sorted({x for d in vocab.domains for x in d})
        self.values = universe
        self.nbits = len(universe)
        self.bit = {x: k for k, x in enumerate(universe)}
        self.contiguous = universe[-1] - universe[0] + 1 == len(universe)
        self.full = (1 << self.nbits) - 1
        self.domains = []
        for d in vocab.domains:
            m = 0
            for x in d:
                m |= 1 << self.bit[x]
            self.domains.append(m)
        self.trail: list = []
        self.incident: list[list[int]] = [[] for _ in range(self.n)]
        # disequality propagators act only on singleton domains; wake them
        # only when a domain collapses to one value
        self.incident_ne: list[list[int]] = [[] for _ in range(self.n)]
        self.props: list = []
        self.weight: list[int] = []
        self.wdeg = [1.0] * self.n
        self.queue: deque = deque()
        self.queued: list[bool] = []
        rng = random.Random(seed)
        self.value_order = []
        for i in range(self.n):
            order = [k for k in range(self.nbits) if (self.domains[i] >> k) & 1]
            rng.shuffle(order)
            self.value_order.append(order)

    # -- mask helpers (bit order equals value order) ------------------------

    def mask_le(self, x: int) -> int:
        return (1 << bisect_right(self.values, x)) - 1

    def mask_lt(self, x: int) -> int:
        return (1 << bisect_left(self.values, x)) - 1

    def mask_ge(self, x: int) -> int:
        return self.full & ~self.mask_lt(x)

    def mask_gt(self, x: int) -> int:
        return self.full & ~self.mask_le(x)

    def bit_of(self, x: int) -> int:
        k = self.bit.get(x)
        return 0 if k is None else (1 << k)

    def min_val(self, m: int) -> int:
        return self.values[(m & -m).bit_length() - 1]

    def max_val(self, m: int) -> int:
        return self.values[m.bit_length() - 1]

    def is_singleton(self, i: int) -> bool:
        m = self.domains[i]
        return m != 0 and (m & (m - 1)) == 0

    def value_of(self, i: int) -> int:
        return self.values[self.domains[i].bit_length() - 1]

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int):
        while len(self.trail) > mark:
            i, old = self.trail.pop()
            self.domains[i] = old

    def shrink(self, i: int, newmask: int, prop_id: int):
        old = self.domains[i]
        newmask &= old
        if newmask == old:
            return
        if newmask == 0:
            raise _Wipeout(prop_id)
        self.trail.append((i, old))
        self.domains[i] = newmask
        queued = self.queued
        for p in self.incident[i]:
            if not queued[p]:
                queued[p] = True
                self.queue.append(p)
        if newmask & (newmask - 1) == 0:
            for p in self.incident_ne[i]:
                if not queued[p]:
                    queued[p] = True
                    self.queue.append(p)

    # -- propagation --------------------------------------------------------

    def add_propagator(self, kind, data, scope_idx):
        pid = len(self.props)
        self.props.append((kind, data, scope_idx))
        self.weight.append(1)
        self.queued.append(False)
        lazy = kind == "bin" and data[0] == "ne"
        for i in scope_idx:
            (self.incident_ne if lazy else self.incident)[i].append(pid)
        return pid

    def propagate(self):
        while self.queue:
            pid = self.queue.popleft()
            self.queued[pid] = False
            kind, data, scope = self.props[pid]
            if kind == "bin":
                self._prop_binary(pid, data, scope)
            elif kind == "disj":
                self._prop_disj(pid, data, scope)
            else:
                self._prop_fc(pid, data, scope)

    def reset_queue(self):
        while self.queue:
            self.queued[self.queue.popleft()] = False

    def enqueue_all(self):
        self.queue.clear()
        for pid in range(len(self.props)):
            self.queued[pid] = True
            self.queue.append(pid)

    def _prop_binary(self, pid, data, scope):
        fam, p = data
        i, j = scope
        if fam == "le":  # Xi <= Xj
            self.shrink(i, (1 << self.domains[j].bit_length()) - 1, pid)
            lo = (self.domains[i] & -self.domains[i]).bit_length() - 1
            self.shrink(j, self.full & ~((1 << lo) - 1), pid)
        elif fam == "lt":
            self.shrink(i, (1 << (self.domains[j].bit_length() - 1)) - 1, pid)
            lo = (self.domains[i] & -self.domains[i]).bit_length() - 1
            self.shrink(j, self.full & ~((1 << (lo + 1)) - 1), pid)
        elif fam == "ge":
            self._prop_binary(pid, ("le", p), (j, i))
        elif fam == "gt":
            self._prop_binary(pid, ("lt", p), (j, i))
        elif fam == "eq":
            self.shrink(i, self.domains[j], pid)
            self.shrink(j, self.domains[i], pid)
        elif fam == "ne":
            Dj = self.domains[j]
            if (Dj & (Dj - 1)) == 0:
                self.shrink(i, self.full & ~Dj, pid)
            Di = self.domains[i]
            if (Di & (Di - 1)) == 0:
                self.shrink(j, self.full & ~Di, pid)
        elif fam == "abs_diff_eq":
            self._prop_dist_eq(pid, p, i, j)
            self._prop_dist_eq(pid, p, j, i)
        elif fam == "abs_diff_ne":
            self._prop_dist_ne(pid, p, i, j)
            self._prop_dist_ne(pid, p, j, i)
        elif fam == "abs_diff_gt":
            self._prop_dist_gt(pid, p, i, j)
            self._prop_dist_gt(pid, p, j, i)
        elif fam == "abs_diff_le":
            self._prop_dist_le(pid, p, i, j)
            self._prop_dist_le(pid, p, j, i)
        else:
            raise AssertionError(fam)

    def _prop_dist_eq(self, pid, v, i, j):
        Dj = self.domains[j]
        if self.contiguous:
            supp = ((Dj << v) | (Dj >> v)) & self.full
        else:
            supp = 0
            m = self.domains[i]
            while m:
                b = m & -m
                x = self.values[b.bit_length() - 1]
                if (Dj & self.bit_of(x - v)) or (Dj & self.bit_of(x + v)):
                    supp |= b
                m ^= b
        self.shrink(i, supp, pid)

    def _prop_dist_ne(self, pid, v, i, j):
        # value a of Xi loses support only when Dj is within {a-v, a+v}
        Dj = self.domains[j]
        pc = Dj.bit_count()
        if pc == 1:
            w = self.max_val(Dj)
            self.shrink(i, self.full & ~(self.bit_of(w - v) | self.bit_of(w + v)), pid)
        elif pc == 2 and v > 0:
            w1, w2 = self.min_val(Dj), self.max_val(Dj)
            if w2 - w1 == 2 * v:
                self.shrink(i, self.full & ~self.bit_of(w1 + v), pid)

    def _prop_dist_gt(self, pid, v, i, j):
        Dj = self.domains[j]
        lo, hi = self.min_val(Dj), self.max_val(Dj)
        self.shrink(i, self.mask_gt(lo + v) | self.mask_lt(hi - v), pid)

    def _prop_dist_le(self, pid, v, i, j):
        Dj = self.domains[j]
        if self.contiguous:
            smear = (Dj * ((1 << (2 * v + 1)) - 1)) >> v
            self.shrink(i, smear & self.full, pid)
        else:
            supp = 0
            m = self.domains[i]
            while m:
                b = m & -m
                x = self.values[b.bit_length() - 1]
                if Dj & self.mask_le(x + v) & self.mask_ge(x - v):
                    supp |= b
                m ^= b
            self.shrink(i, supp, pid)

    def _prop_fc(self, pid, rel, scope):
        """Forward checking for sum and pair-distance constraints."""
        free = [i for i in scope if not self.is_singleton(i)]
        if len(free) > 1:
            return
        if not free:
            vals = tuple(self.value_of(i) for i in scope)
            if not rel.holds(vals):
                raise _Wipeout(pid)
            return
        f = free[0]
        pos = scope.index(f)
        fixed = [None if k == pos else self.value_of(i)
                 for k, i in enumerate(scope)]
        allowed = 0
        m = self.domains[f]
        while m:
            b = m & -m
            x = self.values[b.bit_length() - 1]
            fixed[pos] = x
            if rel.holds(tuple(fixed)):
                allowed |= b
            m ^= b
        self.shrink(f, allowed, pid)

    def _prop_disj(self, pid, members, scope):
        """At least one member constraint must end up violated.

        Fails the node once every member is certainly satisfied; when a
        single undecided member remains with one free variable, prunes that
        variable with the member's complement.
        """
        undecided = None
        count_open = 0
        for rel, idx in members:
            vals = []
            open_vars = 0
            for i in idx:
                if self.is_singleton(i):
                    vals.append(self.value_of(i))
                else:
                    vals.append(None)
                    open_vars += 1
            if open_vars == 0:
                if not rel.holds(vals):
                    return  # a member is violated: the requirement holds for good
            else:
                count_open += 1
                undecided = (rel, idx, vals, open_vars)
        if count_open == 0:
            raise _Wipeout(pid)
        if count_open == 1:
            rel, idx, vals, open_vars = undecided
            if open_vars == 1:
                pos = vals.index(None)
                f = idx[pos]
                allowed = 0
                m = self.domains[f]
                while m:
                    b = m & -m
                    vals[pos] = self.values[b.bit_length() - 1]
                    if not rel.holds(vals):
                        allowed |= b
                    m ^= b
                self.shrink(f, allowed, pid)


def _compile(state: _State, vocab: Vocabulary, constraints: Iterable) -> list:
    """Install propagators; returns leaf filters for negated conjunctions.

    A leaf filter returns True (pass), False (reject) or None when its scope
    is not fully assigned yet (only possible at non-leaf nodes).
    """
    leaf_filters = []
    root_masks: dict[int, int] = {}

    def add_elem(c: Constraint):
        fam = c.relation.family
        idx = tuple(vocab.index[v] for v in c.scope)
        if fam.startswith("unary"):
            m = 0
            for x in vocab.domains[idx[0]]:
                if c.relation.holds((x,)):
                    m |= 1 << state.bit[x]
            root_masks[idx[0]] = root_masks.get(idx[0], state.full) & m
        elif len(idx) == 2:
            state.add_propagator("bin", (fam, c.relation.param), idx)
        else:
            state.add_propagator("fc", c.relation, idx)

    for c in constraints:
        if isinstance(c, Not):
            inner = c.constraint
            if isinstance(inner, Conjunction):
                ms = sorted(inner.members, key=lambda m: (m.relation.family, m.scope))
                members = [(m.relation, tuple(vocab.index[v] for v in m.scope))
                           for m in ms]
                scope = tuple(sorted({i for _, idx in members for i in idx}))
                state.add_propagator("disj", members, scope)
            else:
                add_elem(complement_constraint(vocab, inner))
        elif isinstance(c, Conjunction):
            for m in c.members:
                add_elem(m)
        else:
            add_elem(c)
    for i, m in root_masks.items():
        state.shrink(i, m, -1)
    return leaf_filters


def solve(req: SolveRequest) -> SolveResult:
    """Run the search described by the request.

    UNSAT is reported only after an exhaustive proof.  With a budget,
    TIMEOUT means no usable assignment was found in time; objective searches
    interrupted by the budget return their incumbent with optimal=False.
    """
    t0 = time.monotonic()
    budget_s = None if req.budget_ms is None else req.budget_ms / 1000.0
    vocab = req.vocab
    state = _State(vocab, req.seed)

    def elapsed_ms():
        return (time.monotonic() - t0) * 1000.0

    if budget_s is not None and budget_s <= 0:
        return SolveResult("timeout", None, req.budget_ms or 0.0)

    try:
        leaf_filters = _compile(state, vocab, req.constraints)
    except _Wipeout:
        return SolveResult("unsat", None, elapsed_ms())
    leaf_filters.extend(req.extra_filters)

    required_idx = [vocab.index[v] for v in req.required]
    required_set = set(required_idx)
    objective = req.objective
    max_violated = None
    if isinstance(objective, tuple) and objective[0] == "max_violated":
        max_violated = (objective[1], objective[2])
    decide_all = req.assign_all or objective is not None

    best: dict = {"assignment": None, "obj": -1}
    vals_buf = np.zeros(vocab.n, dtype=np.int64)
    sing_buf = np.zeros(vocab.n, dtype=bool)
    domains = state.domains
    n = state.n

    # static variable orders; dom/wdeg re-ranks dynamically
    if req.heuristic == "bdeg" and req.bdeg is not None:
        scored = sorted(range(n), key=lambda i: (-req.bdeg[i], i))
    else:
        scored = list(range(n))
    required_order = [i for i in scored if i in required_set]
    rest_order = [i for i in scored if i not in required_set] if decide_all else []

    def snapshot():
        singles = [(m & (m - 1)) == 0 for m in domains]
        values = [state.value_of(i) if singles[i] else 0 for i in range(n)]
        return values, singles

    def extract(values, singles, only_required=False):
        keep = required_set if only_required else None
        b = {vocab.variables[i]: values[i] for i in range(n)
             if singles[i] and (keep is None or i in keep)}
        return make_assignment(b, vocab)

    def filters_pass(values, singles) -> Optional[bool]:
        verdict = True
        for f in leaf_filters:
            r = f(values, singles)
            if r is False:
                return False
            if r is None:
                verdict = None
        return verdict

    def violated_stats(values, singles):
        vec, alive = max_violated
        np.copyto(vals_buf, values)
        np.copyto(sing_buf, singles)
        viol = vec.violated(vals_buf, sing_buf) & alive
        covered = vec.covered(sing_buf)
        certain = int(viol.sum())
        open_rows = int((alive & ~covered).sum())
        return certain, open_rows

    def pick_var():
        if req.heuristic == "domwdeg":
            best_i, best_score = None, None
            wdeg = state.wdeg
            for i in required_idx:
                m = domains[i]
                if m & (m - 1):
                    score = m.bit_count() / wdeg[i]
                    if best_score is None or score < best_score:
                        best_i, best_score = i, score
            if best_i is not None:
                return best_i
            if decide_all:
                for i in range(n):
                    m = domains[i]
                    if m & (m - 1):
                        score = m.bit_count() / wdeg[i]
                        if best_score is None or score < best_score:
                            best_i, best_score = i, score
            return best_i
        for i in required_order:
            m = domains[i]
            if m & (m - 1):
                return i
        for i in rest_order:
            m = domains[i]
            if m & (m - 1):
                return i
        return None

    def at_leaf():
        values, singles = snapshot()
        if filters_pass(values, singles) is not True:
            return
        if max_violated is not None:
            certain, _ = violated_stats(values, singles)
            if certain > best["obj"]:
                best["obj"] = certain
                best["assignment"] = extract(values, singles)
            return
        if objective == "max_assigned":
            return  # incumbents are recorded on the way down
        raise _Found(extract(values, singles, only_required=not req.assign_all))

    def dfs():
        if budget_s is not None and time.monotonic() - t0 > budget_s:
            raise _Budget()
        if objective == "max_assigned":
            ok = True
            for i in required_idx:
                m = domains[i]
                if m & (m - 1):
                    ok = False
                    break
            if ok:
                count = 0
                for m in domains:
                    if (m & (m - 1)) == 0:
                        count += 1
                if count > best["obj"]:
                    values, singles = snapshot()
                    if filters_pass(values, singles) is True:
                        best["obj"] = count
                        best["assignment"] = extract(values, singles)
                        if count == n:
                            raise _Found(best["assignment"])
        if max_violated is not None:
            values, singles = snapshot()
            certain, open_rows = violated_stats(values, singles)
            if certain + open_rows <= best["obj"]:
                return  # bound: cannot beat the incumbent
        var = pick_var()
        if var is None:
            at_leaf()
            return
        for b in state.value_order[var]:
            if not (domains[var] >> b) & 1:
                continue
            mark = state.mark()
            try:
                state.shrink(var, 1 << b, -1)
                state.propagate()
                dfs()
            except _Wipeout as w:
                if w.prop_id >= 0:
                    state.weight[w.prop_id] += 1
                    for i in state.props[w.prop_id][2]:
                        state.wdeg[i] += 1
            finally:
                state.reset_queue()
                state.undo(mark)

    try:
        state.enqueue_all()
        state.propagate()
    except _Wipeout:
        return SolveResult("unsat", None, elapsed_ms())

    try:
        dfs()
    except _Found as f:
        if objective == "max_assigned":
            return SolveResult("sat", f.payload, elapsed_ms(),
                               objective_value=len(f.payload), optimal=True)
        return SolveResult("sat", f.payload, elapsed_ms())
    except _Budget:
        if best["assignment"] is not None:
            return SolveResult("sat", best["assignment"], req.budget_ms,
                               objective_value=best["obj"], optimal=False)
        return SolveResult("timeout", None, req.budget_ms)

    if best["assignment"] is not None:
        return SolveResult("sat", best["assignment"], elapsed_ms(),
                           objective_value=best["obj"], optimal=True)
    return SolveResult("unsat", None, elapsed_ms())


# ---------------------------------------------------------------------------
# Entailment and network equivalence
# ---------------------------------------------------------------------------


def entails(vocab: Vocabulary, constraints: Iterable[AnyConstraint],
            c: AnyConstraint, seed: int = 0) -> bool:
    """True iff adding the negation of c to the set leaves it unsatisfiable."""
    req = SolveRequest(vocab, list(constraints) + [Not(c)],
                       required=tuple(sorted(c.varset, key=lambda v: vocab.index[v])),
                       seed=seed, assign_all=True)
    return solve(req).status == "unsat"


def equivalent(vocab: Vocabulary, C1: Iterable[AnyConstraint],
               C2: Iterable[AnyConstraint], seed: int = 0) -> bool:
    """sol(C1) == sol(C2), via entailment of each side by the other."""
    C1, C2 = list(C1), list(C2)
    return (all(entails(vocab, C1, c, seed) for c in C2)
            and all(entails(vocab, C2, c, seed) for c in C1))


def solutions(vocab: Vocabulary, constraints: Iterable[AnyConstraint],
              limit: Optional[int] = None) -> list[Assignment]:
    """Enumerate complete solutions by brute force (small vocabularies only)."""
    out = []
    cs = list(constraints)
    for tup in itertools.product(*(vocab.domains[i] for i in range(vocab.n))):
        e = make_assignment(dict(zip(vocab.variables, tup)), vocab)
        if not any(violates(e, c) for c in cs):
            out.append(e)
            if limit is not None and len(out) >= limit:
                break
    return out


def _exclude_filter(vocab: Vocabulary, sol: Assignment):
    idx_val = [(i, sol.value(v)) for i, v in enumerate(vocab.variables)]

    def filt(values, singles):
        if not all(singles[i] for i, _ in idx_val):
            return None
        return any(values[i] != x for i, x in idx_val)

    return filt


def count_solutions(vocab: Vocabulary, constraints: Iterable[AnyConstraint],
                    cap: int = 2, seed: int = 0) -> int:
    """Count complete solutions up to a cap, using search with exclusion."""
    cs = list(constraints)
    sols: list[Assignment] = []
    while len(sols) < cap:
        req = SolveRequest(vocab, cs, assign_all=True, seed=seed,
                           extra_filters=[_exclude_filter(vocab, s) for s in sols])
        res = solve(req)
        if res.status != "sat":
            break
        sols.append(res.assignment)
    return len(sols)


# ---------------------------------------------------------------------------
# Variable-choice heuristics (exposed for direct use and testing)
# ---------------------------------------------------------------------------


def bdeg_counts(vocab: Vocabulary, constraints: Iterable[AnyConstraint]) -> np.ndarray:
    """Per-variable count of incident constraints (basis degree)."""
    counts = np.zeros(vocab.n, dtype=np.int64)
    for c in constraints:
        seen = set()
        for m in members_of(c):
            seen.update(m.scope)
        for v in seen:
            counts[vocab.index[v]] += 1
    return counts


def choose_variable(vocab: Vocabulary, unassigned: Sequence[str], heuristic: str,
                    domain_sizes: Optional[dict] = None,
                    basis: Optional[Iterable[AnyConstraint]] = None,
                    weights: Optional[dict] = None) -> str:
    """Pick the next variable per dom/wdeg or bdeg, ties by lowest index.

    dom/wdeg minimises domain size over the summed weights of incident
    constraints (weights default to 1); bdeg maximises the number of basis
    constraints involving the variable.
    """
    if not unassigned:
        raise ValueError("at least one unassigned variable required")
    cands = sorted(unassigned, key=lambda v: vocab.index[v])
    if len(cands) == 1:
        return cands[0]
    if heuristic == "bdeg":
        counts = bdeg_counts(vocab, basis or [])
        return max(cands, key=lambda v: (counts[vocab.index[v]], -vocab.index[v]))
    if heuristic != "domwdeg":
        raise ValueError(f"unknown heuristic {heuristic!r}")
    weights = weights or {}
    wdeg = {v: 0.0 for v in cands}
    for c in (basis or []):
        w = weights.get(c, 1.0)
        for v in c.varset:
            if v in wdeg:
                wdeg[v] += w
    sizes = domain_sizes or {v: len(vocab.domain(v)) for v in cands}
    return min(cands, key=lambda v: (sizes[v] / max(wdeg[v], 1.0), vocab.index[v]))
