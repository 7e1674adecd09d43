"""Core data model: vocabulary, relations, constraints, networks, assignments.

A problem lives on a vocabulary of variables with finite integer domains.
Constraints instantiate relation families on ordered scopes.  The candidate
space the learner works in (the basis) is the set of all constraints
buildable from a language of relation families on that vocabulary.
Partial assignments are classified against constraint sets through the
kappa operator (the subset of constraints an assignment violates), and
candidate refinement uses the join of two conjunction sets.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

# ---------------------------------------------------------------------------
# Relation families
# ---------------------------------------------------------------------------

# family -> (arity, needs_param).  Pair-distance families come in a ternary
# form (shared first variable: |s-a| op |s-b|) and a quaternary form
# (|x-y| op |z-t|), so their arity is resolved per instance.
_FAMILIES = {
    "le": (2, False),
    "lt": (2, False),
    "ge": (2, False),
    "gt": (2, False),
    "eq": (2, False),
    "ne": (2, False),
    "unary_le": (1, True),
    "unary_lt": (1, True),
    "unary_ge": (1, True),
    "unary_gt": (1, True),
    "unary_eq": (1, True),
    "unary_ne": (1, True),
    "abs_diff_eq": (2, True),
    "abs_diff_ne": (2, True),
    "abs_diff_gt": (2, True),
    "abs_diff_le": (2, True),
    "sum_ne": (3, False),
    "sum_eq": (3, False),
    "abs_diff_pair_eq": (None, False),
    "abs_diff_pair_ne": (None, False),
}

PAIR_FAMILIES = ("abs_diff_pair_eq", "abs_diff_pair_ne")

_COMPLEMENT = {
    "le": "gt", "gt": "le", "lt": "ge", "ge": "lt", "eq": "ne", "ne": "eq",
    "unary_le": "unary_gt", "unary_gt": "unary_le",
    "unary_lt": "unary_ge", "unary_ge": "unary_lt",
    "unary_eq": "unary_ne", "unary_ne": "unary_eq",
    "abs_diff_eq": "abs_diff_ne", "abs_diff_ne": "abs_diff_eq",
    "abs_diff_gt": "abs_diff_le", "abs_diff_le": "abs_diff_gt",
    "sum_ne": "sum_eq", "sum_eq": "sum_ne",
    "abs_diff_pair_eq": "abs_diff_pair_ne",
    "abs_diff_pair_ne": "abs_diff_pair_eq",
}

_SYMBOL = {"le": "<=", "lt": "<", "ge": ">=", "gt": ">", "eq": "=", "ne": "!=",
           "unary_le": "<=", "unary_lt": "<", "unary_ge": ">=",
           "unary_gt": ">", "unary_eq": "=", "unary_ne": "!="}


def _pair_dists(v: Sequence[int]) -> tuple[int, int]:
    if len(v) == 3:
        s, a, b = v
        return abs(s - a), abs(s - b)
    x, y, z, t = v
    return abs(x - y), abs(z - t)


_EVAL = {
    "le": lambda v, p: v[0] <= v[1],
    "lt": lambda v, p: v[0] < v[1],
    "ge": lambda v, p: v[0] >= v[1],
    "gt": lambda v, p: v[0] > v[1],
    "eq": lambda v, p: v[0] == v[1],
    "ne": lambda v, p: v[0] != v[1],
    "unary_le": lambda v, p: v[0] <= p,
    "unary_lt": lambda v, p: v[0] < p,
    "unary_ge": lambda v, p: v[0] >= p,
    "unary_gt": lambda v, p: v[0] > p,
    "unary_eq": lambda v, p: v[0] == p,
    "unary_ne": lambda v, p: v[0] != p,
    "abs_diff_eq": lambda v, p: abs(v[0] - v[1]) == p,
    "abs_diff_ne": lambda v, p: abs(v[0] - v[1]) != p,
    "abs_diff_gt": lambda v, p: abs(v[0] - v[1]) > p,
    "abs_diff_le": lambda v, p: abs(v[0] - v[1]) <= p,
    "sum_ne": lambda v, p: v[0] + v[1] != v[2],
    "sum_eq": lambda v, p: v[0] + v[1] == v[2],
    "abs_diff_pair_eq": lambda v, p: _pair_dists(v)[0] == _pair_dists(v)[1],
    "abs_diff_pair_ne": lambda v, p: _pair_dists(v)[0] != _pair_dists(v)[1],
}


@dataclass(frozen=True)
class Relation:
    """A relation family instance, evaluable on integer tuples of its arity."""

    family: str
    param: Optional[int] = None
    arity: int = 2

    def holds(self, values: Sequence[int]) -> bool:
        return _EVAL[self.family](values, self.param)

    def complement(self) -> "Relation":
        return Relation(_COMPLEMENT[self.family], self.param, self.arity)


def relation(family: str, param: Optional[int] = None, arity: Optional[int] = None) -> Relation:
    """Build a relation, validating family, parameter and arity."""
    if family not in _FAMILIES:
        raise ValueError(f"unknown relation family: {family!r}")
    fixed_arity, needs_param = _FAMILIES[family]
    if needs_param and param is None:
        raise ValueError(f"family {family!r} requires an integer parameter")
    if not needs_param and param is not None:
        raise ValueError(f"family {family!r} takes no parameter")
    if fixed_arity is None:
        if arity not in (3, 4):
            raise ValueError(f"family {family!r} has arity 3 or 4, got {arity}")
    elif arity is not None and arity != fixed_arity:
        raise ValueError(f"family {family!r} has arity {fixed_arity}, got {arity}")
    else:
        arity = fixed_arity
    return Relation(family, param, arity)


# ---------------------------------------------------------------------------
# Vocabulary and assignments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    """Ordered variables with per-variable finite integer domains."""

    variables: tuple[str, ...]
    domains: tuple[tuple[int, ...], ...]
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("variable identifiers must be unique")
        doms = tuple(tuple(sorted(set(d))) for d in self.domains)
        if len(doms) != len(self.variables):
            raise ValueError("one domain per variable required")
        for d in doms:
            if not d:
                raise ValueError("domains must be non-empty")
        object.__setattr__(self, "domains", doms)
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.variables)})

    @property
    def n(self) -> int:
        return len(self.variables)

    def domain(self, var: str) -> tuple[int, ...]:
        return self.domains[self.index[var]]


def vocabulary(variables: Iterable[str], domains) -> Vocabulary:
    """Convenience constructor; `domains` is one shared iterable or a mapping."""
    variables = tuple(variables)
    if isinstance(domains, dict):
        doms = tuple(tuple(domains[v]) for v in variables)
    else:
        shared = tuple(domains)
        doms = tuple(shared for _ in variables)
    return Vocabulary(variables, doms)


@dataclass(frozen=True)
class Assignment:
    """A partial mapping from variables to domain values."""

    bindings: tuple[tuple[str, int], ...]

    @property
    def Y(self) -> frozenset:
        return frozenset(v for v, _ in self.bindings)

    def as_dict(self) -> dict:
        return dict(self.bindings)

    def value(self, var: str) -> int:
        return dict(self.bindings)[var]

    def project(self, S: Iterable[str]) -> "Assignment":
        S = set(S)
        if not S <= self.Y:
            raise ValueError("projection outside assigned variables")
        return Assignment(tuple((v, x) for v, x in self.bindings if v in S))

    def __len__(self) -> int:
        return len(self.bindings)


def assignment(bindings: dict, vocab: Optional[Vocabulary] = None) -> Assignment:
    if vocab is not None:
        for v, x in bindings.items():
            if x not in vocab.domain(v):
                raise ValueError(f"value {x} outside domain of {v}")
        order = sorted(bindings, key=lambda v: vocab.index[v])
    else:
        order = list(bindings)
    return Assignment(tuple((v, bindings[v]) for v in order))


# ---------------------------------------------------------------------------
# Constraints and conjunctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Constraint:
    """A relation instance on an ordered scope of distinct variables."""

    relation: Relation
    scope: tuple[str, ...]
    varset: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.scope) != self.relation.arity:
            raise ValueError("scope length must match relation arity")
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("scope variables must be distinct")
        object.__setattr__(self, "varset", frozenset(self.scope))
        object.__setattr__(self, "_hash", hash((self.relation, self.scope)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Constraint):
            return NotImplemented
        return self.relation == other.relation and self.scope == other.scope

    @property
    def members(self) -> frozenset:
        return frozenset((self,))

    def satisfied_by(self, values: Sequence[int]) -> bool:
        return self.relation.holds(values)


@dataclass(frozen=True, eq=False)
class Conjunction:
    """Several elementary constraints over one variable set, taken jointly."""

    members: frozenset
    varset: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.members:
            raise ValueError("conjunction must be non-empty")
        varsets = {m.varset for m in self.members}
        if len(varsets) != 1:
            raise ValueError("conjunction members must share one variable set")
        object.__setattr__(self, "varset", next(iter(varsets)))
        object.__setattr__(self, "_hash", hash(self.members))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Conjunction):
            return NotImplemented
        return self.members == other.members


AnyConstraint = Union[Constraint, Conjunction]


def conjunction(members: Iterable[Constraint]) -> AnyConstraint:
    """Normalise a member set: a single member stays elementary."""
    ms = frozenset(members)
    if len(ms) == 1:
        return next(iter(ms))
    return Conjunction(ms)


def members_of(c: AnyConstraint) -> frozenset:
    return c.members


def constraint(family: str, scope: Sequence[str], param: Optional[int] = None) -> Constraint:
    return Constraint(relation(family, param, len(scope)), tuple(scope))


def canonical_constraint(vocab: Vocabulary, family: str, scope: Sequence[str],
                         param: Optional[int] = None) -> Constraint:
    """Build a constraint in canonical form.

    ge/gt on (i,j) are stored as le/lt on (j,i); symmetric relations (eq, ne,
    value-distance) carry their scope in vocabulary order; pair-distance
    scopes are sorted within each pair.  Pair order itself is significant:
    |x-y| op |z-t| and |z-t| op |x-y| are distinct basis constraints.
    """
    scope = list(scope)
    ix = vocab.index
    for v in scope:
        if v not in ix:
            raise ValueError(f"unknown variable {v!r}")
    if family in ("ge", "gt"):
        family = {"ge": "le", "gt": "lt"}[family]
        scope = [scope[1], scope[0]]
    elif family in ("eq", "ne", "abs_diff_eq", "abs_diff_ne", "abs_diff_gt", "abs_diff_le"):
        scope.sort(key=lambda v: ix[v])
    elif family in ("sum_ne", "sum_eq"):
        scope[:2] = sorted(scope[:2], key=lambda v: ix[v])
    elif family in PAIR_FAMILIES:
        if len(scope) == 4:
            scope[:2] = sorted(scope[:2], key=lambda v: ix[v])
            scope[2:] = sorted(scope[2:], key=lambda v: ix[v])
        # ternary form (s, a, b): the shared variable position is fixed
    return Constraint(relation(family, param, len(scope)), tuple(scope))


def complement_constraint(vocab: Vocabulary, c: Constraint) -> Constraint:
    rel = c.relation.complement()
    return canonical_constraint(vocab, rel.family, c.scope, rel.param)


def constraint_sort_key(vocab: Vocabulary, c: AnyConstraint):
    """Canonical ordering: scope indices lexicographically, then family, then param."""
    if isinstance(c, Conjunction):
        return tuple(sorted(constraint_sort_key(vocab, m) for m in c.members))
    return (tuple(vocab.index[v] for v in c.scope), c.relation.family,
            c.relation.param if c.relation.param is not None else 0)


def describe(c: AnyConstraint) -> str:
    """Human-readable rendering of a constraint or conjunction."""
    if isinstance(c, Conjunction):
        parts = sorted(describe(m) for m in c.members)
        return "(" + ") & (".join(parts) + ")"
    fam, scope, p = c.relation.family, c.scope, c.relation.param
    if fam in _SYMBOL and fam.startswith("unary"):
        return f"{scope[0]} {_SYMBOL[fam]} {p}"
    if fam in _SYMBOL:
        return f"{scope[0]} {_SYMBOL[fam]} {scope[1]}"
    if fam.startswith("abs_diff_pair"):
        op = "=" if fam.endswith("eq") else "!="
        if len(scope) == 3:
            s, a, b = scope
            return f"|{s}-{a}| {op} |{s}-{b}|"
        x, y, z, t = scope
        return f"|{x}-{y}| {op} |{z}-{t}|"
    if fam.startswith("abs_diff"):
        op = {"abs_diff_eq": "=", "abs_diff_ne": "!=",
              "abs_diff_gt": ">", "abs_diff_le": "<="}[fam]
        return f"|{scope[0]}-{scope[1]}| {op} {p}"
    if fam.startswith("sum"):
        op = "!=" if fam == "sum_ne" else "="
        return f"{scope[0]}+{scope[1]} {op} {scope[2]}"
    return f"{fam}{scope}"


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------


@dataclass
class Network:
    """A set of constraints (possibly conjunctions) on a shared vocabulary."""

    vocabulary: Vocabulary
    constraints: list

    def restricted(self, Y: Iterable[str]) -> list:
        """C[Y]: constraints whose variable set is included in Y."""
        Y = frozenset(Y)
        return [c for c in self.constraints if c.varset <= Y]

    def exactly_on(self, Y: Iterable[str]) -> list:
        """C_Y: constraints whose variable set is exactly Y."""
        Y = frozenset(Y)
        return [c for c in self.constraints if c.varset == Y]

    def __len__(self) -> int:
        return len(self.constraints)


# ---------------------------------------------------------------------------
# violates / kappa / join
# ---------------------------------------------------------------------------


def violates(e: Assignment, c: AnyConstraint) -> bool:
    """True iff e covers var(c) and the projection on the scope fails c.

    A constraint whose scope is not fully assigned cannot reject a partial
    assignment, so the result is False in that case.
    """
    if isinstance(c, Conjunction):
        return any(violates(e, m) for m in c.members)
    b = dict(e.bindings)
    if not all(v in b for v in c.scope):
        return False
    return not c.relation.holds(tuple(b[v] for v in c.scope))


def kappa(C: Iterable[AnyConstraint], e: Assignment) -> list:
    """The constraints of C rejected by e, in C's iteration order."""
    return [c for c in C if violates(e, c)]


_GRID_LIMIT = 2_000_000


def domain_grid(vocab: Vocabulary, scope: Sequence[str]) -> np.ndarray:
    """All tuples over the scope's domains, one row per tuple.

    Values of each domain are ordered by magnitude (0, 1, -1, 2, -2, ...)
    and the last scope variable varies fastest, which fixes the enumeration
    order used by deterministic example search.
    """
    doms = [sorted(vocab.domain(v), key=lambda x: (abs(x), x < 0)) for v in scope]
    total = 1
    for d in doms:
        total *= len(d)
    if total > _GRID_LIMIT:
        raise ValueError(f"grid of {total} tuples exceeds limit")
    cols = []
    reps_after = total
    for d in doms:
        reps_after //= len(d)
        tile = total // (len(d) * reps_after)
        col = np.repeat(np.tile(np.asarray(d, dtype=np.int64), tile), reps_after)
        cols.append(col)
    return np.stack(cols, axis=1)


def eval_on_grid(c: Constraint, scope: Sequence[str], grid: np.ndarray) -> np.ndarray:
    """Vectorised satisfaction of an elementary constraint over grid rows."""
    pos = {v: i for i, v in enumerate(scope)}
    cols = [grid[:, pos[v]] for v in c.scope]
    fam, p = c.relation.family, c.relation.param
    if fam == "le":
        return cols[0] <= cols[1]
    if fam == "lt":
        return cols[0] < cols[1]
    if fam == "ge":
        return cols[0] >= cols[1]
    if fam == "gt":
        return cols[0] > cols[1]
    if fam == "eq":
        return cols[0] == cols[1]
    if fam == "ne":
        return cols[0] != cols[1]
    if fam == "unary_le":
        return cols[0] <= p
    if fam == "unary_lt":
        return cols[0] < p
    if fam == "unary_ge":
        return cols[0] >= p
    if fam == "unary_gt":
        return cols[0] > p
    if fam == "unary_eq":
        return cols[0] == p
    if fam == "unary_ne":
        return cols[0] != p
    if fam == "abs_diff_eq":
        return np.abs(cols[0] - cols[1]) == p
    if fam == "abs_diff_ne":
        return np.abs(cols[0] - cols[1]) != p
    if fam == "abs_diff_gt":
        return np.abs(cols[0] - cols[1]) > p
    if fam == "abs_diff_le":
        return np.abs(cols[0] - cols[1]) <= p
    if fam == "sum_ne":
        return cols[0] + cols[1] != cols[2]
    if fam == "sum_eq":
        return cols[0] + cols[1] == cols[2]
    if fam in PAIR_FAMILIES:
        if len(cols) == 3:
            d1 = np.abs(cols[0] - cols[1])
            d2 = np.abs(cols[0] - cols[2])
        else:
            d1 = np.abs(cols[0] - cols[1])
            d2 = np.abs(cols[2] - cols[3])
        return d1 == d2 if fam.endswith("eq") else d1 != d2
    raise ValueError(f"unknown family {fam}")


def conjunction_satisfiable(members: Iterable[Constraint], vocab: Vocabulary) -> bool:
    """Exhaustive satisfiability of a member set over its scope's domains."""
    members = list(members)
    Y = sorted(set().union(*(m.varset for m in members)),
               key=lambda v: vocab.index[v])
    total = 1
    for v in Y:
        total *= len(vocab.domain(v))
    if total <= _GRID_LIMIT:
        grid = domain_grid(vocab, Y)
        sat = np.ones(len(grid), dtype=bool)
        for m in members:
            sat &= eval_on_grid(m, Y, grid)
            if not sat.any():
                return False
        return bool(sat.any())
    # streaming fallback for oversized products
    doms = [vocab.domain(v) for v in Y]
    pos = {v: i for i, v in enumerate(Y)}
    for tup in itertools.product(*doms):
        if all(m.relation.holds(tuple(tup[pos[v]] for v in m.scope)) for m in members):
            return True
    return False


def join(S: Iterable[AnyConstraint], S2: Iterable[AnyConstraint],
         vocab: Vocabulary) -> set:
    """Pairwise conjunction of two conjunction sets, dropping unsatisfiable results.

    All inputs must share one variable set; satisfiability is decided by
    exhaustive enumeration over the scope's domains.
    """
    out = {}
    for a in S:
        for b in S2:
            ms = members_of(a) | members_of(b)
            if ms in out:
                continue
            if conjunction_satisfiable(ms, vocab):
                out[ms] = conjunction(ms)
    return set(out.values())


# ---------------------------------------------------------------------------
# Basis construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LanguageEntry:
    family: str
    param: Optional[int] = None


def build_basis(vocab: Vocabulary, language: Iterable[LanguageEntry]) -> list:
    """All constraints instantiating the language on every eligible scope.

    Mirror-image comparison scopes are deduplicated (x >= y is stored as
    y <= x), so a language containing both le and ge contributes the same
    constraints as one containing le alone.  Pair-distance relations are
    generated for every ordered pair of variable pairs sharing at most one
    variable, which makes the two orders distinct basis constraints.
    """
    seen = set()
    out = []

    def add(family, scope, param=None):
        c = canonical_constraint(vocab, family, scope, param)
        if c not in seen:
            seen.add(c)
            out.append(c)

    names = vocab.variables
    n = len(names)
    for entry in language:
        fam, p = entry.family, entry.param
        if fam not in _FAMILIES:
            raise ValueError(f"unknown relation family: {fam!r}")
        if fam in ("le", "lt", "ge", "gt", "eq", "ne"):
            for i, j in itertools.permutations(range(n), 2):
                add(fam, (names[i], names[j]))
        elif fam.startswith("unary"):
            for v in names:
                add(fam, (v,), p)
        elif fam in ("abs_diff_eq", "abs_diff_ne", "abs_diff_gt", "abs_diff_le"):
            for i, j in itertools.combinations(range(n), 2):
                add(fam, (names[i], names[j]), p)
        elif fam == "sum_ne":
            for i, j in itertools.combinations(range(n), 2):
                for k in range(n):
                    if k != i and k != j:
                        add(fam, (names[i], names[j], names[k]))
        elif fam in PAIR_FAMILIES:
            pairs = list(itertools.combinations(range(n), 2))
            for p1, p2 in itertools.permutations(pairs, 2):
                shared = set(p1) & set(p2)
                if len(shared) == 1:
                    s = shared.pop()
                    a = next(x for x in p1 if x != s)
                    b = next(x for x in p2 if x != s)
                    add(fam, (names[s], names[a], names[b]))
                elif not shared:
                    add(fam, (names[p1[0]], names[p1[1]], names[p2[0]], names[p2[1]]))
        else:
            raise ValueError(f"family {fam!r} not usable in a basis")
    out.sort(key=lambda c: constraint_sort_key(vocab, c))
    return out


# ---------------------------------------------------------------------------
# Vectorised evaluation of elementary constraint lists
# ---------------------------------------------------------------------------

_FCODE = {fam: i for i, fam in enumerate(_FAMILIES)}


class ConstraintVec:
    """Bulk evaluator for a fixed list of elementary constraints.

    Evaluates coverage (scope fully assigned) and violation against a dense
    values/assigned-mask pair in one vectorised pass per family group.
    """

    def __init__(self, vocab: Vocabulary, constraints: Sequence[Constraint]):
        self.vocab = vocab
        self.constraints = list(constraints)
        m = len(self.constraints)
        self.idx = np.zeros((m, 4), dtype=np.int32)
        self.arity = np.zeros(m, dtype=np.int8)
        self.param = np.zeros(m, dtype=np.int64)
        fams = np.zeros(m, dtype=np.int16)
        for r, c in enumerate(self.constraints):
            if isinstance(c, Conjunction):
                raise TypeError("ConstraintVec holds elementary constraints only")
            sc = [vocab.index[v] for v in c.scope]
            self.arity[r] = len(sc)
            self.idx[r, :len(sc)] = sc
            # pad with the first scope variable so gathers stay in range
            for k in range(len(sc), 4):
                self.idx[r, k] = sc[0]
            fams[r] = _FCODE[c.relation.family]
            if c.relation.param is not None:
                self.param[r] = c.relation.param
        self.groups = []
        for fam, code in _FCODE.items():
            rows = np.nonzero(fams == code)[0]
            if len(rows):
                self.groups.append((fam, rows, self.idx[rows], self.param[rows],
                                    self.arity[rows]))

    def __len__(self) -> int:
        return len(self.constraints)

    def covered(self, assigned: np.ndarray) -> np.ndarray:
        ok = assigned[self.idx[:, 0]]
        for k in (1, 2, 3):
            ok = ok & (assigned[self.idx[:, k]] | (self.arity <= k))
        return ok

    def violated(self, values: np.ndarray, assigned: np.ndarray) -> np.ndarray:
        """Boolean row mask: scope covered and relation fails."""
        m = len(self.constraints)
        out = np.zeros(m, dtype=bool)
        for fam, rows, idx, param, arity in self.groups:
            v0 = values[idx[:, 0]]
            if fam in ("unary_le", "unary_lt", "unary_ge", "unary_gt",
                       "unary_eq", "unary_ne"):
                op = fam[6:]
                sat = {"le": v0 <= param, "lt": v0 < param, "ge": v0 >= param,
                       "gt": v0 > param, "eq": v0 == param, "ne": v0 != param}[op]
            else:
                v1 = values[idx[:, 1]]
                if fam == "le":
                    sat = v0 <= v1
                elif fam == "lt":
                    sat = v0 < v1
                elif fam == "ge":
                    sat = v0 >= v1
                elif fam == "gt":
                    sat = v0 > v1
                elif fam == "eq":
                    sat = v0 == v1
                elif fam == "ne":
                    sat = v0 != v1
                elif fam == "abs_diff_eq":
                    sat = np.abs(v0 - v1) == param
                elif fam == "abs_diff_ne":
                    sat = np.abs(v0 - v1) != param
                elif fam == "abs_diff_gt":
                    sat = np.abs(v0 - v1) > param
                elif fam == "abs_diff_le":
                    sat = np.abs(v0 - v1) <= param
                elif fam == "sum_ne":
                    sat = v0 + v1 != values[idx[:, 2]]
                elif fam == "sum_eq":
                    sat = v0 + v1 == values[idx[:, 2]]
                else:  # pair-distance families
                    v2 = values[idx[:, 2]]
                    d1 = np.abs(v0 - v1)
                    d2 = np.where(arity == 3, np.abs(v0 - v2),
                                  np.abs(v2 - values[idx[:, 3]]))
                    sat = d1 == d2 if fam.endswith("eq") else d1 != d2
            out[rows] = ~sat
        return out & self.covered(assigned)

    def subset_of(self, var_mask: np.ndarray) -> np.ndarray:
        """Rows whose variable set is included in the masked variable set."""
        ok = var_mask[self.idx[:, 0]]
        for k in (1, 2, 3):
            ok = ok & (var_mask[self.idx[:, k]] | (self.arity <= k))
        return ok


# ---------------------------------------------------------------------------
# Problem files (UTF-8 JSON)
# ---------------------------------------------------------------------------


def _parse_domain(d) -> tuple[int, ...]:
    if isinstance(d, dict) and "min" in d and "max" in d:
        return tuple(range(int(d["min"]), int(d["max"]) + 1))
    if isinstance(d, dict) and "values" in d:
        return tuple(int(x) for x in d["values"])
    if isinstance(d, (list, tuple)):
        return tuple(int(x) for x in d)
    raise ValueError(f"cannot parse domain: {d!r}")


def parse_constraint_entry(vocab: Vocabulary, entry: dict) -> AnyConstraint:
    if "conjunction" in entry:
        ms = [parse_constraint_entry(vocab, m) for m in entry["conjunction"]]
        if any(isinstance(m, Conjunction) for m in ms):
            raise ValueError("nested conjunctions are not allowed")
        return conjunction(ms)
    fam = entry["family"]
    scope = entry["scope"]
    val = entry.get("val")
    return canonical_constraint(vocab, fam, scope, val)


def constraint_entry(c: AnyConstraint) -> dict:
    if isinstance(c, Conjunction):
        return {"conjunction": [constraint_entry(m) for m in sorted(
            c.members, key=lambda m: (m.relation.family, m.scope))]}
    d = {"family": c.relation.family, "scope": list(c.scope)}
    if c.relation.param is not None:
        d["val"] = c.relation.param
    return d


def parse_problem(data: dict):
    """Parse a problem dict into (vocab, language, target, background, layout).

    `target` and `background` are lists of constraints (or None when the
    section is absent); `layout` is passed through untouched for UIs.
    """
    if "variables" not in data or not data["variables"]:
        raise ValueError("problem file needs a non-empty 'variables' list")
    names = [v["name"] for v in data["variables"]]
    doms = {v["name"]: _parse_domain(v["domain"]) for v in data["variables"]}
    vocab = vocabulary(names, doms)
    if not data.get("language"):
        raise ValueError("problem file needs a non-empty 'language' list")
    language = [LanguageEntry(e["family"], e.get("val")) for e in data["language"]]
    for e in language:
        if e.family not in _FAMILIES:
            raise ValueError(f"unknown relation family: {e.family!r}")
    target = None
    if data.get("target") is not None:
        target = [parse_constraint_entry(vocab, e) for e in data["target"]]
    background = [parse_constraint_entry(vocab, e) for e in data.get("background", [])]
    return vocab, language, target, background, data.get("layout")


def problem_dict(vocab: Vocabulary, language, target=None, background=None,
                 layout=None, name=None) -> dict:
    data = {
        "variables": [{"name": v, "domain": {"values": list(vocab.domain(v))}}
                      for v in vocab.variables],
        "language": [{"family": e.family, **({"val": e.param} if e.param is not None else {})}
                     for e in language],
    }
    if name:
        data["name"] = name
    if target is not None:
        data["target"] = [constraint_entry(c) for c in target]
    if background:
        data["background"] = [constraint_entry(c) for c in background]
    if layout:
        data["layout"] = layout
    return data


def load_problem_file(path: str):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return parse_problem(data)
