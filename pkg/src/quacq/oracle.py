"""User abstraction: answers partial queries yes/no.

The simulated oracle classifies against a hidden target network; an
interactive oracle blocks until a human answer arrives (the session service
provides the bridging implementation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .model import (
    AnyConstraint,
    Assignment,
    Conjunction,
    ConstraintVec,
    Vocabulary,
    members_of,
    violates,
)


class AbortSession(RuntimeError):
    """Raised when an interactive user abandons the session."""


@dataclass
class OracleAnswer:
    value: bool  # True = yes
    latency_ms: Optional[float] = None


class Oracle:
    """Interface: classify a partial assignment as positive or negative."""

    def ask(self, e: Assignment) -> bool:
        raise NotImplementedError

    def ask_arrays(self, vocab: Vocabulary, values: np.ndarray,
                   assigned: np.ndarray) -> bool:
        b = {vocab.variables[i]: int(values[i])
             for i in range(vocab.n) if assigned[i]}
        from .model import assignment as make_assignment
        return self.ask(make_assignment(b, vocab))


@dataclass
class Counters:
    asked: int = 0
    yes: int = 0
    no: int = 0
    total_size: int = 0

    def record(self, size: int, answer: bool):
        self.asked += 1
        self.total_size += size
        if answer:
            self.yes += 1
        else:
            self.no += 1


class SimulatedOracle(Oracle):
    """Answers yes iff the assignment violates no constraint of the target.

    All member constraints of the target are evaluated in one vectorised
    pass; a conjunction is violated exactly when one of its members is.
    """

    def __init__(self, vocab: Vocabulary, target: Iterable[AnyConstraint]):
        self.vocab = vocab
        self.target = list(target)
        flat = []
        for c in self.target:
            flat.extend(members_of(c))
        self._vec = ConstraintVec(vocab, flat) if flat else None
        self.counters = Counters()

    def answer_of(self, e: Assignment) -> bool:
        return not any(violates(e, c) for c in self.target)

    def ask(self, e: Assignment) -> bool:
        ans = self.answer_of(e)
        self.counters.record(len(e), ans)
        return ans

    def ask_arrays(self, vocab: Vocabulary, values: np.ndarray,
                   assigned: np.ndarray) -> bool:
        if self._vec is None:
            ans = True
        else:
            ans = not self._vec.violated(values, assigned).any()
        self.counters.record(int(assigned.sum()), ans)
        return ans
