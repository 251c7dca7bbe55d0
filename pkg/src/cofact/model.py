"""Shared domain types: programs, assertions, verification statuses.

Assertion indices are 1-based ordinals assigned after the call-graph
ordering pass; every result container (implication graph, falsified set,
timeout set) speaks in those indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Mapping, Optional

from .errors import InconsistentRunError

AssertionId = int


@dataclass(frozen=True)
class Assertion:
    """One assert statement: function, logical line, predicate text.

    ``logical_line`` counts token-bearing non-assert lines of the enclosing
    function body that precede the statement, so it is stable when other
    assertions are inserted or removed.  ``source_line`` is the physical
    line in the normalized source and is what makes two textually identical
    assertions distinct entries.
    """

    function: str
    logical_line: int
    predicate: str
    source_line: int
    id: Optional[AssertionId] = None

    def with_id(self, new_id: AssertionId) -> "Assertion":
        return Assertion(self.function, self.logical_line, self.predicate,
                         self.source_line, new_id)

    def __str__(self) -> str:
        tag = f"a{self.id}" if self.id is not None else "a?"
        return f"{tag}@{self.function}:{self.logical_line} assert({self.predicate})"


@dataclass(frozen=True)
class Verified:
    pass


@dataclass(frozen=True)
class CondVerified:
    assumption_set: FrozenSet[AssertionId]

    def __post_init__(self):
        if not self.assumption_set:
            raise ValueError("conditional status requires a non-empty assumption set")


@dataclass(frozen=True)
class Falsified:
    pass


@dataclass(frozen=True)
class Unknown:
    pass


VerificationStatus = Verified | CondVerified | Falsified | Unknown


@dataclass(frozen=True)
class ImplicationGraph:
    """Per-assertion assumption sets plus the falsified set.

    Keys only ever point at strictly smaller indices, which keeps the
    graph acyclic by construction.
    """

    entries: Mapping[AssertionId, FrozenSet[AssertionId]]
    falsified: FrozenSet[AssertionId]

    def __post_init__(self):
        for i, deps in self.entries.items():
            bad = [j for j in deps if j >= i]
            if bad:
                raise ValueError(f"entry {i} depends on non-preceding indices {sorted(bad)}")
        overlap = set(self.entries) & set(self.falsified)
        if overlap:
            raise ValueError(f"indices both verified and falsified: {sorted(overlap)}")


def status_of(assertion_id: AssertionId, ig: ImplicationGraph,
              timeout_set: frozenset[AssertionId] | set[AssertionId]) -> VerificationStatus:
    """Classify one assertion from a finished run.

    Exactly one of the four cases applies; an id in none of the sets means
    the caller handed us results from a different run.
    """
    if assertion_id in ig.entries:
        deps = ig.entries[assertion_id]
        return Verified() if not deps else CondVerified(frozenset(deps))
    if assertion_id in ig.falsified:
        return Falsified()
    if assertion_id in timeout_set:
        return Unknown()
    raise InconsistentRunError(
        f"assertion {assertion_id} appears in no result set of this run")


@dataclass(frozen=True)
class FunctionInfo:
    """Source extent of one function definition plus its body brace lines.

    Lines are 1-based physical lines into the normalized source.  The body
    region used for logical-line counting runs strictly between
    ``body_open_line`` and ``body_close_line``.
    """

    name: str
    start_line: int
    end_line: int
    body_open_line: int
    body_close_line: int


@dataclass(frozen=True)
class ProgramModel:
    """A parsed C program: full text, global code, function extents.

    ``source`` is normalized (every assert statement on its own physical
    line).  Interleaving ``global_lines`` with the function extents by line
    number reproduces ``source``.
    """

    source: str
    global_code: str
    functions: tuple[FunctionInfo, ...]
    unwind_bound: int = 5

    def __post_init__(self):
        if self.unwind_bound < 1:
            raise ValueError("unwind bound must be >= 1")

    def lines(self) -> list[str]:
        return self.source.splitlines()

    def function(self, name: str) -> FunctionInfo:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    def function_names(self) -> set[str]:
        return {fn.name for fn in self.functions}


@dataclass(frozen=True)
class VerifiedFact:
    """A verified assertion rendered as a natural-language statement."""

    assertion: AssertionId
    bound: int
    text: str
    conditional: bool
    dependency_indices: FrozenSet[AssertionId] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.conditional != bool(self.dependency_indices):
            raise ValueError("conditional facts must carry their dependency indices")
