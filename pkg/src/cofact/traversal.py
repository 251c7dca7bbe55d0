"""Linear assertion ordering driven by the call graph.

A depth-first walk from ``main`` arranges assertions so that everything a
callee asserts comes before any caller assertion positioned at or after
the call site.  Later checks can then promote every preceding assertion
to an assumption without ever assuming a fact that depends on the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import TraversalError
from .frontend import CallGraph, extract_assertions
from .model import Assertion, ProgramModel

ENTRY_FUNCTION = "main"


@dataclass(frozen=True)
class AssertionSequence:
    """The ordered assertion list with ids 1..m assigned."""

    assertions: tuple[Assertion, ...]

    def __len__(self) -> int:
        return len(self.assertions)

    def __iter__(self):
        return iter(self.assertions)

    def by_id(self, assertion_id: int) -> Assertion:
        return self.assertions[assertion_id - 1]


def order_assertions(per_function: Mapping[str, Sequence[Assertion]],
                     cg: CallGraph,
                     declaration_order: Sequence[str],
                     entry: str = ENTRY_FUNCTION) -> AssertionSequence:
    """Order assertions over an explicit per-function map (testable core).

    Each callee's block is spliced in at its first call site only; later
    call sites are already satisfied by the earlier placement.  Functions
    on the current DFS path (cycles) and functions already emitted are
    skipped.  Functions unreachable from the entry are appended afterwards
    in declaration order.
    """
    if entry not in cg.nodes:
        raise TraversalError(f"call graph has no {entry!r} function")

    visited: set[str] = set()

    def visit(name: str) -> list[Assertion]:
        visited.add(name)
        own = list(per_function.get(name, ()))
        slots: list[list[Assertion]] = [[] for _ in range(len(own) + 1)]
        for edge in cg.edges_from(name):
            if edge.callee in visited:
                continue
            slot = next((j for j, a in enumerate(own)
                         if a.logical_line >= edge.logical_line), len(own))
            slots[slot].extend(visit(edge.callee))
        ordered: list[Assertion] = []
        for j, assertion in enumerate(own):
            ordered.extend(slots[j])
            ordered.append(assertion)
        ordered.extend(slots[len(own)])
        return ordered

    sequence = visit(entry)
    for name in declaration_order:
        if name not in visited:
            sequence.extend(visit(name))

    return AssertionSequence(tuple(
        a.with_id(i) for i, a in enumerate(sequence, start=1)))


def cg_traversal(model: ProgramModel, cg: CallGraph) -> AssertionSequence:
    """Order every extracted assertion of the program model."""
    per_function: dict[str, list[Assertion]] = {}
    for assertion in extract_assertions(model):
        per_function.setdefault(assertion.function, []).append(assertion)
    declaration_order = [fn.name for fn in model.functions]
    return order_assertions(per_function, cg, declaration_order)
