"""Semantic rule engine for ssMACH protocols.

Rules and severities:

  R1   completeness          every non-crossed cell is answered      error
  R2   provided-needs-provider  provided cells have a provider       error
  R3   provider-validity     provides sources are described/denied   error
  R4   open cells            every open cell is surfaced             open
  R5   reference integrity   cell refs resolve to definition items   error
  R6   definition minimality every definition item is referenced     warning
  R7b  group usage           groups are referenced by >= 2 cells     warning
  R8   meta completeness     all meta fields are filled              error
  R9   work-package consistency  flags match handover-row crossing   error
  R10  demand-target content demands must not target crossed cells   error
  R10b open demand target    demanding an open cell stays open       open
  R11  provides acyclicity   no cell transitively provides itself    error
  R11b demands cycle         circular demand chains                  warning
  R12  relation/cross exclusion  crossed cells join no relation      error

The default verdict passes with zero errors; the strict verdict also
requires zero open findings.  ``validate`` is a pure function and its
diagnostics are sorted by (rule, location), so reports are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from .model import (
    ALL_CELL_IDS,
    CellId,
    CellStatus,
    HANDOVER_ROWS,
    Protocol,
    Relation,
    RelationKind,
)

_META_FIELD_ORDER = (
    "name",
    "version",
    "date",
    "filler",
    "our_team",
    "cooperating_teams",
    "externals",
)


class Severity(str, Enum):
    ERROR = "error"
    OPEN = "open"
    WARNING = "warning"


@dataclass(frozen=True)
class Location:
    """Where a diagnostic points: a cell, a definition item, a relation, a
    meta field, or a description group."""

    kind: str  # "meta" | "definition" | "group" | "cell" | "relation"
    key: Union[str, int]

    _KIND_ORDER = {"meta": 0, "definition": 1, "group": 2, "cell": 3, "relation": 4}

    @classmethod
    def cell(cls, cell_id: CellId) -> "Location":
        return cls("cell", str(cell_id))

    @classmethod
    def meta(cls, field: str) -> "Location":
        return cls("meta", field)

    @classmethod
    def definition(cls, number: int) -> "Location":
        return cls("definition", number)

    @classmethod
    def relation(cls, index: int) -> "Location":
        return cls("relation", index)

    @classmethod
    def group(cls, group_id: str) -> "Location":
        return cls("group", group_id)

    @property
    def sort_key(self) -> tuple[int, ...]:
        if self.kind == "meta":
            return (0, _META_FIELD_ORDER.index(self.key))
        if self.kind == "definition":
            return (1, self.key)
        if self.kind == "group":
            return (2,) + tuple(ord(c) for c in self.key)
        if self.kind == "cell":
            row, column = self.key.split(".")
            return (3, CellId.of(row, column).order)
        return (4, self.key)

    def __str__(self) -> str:
        if self.kind == "cell":
            return self.key
        return f"{self.kind}.{self.key}"


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    severity: Severity
    location: Location
    message: str

    def render(self) -> str:
        return f"{self.rule} {self.severity.value} {self.location}: {self.message}"

    @property
    def sort_key(self) -> tuple:
        number = int("".join(ch for ch in self.rule if ch.isdigit()))
        suffix = self.rule.lstrip("R0123456789")
        return (number, suffix) + self.location.sort_key


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]

    def count(self, severity: Severity) -> int:
        return sum(1 for d in self.diagnostics if d.severity is severity)

    @property
    def error_count(self) -> int:
        return self.count(Severity.ERROR)

    @property
    def open_count(self) -> int:
        return self.count(Severity.OPEN)

    @property
    def warning_count(self) -> int:
        return self.count(Severity.WARNING)

    def passes(self, strict: bool = False) -> bool:
        if self.error_count:
            return False
        return not (strict and self.open_count)

    def verdict(self, strict: bool = False) -> str:
        return "pass" if self.passes(strict) else "fail"

    def render(self) -> str:
        return "".join(d.render() + "\n" for d in self.diagnostics)


_RULES: dict[str, tuple[Severity, str, str]] = {
    "R1": (
        Severity.ERROR,
        "every aspect needs an answer",
        "Each non-crossed cell of the grid must be described, denied, "
        "provided, or explicitly marked open; a silent gap means a relevant "
        "management aspect was never considered.",
    ),
    "R2": (
        Severity.ERROR,
        "provided cells need a provider",
        "A cell with status provided claims its content follows from another "
        "aspect, so at least one provides edge must point at it.",
    ),
    "R3": (
        Severity.ERROR,
        "providers must be settled",
        "The source of a provides edge must itself be described or denied. A "
        "denial can provide: ruling an aspect out removes the need to manage "
        "everything that hangs on it.",
    ),
    "R4": (
        Severity.OPEN,
        "open cells are unanswered",
        "Open cells mark aspects the team cannot answer yet (question marks, "
        "red coloring). They do not fail the default verdict, but strict "
        "mode reports the protocol as incomplete until they are resolved.",
    ),
    "R5": (
        Severity.ERROR,
        "references must resolve",
        "Every definition reference in a cell must name an existing numbered "
        "item of the management definition.",
    ),
    "R6": (
        Severity.WARNING,
        "definition items must be needed",
        "The definition may only contain parts the key aspects actually use; "
        "an item no cell references is surplus and should be dropped.",
    ),
    "R7b": (
        Severity.WARNING,
        "groups model shared descriptions",
        "A description group exists to show that several cells are answered "
        "the same way; a group used by fewer than two cells should be "
        "inlined as plain text.",
    ),
    "R8": (
        Severity.ERROR,
        "meta information must be complete",
        "Name, version, date, filler, and the three party descriptions give "
        "the context that makes the grid readable; none may stay empty.",
    ),
    "R9": (
        Severity.ERROR,
        "work-package flags must match the grid",
        "If the team keeps a work package, its handover row is crossed "
        "(nothing to prepare for others); if it hands the package over, the "
        "row must be worked, not crossed.",
    ),
    "R10": (
        Severity.ERROR,
        "demands need an answerable target",
        "A demanded aspect must exist in the managed grid; demanding a "
        "crossed cell asks for knowledge the protocol declares out of scope.",
    ),
    "R10b": (
        Severity.OPEN,
        "demanding an open cell stays open",
        "Needing knowledge that is itself unanswered is legal but leaves the "
        "demanding aspect unresolved, so it is surfaced as open too.",
    ),
    "R11": (
        Severity.ERROR,
        "provides edges must be acyclic",
        "A cell cannot transitively provide itself; circular provisioning "
        "settles nothing.",
    ),
    "R11b": (
        Severity.WARNING,
        "circular demand chains",
        "Demands may form cycles without breaking the protocol, but a "
        "circular knowledge flow deserves a second look.",
    ),
    "R12": (
        Severity.ERROR,
        "crossed cells join no relation",
        "Crossed cells are outside the managed scope and can neither provide "
        "nor demand anything.",
    ),
}


def explain(rule: str) -> str:
    """Human-readable description of a rule for CLI and UI help."""
    if rule not in _RULES:
        raise KeyError(f"unknown rule {rule!r}")
    severity, summary, rationale = _RULES[rule]
    return f"{rule} ({severity.value}): {summary}. {rationale}"


def rule_ids() -> tuple[str, ...]:
    return tuple(_RULES)


def rule_severity(rule: str) -> Severity:
    return _RULES[rule][0]


def rule_summary(rule: str) -> str:
    return _RULES[rule][1]


def _cycles(relations: list[Relation]) -> list[list[CellId]]:
    """Strongly connected components with more than one node, sorted by
    their smallest member; each is returned in canonical cell order."""
    adjacency: dict[CellId, list[CellId]] = {}
    for rel in relations:
        adjacency.setdefault(rel.source, []).append(rel.target)
        adjacency.setdefault(rel.target, [])
    index: dict[CellId, int] = {}
    lowlink: dict[CellId, int] = {}
    on_stack: set[CellId] = set()
    stack: list[CellId] = []
    counter = [0]
    components: list[list[CellId]] = []

    def strongconnect(node: CellId) -> None:
        index[node] = lowlink[node] = counter[0]
        counter[0] += 1
        stack.append(node)
        on_stack.add(node)
        for succ in adjacency[node]:
            if succ not in index:
                strongconnect(succ)
                lowlink[node] = min(lowlink[node], lowlink[succ])
            elif succ in on_stack:
                lowlink[node] = min(lowlink[node], index[succ])
        if lowlink[node] == index[node]:
            component = []
            while True:
                member = stack.pop()
                on_stack.discard(member)
                component.append(member)
                if member == node:
                    break
            if len(component) > 1:
                components.append(sorted(component, key=lambda c: c.order))

    for node in sorted(adjacency, key=lambda c: c.order):
        if node not in index:
            strongconnect(node)
    components.sort(key=lambda comp: comp[0].order)
    return components


def validate(protocol: Protocol) -> ValidationReport:
    """Apply all rules to a normalized protocol; always returns a report."""
    diagnostics: list[Diagnostic] = []

    def emit(rule: str, location: Location, message: str) -> None:
        diagnostics.append(
            Diagnostic(rule=rule, severity=rule_severity(rule), location=location,
                       message=message)
        )

    provides = [r for r in protocol.relations if r.kind is RelationKind.PROVIDES]
    demands = [r for r in protocol.relations if r.kind is RelationKind.DEMANDS]
    provided_targets = {r.target for r in provides}

    definition_numbers = protocol.definition_numbers()
    referencing: dict[int, list[CellId]] = {n: [] for n in definition_numbers}
    group_users: dict[str, list[CellId]] = {g.id: [] for g in protocol.groups}

    for cell_id in ALL_CELL_IDS:
        state = protocol.state(cell_id)

        # R1: every non-crossed cell answered
        if state.status is None:
            emit("R1", Location.cell(cell_id), "aspect is not answered")

        # R2: provided cells have a provider
        if state.status is CellStatus.PROVIDED and cell_id not in provided_targets:
            emit(
                "R2",
                Location.cell(cell_id),
                "status is provided but no provides edge points here",
            )

        # R4: open cells surfaced
        if state.status is CellStatus.OPEN:
            emit("R4", Location.cell(cell_id), "aspect is open, no answer yet")

        # R5 bookkeeping and check
        missing = [n for n in state.refs if n not in definition_numbers]
        if missing:
            emit(
                "R5",
                Location.cell(cell_id),
                "references missing definition item(s) "
                + ", ".join(str(n) for n in missing),
            )
        for n in state.refs:
            if n in referencing:
                referencing[n].append(cell_id)
        if state.group is not None and state.group in group_users:
            group_users[state.group].append(cell_id)

    # R3: provider validity
    valid_source = (CellStatus.DESCRIBED, CellStatus.DENIED)
    for index, relation in enumerate(protocol.relations):
        if relation.kind is not RelationKind.PROVIDES:
            continue
        status = protocol.state(relation.source).status
        if status not in valid_source:
            emit(
                "R3",
                Location.relation(index),
                f"provides source {relation.source} must be described or "
                f"denied, not {status.value if status else 'unset'}",
            )

    # R6: definition minimality
    for number in sorted(definition_numbers):
        if not referencing[number]:
            emit(
                "R6",
                Location.definition(number),
                "definition item is never referenced by a cell",
            )

    # R7b: group usage
    for group in protocol.groups:
        users = group_users[group.id]
        if len(users) < 2:
            emit(
                "R7b",
                Location.group(group.id),
                f"group is used by {len(users)} cell(s); a shared "
                f"description needs at least two",
            )

    # R8: meta completeness
    for field in _META_FIELD_ORDER:
        value = getattr(protocol.meta, field)
        if value is None or value == "":
            emit("R8", Location.meta(field), "meta field is empty")

    # R9: work-package consistency
    for row in HANDOVER_ROWS:
        responsible = protocol.work_packages.responsible_for(row)
        for cell_id in (c for c in ALL_CELL_IDS if c.row is row):
            crossed = protocol.state(cell_id).status is CellStatus.CROSSED
            if responsible and not crossed:
                emit(
                    "R9",
                    Location.cell(cell_id),
                    "the team keeps this work package; the cell must be crossed",
                )
            if not responsible and crossed:
                emit(
                    "R9",
                    Location.cell(cell_id),
                    "the work package is handed over; the cell must not be crossed",
                )

    # R10/R10b: demand targets
    for index, relation in enumerate(protocol.relations):
        if relation.kind is not RelationKind.DEMANDS:
            continue
        target_status = protocol.state(relation.target).status
        if target_status is CellStatus.CROSSED:
            emit(
                "R10",
                Location.relation(index),
                f"demanded cell {relation.target} is crossed",
            )
        elif target_status is CellStatus.OPEN:
            emit(
                "R10b",
                Location.cell(relation.source),
                f"demanded cell {relation.target} is still open",
            )

    # R11/R11b: cycles
    for component in _cycles(provides):
        emit(
            "R11",
            Location.cell(component[0]),
            "provides cycle through " + " -> ".join(str(c) for c in component),
        )
    for component in _cycles(demands):
        emit(
            "R11b",
            Location.cell(component[0]),
            "demands cycle through " + " -> ".join(str(c) for c in component),
        )

    # R12: crossed cells join no relation
    for index, relation in enumerate(protocol.relations):
        for endpoint in (relation.source, relation.target):
            if protocol.state(endpoint).status is CellStatus.CROSSED:
                emit(
                    "R12",
                    Location.relation(index),
                    f"crossed cell {endpoint} participates in a relation",
                )

    diagnostics.sort(key=lambda d: d.sort_key)
    return ValidationReport(diagnostics=tuple(diagnostics))
