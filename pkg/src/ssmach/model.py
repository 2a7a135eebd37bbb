"""In-memory model of a ssMACH protocol.

A protocol consists of three parts: a numbered definition of the management
process, meta information about the team and the filler, and a fixed 12x5
grid of key-aspect cells.  Cells can share descriptions (groups), and cells
can be connected by directed relations:

  provides  the source cell settles the target cell; the target needs no
            active management of its own (status ``provided``).
  demands   the source cell needs the target cell; knowledge has to be
            transferred or transformed along the edge.

Protocol values are immutable after construction and all operations in this
module are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Mapping, Optional


class PartyGroup(str, Enum):
    """The three groups of parties a protocol distinguishes."""

    OUR_TEAM = "our-team"
    COOPERATING_TEAMS = "cooperating-teams"
    EXTERNALS = "externals"


class AspectRow(str, Enum):
    """The twelve rows of the key-aspect grid, in canonical order.

    The three handover rows cover preparing other teams to take over a work
    package.  The four product aspects (product properties, interfaces,
    dependencies, responsibilities) each exist in an inside variant
    (cooperating teams) and an outside variant (externals).  External
    artifacts are a single row: a copied artifact needs the same management
    no matter which party it came from.
    """

    HANDOVER_DEVELOPMENT = "handover_development"
    HANDOVER_MAINTENANCE = "handover_maintenance"
    HANDOVER_IMPROVEMENT = "handover_improvement"
    INSIDE_PRODUCT_PROPERTIES = "inside_product_properties"
    INSIDE_INTERFACES = "inside_interfaces"
    INSIDE_DEPENDENCIES = "inside_dependencies"
    INSIDE_RESPONSIBILITIES = "inside_responsibilities"
    OUTSIDE_PRODUCT_PROPERTIES = "outside_product_properties"
    OUTSIDE_INTERFACES = "outside_interfaces"
    OUTSIDE_DEPENDENCIES = "outside_dependencies"
    OUTSIDE_RESPONSIBILITIES = "outside_responsibilities"
    EXTERNAL_ARTIFACTS = "external_artifacts"


class AspectColumn(str, Enum):
    """The five knowledge-management columns, in canonical order."""

    ROLES = "roles"
    PROCESS_KNOWLEDGE = "process_knowledge"
    PRODUCT_KNOWLEDGE = "product_knowledge"
    DEMANDED_KNOWLEDGE = "demanded_knowledge"
    PROCESS_INFORMATION = "process_information"


class CellStatus(str, Enum):
    """How one aspect cell is answered.

    ``crossed`` is legal only in handover rows.  ``open`` marks a cell the
    team cannot answer yet (rendered red with a question mark).
    """

    DESCRIBED = "described"
    DENIED = "denied"
    PROVIDED = "provided"
    OPEN = "open"
    CROSSED = "crossed"


class RelationKind(str, Enum):
    PROVIDES = "provides"
    DEMANDS = "demands"


HANDOVER_ROWS: tuple[AspectRow, ...] = (
    AspectRow.HANDOVER_DEVELOPMENT,
    AspectRow.HANDOVER_MAINTENANCE,
    AspectRow.HANDOVER_IMPROVEMENT,
)

_ROW_INDEX = {row: i for i, row in enumerate(AspectRow)}
_COLUMN_INDEX = {col: i for i, col in enumerate(AspectColumn)}
_KIND_INDEX = {RelationKind.PROVIDES: 0, RelationKind.DEMANDS: 1}


@dataclass(frozen=True)
class CellId:
    """One (row, column) slot of the grid; 60 distinct values."""

    row: AspectRow
    column: AspectColumn

    @property
    def order(self) -> int:
        """Row-major position used for canonical ordering."""
        return _ROW_INDEX[self.row] * len(AspectColumn) + _COLUMN_INDEX[self.column]

    def __str__(self) -> str:
        return f"{self.row.value}.{self.column.value}"

    @classmethod
    def of(cls, row: str, column: str) -> "CellId":
        return cls(AspectRow(row), AspectColumn(column))


ALL_CELL_IDS: tuple[CellId, ...] = tuple(
    CellId(row, col) for row in AspectRow for col in AspectColumn
)


@dataclass(frozen=True)
class MetaInfo:
    """Context of a protocol: who fills it for which management process."""

    name: str = ""
    version: str = ""
    date: Optional[date] = None
    filler: str = ""
    our_team: str = ""
    cooperating_teams: str = ""
    externals: str = ""


@dataclass(frozen=True)
class DefinitionItem:
    """One numbered bullet point of the management definition."""

    number: int
    text: str


@dataclass(frozen=True)
class WorkPackages:
    """Responsibility flags: True means our team keeps the work package,
    False means the team prepares to hand it over."""

    development: bool
    maintenance: bool
    improvement: bool

    def responsible_for(self, row: AspectRow) -> bool:
        return {
            AspectRow.HANDOVER_DEVELOPMENT: self.development,
            AspectRow.HANDOVER_MAINTENANCE: self.maintenance,
            AspectRow.HANDOVER_IMPROVEMENT: self.improvement,
        }[row]


@dataclass(frozen=True)
class DescriptionGroup:
    """A shared description used by several cells (same left-part color)."""

    id: str
    text: str


@dataclass(frozen=True)
class CellState:
    """Content of one grid cell.

    ``status=None`` means the cell is not answered yet (unset).  Described
    cells carry either free text or a group reference; provided cells carry
    no local text because their content lives at the providing cell; crossed
    cells carry nothing at all.
    """

    status: Optional[CellStatus] = None
    text: Optional[str] = None
    group: Optional[str] = None
    refs: tuple[int, ...] = ()

    @property
    def is_empty(self) -> bool:
        return (
            self.status is None
            and self.text is None
            and self.group is None
            and not self.refs
        )


UNSET = CellState()
CROSSED = CellState(status=CellStatus.CROSSED)


@dataclass(frozen=True)
class Relation:
    """A directed edge between two cells.

    provides: ``source`` supplies ``target`` (the peak-end sits on the
    provided aspect).  demands: ``source`` needs ``target`` (the round end
    sits on the needed aspect).
    """

    kind: RelationKind
    source: CellId
    target: CellId

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (_KIND_INDEX[self.kind], self.source.order, self.target.order)


@dataclass(frozen=True)
class Protocol:
    """One complete ssMACH protocol."""

    meta: MetaInfo
    definition: tuple[DefinitionItem, ...]
    work_packages: WorkPackages
    groups: tuple[DescriptionGroup, ...] = ()
    cells: Mapping[CellId, CellState] = field(default_factory=dict)
    relations: tuple[Relation, ...] = ()

    def state(self, cell: CellId) -> CellState:
        return self.cells.get(cell, UNSET)

    def group_by_id(self, group_id: str) -> Optional[DescriptionGroup]:
        for group in self.groups:
            if group.id == group_id:
                return group
        return None

    def definition_numbers(self) -> frozenset[int]:
        return frozenset(item.number for item in self.definition)


class NormalizationError(ValueError):
    """A handover row the team is responsible for carries explicit
    non-crossed content."""

    def __init__(self, cell: CellId, message: str):
        super().__init__(message)
        self.cell = cell


def normalize(protocol: Protocol) -> Protocol:
    """Return the canonical form of a protocol.

    After normalization every one of the 60 cells has exactly one state,
    handover rows of work packages the team is responsible for are crossed,
    cells are stored in row-major order, groups are sorted by id and
    relations are sorted and de-duplicated.  Idempotent.

    Raises :class:`NormalizationError` if a handover cell carries explicit
    non-crossed content although the team keeps the work package (the row
    must be crossed, there is nothing to hand over).
    """
    cells: dict[CellId, CellState] = {}
    for cell_id in ALL_CELL_IDS:
        state = protocol.cells.get(cell_id, UNSET)
        if cell_id.row in HANDOVER_ROWS and protocol.work_packages.responsible_for(
            cell_id.row
        ):
            if state.is_empty or state == CROSSED:
                cells[cell_id] = CROSSED
            else:
                raise NormalizationError(
                    cell_id,
                    f"{cell_id} carries content, but the team keeps this work "
                    f"package; the row must stay crossed",
                )
        else:
            cells[cell_id] = state
    return replace(
        protocol,
        definition=tuple(sorted(protocol.definition, key=lambda d: d.number)),
        groups=tuple(sorted(protocol.groups, key=lambda g: g.id)),
        cells=cells,
        relations=tuple(
            sorted(set(protocol.relations), key=lambda r: r.sort_key)
        ),
    )


class RightPartMark(str, Enum):
    """Color class of a cell's right part (the status-and-references part)."""

    ACTIVE = "active"
    NO_ACTIVE_MANAGEMENT = "no-active-management"
    PROVIDED = "provided"
    OPEN = "open"
    CROSSED = "crossed"


_RIGHT_PART_BY_STATUS = {
    None: RightPartMark.ACTIVE,
    CellStatus.DESCRIBED: RightPartMark.ACTIVE,
    CellStatus.DENIED: RightPartMark.NO_ACTIVE_MANAGEMENT,
    CellStatus.PROVIDED: RightPartMark.PROVIDED,
    CellStatus.OPEN: RightPartMark.OPEN,
    CellStatus.CROSSED: RightPartMark.CROSSED,
}


@dataclass(frozen=True)
class DerivedMarks:
    """Marks computed from the relations, never hand-set.

    ``emphasized`` (violet) holds every cell that is used or required by
    another one: targets of demands edges plus sources of provides edges.
    """

    emphasized: frozenset[CellId]
    right_part: Mapping[CellId, RightPartMark]


def derive_marks(protocol: Protocol) -> DerivedMarks:
    """Compute the derived coloring of a normalized protocol."""
    emphasized = frozenset(
        rel.target if rel.kind is RelationKind.DEMANDS else rel.source
        for rel in protocol.relations
    )
    right_part = {
        cell_id: _RIGHT_PART_BY_STATUS[protocol.state(cell_id).status]
        for cell_id in ALL_CELL_IDS
    }
    return DerivedMarks(emphasized=emphasized, right_part=right_part)


def trace_knowledge_flow(
    protocol: Protocol, cell: CellId
) -> tuple[tuple[CellId, ...], ...]:
    """All maximal demand chains starting at ``cell``.

    Chains follow demands edges from source to target.  A chain branches at
    cells with several outgoing demands and stops before it would visit a
    cell a second time, so cycles are walked at most once.
    """
    successors: dict[CellId, list[CellId]] = {}
    for rel in protocol.relations:
        if rel.kind is RelationKind.DEMANDS:
            successors.setdefault(rel.source, []).append(rel.target)
    for targets in successors.values():
        targets.sort(key=lambda c: c.order)

    chains: list[tuple[CellId, ...]] = []

    def walk(path: list[CellId]) -> None:
        extensions = [
            nxt for nxt in successors.get(path[-1], []) if nxt not in path
        ]
        if not extensions:
            chains.append(tuple(path))
            return
        for nxt in extensions:
            walk(path + [nxt])

    walk([cell])
    return tuple(chains)
