"""Semantic comparison of two protocol versions.

The diff is field-level: one entry per changed field, definition items
matched by number (renumbering therefore reads as remove plus add).  For
every removed or edited definition item the diff also lists the impact: all
cells of the old protocol whose references include that item, so a team
updating the protocol sees which aspects the change touches.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Optional

from .model import (
    ALL_CELL_IDS,
    CellId,
    CellState,
    DefinitionItem,
    DescriptionGroup,
    Protocol,
    Relation,
)

_CELL_FIELDS = ("status", "text", "group", "refs")
_WP_FIELDS = ("development", "maintenance", "improvement")
_META_FIELDS = (
    "name",
    "version",
    "date",
    "filler",
    "our_team",
    "cooperating_teams",
    "externals",
)


@dataclass(frozen=True)
class FieldChange:
    """One changed scalar field: a meta entry, a flag, or a cell field."""

    field: str
    old: Any
    new: Any


@dataclass(frozen=True)
class CellChange:
    cell: CellId
    field: str
    old: Any
    new: Any


@dataclass(frozen=True)
class ItemEdit:
    number: int
    old_text: str
    new_text: str


@dataclass(frozen=True)
class GroupEdit:
    id: str
    old_text: str
    new_text: str


@dataclass(frozen=True)
class ImpactEntry:
    """Cells of the old protocol referencing a removed or edited item."""

    number: int
    cells: tuple[CellId, ...]


@dataclass(frozen=True)
class ProtocolDiff:
    meta_changes: tuple[FieldChange, ...] = ()
    workpackage_changes: tuple[FieldChange, ...] = ()
    definition_added: tuple[DefinitionItem, ...] = ()
    definition_removed: tuple[DefinitionItem, ...] = ()
    definition_changed: tuple[ItemEdit, ...] = ()
    group_added: tuple[DescriptionGroup, ...] = ()
    group_removed: tuple[DescriptionGroup, ...] = ()
    group_changed: tuple[GroupEdit, ...] = ()
    cell_changes: tuple[CellChange, ...] = ()
    relations_added: tuple[Relation, ...] = ()
    relations_removed: tuple[Relation, ...] = ()
    impact: tuple[ImpactEntry, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (
            self.meta_changes
            or self.workpackage_changes
            or self.definition_added
            or self.definition_removed
            or self.definition_changed
            or self.group_added
            or self.group_removed
            or self.group_changed
            or self.cell_changes
            or self.relations_added
            or self.relations_removed
        )

    @property
    def change_count(self) -> int:
        """Number of change entries (the impact list is derived, not a
        change of its own)."""
        return (
            len(self.meta_changes)
            + len(self.workpackage_changes)
            + len(self.definition_added)
            + len(self.definition_removed)
            + len(self.definition_changed)
            + len(self.group_added)
            + len(self.group_removed)
            + len(self.group_changed)
            + len(self.cell_changes)
            + len(self.relations_added)
            + len(self.relations_removed)
        )


def diff(old: Protocol, new: Protocol) -> ProtocolDiff:
    """Complete, minimal change set between two normalized protocols."""
    meta_changes = tuple(
        FieldChange(field, getattr(old.meta, field), getattr(new.meta, field))
        for field in _META_FIELDS
        if getattr(old.meta, field) != getattr(new.meta, field)
    )
    workpackage_changes = tuple(
        FieldChange(
            field,
            getattr(old.work_packages, field),
            getattr(new.work_packages, field),
        )
        for field in _WP_FIELDS
        if getattr(old.work_packages, field) != getattr(new.work_packages, field)
    )

    old_items = {item.number: item for item in old.definition}
    new_items = {item.number: item for item in new.definition}
    definition_added = tuple(
        new_items[n] for n in sorted(new_items) if n not in old_items
    )
    definition_removed = tuple(
        old_items[n] for n in sorted(old_items) if n not in new_items
    )
    definition_changed = tuple(
        ItemEdit(n, old_items[n].text, new_items[n].text)
        for n in sorted(old_items)
        if n in new_items and old_items[n].text != new_items[n].text
    )

    old_groups = {g.id: g for g in old.groups}
    new_groups = {g.id: g for g in new.groups}
    group_added = tuple(
        new_groups[g] for g in sorted(new_groups) if g not in old_groups
    )
    group_removed = tuple(
        old_groups[g] for g in sorted(old_groups) if g not in new_groups
    )
    group_changed = tuple(
        GroupEdit(g, old_groups[g].text, new_groups[g].text)
        for g in sorted(old_groups)
        if g in new_groups and old_groups[g].text != new_groups[g].text
    )

    cell_changes: list[CellChange] = []
    for cell_id in ALL_CELL_IDS:
        old_state = old.state(cell_id)
        new_state = new.state(cell_id)
        if old_state == new_state:
            continue
        for field in _CELL_FIELDS:
            if getattr(old_state, field) != getattr(new_state, field):
                cell_changes.append(
                    CellChange(
                        cell_id,
                        field,
                        getattr(old_state, field),
                        getattr(new_state, field),
                    )
                )

    old_relations = set(old.relations)
    new_relations = set(new.relations)
    relations_added = tuple(
        sorted(new_relations - old_relations, key=lambda r: r.sort_key)
    )
    relations_removed = tuple(
        sorted(old_relations - new_relations, key=lambda r: r.sort_key)
    )

    touched = sorted(
        {item.number for item in definition_removed}
        | {edit.number for edit in definition_changed}
    )
    impact = tuple(
        ImpactEntry(
            number,
            tuple(
                cell_id
                for cell_id in ALL_CELL_IDS
                if number in old.state(cell_id).refs
            ),
        )
        for number in touched
    )

    return ProtocolDiff(
        meta_changes=meta_changes,
        workpackage_changes=workpackage_changes,
        definition_added=definition_added,
        definition_removed=definition_removed,
        definition_changed=definition_changed,
        group_added=group_added,
        group_removed=group_removed,
        group_changed=group_changed,
        cell_changes=tuple(cell_changes),
        relations_added=relations_added,
        relations_removed=relations_removed,
        impact=impact,
    )


def _show(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, tuple):
        return "[" + ", ".join(str(v) for v in value) + "]"
    if isinstance(value, bool):
        return "responsible" if value else "handover"
    if hasattr(value, "value"):
        return value.value
    return str(value)


def render_diff(delta: ProtocolDiff) -> str:
    """Stable line-oriented report of a diff; 'no changes' when empty."""
    if delta.is_empty:
        return "no changes\n"
    lines: list[str] = []
    for change in delta.meta_changes:
        lines.append(
            f"meta {change.field}: {_show(change.old)} -> {_show(change.new)}"
        )
    for change in delta.workpackage_changes:
        lines.append(
            f"workpackage {change.field}: {_show(change.old)} -> {_show(change.new)}"
        )
    for item in delta.definition_removed:
        lines.append(f"definition removed {item.number}: {_show(item.text)}")
    for edit in delta.definition_changed:
        lines.append(
            f"definition changed {edit.number}: {_show(edit.old_text)} -> "
            f"{_show(edit.new_text)}"
        )
    for item in delta.definition_added:
        lines.append(f"definition added {item.number}: {_show(item.text)}")
    for group in delta.group_removed:
        lines.append(f"group removed {group.id}: {_show(group.text)}")
    for edit in delta.group_changed:
        lines.append(
            f"group changed {edit.id}: {_show(edit.old_text)} -> "
            f"{_show(edit.new_text)}"
        )
    for group in delta.group_added:
        lines.append(f"group added {group.id}: {_show(group.text)}")
    for change in delta.cell_changes:
        lines.append(
            f"cell {change.cell} {change.field}: {_show(change.old)} -> "
            f"{_show(change.new)}"
        )
    for relation in delta.relations_removed:
        lines.append(
            f"relation removed: {relation.kind.value} {relation.source} -> "
            f"{relation.target}"
        )
    for relation in delta.relations_added:
        lines.append(
            f"relation added: {relation.kind.value} {relation.source} -> "
            f"{relation.target}"
        )
    for entry in delta.impact:
        for cell_id in entry.cells:
            lines.append(f"impact definition {entry.number}: {cell_id}")
    return "".join(line + "\n" for line in lines)
