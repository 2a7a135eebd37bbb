"""Deterministic HTML and SVG rendering of a protocol grid.

Both renderers consume a :class:`RenderPlan` and share one pixel geometry,
so the HTML board and the SVG emit the same layout byte for byte across
runs.  Coloring follows the protocol conventions: the right part of a cell
shows its management status (light green for denied aspects, darker green
for provided ones, red for open ones, grey for crossed ones) plus the
definition references, the left part carries the description or its group
color, a violet outline emphasizes cells other aspects use or require, and
relations are drawn as arrows whose end marker tells provides (peak) from
demands (round end).
"""

from __future__ import annotations

import html
import textwrap
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    ALL_CELL_IDS,
    AspectColumn,
    AspectRow,
    CellId,
    CellStatus,
    DerivedMarks,
    Protocol,
    RelationKind,
    RightPartMark,
)


@dataclass(frozen=True)
class Palette:
    """Concrete colors for the status vocabulary plus a qualitative ramp for
    description groups, assigned in first-use order."""

    no_active_management: str = "#C8E6C9"
    provided: str = "#66BB6A"
    emphasized: str = "#B39DDB"
    open: str = "#EF5350"
    crossed: str = "#BDBDBD"
    group_colors: tuple[str, ...] = (
        "#FFF59D",
        "#FFCC80",
        "#F8BBD0",
        "#B3E5FC",
        "#C5CAE9",
        "#E6EE9C",
        "#80DEEA",
        "#FFAB91",
        "#CFD8DC",
        "#FFE0B2",
        "#D7CCC8",
        "#DCE775",
    )


PALETTE = Palette()

_RIGHT_FILL = {
    RightPartMark.ACTIVE: None,
    RightPartMark.NO_ACTIVE_MANAGEMENT: PALETTE.no_active_management,
    RightPartMark.PROVIDED: PALETTE.provided,
    RightPartMark.OPEN: PALETTE.open,
    RightPartMark.CROSSED: PALETTE.crossed,
}


@dataclass(frozen=True)
class Geometry:
    """Pixel geometry of the 12x5 board, shared by HTML and SVG."""

    row_label_w: int = 170
    col_label_h: int = 44
    cell_w: int = 168
    cell_h: int = 58
    right_w: int = 38
    col_gap: int = 14
    row_gap: int = 8

    def cell_x(self, col: int) -> int:
        return self.row_label_w + self.col_gap + col * (self.cell_w + self.col_gap)

    def cell_y(self, row: int) -> int:
        return self.col_label_h + self.row_gap + row * (self.cell_h + self.row_gap)

    @property
    def width(self) -> int:
        return self.cell_x(len(AspectColumn) - 1) + self.cell_w + self.col_gap

    @property
    def height(self) -> int:
        return self.cell_y(len(AspectRow) - 1) + self.cell_h + self.row_gap

    def anchor(self, cell: CellId) -> tuple[int, int]:
        """Arrow anchor: the center of the cell's right part."""
        row = list(AspectRow).index(cell.row)
        col = list(AspectColumn).index(cell.column)
        x = self.cell_x(col) + self.cell_w - self.right_w // 2
        y = self.cell_y(row) + self.cell_h // 2
        return x, y


GEOMETRY = Geometry()


@dataclass(frozen=True)
class CellPlan:
    cell: CellId
    status: Optional[CellStatus]
    text: Optional[str]
    group: Optional[str]
    refs: tuple[int, ...]
    left_fill: Optional[str]
    right_fill: Optional[str]
    emphasized: bool


@dataclass(frozen=True)
class Arrow:
    kind: RelationKind
    source: CellId
    target: CellId
    points: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RenderPlan:
    protocol: Protocol
    cells: tuple[CellPlan, ...]
    arrows: tuple[Arrow, ...]
    group_legend: tuple[tuple[str, str, str], ...]  # (id, text, color)
    geometry: Geometry = GEOMETRY
    palette: Palette = PALETTE


def _label(name: str) -> str:
    return name.replace("_", " ").capitalize()


def _arrow_points(
    geometry: Geometry, source: CellId, target: CellId, shift: int
) -> tuple[tuple[int, int], ...]:
    """Orthogonal route from source anchor to target anchor; ``shift``
    staggers parallel arrows leaving the same cell."""
    sx, sy = geometry.anchor(source)
    tx, ty = geometry.anchor(target)
    if sy == ty:
        return ((sx, sy + shift), (tx, ty + shift))
    if sx == tx:
        return ((sx + shift, sy), (tx + shift, ty))
    return ((sx, sy + shift), (tx, sy + shift), (tx, ty))


def plan(protocol: Protocol, marks: DerivedMarks) -> RenderPlan:
    """Build the render plan of a normalized protocol plus derived marks.

    Group colors are assigned in first-use order over the row-major grid;
    relations touching a crossed cell get no arrow.
    """
    group_text = {g.id: g.text for g in protocol.groups}
    group_color: dict[str, str] = {}
    for cell_id in ALL_CELL_IDS:
        group = protocol.state(cell_id).group
        if group is not None and group in group_text and group not in group_color:
            group_color[group] = PALETTE.group_colors[
                len(group_color) % len(PALETTE.group_colors)
            ]
    for group in protocol.groups:  # unused groups still get legend colors
        if group.id not in group_color:
            group_color[group.id] = PALETTE.group_colors[
                len(group_color) % len(PALETTE.group_colors)
            ]

    cells = []
    for cell_id in ALL_CELL_IDS:
        state = protocol.state(cell_id)
        left_fill = group_color.get(state.group) if state.group else None
        cells.append(
            CellPlan(
                cell=cell_id,
                status=state.status,
                text=state.text if state.text is not None else group_text.get(state.group or ""),
                group=state.group,
                refs=state.refs,
                left_fill=left_fill,
                right_fill=_RIGHT_FILL[marks.right_part[cell_id]],
                emphasized=cell_id in marks.emphasized,
            )
        )

    crossed = {
        cell_id
        for cell_id in ALL_CELL_IDS
        if protocol.state(cell_id).status is CellStatus.CROSSED
    }
    outgoing: dict[CellId, list[int]] = {}
    drawable = [
        r
        for r in protocol.relations
        if r.source not in crossed and r.target not in crossed
    ]
    for index, relation in enumerate(drawable):
        outgoing.setdefault(relation.source, []).append(index)
    arrows = []
    for index, relation in enumerate(drawable):
        siblings = outgoing[relation.source]
        shift = 6 * siblings.index(index) - 3 * (len(siblings) - 1)
        arrows.append(
            Arrow(
                kind=relation.kind,
                source=relation.source,
                target=relation.target,
                points=_arrow_points(GEOMETRY, relation.source, relation.target, shift),
            )
        )

    legend = tuple(
        (group.id, group.text, group_color[group.id]) for group in protocol.groups
    )
    return RenderPlan(
        protocol=protocol,
        cells=tuple(cells),
        arrows=tuple(arrows),
        group_legend=legend,
    )


def _esc(text: str) -> str:
    return html.escape(text, quote=True)


def _refs_text(refs: tuple[int, ...]) -> str:
    return ",".join(str(n) for n in refs)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_SVG_FONT = "Helvetica, Arial, sans-serif"


def _svg_text(x, y, content, size=10, anchor="start", weight=None, fill="#263238"):
    extra = f' font-weight="{weight}"' if weight else ""
    return (
        f'<text x="{x}" y="{y}" font-family="{_SVG_FONT}" font-size="{size}"'
        f' text-anchor="{anchor}" fill="{fill}"{extra}>{content}</text>'
    )


def _wrap(text: str, width: int, max_lines: int) -> list[str]:
    lines = []
    for raw_line in text.split("\n"):
        lines.extend(textwrap.wrap(raw_line, width=width) or [""])
    if len(lines) > max_lines:
        lines = lines[: max_lines - 1] + [lines[max_lines - 1][: width - 3] + "..."]
    return lines


def render_svg(render_plan: RenderPlan) -> str:
    """Standalone SVG 1.1 document: meta, grid with arrows, definition,
    group legend.  Byte-deterministic for a given plan."""
    geometry = render_plan.geometry
    protocol = render_plan.protocol
    meta = protocol.meta

    meta_lines = [
        f"Version {meta.version}, {meta.date.isoformat() if meta.date else 'no date'},"
        f" filled by {meta.filler}",
        f"Our team: {meta.our_team}",
        f"Cooperating teams: {meta.cooperating_teams}",
        f"Externals: {meta.externals}",
    ]
    wrapped_meta: list[str] = []
    for line in meta_lines:
        wrapped_meta.extend(_wrap(line, 150, 4))

    definition_lines: list[str] = []
    for item in protocol.definition:
        wrapped = _wrap(f"{item.number}. {item.text}", 150, 4)
        definition_lines.extend(wrapped)

    wp = protocol.work_packages
    wp_line = ", ".join(
        f"{name}: {'responsible' if getattr(wp, name) else 'handover'}"
        for name in ("development", "maintenance", "improvement")
    )

    header_h = 46 + 13 * len(wrapped_meta) + 18
    footer_lines = 2 + len(definition_lines) + (2 + 2 * len(render_plan.group_legend) if render_plan.group_legend else 0)
    grid_top = header_h
    total_w = geometry.width + 24
    total_h = header_h + geometry.height + 30 + 13 * footer_lines + 24

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}">'
    )
    kinds = {arrow.kind for arrow in render_plan.arrows}
    if kinds:
        out.append("<defs>")
        if RelationKind.PROVIDES in kinds:
            out.append(
                '<marker id="provides-peak" viewBox="0 0 10 10" refX="9" refY="5" '
                'markerWidth="7" markerHeight="7" orient="auto-start-reverse">'
                '<path d="M 0 0 L 10 5 L 0 10 z" fill="#37474F"/></marker>'
            )
        if RelationKind.DEMANDS in kinds:
            out.append(
                '<marker id="demands-round" viewBox="0 0 10 10" refX="5" refY="5" '
                'markerWidth="7" markerHeight="7">'
                '<circle cx="5" cy="5" r="4" fill="#37474F"/></marker>'
            )
        out.append("</defs>")
    out.append(f'<rect x="0" y="0" width="{total_w}" height="{total_h}" fill="#FFFFFF"/>')

    out.append(_svg_text(12, 24, _esc(meta.name), size=16, weight="bold"))
    y = 42
    for line in wrapped_meta:
        out.append(_svg_text(12, y, _esc(line), size=10))
        y += 13
    out.append(_svg_text(12, y, _esc(f"Work packages kept: {wp_line}"), size=10))

    out.append(f'<g transform="translate(12,{grid_top})">')
    rows = list(AspectRow)
    columns = list(AspectColumn)
    for c, column in enumerate(columns):
        out.append(
            _svg_text(
                geometry.cell_x(c) + geometry.cell_w // 2,
                geometry.col_label_h - 14,
                _esc(_label(column.value)),
                size=11,
                anchor="middle",
                weight="bold",
            )
        )
    for r, row in enumerate(rows):
        label_lines = _wrap(_label(row.value), 22, 2)
        base = geometry.cell_y(r) + geometry.cell_h // 2 - 6 * (len(label_lines) - 1) + 4
        for i, line in enumerate(label_lines):
            out.append(
                _svg_text(geometry.row_label_w - 6, base + 12 * i, _esc(line),
                          size=11, anchor="end", weight="bold")
            )

    for cell_plan in render_plan.cells:
        r = rows.index(cell_plan.cell.row)
        c = columns.index(cell_plan.cell.column)
        x, y0 = geometry.cell_x(c), geometry.cell_y(r)
        left_w = geometry.cell_w - geometry.right_w
        left_fill = cell_plan.left_fill or "#FFFFFF"
        right_fill = cell_plan.right_fill or "#FFFFFF"
        out.append(
            f'<rect x="{x}" y="{y0}" width="{left_w}" height="{geometry.cell_h}" '
            f'fill="{left_fill}" stroke="#90A4AE" stroke-width="1"/>'
        )
        out.append(
            f'<rect x="{x + left_w}" y="{y0}" width="{geometry.right_w}" '
            f'height="{geometry.cell_h}" fill="{right_fill}" stroke="#90A4AE" '
            f'stroke-width="1"/>'
        )
        if cell_plan.emphasized:
            out.append(
                f'<rect x="{x + 2}" y="{y0 + 2}" width="{geometry.cell_w - 4}" '
                f'height="{geometry.cell_h - 4}" fill="none" '
                f'stroke="{render_plan.palette.emphasized}" stroke-width="3"/>'
            )
        if cell_plan.status is CellStatus.CROSSED:
            out.append(
                f'<line x1="{x}" y1="{y0}" x2="{x + geometry.cell_w}" '
                f'y2="{y0 + geometry.cell_h}" stroke="#78909C" stroke-width="1"/>'
            )
            out.append(
                f'<line x1="{x}" y1="{y0 + geometry.cell_h}" '
                f'x2="{x + geometry.cell_w}" y2="{y0}" stroke="#78909C" '
                f'stroke-width="1"/>'
            )
        elif cell_plan.status is None:
            pass
        else:
            if cell_plan.text and cell_plan.status is not CellStatus.PROVIDED:
                for i, line in enumerate(_wrap(cell_plan.text, 27, 4)):
                    out.append(
                        _svg_text(x + 4, y0 + 13 + 12 * i, _esc(line), size=8)
                    )
        if cell_plan.refs:
            out.append(
                _svg_text(
                    x + geometry.cell_w - geometry.right_w // 2,
                    y0 + 14,
                    _esc(_refs_text(cell_plan.refs)),
                    size=9,
                    anchor="middle",
                )
            )
        if cell_plan.status is CellStatus.OPEN:
            out.append(
                _svg_text(
                    x + geometry.cell_w - geometry.right_w // 2,
                    y0 + geometry.cell_h - 12,
                    "?",
                    size=16,
                    anchor="middle",
                    weight="bold",
                    fill="#FFFFFF",
                )
            )

    for arrow in render_plan.arrows:
        marker = (
            "provides-peak" if arrow.kind is RelationKind.PROVIDES else "demands-round"
        )
        points = " ".join(f"{x},{y}" for x, y in arrow.points)
        out.append(
            f'<polyline points="{points}" fill="none" stroke="#37474F" '
            f'stroke-width="1.5" marker-end="url(#{marker})"/>'
        )
    out.append("</g>")

    y = grid_top + geometry.height + 24
    out.append(_svg_text(12, y, "Definition", size=12, weight="bold"))
    y += 16
    for line in definition_lines:
        out.append(_svg_text(12, y, _esc(line), size=10))
        y += 13
    if render_plan.group_legend:
        y += 6
        out.append(_svg_text(12, y, "Shared descriptions", size=12, weight="bold"))
        y += 16
        for group_id, text, color in render_plan.group_legend:
            out.append(
                f'<rect x="12" y="{y - 9}" width="11" height="11" fill="{color}" '
                f'stroke="#90A4AE" stroke-width="1"/>'
            )
            for i, line in enumerate(_wrap(f"{group_id}: {text}", 140, 2)):
                out.append(_svg_text(28, y + 13 * i, _esc(line), size=10))
                y += 13 if i else 0
            y += 13
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# HTML
# ---------------------------------------------------------------------------

_CSS = """
body { font-family: Helvetica, Arial, sans-serif; color: #263238;
       margin: 24px; background: #FFFFFF; }
h1 { font-size: 20px; margin-bottom: 4px; }
dl.meta { font-size: 12px; margin: 0 0 16px 0; }
dl.meta dt { font-weight: bold; float: left; clear: left; width: 130px; }
dl.meta dd { margin: 0 0 2px 138px; }
ol.definition { font-size: 12px; }
p.workpackages { font-size: 12px; }
div.board { position: relative; margin: 12px 0; }
div.board .rowlabel, div.board .collabel {
  position: absolute; font-size: 11px; font-weight: bold; }
div.board .rowlabel { text-align: right; }
div.board .collabel { text-align: center; }
div.cell { position: absolute; border: 1px solid #90A4AE; display: flex; }
div.cell .left { flex: 1 1 auto; font-size: 8px; overflow: hidden;
                 padding: 2px; }
div.cell .right { flex: 0 0 36px; font-size: 9px; text-align: center;
                  border-left: 1px solid #90A4AE; padding-top: 2px; }
div.cell.emphasized { outline: 3px solid #B39DDB; outline-offset: -4px; }
div.cell.status-crossed { background:
  linear-gradient(to top right, transparent 49%, #78909C 49%, #78909C 51%,
  transparent 51%),
  linear-gradient(to bottom right, transparent 49%, #78909C 49%, #78909C 51%,
  transparent 51%); }
div.cell .open-mark { color: #FFFFFF; font-weight: bold; font-size: 14px; }
svg.arrows { position: absolute; left: 0; top: 0; pointer-events: none; }
ul.legend { list-style: none; font-size: 12px; padding: 0; }
ul.legend span.swatch { display: inline-block; width: 11px; height: 11px;
  border: 1px solid #90A4AE; margin-right: 6px; }
""".strip()


def render_html(render_plan: RenderPlan) -> str:
    """Self-contained HTML document with machine-checkable cell attributes
    (``data-cell``, ``data-status``, ``data-refs``)."""
    geometry = render_plan.geometry
    protocol = render_plan.protocol
    meta = protocol.meta
    rows = list(AspectRow)
    columns = list(AspectColumn)

    out: list[str] = []
    out.append("<!DOCTYPE html>")
    out.append('<html lang="en">')
    out.append("<head>")
    out.append('<meta charset="utf-8"/>')
    out.append(f"<title>{_esc(meta.name)}</title>")
    out.append(f"<style>\n{_CSS}\n</style>")
    out.append("</head>")
    out.append("<body>")
    out.append(f"<h1>{_esc(meta.name)}</h1>")
    out.append('<dl class="meta">')
    for label, value in (
        ("Version", meta.version),
        ("Date", meta.date.isoformat() if meta.date else ""),
        ("Filler", meta.filler),
        ("Our team", meta.our_team),
        ("Cooperating teams", meta.cooperating_teams),
        ("Externals", meta.externals),
    ):
        out.append(f"<dt>{_esc(label)}</dt><dd>{_esc(value)}</dd>")
    out.append("</dl>")

    wp = protocol.work_packages
    wp_line = ", ".join(
        f"{name}: {'responsible' if getattr(wp, name) else 'handover'}"
        for name in ("development", "maintenance", "improvement")
    )
    out.append(f'<p class="workpackages">Work packages: {_esc(wp_line)}</p>')

    out.append(
        f'<div class="board" style="width:{geometry.width}px;'
        f'height:{geometry.height}px">'
    )
    for c, column in enumerate(columns):
        out.append(
            f'<div class="collabel" style="left:{geometry.cell_x(c)}px;top:8px;'
            f'width:{geometry.cell_w}px">{_esc(_label(column.value))}</div>'
        )
    for r, row in enumerate(rows):
        out.append(
            f'<div class="rowlabel" style="left:0;top:{geometry.cell_y(r) + 14}px;'
            f'width:{geometry.row_label_w - 8}px">{_esc(_label(row.value))}</div>'
        )
    for cell_plan in render_plan.cells:
        r = rows.index(cell_plan.cell.row)
        c = columns.index(cell_plan.cell.column)
        x, y = geometry.cell_x(c), geometry.cell_y(r)
        classes = ["cell"]
        if cell_plan.status is not None:
            classes.append(f"status-{cell_plan.status.value}")
        if cell_plan.emphasized:
            classes.append("emphasized")
        attrs = [
            f'class="{" ".join(classes)}"',
            f'style="left:{x}px;top:{y}px;width:{geometry.cell_w - 2}px;'
            f'height:{geometry.cell_h - 2}px"',
            f'data-cell="{cell_plan.cell}"',
            f'data-status="{cell_plan.status.value if cell_plan.status else ""}"',
            f'data-refs="{_refs_text(cell_plan.refs)}"',
        ]
        if cell_plan.group:
            attrs.append(f'data-group="{_esc(cell_plan.group)}"')
        if cell_plan.emphasized:
            attrs.append('data-emphasized="true"')
        left_style = (
            f' style="background:{cell_plan.left_fill}"' if cell_plan.left_fill else ""
        )
        right_style = (
            f' style="background:{cell_plan.right_fill}"'
            if cell_plan.right_fill
            else ""
        )
        left_text = ""
        if cell_plan.status not in (None, CellStatus.CROSSED, CellStatus.PROVIDED):
            left_text = _esc(cell_plan.text or "")
        right_parts = [_esc(_refs_text(cell_plan.refs))]
        if cell_plan.status is CellStatus.OPEN:
            right_parts.append('<div class="open-mark">?</div>')
        out.append(
            f'<div {" ".join(attrs)}>'
            f'<div class="left"{left_style}>{left_text}</div>'
            f'<div class="right"{right_style}>{"".join(right_parts)}</div>'
            f"</div>"
        )

    out.append(
        f'<svg class="arrows" xmlns="http://www.w3.org/2000/svg" '
        f'width="{geometry.width}" height="{geometry.height}" '
        f'viewBox="0 0 {geometry.width} {geometry.height}">'
    )
    kinds = {arrow.kind for arrow in render_plan.arrows}
    if kinds:
        out.append("<defs>")
        if RelationKind.PROVIDES in kinds:
            out.append(
                '<marker id="provides-peak" viewBox="0 0 10 10" refX="9" refY="5" '
                'markerWidth="7" markerHeight="7" orient="auto-start-reverse">'
                '<path d="M 0 0 L 10 5 L 0 10 z" fill="#37474F"/></marker>'
            )
        if RelationKind.DEMANDS in kinds:
            out.append(
                '<marker id="demands-round" viewBox="0 0 10 10" refX="5" refY="5" '
                'markerWidth="7" markerHeight="7">'
                '<circle cx="5" cy="5" r="4" fill="#37474F"/></marker>'
            )
        out.append("</defs>")
    for arrow in render_plan.arrows:
        marker = (
            "provides-peak" if arrow.kind is RelationKind.PROVIDES else "demands-round"
        )
        points = " ".join(f"{x},{y}" for x, y in arrow.points)
        out.append(
            f'<polyline points="{points}" fill="none" stroke="#37474F" '
            f'stroke-width="1.5" marker-end="url(#{marker})"/>'
        )
    out.append("</svg>")
    out.append("</div>")

    out.append("<h2>Definition</h2>")
    out.append('<ol class="definition">')
    for item in protocol.definition:
        out.append(f"<li>{_esc(item.text)}</li>")
    out.append("</ol>")

    if render_plan.group_legend:
        out.append("<h2>Shared descriptions</h2>")
        out.append('<ul class="legend">')
        for group_id, text, color in render_plan.group_legend:
            out.append(
                f'<li><span class="swatch" style="background:{color}"></span>'
                f"<strong>{_esc(group_id)}</strong>: {_esc(text)}</li>"
            )
        out.append("</ul>")

    out.append("</body>")
    out.append("</html>")
    return "\n".join(out) + "\n"
