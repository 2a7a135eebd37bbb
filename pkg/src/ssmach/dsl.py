"""Plain-text format for ssMACH protocols.

The format is line oriented so protocols diff well and live in version
control.  A document starts with the version pragma ``ssmach 1`` and then
holds sections in any order::

    [meta]              name, version, date, filler, our-team,
                        cooperating-teams, externals
    [definition]        1 = "numbered bullet point"
    [workpackages]      development = responsible | handover
    [groups]            group_id = "shared description"
    [cell ROW.COLUMN]   status, text, group, refs
    [relations]         provides ROW.COL -> ROW.COL

Values are double-quoted strings (escapes: \\\\ \\" \\n \\t \\r),
triple-quoted blocks for multi-line text, bracketed integer lists for
definition references, bare ISO dates, and bare keywords for statuses and
flags.  ``#`` starts a comment outside of strings.  Canonical output is
UTF-8 with LF line endings, sections in fixed order, cells row-major, and
relations sorted with provides edges before demands edges.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from typing import Optional, Union

from .model import (
    ALL_CELL_IDS,
    AspectColumn,
    AspectRow,
    CellId,
    CellState,
    CellStatus,
    DefinitionItem,
    DescriptionGroup,
    HANDOVER_ROWS,
    MetaInfo,
    NormalizationError,
    Protocol,
    Relation,
    RelationKind,
    WorkPackages,
    normalize,
)

FORMAT_VERSION = 1

ERROR_KINDS = (
    "syntax",
    "unknown-row",
    "unknown-column",
    "duplicate-cell",
    "duplicate-definition-number",
    "bad-status",
    "bad-reference-literal",
    "unsupported-version",
)

_META_KEYS = {
    "name": "name",
    "version": "version",
    "date": "date",
    "filler": "filler",
    "our-team": "our_team",
    "cooperating-teams": "cooperating_teams",
    "externals": "externals",
}
_META_KEY_ORDER = tuple(_META_KEYS)
_WP_KEYS = ("development", "maintenance", "improvement")
_CELL_KEYS = ("status", "text", "group", "refs")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*$")
_CELL_HEADER_RE = re.compile(r"\[cell\s+([A-Za-z0-9_]+)\.([A-Za-z0-9_]+)\]$")
_RELATION_RE = re.compile(
    r"(provides|demands)\s+([A-Za-z0-9_]+)\.([A-Za-z0-9_]+)"
    r"\s*->\s*([A-Za-z0-9_]+)\.([A-Za-z0-9_]+)$"
)
_KEY_VALUE_RE = re.compile(r"([A-Za-z0-9_-]+)\s*=\s*(.*)$")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class SourceSpan:
    """Byte range plus 1-based line/column of an element or error."""

    start: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    kind: str
    message: str

    def render(self) -> str:
        return f"{self.kind} {self.span.line}:{self.span.column}: {self.message}"


class ParseFailure(ValueError):
    """Raised when a document is rejected; carries all collected errors."""

    def __init__(self, errors: list[ParseError]):
        super().__init__(
            "; ".join(e.render() for e in errors) or "unparseable document"
        )
        self.errors = tuple(errors)


@dataclass(frozen=True)
class ParsedDocument:
    """A parsed protocol together with the source spans of its elements.

    Span keys: ``meta.<key>``, ``definition.<number>``,
    ``workpackages.<name>``, ``group.<id>``, ``<row>.<column>`` for cell
    sections, ``relation.<index>`` and ``section.<name>`` for whole
    sections.
    """

    protocol: Protocol
    spans: dict[str, SourceSpan]


class _Lines:
    """Precomputed line geometry of the input text."""

    def __init__(self, text: str):
        self.raw = text.split("\n")
        self.byte_starts: list[int] = []
        offset = 0
        for line in self.raw:
            self.byte_starts.append(offset)
            offset += len(line.encode("utf-8")) + 1
        self.total_bytes = len(text.encode("utf-8"))

    def span(self, line_no: int, col: int = 1, length: Optional[int] = None) -> SourceSpan:
        """Span of (part of) a 1-based line; ``col`` is a 1-based character
        column, ``length`` a character count."""
        line = self.raw[line_no - 1]
        start = self.byte_starts[line_no - 1] + len(line[: col - 1].encode("utf-8"))
        if length is None:
            end = self.byte_starts[line_no - 1] + len(line.encode("utf-8"))
        else:
            end = start + len(line[col - 1 : col - 1 + length].encode("utf-8"))
        return SourceSpan(start=start, end=min(end, self.total_bytes), line=line_no, column=col)

    def merge(self, first_line: int, last_line: int) -> SourceSpan:
        start = self.byte_starts[first_line - 1]
        end = self.byte_starts[last_line - 1] + len(
            self.raw[last_line - 1].encode("utf-8")
        )
        return SourceSpan(
            start=start, end=min(end, self.total_bytes), line=first_line, column=1
        )


def _strip_comment(line: str) -> str:
    """Drop a ``#`` comment, honoring double-quoted strings and escapes."""
    in_string = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
            continue
        if in_string and ch == "\\":
            escaped = True
            continue
        if ch == '"':
            in_string = not in_string
            continue
        if ch == "#" and not in_string:
            return line[:i].rstrip()
    return line.rstrip()


_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_ESCAPE_OUT = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPE_OUT.get(ch, ch) for ch in text) + '"'


class _Parser:
    def __init__(self, text: str):
        self.lines = _Lines(text)
        self.errors: list[ParseError] = []
        self.spans: dict[str, SourceSpan] = {}
        self.meta: dict[str, object] = {}
        self.definition: dict[int, DefinitionItem] = {}
        self.workpackages: dict[str, bool] = {}
        self.groups: dict[str, DescriptionGroup] = {}
        self.cells: dict[CellId, dict[str, object]] = {}
        self.cell_lines: dict[CellId, tuple[int, int]] = {}
        self.relations: list[Relation] = []
        self.pos = 0  # 0-based index into self.lines.raw

    # -- error helpers ------------------------------------------------------

    def error(self, kind: str, message: str, line_no: int, col: int = 1,
              length: Optional[int] = None) -> None:
        self.errors.append(
            ParseError(self.lines.span(line_no, col, length), kind, message)
        )

    # -- line scanning ------------------------------------------------------

    def _next_significant(self) -> Optional[tuple[int, str]]:
        """Advance to the next non-blank, non-comment line; return
        (1-based line number, stripped content) or None at end of input."""
        while self.pos < len(self.lines.raw):
            stripped = _strip_comment(self.lines.raw[self.pos]).strip()
            self.pos += 1
            if stripped:
                return self.pos, stripped
        return None

    def _peek_significant(self) -> Optional[tuple[int, str]]:
        saved = self.pos
        result = self._next_significant()
        self.pos = saved
        return result

    # -- values -------------------------------------------------------------

    def _parse_string(self, raw: str, line_no: int) -> Optional[str]:
        """Parse a quoted string or a triple-quoted block opener."""
        if raw.startswith('"""'):
            if raw != '"""':
                self.error("syntax", "text after opening triple quote", line_no)
                return None
            block: list[str] = []
            while self.pos < len(self.lines.raw):
                line = self.lines.raw[self.pos]
                self.pos += 1
                if line == '"""':
                    return "\n".join(block)
                block.append(line)
            self.error("syntax", "unterminated triple-quoted block", line_no)
            return None
        if not raw.startswith('"'):
            self.error("syntax", f"expected a quoted string, got {raw!r}", line_no)
            return None
        out: list[str] = []
        i = 1
        while i < len(raw):
            ch = raw[i]
            if ch == "\\":
                if i + 1 >= len(raw) or raw[i + 1] not in _ESCAPES:
                    self.error("syntax", "bad escape sequence in string", line_no)
                    return None
                out.append(_ESCAPES[raw[i + 1]])
                i += 2
                continue
            if ch == '"':
                if raw[i + 1 :].strip():
                    self.error("syntax", "trailing content after string", line_no)
                    return None
                return "".join(out)
            out.append(ch)
            i += 1
        self.error("syntax", "unterminated string", line_no)
        return None

    def _parse_int_list(self, raw: str, line_no: int) -> Optional[tuple[int, ...]]:
        if not (raw.startswith("[") and raw.endswith("]")):
            self.error(
                "bad-reference-literal",
                f"expected a bracketed integer list, got {raw!r}",
                line_no,
            )
            return None
        inner = raw[1:-1].strip()
        if not inner:
            return ()
        values: list[int] = []
        for part in inner.split(","):
            part = part.strip()
            if not part.isdigit() or int(part) < 1:
                self.error(
                    "bad-reference-literal",
                    f"reference list entries must be positive integers, got {part!r}",
                    line_no,
                )
                return None
            values.append(int(part))
        return tuple(values)

    # -- sections -----------------------------------------------------------

    def parse(self) -> Optional[ParsedDocument]:
        first = self._next_significant()
        if first is None:
            self.error("syntax", "empty document, expected version pragma", 1)
            return self._finish()
        line_no, content = first
        match = re.fullmatch(r"ssmach\s+(\d+)", content)
        if match is None:
            self.error(
                "syntax",
                "the first line must be the version pragma 'ssmach 1'",
                line_no,
            )
        elif int(match.group(1)) != FORMAT_VERSION:
            self.error(
                "unsupported-version",
                f"unsupported format version {match.group(1)}, expected {FORMAT_VERSION}",
                line_no,
            )

        while True:
            item = self._next_significant()
            if item is None:
                break
            line_no, content = item
            if not content.startswith("["):
                self.error("syntax", f"expected a section header, got {content!r}", line_no)
                continue
            self._parse_section(line_no, content)
        return self._finish()

    def _parse_section(self, line_no: int, header: str) -> None:
        if header == "[meta]":
            self._parse_keyed_section("meta", line_no)
        elif header == "[definition]":
            self._parse_keyed_section("definition", line_no)
        elif header == "[workpackages]":
            self._parse_keyed_section("workpackages", line_no)
        elif header == "[groups]":
            self._parse_keyed_section("groups", line_no)
        elif header == "[relations]":
            self._parse_relations(line_no)
        elif header.startswith("[cell"):
            match = _CELL_HEADER_RE.fullmatch(header)
            if match is None:
                self.error("syntax", f"malformed cell header {header!r}", line_no)
                self._skip_body()
                return
            self._parse_cell(line_no, match.group(1), match.group(2))
        else:
            self.error("syntax", f"unknown section {header!r}", line_no)
            self._skip_body()

    def _body_lines(self):
        """Yield (line number, content) pairs until the next section header."""
        while True:
            peeked = self._peek_significant()
            if peeked is None or peeked[1].startswith("["):
                return
            yield self._next_significant()

    def _skip_body(self) -> None:
        for _ in self._body_lines():
            pass

    def _parse_keyed_section(self, section: str, header_line: int) -> None:
        last_line = header_line
        for line_no, content in self._body_lines():
            last_line = line_no
            match = _KEY_VALUE_RE.fullmatch(content)
            if match is None:
                self.error("syntax", f"expected 'key = value', got {content!r}", line_no)
                continue
            key, raw = match.group(1), match.group(2).strip()
            if section == "meta":
                self._meta_entry(key, raw, line_no)
            elif section == "definition":
                self._definition_entry(key, raw, line_no)
            elif section == "workpackages":
                self._workpackage_entry(key, raw, line_no)
            elif section == "groups":
                self._group_entry(key, raw, line_no)
            last_line = self.pos  # triple-quoted blocks advance self.pos
        self.spans.setdefault(f"section.{section}", self.lines.merge(header_line, max(last_line, header_line)))

    def _meta_entry(self, key: str, raw: str, line_no: int) -> None:
        if key not in _META_KEYS:
            self.error("syntax", f"unknown meta key {key!r}", line_no)
            return
        field = _META_KEYS[key]
        if field in self.meta:
            self.error("syntax", f"duplicate meta key {key!r}", line_no)
            return
        if key == "date":
            if not _DATE_RE.fullmatch(raw):
                self.error("syntax", f"date must be YYYY-MM-DD, got {raw!r}", line_no)
                return
            try:
                value: object = date.fromisoformat(raw)
            except ValueError:
                self.error("syntax", f"not a calendar date: {raw!r}", line_no)
                return
        else:
            parsed = self._parse_string(raw, line_no)
            if parsed is None:
                return
            value = parsed
        self.meta[field] = value
        self.spans[f"meta.{key}"] = self.lines.span(line_no)

    def _definition_entry(self, key: str, raw: str, line_no: int) -> None:
        if not key.isdigit() or int(key) < 1:
            self.error("syntax", f"definition keys are positive numbers, got {key!r}", line_no)
            return
        number = int(key)
        text = self._parse_string(raw, line_no)
        if text is None:
            return
        if number in self.definition:
            self.error(
                "duplicate-definition-number",
                f"definition item {number} is declared twice",
                line_no,
            )
            return
        self.definition[number] = DefinitionItem(number=number, text=text)
        self.spans[f"definition.{number}"] = self.lines.span(line_no)

    def _workpackage_entry(self, key: str, raw: str, line_no: int) -> None:
        if key not in _WP_KEYS:
            self.error("syntax", f"unknown work package {key!r}", line_no)
            return
        if key in self.workpackages:
            self.error("syntax", f"duplicate work package {key!r}", line_no)
            return
        if raw not in ("responsible", "handover"):
            self.error(
                "syntax",
                f"work package value must be 'responsible' or 'handover', got {raw!r}",
                line_no,
            )
            return
        self.workpackages[key] = raw == "responsible"
        self.spans[f"workpackages.{key}"] = self.lines.span(line_no)

    def _group_entry(self, key: str, raw: str, line_no: int) -> None:
        if not _IDENT_RE.fullmatch(key):
            self.error("syntax", f"invalid group identifier {key!r}", line_no)
            return
        if key in self.groups:
            self.error("syntax", f"duplicate group {key!r}", line_no)
            return
        text = self._parse_string(raw, line_no)
        if text is None:
            return
        self.groups[key] = DescriptionGroup(id=key, text=text)
        self.spans[f"group.{key}"] = self.lines.span(line_no)

    def _parse_cell(self, header_line: int, row_name: str, col_name: str) -> None:
        cell_id: Optional[CellId] = None
        try:
            row = AspectRow(row_name)
        except ValueError:
            self.error(
                "unknown-row",
                f"unknown row {row_name!r}",
                header_line,
                col=header_line_col(self.lines.raw[header_line - 1], row_name),
                length=len(row_name),
            )
            row = None
        try:
            column = AspectColumn(col_name)
        except ValueError:
            self.error(
                "unknown-column",
                f"unknown column {col_name!r}",
                header_line,
                col=header_line_col(self.lines.raw[header_line - 1], col_name),
                length=len(col_name),
            )
            column = None
        if row is not None and column is not None:
            cell_id = CellId(row, column)
            if cell_id in self.cells:
                self.error(
                    "duplicate-cell",
                    f"cell {cell_id} is declared twice",
                    header_line,
                )
                cell_id = None

        fields: dict[str, object] = {}
        last_line = header_line
        for line_no, content in self._body_lines():
            match = _KEY_VALUE_RE.fullmatch(content)
            if match is None:
                self.error("syntax", f"expected 'key = value', got {content!r}", line_no)
                continue
            key, raw = match.group(1), match.group(2).strip()
            if key not in _CELL_KEYS:
                self.error("syntax", f"unknown cell key {key!r}", line_no)
                continue
            if key in fields:
                self.error("syntax", f"duplicate cell key {key!r}", line_no)
                continue
            if key == "status":
                try:
                    fields["status"] = CellStatus(raw)
                except ValueError:
                    self.error("bad-status", f"unknown status {raw!r}", line_no)
                    continue
            elif key == "text":
                text = self._parse_string(raw, line_no)
                if text is not None:
                    fields["text"] = text
            elif key == "group":
                if not _IDENT_RE.fullmatch(raw):
                    self.error("syntax", f"invalid group identifier {raw!r}", line_no)
                    continue
                fields["group"] = raw
            elif key == "refs":
                refs = self._parse_int_list(raw, line_no)
                if refs is not None:
                    fields["refs"] = refs
            last_line = self.pos

        if cell_id is not None:
            status = fields.get("status")
            if status is CellStatus.CROSSED and cell_id.row not in HANDOVER_ROWS:
                self.error(
                    "bad-status",
                    f"{cell_id}: crossed is legal only in handover rows",
                    header_line,
                )
                return
            self.cells[cell_id] = fields
            self.cell_lines[cell_id] = (header_line, max(last_line, header_line))

    def _parse_relations(self, header_line: int) -> None:
        last_line = header_line
        for line_no, content in self._body_lines():
            last_line = line_no
            match = _RELATION_RE.fullmatch(content)
            if match is None:
                self.error(
                    "syntax",
                    f"expected 'provides|demands ROW.COL -> ROW.COL', got {content!r}",
                    line_no,
                )
                continue
            kind = RelationKind(match.group(1))
            endpoints: list[CellId] = []
            ok = True
            for row_name, col_name in ((match.group(2), match.group(3)),
                                       (match.group(4), match.group(5))):
                try:
                    row = AspectRow(row_name)
                except ValueError:
                    self.error("unknown-row", f"unknown row {row_name!r}", line_no)
                    ok = False
                    continue
                try:
                    column = AspectColumn(col_name)
                except ValueError:
                    self.error("unknown-column", f"unknown column {col_name!r}", line_no)
                    ok = False
                    continue
                endpoints.append(CellId(row, column))
            if not ok:
                continue
            if endpoints[0] == endpoints[1]:
                self.error(
                    "syntax", "relation source and target must differ", line_no
                )
                continue
            relation = Relation(kind=kind, source=endpoints[0], target=endpoints[1])
            self.spans[f"relation.{len(self.relations)}"] = self.lines.span(line_no)
            self.relations.append(relation)
        self.spans.setdefault(
            "section.relations", self.lines.merge(header_line, last_line)
        )

    # -- assembly -----------------------------------------------------------

    def _finish(self) -> Optional[ParsedDocument]:
        for wp in _WP_KEYS:
            if wp not in self.workpackages:
                self.error(
                    "syntax",
                    f"work package {wp!r} is not set; all three flags are required",
                    max(1, len(self.lines.raw)),
                )
        numbers = sorted(self.definition)
        if numbers and numbers != list(range(1, len(numbers) + 1)):
            self.error(
                "syntax",
                f"definition numbers must be contiguous from 1, got {numbers}",
                self.spans.get(f"definition.{numbers[-1]}", self.lines.span(1)).line,
            )
        for cell_id, fields in self.cells.items():
            group = fields.get("group")
            if group is not None and group not in self.groups:
                line = self.cell_lines[cell_id][0]
                self.error("syntax", f"{cell_id}: unknown group {group!r}", line)

        if self.errors:
            return None

        cells = {
            cell_id: CellState(
                status=fields.get("status"),
                text=fields.get("text"),
                group=fields.get("group"),
                refs=fields.get("refs", ()),
            )
            for cell_id, fields in self.cells.items()
        }
        protocol = Protocol(
            meta=MetaInfo(**self.meta),
            definition=tuple(self.definition[n] for n in sorted(self.definition)),
            work_packages=WorkPackages(**self.workpackages),
            groups=tuple(self.groups.values()),
            cells=cells,
            relations=tuple(self.relations),
        )
        try:
            protocol = normalize(protocol)
        except NormalizationError as exc:
            line = self.cell_lines.get(exc.cell, (1, 1))[0]
            self.error("bad-status", str(exc), line)
            return None
        for cell_id, (first, last) in self.cell_lines.items():
            self.spans[str(cell_id)] = self.lines.merge(first, last)
        return ParsedDocument(protocol=protocol, spans=self.spans)


def header_line_col(line: str, token: str) -> int:
    """1-based character column of ``token`` in ``line`` (1 if absent)."""
    idx = line.find(token)
    return idx + 1 if idx >= 0 else 1


def parse_document(text: str) -> ParsedDocument:
    """Parse a document into a normalized protocol plus element spans.

    Raises :class:`ParseFailure` carrying every collected
    :class:`ParseError`; a rejected input never yields a partial protocol.
    """
    parser = _Parser(text)
    result = parser.parse()
    if result is None:
        raise ParseFailure(parser.errors)
    return result


def parse(text: str) -> Protocol:
    """Parse a document into a normalized protocol."""
    return parse_document(text).protocol


def _emit_value(text: str) -> list[str]:
    """Render a text value: triple-quoted block for multi-line text when the
    block framing cannot be confused, quoted string otherwise."""
    if "\n" in text and '"""' not in text and "\r" not in text:
        return ['"""', *text.split("\n"), '"""']
    return [_quote(text)]


def _emit_keyed(key: str, text: str) -> list[str]:
    value = _emit_value(text)
    first = f"{key} = {value[0]}"
    return [first, *value[1:]]


def serialize(protocol: Protocol) -> str:
    """Render a normalized protocol in canonical form.

    Sections appear in fixed order, cells row-major with unset cells and
    responsibility-implied crossed cells omitted, relations sorted with
    provides before demands.  ``parse(serialize(p))`` equals ``p``.
    """
    lines: list[str] = [f"ssmach {FORMAT_VERSION}", ""]

    lines.append("[meta]")
    meta = protocol.meta
    for key in _META_KEY_ORDER:
        field = _META_KEYS[key]
        value = getattr(meta, field)
        if key == "date":
            if value is not None:
                lines.append(f"date = {value.isoformat()}")
        else:
            lines.extend(_emit_keyed(key, value))
    lines.append("")

    lines.append("[definition]")
    for item in protocol.definition:
        lines.extend(_emit_keyed(str(item.number), item.text))
    lines.append("")

    lines.append("[workpackages]")
    for wp in _WP_KEYS:
        flag = getattr(protocol.work_packages, wp)
        lines.append(f"{wp} = {'responsible' if flag else 'handover'}")
    lines.append("")

    if protocol.groups:
        lines.append("[groups]")
        for group in protocol.groups:
            lines.extend(_emit_keyed(group.id, group.text))
        lines.append("")

    for cell_id in ALL_CELL_IDS:
        state = protocol.state(cell_id)
        if state.is_empty:
            continue
        if (
            state.status is CellStatus.CROSSED
            and cell_id.row in HANDOVER_ROWS
            and protocol.work_packages.responsible_for(cell_id.row)
        ):
            continue  # implied by the responsible flag, restored by normalize
        lines.append(f"[cell {cell_id}]")
        if state.status is not None:
            lines.append(f"status = {state.status.value}")
        if state.text is not None:
            lines.extend(_emit_keyed("text", state.text))
        if state.group is not None:
            lines.append(f"group = {state.group}")
        if state.refs:
            lines.append(f"refs = [{', '.join(str(n) for n in state.refs)}]")
        lines.append("")

    if protocol.relations:
        lines.append("[relations]")
        for relation in protocol.relations:
            lines.append(
                f"{relation.kind.value} {relation.source} -> {relation.target}"
            )
        lines.append("")

    return "\n".join(lines)


def format_text(text: str) -> str:
    """Reformat a document into canonical form; idempotent.

    Propagates :class:`ParseFailure` for unparseable input.
    """
    return serialize(parse(text))
