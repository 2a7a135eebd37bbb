"""ssMACH protocol toolkit: parse, validate, analyze, render, and diff."""

from .model import (
    ALL_CELL_IDS,
    AspectColumn,
    AspectRow,
    CellId,
    CellState,
    CellStatus,
    DefinitionItem,
    DerivedMarks,
    DescriptionGroup,
    MetaInfo,
    NormalizationError,
    PartyGroup,
    Protocol,
    Relation,
    RelationKind,
    RightPartMark,
    WorkPackages,
    derive_marks,
    normalize,
    trace_knowledge_flow,
)
from .dsl import (
    ParseError,
    ParseFailure,
    ParsedDocument,
    SourceSpan,
    format_text,
    parse,
    parse_document,
    serialize,
)
from .validator import (
    Diagnostic,
    Location,
    Severity,
    ValidationReport,
    explain,
    validate,
)

__all__ = [
    "ALL_CELL_IDS",
    "AspectColumn",
    "AspectRow",
    "CellId",
    "CellState",
    "CellStatus",
    "DefinitionItem",
    "DerivedMarks",
    "DescriptionGroup",
    "Diagnostic",
    "Location",
    "MetaInfo",
    "NormalizationError",
    "ParseError",
    "ParseFailure",
    "ParsedDocument",
    "PartyGroup",
    "Protocol",
    "Relation",
    "RelationKind",
    "RightPartMark",
    "Severity",
    "SourceSpan",
    "ValidationReport",
    "WorkPackages",
    "derive_marks",
    "explain",
    "format_text",
    "normalize",
    "parse",
    "parse_document",
    "serialize",
    "trace_knowledge_flow",
    "validate",
]
