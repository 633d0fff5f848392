"""SQL frontend: tokenize, parse and re-render the supported grammar subset.

Supported statement kinds: SHOW, SELECT, INSERT (single-row VALUES) and
UPDATE (optional JOIN).  Everything else is rejected before it can reach
the rewriter.
"""

from .model import (
    STAR,
    Assignment,
    FieldRef,
    JoinClause,
    ProjectionItem,
    SqlScript,
    StatementAnalysis,
    StatementKind,
    TableRef,
    ValueExpr,
)
from .parser import parse_script, parse_single_select
from .render import normalized_tokens, render

__all__ = [
    "STAR",
    "Assignment",
    "FieldRef",
    "JoinClause",
    "ProjectionItem",
    "SqlScript",
    "StatementAnalysis",
    "StatementKind",
    "TableRef",
    "ValueExpr",
    "normalized_tokens",
    "parse_script",
    "parse_single_select",
    "render",
]
