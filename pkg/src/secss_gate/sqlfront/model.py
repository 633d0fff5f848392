"""Structural facts extracted from parsed SQL statements.

Names are case-preserved as written; all comparisons are case-insensitive.
WHERE and JOIN predicates are carried as verbatim text spans so rewritten
statements can embed the user's original text unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable


class StatementKind(str, Enum):
    SHOW = "SHOW"
    SELECT = "SELECT"
    INSERT = "INSERT"
    UPDATE = "UPDATE"


class FieldRef:
    """A (schema?, table, field) column reference."""

    __slots__ = ("schema", "table", "field")

    def __init__(self, table: str, field: str, schema: str | None = None):
        self.schema = schema
        self.table = table
        self.field = field

    def _key(self) -> tuple:
        return (
            self.schema.casefold() if self.schema else None,
            self.table.casefold(),
            self.field.casefold(),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldRef) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        qual = f"{self.schema}." if self.schema else ""
        return f"FieldRef({qual}{self.table}.{self.field})"


class TableRef:
    """A (schema?, table, alias?) relation reference, as written."""

    __slots__ = ("schema", "table", "alias")

    def __init__(self, table: str, alias: str | None = None, schema: str | None = None):
        self.schema = schema
        self.table = table
        self.alias = alias

    def _key(self) -> tuple:
        return (
            self.schema.casefold() if self.schema else None,
            self.table.casefold(),
            self.alias.casefold() if self.alias else None,
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, TableRef) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def matches_name(self, name: str) -> bool:
        """True when *name* addresses this relation: its alias when one is
        declared, else its bare table name (an aliased table is not
        addressable by its base name)."""
        name = name.casefold()
        if self.alias is not None:
            return self.alias.casefold() == name
        return self.table.casefold() == name

    def effective_name(self) -> str:
        return (self.alias or self.table).casefold()

    def rendered(self) -> str:
        text = f"{self.schema}.{self.table}" if self.schema else self.table
        return f"{text} {self.alias}" if self.alias else text

    def __repr__(self) -> str:
        return f"TableRef({self.rendered()})"


@dataclass(frozen=True)
class ValueExpr:
    """An assigned value: a literal or a scalar sub-query, kept verbatim.

    ``kind`` is one of "string", "number", "null", "subquery".  ``sql_text``
    is the exact SQL rendering (quotes included for strings, no outer
    parentheses for sub-queries).
    """

    kind: str
    sql_text: str

    @property
    def is_subquery(self) -> bool:
        return self.kind == "subquery"

    def python_value(self):
        """Literal value as a Python object (sub-queries have none)."""
        if self.kind == "string":
            return self.sql_text[1:-1].replace("''", "'")
        if self.kind == "number":
            text = self.sql_text
            return float(text) if "." in text or "e" in text.lower() else int(text)
        if self.kind == "null":
            return None
        raise ValueError("sub-query values are resolved at execution time")


@dataclass(frozen=True)
class Assignment:
    """One SET / VALUES pair: the column as written plus its value."""

    lhs_text: str
    field: FieldRef
    value: ValueExpr


@dataclass(frozen=True)
class JoinClause:
    keyword: str            # e.g. "LEFT JOIN", "JOIN"
    table: TableRef
    on_text: str            # verbatim ON predicate


@dataclass(frozen=True)
class ProjectionItem:
    text: str                      # as written, e.g. "c.name" or "YEAR(b)"
    field: FieldRef | None         # None for function expressions


STAR = "*"


@dataclass
class StatementAnalysis:
    """One parsed statement with the structural facts the rewriter needs."""

    kind: StatementKind
    raw_text: str
    target_tables: list[TableRef] = field(default_factory=list)
    accessed_fields: set[FieldRef] = field(default_factory=set)
    assignment_list: list[Assignment] = field(default_factory=list)
    where_text: str | None = None
    joins: list[JoinClause] = field(default_factory=list)
    projection: list[ProjectionItem] | None = None
    projection_is_star: bool = False
    tail_text: str | None = None       # verbatim ORDER BY / LIMIT tail (SELECT)
    show_object: str | None = None     # TABLES / DATABASES / COLUMNS (SHOW)
    show_table: TableRef | None = None

    @property
    def assignments(self) -> dict[FieldRef, ValueExpr]:
        return {a.field: a.value for a in self.assignment_list}

    @property
    def join_text(self) -> str | None:
        if not self.joins:
            return None
        return " ".join(
            f"{j.keyword} {j.table.rendered()} ON {j.on_text}" for j in self.joins
        )

    @property
    def target(self) -> TableRef:
        return self.target_tables[0]

    def structural_key(self) -> tuple:
        """Comparison key covering every analysed fact (not raw text)."""
        return (
            self.kind,
            tuple(t._key() for t in self.target_tables),
            frozenset(self.accessed_fields),
            tuple((a.field._key(), a.value) for a in self.assignment_list),
            self.where_text,
            tuple((j.keyword.upper(), j.table._key(), j.on_text) for j in self.joins),
            None
            if self.projection is None
            else tuple(
                p.field._key() if p.field is not None else p.text for p in self.projection
            ),
            self.projection_is_star,
            self.tail_text,
            self.show_object,
            self.show_table._key() if self.show_table else None,
        )


@dataclass
class SqlScript:
    raw_text: str
    statements: list[StatementAnalysis]

    def structural_key(self) -> tuple:
        return tuple(s.structural_key() for s in self.statements)


def scope_tables(stmt: StatementAnalysis) -> Iterable[TableRef]:
    """All relations visible to predicates of *stmt* (target plus joins)."""
    yield from stmt.target_tables
    for j in stmt.joins:
        yield j.table
