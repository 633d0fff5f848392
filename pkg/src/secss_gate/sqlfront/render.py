"""Canonical rendering of analysed statements.

Structure is rendered with single spaces and a single trailing semicolon;
verbatim predicate spans (WHERE, ON, sub-queries, ORDER BY / LIMIT tails)
are embedded unchanged so that render(parse(x)) re-parses to an equal
analysis.
"""

from __future__ import annotations

from .model import StatementAnalysis, StatementKind
from .tokens import tokenize


def render(stmt: StatementAnalysis) -> str:
    if stmt.kind is StatementKind.SHOW:
        if stmt.show_object == "COLUMNS":
            return f"SHOW COLUMNS FROM {stmt.show_table.rendered()};"
        return f"SHOW {stmt.show_object};"

    if stmt.kind is StatementKind.SELECT:
        cols = "*" if stmt.projection_is_star else ", ".join(p.text for p in stmt.projection)
        parts = [f"SELECT {cols} FROM {stmt.target.rendered()}"]
        for j in stmt.joins:
            parts.append(f"{j.keyword} {j.table.rendered()} ON {j.on_text}")
        if stmt.where_text:
            parts.append(f"WHERE {stmt.where_text}")
        if stmt.tail_text:
            parts.append(stmt.tail_text)
        return " ".join(parts) + ";"

    if stmt.kind is StatementKind.INSERT:
        cols = ", ".join(a.lhs_text for a in stmt.assignment_list)
        vals = ", ".join(_value_text(a.value) for a in stmt.assignment_list)
        return f"INSERT INTO {stmt.target.rendered()} ({cols}) VALUES ({vals});"

    parts = [f"UPDATE {stmt.target.rendered()}"]
    for j in stmt.joins:
        parts.append(f"{j.keyword} {j.table.rendered()} ON {j.on_text}")
    sets = ", ".join(f"{a.lhs_text} = {_value_text(a.value)}" for a in stmt.assignment_list)
    parts.append(f"SET {sets}")
    if stmt.where_text:
        parts.append(f"WHERE {stmt.where_text}")
    return " ".join(parts) + ";"


def _value_text(value) -> str:
    if value.is_subquery:
        return f"({value.sql_text})"
    return value.sql_text


def normalized_tokens(sql: str) -> str:
    """Whitespace-insensitive comparison form: tokens joined by one space."""
    return " ".join(tok.text for tok in tokenize(sql))
