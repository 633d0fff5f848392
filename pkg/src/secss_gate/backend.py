"""Execution layer: catalog introspection plus transactional execution.

The reference adapter runs on embedded SQLite and shims the MySQL-isms the
rewriter emits:

* session variables: `SET @x = expr;` is evaluated by the adapter and the
  value is bound as a named parameter wherever `@x` appears;
* `FROM DUAL`: elided (SQLite allows SELECT ... WHERE without FROM);
* `UPDATE t JOIN u ON ...`: re-rendered as SQLite `UPDATE ... FROM`;
* date functions: NOW, DATE, DATEDIFF, FROM_DAYS and YEAR are registered
  as user functions with MySQL semantics, driven by an injectable clock so
  time-dependent rules are testable;
* SHOW: synthesized from the catalog.

Each gateway request runs in exactly one session; variables never escape
their session and every request commits or rolls back as a whole.
"""

from __future__ import annotations

import re
import sqlite3
import uuid
from dataclasses import dataclass, field as dc_field
from datetime import date, datetime
from pathlib import Path
from typing import Callable

from .errors import BackendError, UnknownTableError
from .rewriter import (
    PlanInsertFiltered,
    PlanInsertValues,
    PlanSelect,
    PlanShow,
    PlanUpdate,
    TransformedScript,
)

_IDENT_RE = re.compile(r"^[^\W\d]\w*$", re.UNICODE)
_SET_RE = re.compile(r"^SET\s+@(\w+)\s*=\s*(.*?);?\s*$", re.DOTALL)

# MySQL day numbers run 365 ahead of proleptic-Gregorian ordinals
# (TO_DAYS('1995-05-01') = 728779, ordinal 728414).
_MYSQL_DAY_OFFSET = 365


@dataclass(frozen=True)
class BackendCapabilities:
    supports_session_variables: bool = True
    supports_dual: bool = True
    date_functions: frozenset[str] = frozenset({"YEAR", "FROM_DAYS", "DATEDIFF", "NOW", "DATE"})


@dataclass
class ResultRelation:
    columns: list[str] = dc_field(default_factory=list)
    rows: list[list[str | None]] = dc_field(default_factory=list)
    rows_affected: int = 0


def parse_connection_string(conn: str) -> tuple[str, str]:
    """Split "sqlite:<path>[?schema=name]" into (path, schema).

    Accepted forms: "sqlite::memory:", "sqlite:/path/to.db",
    "sqlite:///path/to.db", a bare path, or ":memory:".
    """
    schema = "playground"
    if not conn:
        return ":memory:", schema
    if conn.startswith("sqlite:"):
        conn = conn[len("sqlite:") :]
        if conn.startswith("///"):
            conn = conn[2:]
    if "?" in conn:
        conn, query = conn.split("?", 1)
        for pair in query.split("&"):
            if pair.startswith("schema="):
                schema = pair.split("=", 1)[1]
    return conn or ":memory:", schema


class SqliteAdapter:
    """Reference adapter over an embedded SQLite store.

    ``database`` is a file path or ":memory:"; in-memory stores use SQLite's
    shared cache so several sessions observe the same data.
    """

    def __init__(
        self,
        database: str = ":memory:",
        default_schema: str = "playground",
        clock: Callable[[], datetime] | None = None,
    ):
        self.default_schema = default_schema
        self.clock = clock or datetime.now
        if database == ":memory:":
            self._uri = f"file:secss-{uuid.uuid4().hex}?mode=memory&cache=shared"
            self._is_uri = True
        else:
            self._uri = str(Path(database))
            self._is_uri = False
        # anchor connection keeps a shared in-memory store alive
        self._anchor = self._connect()

    @classmethod
    def from_connection_string(cls, conn: str, clock=None) -> "SqliteAdapter":
        path, schema = parse_connection_string(conn)
        return cls(path, default_schema=schema, clock=clock)

    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities()

    # -- connections ---------------------------------------------------------

    def _connect(self) -> sqlite3.Connection:
        # main stays a private scratch database; the shared store is
        # attached under the schema name so both qualified and unqualified
        # table references resolve into it
        conn = sqlite3.connect(
            "file::memory:",
            uri=True,
            isolation_level=None,
            check_same_thread=False,
            timeout=10,
        )
        conn.execute("PRAGMA busy_timeout = 10000")
        conn.execute(f"ATTACH DATABASE ? AS {self._quote(self.default_schema)}", (self._uri,))
        conn.execute("PRAGMA foreign_keys = ON")
        self._register_functions(conn)
        return conn

    @staticmethod
    def _quote(name: str) -> str:
        if not _IDENT_RE.match(name):
            raise BackendError(f"invalid identifier {name!r}")
        return f'"{name}"'

    def _register_functions(self, conn: sqlite3.Connection) -> None:
        clock = self.clock

        def f_now() -> str:
            return clock().strftime("%Y-%m-%d %H:%M:%S")

        def f_date(value) -> str | None:
            if value is None:
                return None
            return str(value)[:10]

        def f_datediff(a, b) -> int | None:
            if a is None or b is None:
                return None
            da = date.fromisoformat(str(a)[:10])
            db = date.fromisoformat(str(b)[:10])
            return (da - db).days

        def f_from_days(n) -> str | None:
            if n is None:
                return None
            ordinal = int(n) - _MYSQL_DAY_OFFSET
            if ordinal < 1:
                return "0000-01-01"
            return date.fromordinal(ordinal).isoformat()

        def f_year(value) -> int | None:
            if value is None:
                return None
            return int(str(value)[:4])

        conn.create_function("NOW", 0, f_now, deterministic=False)
        conn.create_function("DATE", 1, f_date, deterministic=True)
        conn.create_function("DATEDIFF", 2, f_datediff, deterministic=True)
        conn.create_function("FROM_DAYS", 1, f_from_days, deterministic=True)
        conn.create_function("YEAR", 1, f_year, deterministic=True)

    # -- catalog ---------------------------------------------------------------

    def catalog_columns(self, schema: str, table: str) -> list[str]:
        if not _IDENT_RE.match(table):
            raise UnknownTableError(f"unknown table {schema}.{table}")
        conn = self._anchor
        if schema.casefold() != self.default_schema.casefold():
            raise UnknownTableError(f"unknown schema {schema!r}")
        rows = conn.execute(
            f"PRAGMA {self._quote(self.default_schema)}.table_info({self._quote(table)})"
        ).fetchall()
        if not rows:
            raise UnknownTableError(f"unknown table {schema}.{table}")
        return [r[1] for r in rows]

    def list_tables(self) -> list[str]:
        rows = self._anchor.execute(
            f"SELECT name FROM {self._quote(self.default_schema)}.sqlite_master"
            " WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
        ).fetchall()
        return [r[0] for r in rows]

    def run_script(self, script: str) -> None:
        """Run raw DDL/DML (fixture seeding); commits on success."""
        try:
            self._anchor.execute("BEGIN")
            for statement in _split_raw(script):
                self._anchor.execute(statement)
            self._anchor.execute("COMMIT")
        except sqlite3.Error as exc:
            self._anchor.execute("ROLLBACK")
            raise BackendError(str(exc)) from exc

    def session(self) -> "Session":
        return Session(self)

    def close(self) -> None:
        self._anchor.close()


def _split_raw(script: str) -> list[str]:
    out, buf, in_string = [], [], False
    for ch in script:
        if ch == "'":
            in_string = not in_string
        if ch == ";" and not in_string:
            text = "".join(buf).strip()
            if text:
                out.append(text)
            buf = []
            continue
        buf.append(ch)
    text = "".join(buf).strip()
    if text:
        out.append(text)
    return out


class Session:
    """One transactional unit of work with private session variables."""

    def __init__(self, adapter: SqliteAdapter):
        self.adapter = adapter
        self.conn = adapter._connect()
        self.variables: dict[str, object] = {}
        self._in_tx = False

    def begin(self) -> None:
        try:
            self.conn.execute("BEGIN")
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc
        self._in_tx = True

    def commit(self) -> None:
        try:
            self.conn.execute("COMMIT")
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc
        self._in_tx = False

    def rollback(self) -> None:
        if self._in_tx:
            try:
                self.conn.execute("ROLLBACK")
            finally:
                self._in_tx = False

    def close(self) -> None:
        self.rollback()
        self.conn.close()

    # -- execution --------------------------------------------------------------

    def execute(self, script: TransformedScript) -> ResultRelation:
        """Run the SET statements then the final statement, in order."""
        try:
            for set_sql in script.set_statements:
                self._execute_set(set_sql)
            return self._execute_final(script)
        except sqlite3.Error as exc:
            raise BackendError(str(exc)) from exc

    def _execute_set(self, set_sql: str) -> None:
        match = _SET_RE.match(set_sql.strip())
        if match is None:
            raise BackendError(f"malformed SET statement {set_sql!r}")
        name, expr = match.group(1), match.group(2).strip()
        row = self.conn.execute(f"SELECT {expr}", self.variables).fetchone()
        self.variables[name] = row[0] if row else None

    def _execute_final(self, script: TransformedScript) -> ResultRelation:
        plan = script.plan
        if isinstance(plan, PlanShow):
            return self._execute_show(plan)
        if isinstance(plan, PlanSelect):
            cursor = self.conn.execute(plan.sql.rstrip(";"), self.variables)
            return _relation_from_cursor(cursor)
        if isinstance(plan, PlanInsertValues):
            sql = (
                f"INSERT INTO {self._table_sql(plan.table)}"
                f" ({', '.join(plan.columns)}) VALUES ({', '.join(plan.var_names)})"
            )
            cursor = self.conn.execute(sql, self.variables)
            return ResultRelation(rows_affected=cursor.rowcount)
        if isinstance(plan, PlanInsertFiltered):
            preds = " AND ".join(plan.predicates)
            sql = (
                f"INSERT INTO {self._table_sql(plan.table)}"
                f" ({', '.join(plan.columns)})"
                f" SELECT {', '.join(plan.var_names)} WHERE {preds}"
            )
            cursor = self.conn.execute(sql, self.variables)
            return ResultRelation(rows_affected=cursor.rowcount)
        if isinstance(plan, PlanUpdate):
            sql = self._update_sql(plan)
            cursor = self.conn.execute(sql, self.variables)
            return ResultRelation(rows_affected=cursor.rowcount)
        raise BackendError(f"no execution plan for {type(plan).__name__}")

    def _table_sql(self, table) -> str:
        schema = table.schema or self.adapter.default_schema
        return f"{schema}.{table.table}"

    def _update_sql(self, plan: PlanUpdate) -> str:
        target = plan.table
        head = f"UPDATE {self._table_sql(target)}"
        if target.alias:
            head += f" AS {target.alias}"
        sets = ", ".join(f"{col} = {var}" for col, var in plan.set_pairs)
        where_parts = []
        from_part = ""
        if plan.joins:
            sources = []
            for j in plan.joins:
                source = self._table_sql(j.table)
                if j.table.alias:
                    source += f" AS {j.table.alias}"
                sources.append(source)
                where_parts.append(f"({j.on_text})")
            from_part = f" FROM {', '.join(sources)}"
        if plan.where_body:
            where_parts.append(plan.where_body)
        sql = f"{head} SET {sets}{from_part}"
        if where_parts:
            sql += " WHERE " + " AND ".join(where_parts)
        return sql

    def _execute_show(self, plan: PlanShow) -> ResultRelation:
        adapter = self.adapter
        if plan.object == "TABLES":
            names = adapter.list_tables()
            return ResultRelation(
                columns=[f"Tables_in_{adapter.default_schema}"],
                rows=[[n] for n in names],
            )
        if plan.object == "DATABASES":
            return ResultRelation(columns=["Database"], rows=[[adapter.default_schema]])
        table = plan.table
        schema = (table.schema or adapter.default_schema) if table else adapter.default_schema
        info = self.conn.execute(
            f"PRAGMA {adapter._quote(schema)}.table_info({adapter._quote(table.table)})"
        ).fetchall()
        if not info:
            raise UnknownTableError(f"unknown table {schema}.{table.table}")
        rows = []
        for _, name, ctype, notnull, default, pk in info:
            rows.append([
                name,
                ctype or "",
                "NO" if notnull else "YES",
                "PRI" if pk else "",
                None if default is None else str(default),
                "",
            ])
        return ResultRelation(
            columns=["Field", "Type", "Null", "Key", "Default", "Extra"], rows=rows
        )


def _relation_from_cursor(cursor: sqlite3.Cursor) -> ResultRelation:
    columns = [d[0] for d in cursor.description or []]
    rows = [[_cell(v) for v in row] for row in cursor.fetchall()]
    return ResultRelation(columns=columns, rows=rows)


def _cell(value) -> str | None:
    if value is None:
        return None
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bytes):
        return value.decode("utf-8", "replace")
    return str(value)
