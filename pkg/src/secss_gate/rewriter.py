"""Authorize and transform analysed statements against the loaded ELA.

The engine checks field-level permissions (deny-by-default), binds assigned
values to session variables, derives variables an applicable rule needs but
the statement does not assign, and conjoins each rule's sub-query as a
membership predicate, cumulatively and in document order.

Alongside the canonical transformed SQL text (MySQL-shaped, shown to the
requester as ExecutedSQL) every TransformedScript carries a small execution
plan so backend adapters can re-render the statement for their own dialect
without re-parsing text.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ela import ElaDocument, Restriction, VarBinding, collect_restrictions, lookup_permission
from .errors import GateError
from .identity import RequesterIdentity
from .sqlfront import (
    FieldRef,
    JoinClause,
    ProjectionItem,
    StatementAnalysis,
    StatementKind,
    TableRef,
    ValueExpr,
    render,
)
from .sqlfront.tokens import IDENT, NUMBER, PUNCT, STRING, tokenize


class UnresolvableVariableError(GateError):
    code = "UnresolvableVariable"


@dataclass
class Denial:
    statement_index: int
    reason: str          # NoPermission | UnsupportedKind | UnresolvableVariable
    detail: str

    @property
    def feedback(self) -> str:
        return f"{self.reason}: {self.detail}"


# --- execution plans ---------------------------------------------------------


@dataclass(frozen=True)
class PlanShow:
    object: str                  # TABLES | DATABASES | COLUMNS
    table: TableRef | None = None


@dataclass(frozen=True)
class PlanSelect:
    sql: str


@dataclass(frozen=True)
class PlanInsertValues:
    table: TableRef
    columns: tuple[str, ...]
    var_names: tuple[str, ...]


@dataclass(frozen=True)
class PlanInsertFiltered:
    table: TableRef
    columns: tuple[str, ...]
    var_names: tuple[str, ...]
    predicates: tuple[str, ...]


@dataclass(frozen=True)
class PlanUpdate:
    table: TableRef
    joins: tuple[JoinClause, ...]
    set_pairs: tuple[tuple[str, str], ...]   # (bare column, @variable)
    where_body: str | None                   # full conjoined predicate text


ExecPlan = PlanShow | PlanSelect | PlanInsertValues | PlanInsertFiltered | PlanUpdate


@dataclass
class TransformedScript:
    requested_sql: str
    set_statements: list[str]
    final_statement: str
    touched_tables: set[str]
    plan: ExecPlan
    kind: StatementKind = StatementKind.SELECT

    @property
    def executed_sql(self) -> str:
        return "\n".join([*self.set_statements, self.final_statement])


# --- variable bookkeeping ----------------------------------------------------


class _Bindings:
    def __init__(self):
        self.order: list[tuple[str, str]] = []   # (@name, SET text)
        self.by_name: dict[str, str] = {}        # casefold(@name) -> var field casefold
        self.var_for_field: dict[str, str] = {}  # casefold(field) -> @name

    def has(self, name: str) -> bool:
        return name.casefold() in self.by_name

    def bind(self, name: str, field_name: str, set_sql: str) -> None:
        self.order.append((name, set_sql))
        self.by_name[name.casefold()] = field_name.casefold()
        self.var_for_field[field_name.casefold()] = name

    def set_statements(self) -> list[str]:
        return [sql for _, sql in self.order]


def _set_from_value(name: str, value: ValueExpr) -> str:
    if value.is_subquery:
        return f"SET {name} = ({value.sql_text});"
    return f"SET {name} = {value.sql_text};"


def _qualify(fref: FieldRef, default_schema: str) -> FieldRef:
    if fref.schema is not None:
        return fref
    return FieldRef(fref.table, fref.field, default_schema)


def _predicate(r: Restriction) -> str:
    return f"{r.field} {r.use} ({r.sql})"


# --- rewrites ----------------------------------------------------------------


def rewrite_show(stmt: StatementAnalysis, index: int = 1) -> TransformedScript:
    """SHOW statements pass through untouched; no rules apply to them."""
    final = render(stmt)
    return TransformedScript(
        requested_sql=stmt.raw_text,
        set_statements=[],
        final_statement=final,
        touched_tables={t.table for t in stmt.target_tables},
        plan=PlanShow(stmt.show_object, stmt.show_table),
        kind=StatementKind.SHOW,
    )


def rewrite_select(
    stmt: StatementAnalysis,
    ela: ElaDocument,
    identity: RequesterIdentity,
    default_schema: str,
    index: int = 1,
) -> TransformedScript | Denial:
    """Check read permission per accessed field, then conjoin read rules.

    STAR projections must be expanded (see expand_star) before this runs.
    """
    if stmt.projection_is_star:
        raise ValueError("STAR projection must be expanded before rewriting")
    ordered = [p.field for p in stmt.projection if p.field is not None]
    rest = sorted(
        (f for f in stmt.accessed_fields if f not in set(ordered)),
        key=lambda f: ((f.schema or "").casefold(), f.table.casefold(), f.field.casefold()),
    )
    accessed_q = set()
    for fref in [*ordered, *rest]:
        fq = _qualify(fref, default_schema)
        accessed_q.add(fq)
        if lookup_permission(ela, identity, "SELECT", fq) is None:
            return Denial(
                index,
                "NoPermission",
                f"no SELECT permission for {fq.schema}.{fq.table}.{fq.field}"
                f" (statement {index})",
            )
    restrictions = collect_restrictions(ela, identity, "SELECT", accessed_q)
    for r in restrictions:
        if r.vars:
            return Denial(
                index,
                "UnresolvableVariable",
                f"read rule {r.id!r} requires variables, which a SELECT cannot bind",
            )
    preds = [_predicate(r) for r in restrictions]
    body_parts = []
    if stmt.where_text:
        body_parts.append(f"({stmt.where_text})")
    body_parts.extend(preds)

    cols = ", ".join(p.text for p in stmt.projection)
    parts = [f"SELECT {cols} FROM {stmt.target.rendered()}"]
    for j in stmt.joins:
        parts.append(f"{j.keyword} {j.table.rendered()} ON {j.on_text}")
    if body_parts:
        parts.append("WHERE " + " AND ".join(body_parts))
    if stmt.tail_text:
        parts.append(stmt.tail_text)
    final = " ".join(parts) + ";"
    return TransformedScript(
        requested_sql=stmt.raw_text,
        set_statements=[],
        final_statement=final,
        touched_tables={t.table for t in stmt.target_tables},
        plan=PlanSelect(final),
        kind=StatementKind.SELECT,
    )


def rewrite_insert(
    stmt: StatementAnalysis,
    ela: ElaDocument,
    identity: RequesterIdentity,
    default_schema: str,
    index: int = 1,
) -> TransformedScript | Denial:
    """Bind assigned values as variables; re-shape as a filtered INSERT when
    rules apply (INSERT ... SELECT vars FROM DUAL WHERE rule-predicates)."""
    target = stmt.target
    accessed_q = set()
    for a in stmt.assignment_list:
        fq = _qualify(a.field, default_schema)
        accessed_q.add(fq)
        if lookup_permission(ela, identity, "INSERT", fq) is None:
            return Denial(
                index,
                "NoPermission",
                f"no INSERT permission for {fq.schema}.{fq.table}.{fq.field}"
                f" (statement {index})",
            )
    denial = _check_read_side(stmt, ela, identity, default_schema, index)
    if denial is not None:
        return denial
    restrictions = collect_restrictions(ela, identity, "INSERT", accessed_q)

    assignment_by_field = {a.field.field.casefold(): a for a in stmt.assignment_list}
    bindings = _Bindings()
    for r in restrictions:
        for v in r.vars:
            if bindings.has(v.name):
                continue
            a = assignment_by_field.get(v.field.casefold())
            if a is None:
                return Denial(
                    index,
                    "UnresolvableVariable",
                    f"rule {r.id!r} requires {v.name} for column {v.field!r},"
                    f" which this INSERT does not assign",
                )
            bindings.bind(v.name, v.field, _set_from_value(v.name, a.value))
    denial = _bind_uncovered(stmt, bindings, index)
    if denial is not None:
        return denial

    columns = tuple(a.lhs_text for a in stmt.assignment_list)
    var_names = tuple(
        bindings.var_for_field[a.field.field.casefold()] for a in stmt.assignment_list
    )
    if restrictions:
        preds = tuple(_predicate(r) for r in restrictions)
        final = (
            f"INSERT INTO {target.rendered()} ({', '.join(columns)})"
            f" SELECT {', '.join(var_names)} FROM DUAL"
            f" WHERE {' AND '.join(preds)};"
        )
        plan: ExecPlan = PlanInsertFiltered(target, columns, var_names, preds)
    else:
        final = (
            f"INSERT INTO {target.rendered()} ({', '.join(columns)})"
            f" VALUES ({', '.join(var_names)});"
        )
        plan = PlanInsertValues(target, columns, var_names)
    return TransformedScript(
        requested_sql=stmt.raw_text,
        set_statements=bindings.set_statements(),
        final_statement=final,
        touched_tables={t.table for t in stmt.target_tables},
        plan=plan,
        kind=StatementKind.INSERT,
    )


def rewrite_update(
    stmt: StatementAnalysis,
    ela: ElaDocument,
    identity: RequesterIdentity,
    default_schema: str,
    index: int = 1,
) -> TransformedScript | Denial:
    """Bind assigned values, derive rule variables the statement does not
    assign, parenthesize the original WHERE and conjoin rule predicates."""
    accessed_q = set()
    for a in stmt.assignment_list:
        fq = _qualify(a.field, default_schema)
        accessed_q.add(fq)
        if lookup_permission(ela, identity, "UPDATE", fq) is None:
            return Denial(
                index,
                "NoPermission",
                f"no UPDATE permission for {fq.schema}.{fq.table}.{fq.field}"
                f" (statement {index})",
            )
    denial = _check_read_side(stmt, ela, identity, default_schema, index)
    if denial is not None:
        return denial
    restrictions = collect_restrictions(ela, identity, "UPDATE", accessed_q)

    assignment_by_field = {a.field.field.casefold(): a for a in stmt.assignment_list}
    bindings = _Bindings()
    where_override: str | None = None
    for r in restrictions:
        for v in r.vars:
            if bindings.has(v.name):
                continue
            a = assignment_by_field.get(v.field.casefold())
            if a is not None:
                bindings.bind(v.name, v.field, _set_from_value(v.name, a.value))
                continue
            try:
                set_sql, override = derive_variable(stmt, v)
            except UnresolvableVariableError as exc:
                return Denial(index, "UnresolvableVariable", exc.detail)
            bindings.bind(v.name, v.field, set_sql)
            if override is not None:
                where_override = override
    denial = _bind_uncovered(stmt, bindings, index)
    if denial is not None:
        return denial

    effective_where = where_override if where_override is not None else stmt.where_text
    preds = [_predicate(r) for r in restrictions]
    body_parts = []
    if effective_where:
        body_parts.append(f"({effective_where})")
    body_parts.extend(preds)

    set_pairs = tuple(
        (a.field.field, bindings.var_for_field[a.field.field.casefold()])
        for a in stmt.assignment_list
    )
    parts = [f"UPDATE {stmt.target.rendered()}"]
    for j in stmt.joins:
        parts.append(f"{j.keyword} {j.table.rendered()} ON {j.on_text}")
    parts.append(
        "SET "
        + ", ".join(
            f"{a.lhs_text} = {bindings.var_for_field[a.field.field.casefold()]}"
            for a in stmt.assignment_list
        )
    )
    where_body = " AND ".join(body_parts) if body_parts else None
    if where_body:
        parts.append(f"WHERE {where_body}")
    final = " ".join(parts) + ";"
    return TransformedScript(
        requested_sql=stmt.raw_text,
        set_statements=bindings.set_statements(),
        final_statement=final,
        touched_tables={t.table for t in stmt.target_tables},
        plan=PlanUpdate(stmt.target, tuple(stmt.joins), set_pairs, where_body),
        kind=StatementKind.UPDATE,
    )


def _check_read_side(
    stmt: StatementAnalysis,
    ela: ElaDocument,
    identity: RequesterIdentity,
    default_schema: str,
    index: int,
) -> Denial | None:
    """Fields a write statement reads (WHERE, JOIN, value sub-queries) need
    a read grant; otherwise a write becomes a channel for copying protected
    values into readable columns."""
    assigned = {_qualify(a.field, default_schema) for a in stmt.assignment_list}
    read_fields = sorted(
        (
            fq
            for fq in (_qualify(f, default_schema) for f in stmt.accessed_fields)
            if fq not in assigned
        ),
        key=lambda f: ((f.schema or "").casefold(), f.table.casefold(), f.field.casefold()),
    )
    for fq in read_fields:
        if lookup_permission(ela, identity, "SELECT", fq) is None:
            return Denial(
                index,
                "NoPermission",
                f"no SELECT permission for {fq.schema}.{fq.table}.{fq.field},"
                f" which statement {index} reads",
            )
    return None


def _bind_uncovered(stmt: StatementAnalysis, bindings: _Bindings, index: int) -> Denial | None:
    """Default-named bindings for assigned fields no rule variable covers."""
    for a in stmt.assignment_list:
        key = a.field.field.casefold()
        if key in bindings.var_for_field:
            continue
        name = "@" + a.field.field
        if bindings.has(name):
            return Denial(
                index,
                "UnresolvableVariable",
                f"variable name {name} is already bound to a different column",
            )
        bindings.bind(name, a.field.field, _set_from_value(name, a.value))
    return None


# --- variable derivation ------------------------------------------------------


def derive_variable(stmt: StatementAnalysis, var: VarBinding) -> tuple[str, str | None]:
    """Derive a SET statement for a rule variable the UPDATE does not assign.

    Resolution order:

    1. The whole WHERE clause is a direct equality on the variable's column:
       bind the literal itself and reference the variable from the WHERE.
    2. A JOIN maps the column through an ON equality: select the joined
       side from the joined table, scoped by the statement's WHERE.
    3. Fall back to the statement's own target table, scoped by its WHERE.

    Returns (SET text, optional WHERE replacement).  Raises
    UnresolvableVariableError when no route applies.
    """
    if stmt.kind is not StatementKind.UPDATE:
        raise UnresolvableVariableError(
            f"variable {var.name} can only be derived for UPDATE statements"
        )
    short = _whole_where_equality(stmt, var)
    if short is not None:
        lhs_text, literal_text = short
        return (
            f"SET {var.name} = {literal_text};",
            f"{lhs_text} = {var.name}",
        )
    joined = _join_mapped_source(stmt, var)
    if joined is not None:
        source_text, join_table = joined
        if not stmt.where_text:
            raise UnresolvableVariableError(
                f"variable {var.name} needs a WHERE clause to scope its derivation"
            )
        return (
            f"SET {var.name} = (SELECT {source_text} FROM {join_table.rendered()}"
            f" WHERE {stmt.where_text});",
            None,
        )
    if not stmt.where_text:
        raise UnresolvableVariableError(
            f"variable {var.name} (column {var.field!r}) cannot be derived:"
            f" the statement assigns no value and has no WHERE clause"
        )
    target = stmt.target
    prefix = f"{target.alias}." if target.alias else ""
    return (
        f"SET {var.name} = (SELECT {prefix}{var.field} FROM {target.rendered()}"
        f" WHERE {stmt.where_text});",
        None,
    )


def _whole_where_equality(
    stmt: StatementAnalysis, var: VarBinding
) -> tuple[str, str] | None:
    """Match a WHERE that is exactly ``[qual.]column = literal``."""
    if not stmt.where_text:
        return None
    tokens = tokenize(stmt.where_text)
    # shapes: IDENT = lit | IDENT . IDENT = lit
    if len(tokens) == 3:
        name_tokens, eq, lit = tokens[:1], tokens[1], tokens[2]
    elif len(tokens) == 5 and tokens[1].text == ".":
        name_tokens, eq, lit = tokens[:3], tokens[3], tokens[4]
    else:
        return None
    if eq.kind != PUNCT or eq.text != "=" or lit.kind not in (STRING, NUMBER):
        return None
    if name_tokens[0].kind != IDENT:
        return None
    column = name_tokens[-1].text
    if column.casefold() != var.field.casefold():
        return None
    if len(name_tokens) == 3:
        qualifier = name_tokens[0].text
        if not stmt.target.matches_name(qualifier):
            return None
    lhs_text = "".join(t.text for t in name_tokens)
    return lhs_text, lit.text


def _join_mapped_source(
    stmt: StatementAnalysis, var: VarBinding
) -> tuple[str, TableRef] | None:
    """Find a joined table supplying var.field through an ON equality."""
    target = stmt.target
    for j in stmt.joins:
        tokens = tokenize(j.on_text)
        split = next(
            (i for i, t in enumerate(tokens) if t.kind == PUNCT and t.text == "="),
            None,
        )
        if split is None:
            continue
        left = _as_column_ref(tokens[:split])
        right = _as_column_ref(tokens[split + 1 :])
        if left is None or right is None:
            continue
        for ours, theirs in ((left, right), (right, left)):
            qualifier, column = ours
            if column.casefold() != var.field.casefold():
                continue
            if qualifier is not None and not target.matches_name(qualifier):
                continue
            their_qualifier, their_column = theirs
            if their_qualifier is not None and not j.table.matches_name(their_qualifier):
                continue
            text = f"{their_qualifier}.{their_column}" if their_qualifier else their_column
            return text, j.table
    return None


def _as_column_ref(tokens) -> tuple[str | None, str] | None:
    if len(tokens) == 1 and tokens[0].kind == IDENT:
        return None, tokens[0].text
    if (
        len(tokens) == 3
        and tokens[0].kind == IDENT
        and tokens[1].kind == PUNCT
        and tokens[1].text == "."
        and tokens[2].kind == IDENT
    ):
        return tokens[0].text, tokens[2].text
    return None


# --- star expansion and dispatch ----------------------------------------------


def expand_star(stmt: StatementAnalysis, catalog_columns, default_schema: str) -> StatementAnalysis:
    """Expand ``SELECT *`` to the concrete catalog columns of every table
    in scope, in FROM order."""
    if not stmt.projection_is_star:
        return stmt
    many = len(stmt.target_tables) > 1
    projection: list[ProjectionItem] = []
    accessed = set(stmt.accessed_fields)
    for table in stmt.target_tables:
        schema = table.schema or default_schema
        for col in catalog_columns(schema, table.table):
            fref = FieldRef(table.table, col, table.schema)
            prefix = (table.alias or table.table) + "." if many else ""
            projection.append(ProjectionItem(f"{prefix}{col}", fref))
            accessed.add(fref)
    return replace(
        stmt, projection=projection, projection_is_star=False, accessed_fields=accessed
    )


def rewrite_statement(
    stmt: StatementAnalysis,
    ela: ElaDocument,
    identity: RequesterIdentity,
    default_schema: str,
    catalog_columns=None,
    index: int = 1,
) -> TransformedScript | Denial:
    if stmt.kind is StatementKind.SHOW:
        return rewrite_show(stmt, index)
    if stmt.kind is StatementKind.SELECT:
        if stmt.projection_is_star:
            if catalog_columns is None:
                raise ValueError("catalog access is required to expand SELECT *")
            stmt = expand_star(stmt, catalog_columns, default_schema)
        return rewrite_select(stmt, ela, identity, default_schema, index)
    if stmt.kind is StatementKind.INSERT:
        return rewrite_insert(stmt, ela, identity, default_schema, index)
    if stmt.kind is StatementKind.UPDATE:
        return rewrite_update(stmt, ela, identity, default_schema, index)
    return Denial(index, "UnsupportedKind", f"statement kind {stmt.kind} is not enforced")
