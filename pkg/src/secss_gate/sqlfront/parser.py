"""Recursive-descent parser for the supported SQL subset.

Grammar (case-insensitive keywords):

    script    := statement (';' statement)* ';'?
    statement := show | select | insert | update
    show      := SHOW (TABLES | DATABASES | COLUMNS FROM ref)
    select    := SELECT ('*' | ref (',' ref)*) FROM table_ref join*
                 (WHERE span)? (ORDER BY ... | LIMIT ...)?
    insert    := INSERT INTO table_ref '(' ident (',' ident)* ')'
                 VALUES '(' value (',' value)* ')'
    update    := UPDATE table_ref join* SET ref '=' value
                 (',' ref '=' value)* (WHERE span)?
    join      := (LEFT|RIGHT|INNER|CROSS)? OUTER? JOIN table_ref ON span
    value     := string | number | NULL | '(' select ')'

WHERE / ON predicates and the ORDER BY / LIMIT tail are captured as
verbatim text spans; they are only tokenized to find span boundaries, to
extract the column references they touch, and to reject reserved
@variables.  Scalar sub-queries inside spans and values are parsed
recursively so their column accesses are attributed correctly.
"""

from __future__ import annotations

from ..errors import ReservedVariableError, SqlSyntaxError, UnsupportedStatementError
from .model import (
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
from .tokens import IDENT, NUMBER, PUNCT, STRING, VARIABLE, Token, tokenize

_SUPPORTED = {"SHOW", "SELECT", "INSERT", "UPDATE"}

# Keywords that may appear inside predicate spans but never name a column.
_SPAN_KEYWORDS = {
    "AND", "OR", "NOT", "IN", "IS", "NULL", "LIKE", "BETWEEN", "EXISTS",
    "ASC", "DESC", "ORDER", "BY", "LIMIT", "OFFSET", "AS", "ON", "TRUE",
    "FALSE", "DISTINCT", "SELECT", "FROM", "WHERE",
}

_JOIN_START = {"JOIN", "LEFT", "RIGHT", "INNER", "CROSS"}

_SET_OPERATIONS = {"UNION", "INTERSECT", "EXCEPT"}


class _Scope:
    """Relations visible to a statement, chained for nested sub-queries."""

    def __init__(self, tables: list[TableRef], parent: "_Scope | None" = None):
        self.tables = tables
        self.parent = parent

    def resolve(self, name: str) -> TableRef | None:
        for t in self.tables:
            if t.matches_name(name):
                return t
        if self.parent is not None:
            return self.parent.resolve(name)
        return None

    def sole_table(self) -> TableRef | None:
        if len(self.tables) == 1:
            return self.tables[0]
        return None


class _Cursor:
    def __init__(self, tokens: list[Token], source: str, index: int):
        self.tokens = tokens
        self.source = source
        self.index = index  # 1-based statement index, for error messages
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token | None:
        p = self.pos + ahead
        return self.tokens[p] if p < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise SqlSyntaxError(
                f"statement {self.index}: unexpected end of statement",
                statement_index=self.index,
            )
        self.pos += 1
        return tok

    def expect_keyword(self, word: str) -> Token:
        tok = self.next()
        if tok.kind != IDENT or tok.upper() != word:
            raise SqlSyntaxError(
                f"statement {self.index}: expected {word}, found {tok.text!r}",
                statement_index=self.index,
                token=tok.text,
            )
        return tok

    def expect_punct(self, text: str) -> Token:
        tok = self.next()
        if tok.kind != PUNCT or tok.text != text:
            raise SqlSyntaxError(
                f"statement {self.index}: expected {text!r}, found {tok.text!r}",
                statement_index=self.index,
                token=tok.text,
            )
        return tok

    def keyword_ahead(self, word: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.kind == IDENT and tok.upper() == word

    def punct_ahead(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok is not None and tok.kind == PUNCT and tok.text == text

    def span_text(self, start: int, stop: int) -> str:
        """Verbatim source between token positions [start, stop)."""
        if start >= stop:
            return ""
        a = self.tokens[start].start
        b = self.tokens[stop - 1].end
        return self.source[a:b]

    def error(self, message: str, token: str | None = None) -> SqlSyntaxError:
        return SqlSyntaxError(
            f"statement {self.index}: {message}",
            statement_index=self.index,
            token=token,
        )


_MAX_NESTING = 32


def parse_script(text: str, allow_variables: bool = False) -> SqlScript:
    """Parse a possibly multi-statement request.

    Raises SqlSyntaxError, UnsupportedStatementError or
    ReservedVariableError; never drops a statement silently.
    """
    if not text or not text.strip():
        raise SqlSyntaxError("empty request", statement_index=1)
    tokens = tokenize(text)
    depth = 0
    for tok in tokens:
        if tok.kind == PUNCT and tok.text == "(":
            depth += 1
            if depth > _MAX_NESTING:
                raise SqlSyntaxError(
                    f"expression nesting exceeds {_MAX_NESTING} levels", statement_index=1
                )
        elif tok.kind == PUNCT and tok.text == ")":
            depth = max(0, depth - 1)
    groups: list[tuple[list[Token], str]] = []
    current: list[Token] = []
    for tok in tokens:
        if tok.kind == PUNCT and tok.text == ";":
            if current:
                raw = text[current[0].start : tok.end]
                groups.append((current, raw))
                current = []
            continue
        current.append(tok)
    if current:
        groups.append((current, text[current[0].start : current[-1].end]))
    if not groups:
        raise SqlSyntaxError("empty request", statement_index=1)

    statements = []
    for i, (group, raw) in enumerate(groups, start=1):
        statements.append(_parse_statement(group, raw, text, i, allow_variables))
    return SqlScript(raw_text=text, statements=statements)


def parse_single_select(text: str, allow_variables: bool = False) -> StatementAnalysis:
    """Parse *text* and require exactly one SELECT statement."""
    script = parse_script(text, allow_variables=allow_variables)
    if len(script.statements) != 1 or script.statements[0].kind is not StatementKind.SELECT:
        raise SqlSyntaxError("expected a single SELECT statement", statement_index=1)
    return script.statements[0]


def _parse_statement(
    tokens: list[Token], raw: str, source: str, index: int, allow_variables: bool
) -> StatementAnalysis:
    head = tokens[0]
    if head.kind != IDENT:
        raise SqlSyntaxError(
            f"statement {index}: must begin with a statement keyword, found {head.text!r}",
            statement_index=index,
            token=head.text,
        )
    kind = head.upper()
    if kind not in _SUPPORTED:
        raise UnsupportedStatementError(
            f"statement {index}: unsupported statement kind {head.text!r}",
            statement_index=index,
            token=head.text,
        )
    if not allow_variables:
        for tok in tokens:
            if tok.kind == VARIABLE:
                raise ReservedVariableError(
                    f"statement {index}: session variable {tok.text!r} is reserved",
                    statement_index=index,
                    token=tok.text,
                )
    cur = _Cursor(tokens, source, index)
    if kind == "SHOW":
        stmt = _parse_show(cur, raw)
    elif kind == "SELECT":
        stmt = _parse_select(cur, raw, parent_scope=None)
        if not cur.at_end():
            raise cur.error(f"unexpected trailing token {cur.peek().text!r}", cur.peek().text)
    elif kind == "INSERT":
        stmt = _parse_insert(cur, raw)
    else:
        stmt = _parse_update(cur, raw)
    return stmt


# --- helpers ---------------------------------------------------------------


def _parse_name_parts(cur: _Cursor) -> list[str]:
    parts = [cur.next()]
    if parts[0].kind != IDENT:
        raise cur.error(f"expected a name, found {parts[0].text!r}", parts[0].text)
    names = [parts[0].text]
    while cur.punct_ahead("."):
        cur.next()
        nxt = cur.next()
        if nxt.kind != IDENT:
            raise cur.error(f"expected a name after '.', found {nxt.text!r}", nxt.text)
        names.append(nxt.text)
    if len(names) > 3:
        raise cur.error("too many '.'-qualifiers in name")
    return names


def _parse_table_ref(cur: _Cursor, stop_words: set[str]) -> TableRef:
    names = _parse_name_parts(cur)
    if len(names) == 3:
        raise cur.error("table reference cannot have three qualifiers")
    schema, table = (names[0], names[1]) if len(names) == 2 else (None, names[0])
    alias = None
    if cur.keyword_ahead("AS"):
        cur.next()
        tok = cur.next()
        if tok.kind != IDENT:
            raise cur.error(f"expected alias after AS, found {tok.text!r}", tok.text)
        alias = tok.text
    else:
        tok = cur.peek()
        if tok is not None and tok.kind == IDENT and tok.upper() not in stop_words:
            alias = cur.next().text
    return TableRef(table, alias=alias, schema=schema)


def _resolve_field(cur: _Cursor, names: list[str], scope: _Scope) -> FieldRef:
    if len(names) == 1:
        table = scope.sole_table()
        if table is None:
            raise cur.error(
                f"column {names[0]!r} must be table-qualified here (multiple tables in scope)"
            )
        return FieldRef(table.table, names[0], table.schema)
    if len(names) == 2:
        rel = scope.resolve(names[0])
        if rel is None:
            raise cur.error(f"unknown table or alias {names[0]!r}", names[0])
        return FieldRef(rel.table, names[1], rel.schema)
    # schema.table.field: the pair must be in scope
    want_schema, want_table = names[0].casefold(), names[1].casefold()
    probe: _Scope | None = scope
    while probe is not None:
        for t in probe.tables:
            if (
                t.table.casefold() == want_table
                and (t.schema or "").casefold() == want_schema
            ):
                return FieldRef(t.table, names[2], t.schema)
        probe = probe.parent
    raise cur.error(f"table {names[0]}.{names[1]} is not part of this statement")


def _find_matching_paren(cur: _Cursor, open_pos: int) -> int:
    depth = 0
    p = open_pos
    while p < len(cur.tokens):
        tok = cur.tokens[p]
        if tok.kind == PUNCT and tok.text == "(":
            depth += 1
        elif tok.kind == PUNCT and tok.text == ")":
            depth -= 1
            if depth == 0:
                return p
        p += 1
    raise cur.error("unbalanced parentheses")


def _parse_nested_select(
    cur: _Cursor, open_pos: int, close_pos: int, parent_scope: _Scope | None
) -> StatementAnalysis:
    inner = cur.tokens[open_pos + 1 : close_pos]
    if not inner:
        raise cur.error("empty sub-query")
    sub = _Cursor(inner, cur.source, cur.index)
    stmt = _parse_select(sub, cur.span_text(open_pos + 1, close_pos), parent_scope)
    if not sub.at_end():
        raise cur.error(f"unexpected token {sub.peek().text!r} in sub-query", sub.peek().text)
    return stmt


def _span_fields(
    cur: _Cursor, start: int, stop: int, scope: _Scope, accessed: set[FieldRef]
) -> None:
    """Collect column references from a verbatim span's tokens."""
    p = start
    while p < stop:
        tok = cur.tokens[p]
        if tok.kind == PUNCT and tok.text == "(":
            nxt = cur.tokens[p + 1] if p + 1 < stop else None
            if nxt is not None and nxt.kind == IDENT and nxt.upper() == "SELECT":
                close = _find_matching_paren(cur, p)
                sub = _parse_nested_select(cur, p, close, scope)
                accessed.update(sub.accessed_fields)
                p = close + 1
                continue
            p += 1
            continue
        if tok.kind == IDENT:
            if tok.upper() in _SPAN_KEYWORDS:
                p += 1
                continue
            # function call: skip the name, arguments are walked normally
            nxt = cur.tokens[p + 1] if p + 1 < stop else None
            if nxt is not None and nxt.kind == PUNCT and nxt.text == "(":
                p += 1
                continue
            names = [tok.text]
            q = p + 1
            while (
                q + 1 < stop
                and cur.tokens[q].kind == PUNCT
                and cur.tokens[q].text == "."
                and cur.tokens[q + 1].kind == IDENT
            ):
                names.append(cur.tokens[q + 1].text)
                q += 2
            sub_cur = _Cursor(cur.tokens, cur.source, cur.index)
            sub_cur.pos = p
            accessed.add(_resolve_field(sub_cur, names, scope))
            p = q
            continue
        p += 1
    return


def _capture_span(cur: _Cursor, stop_keywords: set[str]) -> tuple[int, int]:
    """Advance until a depth-0 stop keyword or end; return token range."""
    start = cur.pos
    depth = 0
    while not cur.at_end():
        tok = cur.peek()
        if tok.kind == PUNCT and tok.text == "(":
            depth += 1
        elif tok.kind == PUNCT and tok.text == ")":
            depth -= 1
            if depth < 0:
                raise cur.error("unbalanced parentheses")
        elif depth == 0 and tok.kind == IDENT and tok.upper() in stop_keywords:
            break
        cur.next()
    if cur.pos == start:
        raise cur.error("empty predicate")
    return start, cur.pos


def _parse_value(cur: _Cursor, scope: _Scope, accessed: set[FieldRef]) -> ValueExpr:
    tok = cur.peek()
    if tok is None:
        raise cur.error("expected a value")
    if tok.kind == STRING:
        cur.next()
        return ValueExpr("string", tok.text)
    if tok.kind == NUMBER:
        cur.next()
        return ValueExpr("number", tok.text)
    if tok.kind == PUNCT and tok.text == "-":
        cur.next()
        num = cur.next()
        if num.kind != NUMBER:
            raise cur.error(f"expected a number after '-', found {num.text!r}", num.text)
        return ValueExpr("number", "-" + num.text)
    if tok.kind == IDENT and tok.upper() == "NULL":
        cur.next()
        return ValueExpr("null", "NULL")
    if tok.kind == PUNCT and tok.text == "(":
        nxt = cur.peek(1)
        if nxt is not None and nxt.kind == IDENT and nxt.upper() == "SELECT":
            close = _find_matching_paren(cur, cur.pos)
            sub = _parse_nested_select(cur, cur.pos, close, scope)
            accessed.update(sub.accessed_fields)
            text = cur.span_text(cur.pos + 1, close).strip()
            cur.pos = close + 1
            return ValueExpr("subquery", text)
        raise cur.error("only scalar SELECT sub-queries may be parenthesized values")
    raise cur.error(f"unsupported value {tok.text!r}", tok.text)


def _parse_joins(cur: _Cursor, scope: _Scope, stop_words: set[str]) -> list[JoinClause]:
    joins: list[JoinClause] = []
    while not cur.at_end() and cur.peek().kind == IDENT and cur.peek().upper() in _JOIN_START:
        kw_tokens = [cur.next()]
        while not cur.at_end() and cur.peek().kind == IDENT and cur.peek().upper() in {"OUTER", "JOIN"}:
            kw_tokens.append(cur.next())
            if kw_tokens[-1].upper() == "JOIN":
                break
        if kw_tokens[-1].upper() != "JOIN":
            raise cur.error("malformed JOIN clause")
        keyword = " ".join(t.text for t in kw_tokens)
        table = _parse_table_ref(cur, stop_words | {"ON"})
        if any(t.effective_name() == table.effective_name() for t in scope.tables):
            raise cur.error(f"duplicate table name or alias {table.effective_name()!r}")
        scope.tables.append(table)
        cur.expect_keyword("ON")
        start, stop = _capture_span(cur, stop_words | _JOIN_START | _SET_OPERATIONS)
        joins.append(JoinClause(keyword, table, cur.span_text(start, stop).strip()))
        # field extraction is deferred; the caller walks ON spans once the
        # full scope (all joined tables) is known
    return joins


# --- statement parsers ------------------------------------------------------


def _parse_show(cur: _Cursor, raw: str) -> StatementAnalysis:
    cur.expect_keyword("SHOW")
    tok = cur.next()
    word = tok.upper() if tok.kind == IDENT else ""
    if word in {"TABLES", "DATABASES"}:
        if not cur.at_end():
            raise cur.error(f"unexpected token {cur.peek().text!r} after SHOW {word}")
        return StatementAnalysis(
            kind=StatementKind.SHOW, raw_text=raw, show_object=word
        )
    if word == "COLUMNS":
        cur.expect_keyword("FROM")
        table = _parse_table_ref(cur, set())
        if not cur.at_end():
            raise cur.error(f"unexpected token {cur.peek().text!r}")
        return StatementAnalysis(
            kind=StatementKind.SHOW,
            raw_text=raw,
            show_object="COLUMNS",
            show_table=table,
            target_tables=[table],
        )
    raise cur.error(f"unsupported SHOW form {tok.text!r}", tok.text)


def _parse_select(
    cur: _Cursor, raw: str, parent_scope: _Scope | None
) -> StatementAnalysis:
    cur.expect_keyword("SELECT")
    star = False
    item_slices: list[tuple[int, int, bool]] = []
    if cur.punct_ahead("*"):
        cur.next()
        star = True
    else:
        while True:
            start = cur.pos
            _parse_name_parts(cur)
            is_function = False
            if cur.punct_ahead("("):
                # function expression, e.g. YEAR(FROM_DAYS(...))
                close = _find_matching_paren(cur, cur.pos)
                cur.pos = close + 1
                is_function = True
            item_slices.append((start, cur.pos, is_function))
            if cur.punct_ahead(","):
                cur.next()
                continue
            break
    cur.expect_keyword("FROM")
    stop_words = {"WHERE", "ORDER", "LIMIT"}
    target = _parse_table_ref(cur, stop_words | _JOIN_START | _SET_OPERATIONS)
    scope = _Scope([target], parent_scope)
    joins = _parse_joins(cur, scope, stop_words)

    accessed: set[FieldRef] = set()
    where_text = None
    if cur.keyword_ahead("WHERE"):
        cur.next()
        start, stop = _capture_span(cur, {"ORDER", "LIMIT"} | _SET_OPERATIONS)
        where_text = cur.span_text(start, stop).strip()
        _span_fields(cur, start, stop, scope, accessed)

    tail_text = None
    if not cur.at_end():
        tok = cur.peek()
        if tok.kind == IDENT and tok.upper() in _SET_OPERATIONS:
            raise UnsupportedStatementError(
                f"statement {cur.index}: set operations ({tok.text.upper()}) are not supported",
                statement_index=cur.index,
                token=tok.text,
            )
        if tok.kind == IDENT and tok.upper() in {"ORDER", "LIMIT"}:
            start = cur.pos
            while not cur.at_end():
                nxt = cur.peek()
                if nxt.kind == IDENT and nxt.upper() in _SET_OPERATIONS:
                    raise UnsupportedStatementError(
                        f"statement {cur.index}: set operations are not supported",
                        statement_index=cur.index,
                        token=nxt.text,
                    )
                cur.next()
            tail_text = cur.span_text(start, cur.pos).strip()
            _span_fields(cur, start, cur.pos, scope, accessed)

    projection: list[ProjectionItem] | None = None
    if not star:
        projection = []
        for a, b, is_function in item_slices:
            text = cur.span_text(a, b).strip()
            if is_function:
                _span_fields(cur, a, b, scope, accessed)
                projection.append(ProjectionItem(text, None))
                continue
            names_cur = _Cursor(cur.tokens, cur.source, cur.index)
            names_cur.pos = a
            names = _parse_name_parts(names_cur)
            field = _resolve_field(cur, names, scope)
            projection.append(ProjectionItem(text, field))
            accessed.add(field)

    for j in joins:
        # ON spans were captured before all tables were in scope; walk now
        on_tokens = tokenize(j.on_text)
        on_cur = _Cursor(on_tokens, j.on_text, cur.index)
        _span_fields(on_cur, 0, len(on_tokens), scope, accessed)

    return StatementAnalysis(
        kind=StatementKind.SELECT,
        raw_text=raw,
        target_tables=[target] + [j.table for j in joins],
        accessed_fields=accessed,
        where_text=where_text,
        joins=joins,
        projection=projection,
        projection_is_star=star,
        tail_text=tail_text,
    )


def _parse_insert(cur: _Cursor, raw: str) -> StatementAnalysis:
    cur.expect_keyword("INSERT")
    cur.expect_keyword("INTO")
    target = _parse_table_ref(cur, {"VALUES"})
    if target.alias is not None:
        raise cur.error("INSERT target cannot take an alias")
    tok = cur.peek()
    if tok is not None and tok.kind == IDENT and tok.upper() == "SELECT":
        raise UnsupportedStatementError(
            f"statement {cur.index}: INSERT ... SELECT is not supported",
            statement_index=cur.index,
            token=tok.text,
        )
    cur.expect_punct("(")
    columns: list[str] = []
    while True:
        col = cur.next()
        if col.kind != IDENT:
            raise cur.error(f"expected a column name, found {col.text!r}", col.text)
        columns.append(col.text)
        if cur.punct_ahead(","):
            cur.next()
            continue
        break
    cur.expect_punct(")")
    tok = cur.peek()
    if tok is not None and tok.kind == IDENT and tok.upper() == "SELECT":
        raise UnsupportedStatementError(
            f"statement {cur.index}: INSERT ... SELECT is not supported",
            statement_index=cur.index,
            token=tok.text,
        )
    cur.expect_keyword("VALUES")
    cur.expect_punct("(")
    scope = _Scope([target], None)
    accessed: set[FieldRef] = set()
    values: list[ValueExpr] = []
    while True:
        values.append(_parse_value(cur, scope, accessed))
        if cur.punct_ahead(","):
            cur.next()
            continue
        break
    cur.expect_punct(")")
    if cur.punct_ahead(","):
        raise UnsupportedStatementError(
            f"statement {cur.index}: multi-row INSERT is not supported",
            statement_index=cur.index,
            token=",",
        )
    if not cur.at_end():
        raise cur.error(f"unexpected trailing token {cur.peek().text!r}", cur.peek().text)
    if len(columns) != len(values):
        raise cur.error(
            f"column list names {len(columns)} column(s) but {len(values)} value(s) given"
        )
    assignments = []
    for col, val in zip(columns, values):
        field = FieldRef(target.table, col, target.schema)
        assignments.append(Assignment(col, field, val))
        accessed.add(field)
    return StatementAnalysis(
        kind=StatementKind.INSERT,
        raw_text=raw,
        target_tables=[target],
        accessed_fields=accessed,
        assignment_list=assignments,
    )


def _parse_update(cur: _Cursor, raw: str) -> StatementAnalysis:
    cur.expect_keyword("UPDATE")
    stop_words = {"SET", "WHERE"}
    target = _parse_table_ref(cur, stop_words | _JOIN_START)
    scope = _Scope([target], None)
    joins = _parse_joins(cur, scope, stop_words)
    cur.expect_keyword("SET")
    accessed: set[FieldRef] = set()
    assignments: list[Assignment] = []
    while True:
        start = cur.pos
        names = _parse_name_parts(cur)
        lhs_text = cur.span_text(start, cur.pos).strip()
        field = _resolve_field(cur, names, scope)
        if field.table.casefold() != target.table.casefold():
            raise cur.error(
                f"can only assign columns of the update target, not {lhs_text!r}"
            )
        cur.expect_punct("=")
        value = _parse_value(cur, scope, accessed)
        assignments.append(Assignment(lhs_text, field, value))
        accessed.add(field)
        if cur.punct_ahead(","):
            cur.next()
            continue
        break
    where_text = None
    if cur.keyword_ahead("WHERE"):
        cur.next()
        start, stop = _capture_span(cur, set())
        where_text = cur.span_text(start, stop).strip()
        _span_fields(cur, start, stop, scope, accessed)
    if not cur.at_end():
        raise cur.error(f"unexpected trailing token {cur.peek().text!r}", cur.peek().text)
    for j in joins:
        on_tokens = tokenize(j.on_text)
        on_cur = _Cursor(on_tokens, j.on_text, cur.index)
        _span_fields(on_cur, 0, len(on_tokens), scope, accessed)
    return StatementAnalysis(
        kind=StatementKind.UPDATE,
        raw_text=raw,
        target_tables=[target] + [j.table for j in joins],
        accessed_fields=accessed,
        assignment_list=assignments,
        where_text=where_text,
        joins=joins,
    )
