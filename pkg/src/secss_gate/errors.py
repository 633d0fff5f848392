"""Exception hierarchy shared across the gateway.

Every error carries a stable machine-readable ``code`` that ends up as the
prefix of the response Feedback string ("<code>: <detail>").
"""

from __future__ import annotations


class GateError(Exception):
    """Base class for all gateway errors."""

    code = "Error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    @property
    def feedback(self) -> str:
        return f"{self.code}: {self.detail}"


# --- SQL frontend ---------------------------------------------------------

class SqlSyntaxError(GateError):
    code = "SyntaxError"

    def __init__(self, detail: str, statement_index: int = 0, token: str | None = None):
        super().__init__(detail)
        self.statement_index = statement_index
        self.token = token


class UnsupportedStatementError(GateError):
    code = "UnsupportedStatement"

    def __init__(self, detail: str, statement_index: int = 0, token: str | None = None):
        super().__init__(detail)
        self.statement_index = statement_index
        self.token = token


class ReservedVariableError(GateError):
    code = "ReservedVariable"

    def __init__(self, detail: str, statement_index: int = 0, token: str | None = None):
        super().__init__(detail)
        self.statement_index = statement_index
        self.token = token


# --- ELA policy document --------------------------------------------------

class ElaError(GateError):
    code = "ElaError"


class XmlError(ElaError):
    code = "XmlError"


class DuplicateRestrictionIdError(ElaError):
    code = "DuplicateRestrictionId"


class DanglingRestrictionRefError(ElaError):
    code = "DanglingRestrictionRef"


class BadRestrictionTypeError(ElaError):
    code = "BadRestrictionType"


class BadUseClauseError(ElaError):
    code = "BadUseClause"


class UnboundVariableError(ElaError):
    code = "UnboundVariable"


class BadRestrictionSqlError(ElaError):
    code = "BadRestrictionSql"


class BadPermissionTypeError(ElaError):
    code = "BadPermissionType"


class VariableConflictError(ElaError):
    code = "VariableConflict"


# --- identity / signatures ------------------------------------------------

class BadSignatureError(GateError):
    code = "BadSignature"


class UntrustedSignerError(GateError):
    code = "UntrustedSigner"


class MalformedEnvelopeError(GateError):
    code = "MalformedEnvelope"


# --- backend ----------------------------------------------------------------

class BackendError(GateError):
    code = "BackendError"


class UnknownTableError(BackendError):
    code = "UnknownTable"
