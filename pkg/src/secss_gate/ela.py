"""The Electronic Legal Act: parsing, validation and permission lookup.

The ELA is a publicly readable XML document carrying two things: a list of
restrictions (rules expressed as SQL sub-queries plus an IN / NOT IN
membership test) and a permission tree regulating access per schema, table
and field.  Absence of an explicit field permission means denial.

Document grammar::

    <Configuration>
      <Connection>...</Connection>
      <Restrictions>
        <Restriction Id=".." type="SELECT|INSERT/UPDATE" table=".."
                     field=".." use="IN|NOT IN">
          <var field=".." name="@.."/> ...
          <sql><![CDATA[ SELECT ... ]]></sql>
          <justification>...</justification>
        </Restriction> ...
      </Restrictions>
      <Permissions>
        <Schema name="..">
          <Table name="..">
            <Field name="..">
              <Permission user=".." type="SELECT|INSERT|UPDATE|DELETE">
                <Apply-Restriction ref="#Id"/> ...
              </Permission> ...
            </Field> ...
          </Table> ...
        </Schema> ...
      </Permissions>
    </Configuration>
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import (
    BadPermissionTypeError,
    BadRestrictionSqlError,
    BadRestrictionTypeError,
    BadUseClauseError,
    DanglingRestrictionRefError,
    DuplicateRestrictionIdError,
    GateError,
    UnboundVariableError,
    VariableConflictError,
    XmlError,
)
from .sqlfront import FieldRef, parse_single_select
from .sqlfront.tokens import VARIABLE, tokenize

if TYPE_CHECKING:
    from .identity import RequesterIdentity

RESTRICTION_TYPES = {"SELECT", "INSERT/UPDATE"}
PERMISSION_TYPES = {"SELECT", "INSERT", "UPDATE", "DELETE"}
USE_CLAUSES = {"IN", "NOT IN"}
ANON_USER = "anon"

# Statement kinds the gateway actually enforces; the rest is carried and
# reported by the validator as declared-but-not-enforced.
ENFORCED_PERMISSION_TYPES = {"SELECT", "INSERT", "UPDATE"}


@dataclass(frozen=True)
class VarBinding:
    field: str
    name: str  # includes the leading '@'


@dataclass(frozen=True)
class Restriction:
    id: str
    type: str
    table: str
    field: str
    use: str
    vars: tuple[VarBinding, ...]
    sql: str
    justification: str = ""

    @property
    def is_write_rule(self) -> bool:
        return self.type == "INSERT/UPDATE"


@dataclass(frozen=True)
class Permission:
    user: str
    type: str
    applied_restrictions: tuple[str, ...] = ()

    @property
    def enforced(self) -> bool:
        return self.type in ENFORCED_PERMISSION_TYPES and not self.user.startswith("@")


@dataclass
class FieldEntry:
    name: str
    permissions: list[Permission] = dc_field(default_factory=list)


@dataclass
class TableEntry:
    name: str
    fields: dict[str, FieldEntry] = dc_field(default_factory=dict)  # casefold key


@dataclass
class SchemaEntry:
    name: str
    tables: dict[str, TableEntry] = dc_field(default_factory=dict)


@dataclass
class ElaDocument:
    connection: str
    restrictions: dict[str, Restriction]       # insertion = document order
    schemas: dict[str, SchemaEntry]
    raw_bytes: bytes
    warnings: list[str] = dc_field(default_factory=list)

    def field_entry(self, fref: FieldRef) -> FieldEntry | None:
        if fref.schema is None:
            return None
        schema = self.schemas.get(fref.schema.casefold())
        if schema is None:
            return None
        table = schema.tables.get(fref.table.casefold())
        if table is None:
            return None
        return table.fields.get(fref.field.casefold())


def parse_ela(xml: bytes) -> ElaDocument:
    """Parse and fully validate an ELA document."""
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise XmlError(f"not well-formed XML: {exc}") from exc
    if root.tag != "Configuration":
        raise XmlError(f"root element must be Configuration, found {root.tag!r}")

    connection = (root.findtext("Connection") or "").strip()
    warnings: list[str] = []

    restrictions: dict[str, Restriction] = {}
    var_fields: dict[str, str] = {}  # @name -> var field (casefold), global
    restrictions_el = root.find("Restrictions")
    if restrictions_el is not None:
        for el in restrictions_el:
            if el.tag != "Restriction":
                raise XmlError(f"unexpected element {el.tag!r} in Restrictions")
            r = _parse_restriction(el)
            if r.id in restrictions:
                raise DuplicateRestrictionIdError(f"restriction id {r.id!r} declared twice")
            for v in r.vars:
                prior = var_fields.get(v.name.casefold())
                if prior is not None and prior != v.field.casefold():
                    raise VariableConflictError(
                        f"variable {v.name} bound to field {v.field!r} in restriction"
                        f" {r.id!r} but to a different field elsewhere"
                    )
                var_fields[v.name.casefold()] = v.field.casefold()
            restrictions[r.id] = r

    schemas: dict[str, SchemaEntry] = {}
    permissions_el = root.find("Permissions")
    if permissions_el is not None:
        for schema_el in permissions_el:
            if schema_el.tag != "Schema":
                raise XmlError(f"unexpected element {schema_el.tag!r} in Permissions")
            schema_name = _required_attr(schema_el, "name")
            schema = schemas.setdefault(schema_name.casefold(), SchemaEntry(schema_name))
            for table_el in schema_el:
                if table_el.tag != "Table":
                    raise XmlError(f"unexpected element {table_el.tag!r} in Schema")
                table_name = _required_attr(table_el, "name")
                table = schema.tables.setdefault(table_name.casefold(), TableEntry(table_name))
                for field_el in table_el:
                    if field_el.tag != "Field":
                        raise XmlError(f"unexpected element {field_el.tag!r} in Table")
                    field_name = _required_attr(field_el, "name")
                    entry = table.fields.setdefault(field_name.casefold(), FieldEntry(field_name))
                    for perm_el in field_el:
                        if perm_el.tag != "Permission":
                            raise XmlError(f"unexpected element {perm_el.tag!r} in Field")
                        perm = _parse_permission(perm_el, restrictions, warnings, at=(
                            f"{schema_name}.{table_name}.{field_name}"
                        ))
                        entry.permissions.append(perm)

    doc = ElaDocument(
        connection=connection,
        restrictions=restrictions,
        schemas=schemas,
        raw_bytes=bytes(xml),
        warnings=warnings,
    )
    _warn_unreferenced(doc)
    return doc


def _required_attr(el: ET.Element, name: str) -> str:
    value = el.get(name)
    if value is None or not value.strip():
        raise XmlError(f"element {el.tag} is missing attribute {name!r}")
    return value.strip()


def _parse_restriction(el: ET.Element) -> Restriction:
    rid = el.get("Id")
    if rid is None or not rid.strip():
        raise XmlError("Restriction is missing attribute 'Id'")
    rid = rid.strip()
    rtype = _required_attr(el, "type")
    if rtype not in RESTRICTION_TYPES:
        raise BadRestrictionTypeError(
            f"restriction {rid!r}: type must be SELECT or INSERT/UPDATE, found {rtype!r}"
        )
    table = _required_attr(el, "table")
    field = _required_attr(el, "field")
    use = _required_attr(el, "use")
    if use not in USE_CLAUSES:
        raise BadUseClauseError(f"restriction {rid!r}: use must be IN or NOT IN, found {use!r}")

    vars_: list[VarBinding] = []
    seen_names: set[str] = set()
    for var_el in el.findall("var"):
        v_field = _required_attr(var_el, "field")
        v_name = _required_attr(var_el, "name")
        if not v_name.startswith("@"):
            raise XmlError(f"restriction {rid!r}: var name {v_name!r} must start with '@'")
        if v_name.casefold() in seen_names:
            raise XmlError(f"restriction {rid!r}: duplicate var {v_name!r}")
        seen_names.add(v_name.casefold())
        vars_.append(VarBinding(v_field, v_name))

    sql_el = el.find("sql")
    if sql_el is None or sql_el.text is None or not sql_el.text.strip():
        raise XmlError(f"restriction {rid!r} is missing its sql element")
    sql = sql_el.text.strip()
    try:
        parse_single_select(sql, allow_variables=True)
    except GateError as exc:
        raise BadRestrictionSqlError(
            f"restriction {rid!r}: sql is not a single SELECT ({exc.detail})"
        ) from exc

    referenced = {tok.text.casefold() for tok in tokenize(sql) if tok.kind == VARIABLE}
    if rtype == "INSERT/UPDATE":
        if not field.startswith("@"):
            raise BadRestrictionTypeError(
                f"restriction {rid!r}: INSERT/UPDATE restrictions test a @variable,"
                f" found {field!r}"
            )
        referenced.add(field.casefold())
    elif field.startswith("@"):
        raise BadRestrictionTypeError(
            f"restriction {rid!r}: SELECT restrictions test a column, found {field!r}"
        )
    unbound = referenced - seen_names
    if unbound:
        raise UnboundVariableError(
            f"restriction {rid!r}: variable {sorted(unbound)[0]!r} is not declared in vars"
        )

    justification = (el.findtext("justification") or "").strip()
    return Restriction(rid, rtype, table, field, use, tuple(vars_), sql, justification)


def _parse_permission(
    el: ET.Element,
    restrictions: dict[str, Restriction],
    warnings: list[str],
    at: str,
) -> Permission:
    user = _required_attr(el, "user")
    ptype = _required_attr(el, "type")
    if ptype not in PERMISSION_TYPES:
        raise BadPermissionTypeError(
            f"permission on {at}: type must be one of {sorted(PERMISSION_TYPES)},"
            f" found {ptype!r}"
        )
    applied: list[str] = []
    for ref_el in el.findall("Apply-Restriction"):
        ref = _required_attr(ref_el, "ref")
        if not ref.startswith("#"):
            raise DanglingRestrictionRefError(
                f"permission on {at}: ref {ref!r} must point at a '#'-prefixed restriction id"
            )
        rid = ref[1:]
        restriction = restrictions.get(rid)
        if restriction is None:
            raise DanglingRestrictionRefError(
                f"permission on {at}: no restriction with id {rid!r}"
            )
        if ptype == "SELECT" and restriction.type != "SELECT":
            raise BadRestrictionTypeError(
                f"permission on {at}: SELECT permission cannot apply"
                f" {restriction.type} restriction {rid!r}"
            )
        if ptype in {"INSERT", "UPDATE"} and restriction.type != "INSERT/UPDATE":
            raise BadRestrictionTypeError(
                f"permission on {at}: {ptype} permission cannot apply"
                f" {restriction.type} restriction {rid!r}"
            )
        applied.append(rid)
    perm = Permission(user, ptype, tuple(applied))
    if ptype == "DELETE":
        warnings.append(f"{at}: DELETE permission for {user!r} is declared but not enforced")
    if user.startswith("@"):
        warnings.append(
            f"{at}: field-stored identity {user!r} is declared but not enforced"
        )
    return perm


def _warn_unreferenced(doc: ElaDocument) -> None:
    referenced: set[str] = set()
    for schema in doc.schemas.values():
        for table in schema.tables.values():
            for entry in table.fields.values():
                for perm in entry.permissions:
                    referenced.update(perm.applied_restrictions)
    for rid in doc.restrictions:
        if rid not in referenced:
            doc.warnings.append(f"restriction {rid!r} is never applied by any permission")


# --- queries ----------------------------------------------------------------


def lookup_permission(
    doc: ElaDocument, identity: "RequesterIdentity", kind: str, fref: FieldRef
) -> Permission | None:
    """Best matching permission for *fref*, or None (deny-by-default).

    An exact identity match wins over an "anon" entry; statement kinds
    match permission types one-to-one (INSERT and UPDATE separately).
    """
    entry = doc.field_entry(fref)
    if entry is None:
        return None
    exact = None
    anon = None
    for perm in entry.permissions:
        if perm.type != kind:
            continue
        if not identity.is_anonymous and perm.user == identity.id and exact is None:
            exact = perm
        if perm.user == ANON_USER and anon is None:
            anon = perm
    return exact if exact is not None else anon


def collect_restrictions(
    doc: ElaDocument,
    identity: "RequesterIdentity",
    kind: str,
    accessed: set[FieldRef],
) -> list[Restriction]:
    """Restrictions applying to *accessed*, deduplicated, in document order."""
    keys = {
        ((f.schema or "").casefold(), f.table.casefold(), f.field.casefold())
        for f in accessed
    }
    ordered: list[Restriction] = []
    seen: set[str] = set()
    for schema_key, schema in doc.schemas.items():
        for table_key, table in schema.tables.items():
            for field_key, entry in table.fields.items():
                if (schema_key, table_key, field_key) not in keys:
                    continue
                perm = lookup_permission(
                    doc, identity, kind, FieldRef(table.name, entry.name, schema.name)
                )
                if perm is None:
                    continue
                for rid in perm.applied_restrictions:
                    if rid not in seen:
                        seen.add(rid)
                        ordered.append(doc.restrictions[rid])
    return ordered


# --- loading ----------------------------------------------------------------


def load_ela_file(path: str | Path, trust_roots=None) -> ElaDocument:
    """Load an ELA from disk, verifying a sibling .p7s signature if present.

    An unsigned document is accepted; a warning is recorded on the document.
    """
    path = Path(path)
    data = path.read_bytes()
    doc = parse_ela(data)
    sig_path = path.with_suffix(path.suffix + ".p7s")
    if sig_path.exists():
        from .identity import verify_detached_signature

        verify_detached_signature(data, sig_path.read_text().strip(), trust_roots or [])
    else:
        doc.warnings.append(f"{path.name}: document is not signed")
    return doc
