"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside pytest's own verdicts.
"""

import base64
import json
import random
import time

import pytest

from conftest import fresh_demo_adapter, make_cert
from secss_gate.backend import SqliteAdapter
from secss_gate.ela import parse_ela
from secss_gate.errors import (
    BadPermissionTypeError,
    BadRestrictionTypeError,
    BadUseClauseError,
    DanglingRestrictionRefError,
    DuplicateRestrictionIdError,
    UnboundVariableError,
    VariableConflictError,
    XmlError,
)
from secss_gate.fixtures import PINNED_CLOCK, data_bytes, load_demo_ela, scenario_suite
from secss_gate.gateway import GatewayConfig, process_request
from secss_gate.identity import RequesterIdentity, sign_detached
from secss_gate.rewriter import Denial, rewrite_statement
from secss_gate.sqlfront import normalized_tokens, parse_script

from support.oracle import (
    PG_COLUMNS,
    DEMO_COLUMNS,
    DEMO_ORACLE_DDL,
    dump_tables,
    gen_pg_request,
    gen_pg_state,
    gen_demo_request,
    gen_demo_state,
    read_state,
    seed_sql,
    state_key,
)
from test_rewriter import (
    GOLDEN_INSERT_EXPECTED,
    GOLDEN_INSERT_INPUT,
    GOLDEN_UPDATE_EXPECTED,
    GOLDEN_UPDATE_INPUT,
    GOLDEN_NESTED_UPDATE_EXPECTED,
    GOLDEN_NESTED_UPDATE_INPUT,
)

ANON = RequesterIdentity.anonymous()


def _transform_text(sql, ela):
    stmt = parse_script(sql).statements[0]
    ts = rewrite_statement(stmt, ela, ANON, "playground")
    assert not isinstance(ts, Denial), ts
    return " ".join([*ts.set_statements, ts.final_statement])


@pytest.fixture(scope="module")
def demo_fixture_ela():
    return load_demo_ela()


def test_golden_transformation_insert(demo_fixture_ela):
    start = time.perf_counter()
    got = _transform_text(GOLDEN_INSERT_INPUT, demo_fixture_ela)
    assert normalized_tokens(got) == normalized_tokens(GOLDEN_INSERT_EXPECTED)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"\nACCEPTANCE golden INSERT transformation: PASS ({elapsed:.3f}s)")


def test_golden_transformation_update(demo_fixture_ela):
    start = time.perf_counter()
    got = _transform_text(GOLDEN_UPDATE_INPUT, demo_fixture_ela)
    assert normalized_tokens(got) == normalized_tokens(GOLDEN_UPDATE_EXPECTED)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"\nACCEPTANCE golden UPDATE transformation: PASS ({elapsed:.3f}s)")


def test_golden_transformation_nested_subquery_update(demo_fixture_ela):
    start = time.perf_counter()
    got = _transform_text(GOLDEN_NESTED_UPDATE_INPUT, demo_fixture_ela)
    assert normalized_tokens(got) == normalized_tokens(GOLDEN_NESTED_UPDATE_EXPECTED)
    assert "SET @name = (SELECT c.name FROM children c" in got
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"\nACCEPTANCE golden nested-subquery transformation: PASS ({elapsed:.3f}s)")


PG_DDL = None  # playground states use the shipped DDL via fixtures


def _run_oracle_case(ela, ddl_script, seed_script, columns, template, params):
    adapter = SqliteAdapter(clock=lambda: PINNED_CLOCK)
    adapter.run_script(ddl_script)
    if seed_script:
        adapter.run_script(seed_script)
    pre_state = read_state(adapter, columns)
    pre_dump = dump_tables(adapter, columns)

    stmt = parse_script(template.sql(params)).statements[0]
    ts = rewrite_statement(stmt, ela, ANON, "playground", adapter.catalog_columns)
    assert not isinstance(ts, Denial), (template.name, params, ts)
    session = adapter.session()
    try:
        session.begin()
        session.execute(ts)
        session.commit()
    finally:
        session.close()

    prediction = template.predict(pre_state, params)
    actual = read_state(adapter, columns)
    assert state_key(actual) == state_key(prediction.post_state), (
        template.name, params, pre_state,
    )
    if not prediction.allowed:
        assert dump_tables(adapter, columns) == pre_dump, (template.name, params)
    adapter.close()
    return 1


def test_oracle_equivalence_property_suite(demo_fixture_ela):
    from secss_gate.fixtures import data_text, load_playground_ela

    start = time.perf_counter()
    rng = random.Random(20120715)
    today = PINNED_CLOCK.date()
    checked = denied = 0

    for _ in range(130):
        state = gen_demo_state(rng)
        template, params = gen_demo_request(rng, state, today)
        seed = seed_sql("playground", state, DEMO_COLUMNS)
        checked += _run_oracle_case(demo_fixture_ela, DEMO_ORACLE_DDL, seed, DEMO_COLUMNS, template, params)
        if not template.predict(state, params).allowed:
            denied += 1

    pg_ela = load_playground_ela()
    pg_ddl = data_text("playground_ddl.sql")
    for _ in range(110):
        state = gen_pg_state(rng, today)
        request = gen_pg_request(rng, state, today)
        if request is None:
            continue
        template, params = request
        seed = seed_sql("playground", state, PG_COLUMNS)
        checked += _run_oracle_case(pg_ela, pg_ddl, seed, PG_COLUMNS, template, params)
        if not template.predict(state, params).allowed:
            denied += 1

    elapsed = time.perf_counter() - start
    assert checked >= 200, checked
    assert denied >= 20, "corpus must exercise the deny path"
    assert elapsed < 60.0
    print(
        f"\nACCEPTANCE oracle equivalence: PASS"
        f" ({checked} cases, {denied} denials, {elapsed:.1f}s)"
    )


def test_six_rule_scenario_suite():
    start = time.perf_counter()
    report = scenario_suite()
    elapsed = time.perf_counter() - start
    print("\n" + report.summary())
    assert report.all_passed, report.summary()
    assert not report.privacy_violations
    assert elapsed < 30.0
    print(f"ACCEPTANCE six-rule scenario: PASS ({elapsed:.2f}s)")


def test_wire_format_exactness(demo_fixture_ela, signer):
    cert, key = signer
    config = GatewayConfig(ela=demo_fixture_ela, adapter=fresh_demo_adapter(), trust_roots=[cert])
    sql = "SELECT name, emšo FROM children;"
    request = {"SQL": sql, "Pkcs7": sign_detached(sql.encode(), cert, key), "Comment": "c"}
    assert set(request) == {"SQL", "Pkcs7", "Comment"}
    envelope = process_request(request, config)
    assert envelope["OK"] is True, envelope["Feedback"]
    assert envelope["Results"][0]["Rows"], "expected at least one data row"
    assert list(envelope) == ["Results", "Feedback", "GenerationDate", "OK"]
    assert isinstance(envelope["OK"], bool)
    assert isinstance(envelope["Feedback"], str)
    assert isinstance(envelope["GenerationDate"], str)
    for entry in envelope["Results"]:
        assert list(entry) == ["ExecutedSQL", "RequestedSQL", "Rows"]
        for row in entry["Rows"]:
            assert isinstance(row, list)
            for cell in row:
                assert list(cell) == ["Name", "Value"]
    # lowercased request keys are not accepted
    assert process_request({"sql": sql}, config)["OK"] is False

    # over real HTTP the exact field names appear in the raw JSON bytes
    from fastapi.testclient import TestClient
    from secss_gate.gateway import create_app

    client = TestClient(create_app(config))
    raw = client.post("/query", content=json.dumps(request)).text
    for name in ['"Results"', '"ExecutedSQL"', '"RequestedSQL"', '"Rows"',
                 '"Name"', '"Value"', '"Feedback"', '"GenerationDate"', '"OK"']:
        assert name in raw, name
    print("\nACCEPTANCE wire-format exactness: PASS")


def test_integrity_100_random_mutations(demo_fixture_ela):
    cert, key = make_cert("mutation-test")
    config = GatewayConfig(ela=demo_fixture_ela, adapter=fresh_demo_adapter(), trust_roots=[cert])
    sql = "UPDATE sandbox SET toy = 'squirrel' WHERE name = 'Loys';"
    pkcs7 = sign_detached(sql.encode(), cert, key)
    before = dump_tables(config.adapter, DEMO_COLUMNS)
    rng = random.Random(99)
    data = sql.encode()
    done = 0
    while done < 100:
        pos = rng.randrange(len(data))
        replacement = rng.randrange(256)
        if replacement == data[pos]:
            continue
        mutated = bytes([*data[:pos], replacement, *data[pos + 1 :]])
        try:
            text = mutated.decode("utf-8")
        except UnicodeDecodeError:
            continue
        envelope = process_request({"SQL": text, "Pkcs7": pkcs7}, config)
        assert envelope["OK"] is False, text
        assert envelope["Feedback"].startswith("BadSignature"), envelope["Feedback"]
        done += 1
    assert dump_tables(config.adapter, DEMO_COLUMNS) == before
    print(f"\nACCEPTANCE integrity under mutation: PASS ({done} mutations rejected)")


INJECTION_CORPUS = [
    "DELETE FROM children;",
    "DROP TABLE children;",
    "GRANT ALL ON children TO public;",
    "TRUNCATE TABLE children;",
    "CREATE TABLE evil (x INTEGER);",
    "ALTER TABLE children ADD COLUMN hacked INTEGER;",
    "REPLACE INTO sandbox (name) VALUES ('x');",
    "WITH d AS (SELECT 1) SELECT name FROM children;",
    "SELECT name FROM children; DROP TABLE children;",
    "INSERT INTO sandbox (name, toy) VALUES ('a', 'b'); DELETE FROM sandbox;",
    "UPDATE sandbox SET toy = 'x' WHERE name = 'y'; GRANT ALL ON children TO public;",
    "SELECT name FROM children -- peek\n; DROP TABLE children;",
    "SET @toy = 'spoof'; UPDATE sandbox SET toy = @toy WHERE name = 'Loys';",
    "INSERT INTO sandbox (name, toy) SELECT name, 'x' FROM children;",
    "SELECT name FROM children UNION SELECT surname FROM children;",
    "INSERT INTO sandbox (name, toy) VALUES ('a', 'b'), ('c', 'd');",
    "UPDATE sandbox SET toy = @toy WHERE name = 'Loys';",
]


def test_injection_rejection_corpus(demo_fixture_ela):
    config = GatewayConfig(ela=demo_fixture_ela, adapter=fresh_demo_adapter())
    before = dump_tables(config.adapter, DEMO_COLUMNS)
    rejected_codes = set()
    for sql in INJECTION_CORPUS:
        envelope = process_request({"SQL": sql}, config)
        assert envelope["OK"] is False, sql
        code = envelope["Feedback"].split(":", 1)[0]
        assert code in {"UnsupportedStatement", "SyntaxError", "ReservedVariable"}, (sql, code)
        rejected_codes.add(code)
        assert envelope["Results"] == []
    assert dump_tables(config.adapter, DEMO_COLUMNS) == before, "partial commit detected"
    assert "UnsupportedStatement" in rejected_codes
    assert "ReservedVariable" in rejected_codes
    print(f"\nACCEPTANCE injection rejection: PASS ({len(INJECTION_CORPUS)} scripts, 0 partial commits)")


def _ela_variants(original: bytes):
    yield original.replace(
        b'Id="suitableAge"', b'Id="toyInUse"'
    ), DuplicateRestrictionIdError
    yield original.replace(
        b'<Apply-Restriction ref="#suitableAge" />',
        b'<Apply-Restriction ref="#missing" />', 1
    ), DanglingRestrictionRefError
    yield original.replace(
        b'type="INSERT/UPDATE" table="sandbox" field="@item" use="NOT IN"',
        b'type="WRITE" table="sandbox" field="@item" use="NOT IN"',
    ), BadRestrictionTypeError
    yield original.replace(b'use="NOT IN"', b'use="WITHIN"'), BadUseClauseError
    yield original.replace(b"c.ninu = @ninu", b"c.ninu = @nobody"), UnboundVariableError
    yield original.replace(
        b'type="INSERT/UPDATE" table="sandbox" field="@item" use="NOT IN"',
        b'type="INSERT/UPDATE" table="sandbox" field="item" use="NOT IN"',
    ), BadRestrictionTypeError
    yield original[:-40], XmlError
    yield original.replace(b"Configuration>", b"Conf>"), XmlError
    yield original.replace(
        b'<var field="item" name="@item" />\n      <sql><![CDATA[\n        SELECT s.item',
        b'<var field="item" name="@ninu" />\n      <sql><![CDATA[\n        SELECT s.item',
    ).replace(
        b'field="@item" use="NOT IN"', b'field="@ninu" use="NOT IN"'
    ), VariableConflictError
    yield original.replace(
        b'<Permission user="anon" type="SELECT" />',
        b'<Permission user="anon" type="READ" />', 1
    ), BadPermissionTypeError


def test_ela_validation_acceptance():
    original = data_bytes("playground_ela.xml")
    doc = parse_ela(original)
    assert len(doc.restrictions) == 2
    assert any("DELETE permission" in w and "not enforced" in w for w in doc.warnings)
    assert any("@owner" in w for w in doc.warnings)

    variants = list(_ela_variants(original))
    assert len(variants) == 10
    for i, (mutated, expected_error) in enumerate(variants, start=1):
        assert mutated != original, f"variant {i} did not change the document"
        with pytest.raises(expected_error):
            parse_ela(mutated)
    print("\nACCEPTANCE ELA validation: PASS (valid doc + 10 invalid variants)")
