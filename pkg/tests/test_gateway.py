import json
import re

import pytest
from fastapi.testclient import TestClient

from conftest import fresh_demo_adapter
from secss_gate.gateway import GatewayConfig, create_app, process_request
from secss_gate.identity import sign_detached
from support.oracle import DEMO_COLUMNS, dump_tables

SAMPLE_INSERT_SQL = "INSERT INTO sandbox (name, toy) VALUES ('Loys', 'ball');"

DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


@pytest.fixture
def client(demo_gateway):
    return TestClient(create_app(demo_gateway))


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"ok": True}


def test_signed_insert_round_trip(demo_gateway, signer):
    cert, key = signer
    envelope = process_request(
        {"SQL": SAMPLE_INSERT_SQL, "Pkcs7": sign_detached(SAMPLE_INSERT_SQL.encode(), cert, key)},
        demo_gateway,
    )
    assert envelope["OK"] is True
    assert "FROM DUAL WHERE @toy IN" in envelope["Results"][0]["ExecutedSQL"]
    assert envelope["Results"][0]["RequestedSQL"] == SAMPLE_INSERT_SQL
    assert "1 row(s) affected" in envelope["Feedback"]


def test_response_envelope_field_names(demo_gateway):
    envelope = process_request({"SQL": "SELECT name FROM children;"}, demo_gateway)
    assert list(envelope.keys()) == ["Results", "Feedback", "GenerationDate", "OK"]
    entry = envelope["Results"][0]
    assert list(entry.keys()) == ["ExecutedSQL", "RequestedSQL", "Rows"]
    for row in entry["Rows"]:
        for cell in row:
            assert list(cell.keys()) == ["Name", "Value"]
    assert DATE_RE.match(envelope["GenerationDate"])


def test_request_field_names_are_case_exact(demo_gateway):
    envelope = process_request({"sql": "SELECT name FROM children;"}, demo_gateway)
    assert envelope["OK"] is False
    assert envelope["Feedback"].startswith("MalformedEnvelope")


def test_comment_accepted_and_informative_only(demo_gateway):
    envelope = process_request(
        {"SQL": "SELECT name FROM children;", "Comment": "just looking"}, demo_gateway
    )
    assert envelope["OK"] is True


def test_tampered_signature_whole_pipeline(demo_gateway, signer):
    cert, key = signer
    adapter = demo_gateway.adapter
    before = dump_tables(adapter, DEMO_COLUMNS)
    pkcs7 = sign_detached(SAMPLE_INSERT_SQL.encode(), cert, key)
    tampered = SAMPLE_INSERT_SQL.replace("ball", "kite")
    envelope = process_request({"SQL": tampered, "Pkcs7": pkcs7}, demo_gateway)
    assert envelope["OK"] is False
    assert envelope["Feedback"].startswith("BadSignature")
    assert envelope["Results"] == []
    assert dump_tables(adapter, DEMO_COLUMNS) == before


def test_injection_attempt_rejected_before_execution(demo_gateway):
    adapter = demo_gateway.adapter
    before = dump_tables(adapter, DEMO_COLUMNS)
    envelope = process_request(
        {"SQL": "INSERT INTO sandbox (name, toy) VALUES ('a', 'b'); DROP TABLE children;"},
        demo_gateway,
    )
    assert envelope["OK"] is False
    assert envelope["Feedback"].startswith("UnsupportedStatement")
    assert dump_tables(adapter, DEMO_COLUMNS) == before


def test_multi_statement_all_or_nothing(playground_gateway):
    adapter = playground_gateway.adapter
    from support.oracle import PG_COLUMNS

    before = dump_tables(adapter, PG_COLUMNS)
    # first statement is fine, second violates the children FK
    envelope = process_request(
        {
            "SQL": (
                "INSERT INTO sandbox (ninu, posx, posy) VALUES ('5002020500991', 1, 1);"
                " INSERT INTO sandbox (ninu, posx, posy) VALUES ('9999999999999', 2, 2);"
            )
        },
        playground_gateway,
    )
    assert envelope["OK"] is False
    assert envelope["Feedback"].startswith("BackendError")
    assert dump_tables(adapter, PG_COLUMNS) == before


def test_multi_statement_results_per_statement(demo_gateway):
    envelope = process_request(
        {"SQL": "SHOW TABLES; SELECT name FROM children;"}, demo_gateway
    )
    assert envelope["OK"] is True
    assert len(envelope["Results"]) == 2
    assert envelope["Results"][0]["RequestedSQL"].startswith("SHOW")
    assert envelope["Results"][1]["RequestedSQL"].startswith("SELECT")


def test_denial_reports_no_results(playground_gateway):
    envelope = process_request({"SQL": "SELECT birthday FROM children;"}, playground_gateway)
    assert envelope["OK"] is False
    assert envelope["Results"] == []
    assert envelope["Feedback"].startswith("NoPermission")
    assert "children.birthday" in envelope["Feedback"]


def test_statelessness_modulo_generation_date(demo_ela, signer):
    cert, _ = signer

    def once():
        config = GatewayConfig(
            ela=demo_ela, adapter=fresh_demo_adapter(), trust_roots=[cert]
        )
        envelope = process_request({"SQL": SAMPLE_INSERT_SQL}, config)
        envelope.pop("GenerationDate")
        return envelope

    assert once() == once()


def test_http_400_only_for_undecodable_bodies(client):
    response = client.post("/query", content=b"{not json")
    assert response.status_code == 400
    assert response.json()["OK"] is False
    # well-formed JSON with a bad shape is a 200 with OK=false
    response = client.post("/query", content=json.dumps({"Comment": "no sql"}))
    assert response.status_code == 200
    assert response.json()["OK"] is False
    assert response.json()["Feedback"].startswith("MalformedEnvelope")
    # a denied request is also a 200
    response = client.post("/query", content=json.dumps({"SQL": "DROP TABLE x;"}))
    assert response.status_code == 200
    assert response.json()["OK"] is False


def test_ela_served_verbatim_with_stable_etag(client, demo_ela):
    first = client.get("/ela")
    second = client.get("/ela")
    assert first.status_code == 200
    assert first.headers["content-type"].startswith("application/xml")
    assert first.content == demo_ela.raw_bytes
    assert first.headers["etag"] == second.headers["etag"]


def test_show_columns_on_unknown_table_reported_in_envelope(playground_gateway):
    envelope = process_request({"SQL": "SHOW COLUMNS FROM nosuch;"}, playground_gateway)
    assert envelope["OK"] is False
    assert envelope["Feedback"].startswith("UnknownTable")


def test_select_star_executed_sql_lists_concrete_columns(playground_gateway):
    envelope = process_request({"SQL": "SELECT * FROM sandbox;"}, playground_gateway)
    assert envelope["OK"] is True
    assert "ninu, item, posx, posy" in envelope["Results"][0]["ExecutedSQL"]
    assert envelope["Results"][0]["RequestedSQL"] == "SELECT * FROM sandbox;"


def test_gateway_requires_ela():
    with pytest.raises(ValueError):
        create_app(GatewayConfig(ela=None, adapter=fresh_demo_adapter()))


def test_dev_signer_endpoint(demo_ela, signer):
    cert, key = signer
    config = GatewayConfig(
        ela=demo_ela,
        adapter=fresh_demo_adapter(),
        trust_roots=[cert],
        dev_signer=(cert, key),
    )
    client = TestClient(create_app(config))
    response = client.post("/dev/sign", content=json.dumps({"SQL": SAMPLE_INSERT_SQL}))
    assert response.status_code == 200
    pkcs7 = response.json()["Pkcs7"]
    envelope = client.post(
        "/query", content=json.dumps({"SQL": SAMPLE_INSERT_SQL, "Pkcs7": pkcs7})
    ).json()
    assert envelope["OK"] is True
    assert client.post("/dev/sign", content=b"oops").status_code == 400
