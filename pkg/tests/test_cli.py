import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest
from click.testing import CliRunner

from secss_gate.cli import main
from secss_gate.fixtures import data_file
from secss_gate.identity import SignedRequest, verify, load_trust_roots


@pytest.fixture
def runner():
    return CliRunner()


def test_keygen_and_sign_round_trip(runner, tmp_path):
    keys = tmp_path / "keys"
    trust = tmp_path / "trust"
    result = runner.invoke(main, ["keygen", "--out-dir", str(keys), "--name", "alice",
                                  "--trust-dir", str(trust)])
    assert result.exit_code == 0, result.output
    assert (keys / "alice.key.pem").exists()
    assert (trust / "alice.cert.pem").exists()

    sql_file = tmp_path / "req.sql"
    sql_file.write_text("SHOW TABLES;")
    out_file = tmp_path / "request.json"
    result = runner.invoke(main, [
        "sign", "--key", str(keys / "alice.key.pem"), "--cert", str(keys / "alice.cert.pem"),
        "--comment", "hello", "--out", str(out_file), str(sql_file),
    ])
    assert result.exit_code == 0, result.output
    request = json.loads(out_file.read_text())
    assert set(request) == {"SQL", "Pkcs7", "Comment"}
    roots = load_trust_roots(trust)
    identity = verify(SignedRequest(sql=request["SQL"], pkcs7=request["Pkcs7"]), roots)
    assert not identity.is_anonymous

    # mutate the SQL: the signature must no longer verify
    from secss_gate.errors import BadSignatureError

    with pytest.raises(BadSignatureError):
        verify(SignedRequest(sql="SHOW DATABASES;", pkcs7=request["Pkcs7"]), roots)


def test_sign_with_frozen_cert_yields_precomputed_identity(runner, tmp_path):
    # expected id computed before the build with openssl dgst -sha256 | base64
    from cryptography import x509
    from cryptography.hazmat.primitives import serialization

    from test_identity import FIXTURES, FROZEN_SIGNER_ID

    cert = x509.load_der_x509_certificate((FIXTURES / "signer.der").read_bytes())
    cert_pem = tmp_path / "signer.cert.pem"
    cert_pem.write_bytes(cert.public_bytes(serialization.Encoding.PEM))
    sql_file = tmp_path / "req.sql"
    sql_file.write_text("SHOW TABLES;")
    out_file = tmp_path / "request.json"
    result = runner.invoke(main, [
        "sign", "--key", str(FIXTURES / "signer.key.pem"), "--cert", str(cert_pem),
        "--out", str(out_file), str(sql_file),
    ])
    assert result.exit_code == 0, result.output
    request = json.loads(out_file.read_text())
    identity = verify(SignedRequest(sql=request["SQL"], pkcs7=request["Pkcs7"]), [cert])
    assert identity.id == FROZEN_SIGNER_ID


def test_sign_with_mismatched_key(runner, tmp_path):
    keys = tmp_path / "k"
    runner.invoke(main, ["keygen", "--out-dir", str(keys), "--name", "a"])
    runner.invoke(main, ["keygen", "--out-dir", str(keys), "--name", "b"])
    sql_file = tmp_path / "req.sql"
    sql_file.write_text("SHOW TABLES;")
    result = runner.invoke(main, [
        "sign", "--key", str(keys / "a.key.pem"), "--cert", str(keys / "b.cert.pem"),
        str(sql_file),
    ])
    assert result.exit_code != 0
    assert "key does not match certificate" in result.output


def test_validate_ela_valid_document(runner):
    result = runner.invoke(main, ["validate-ela", str(data_file("playground_ela.xml"))])
    assert result.exit_code == 0, result.output
    assert "2 restriction(s)" in result.output
    assert "declared but not enforced" in result.output
    result = runner.invoke(main, ["validate-ela", str(data_file("playground_ela.xml")), "--json"])
    report = json.loads(result.output)
    assert report["valid"] is True
    assert {r["id"] for r in report["restrictions"]} == {"toyInUse", "suitableAge"}


def test_validate_ela_invalid_document(runner, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_bytes(
        data_file("playground_ela.xml").read_bytes().replace(
            b'ref="#suitableAge"', b'ref="#missing"', 1
        )
    )
    result = runner.invoke(main, ["validate-ela", str(bad)])
    assert result.exit_code == 1
    assert "missing" in result.output
    result = runner.invoke(main, ["validate-ela", str(bad), "--json"])
    assert json.loads(result.output)["error"] == "DanglingRestrictionRef"


def test_seed_and_double_seed(runner, tmp_path):
    db = tmp_path / "pg.db"
    result = runner.invoke(main, ["seed", "--backend", f"sqlite:{db}"])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["seed", "--backend", f"sqlite:{db}"])
    assert result.exit_code != 0
    assert "already seeded" in result.output
    result = runner.invoke(main, ["seed", "--backend", f"sqlite:{db}", "--force"])
    assert result.exit_code == 0

    from secss_gate.backend import SqliteAdapter

    adapter = SqliteAdapter(str(db))
    assert adapter.catalog_columns("playground", "children") == ["ninu", "name", "surname", "birthday"]


def test_submit_to_dead_server(runner, tmp_path):
    req = tmp_path / "req.json"
    req.write_text(json.dumps({"SQL": "SHOW TABLES;"}))
    result = runner.invoke(main, ["submit", "--url", "http://127.0.0.1:1", str(req)])
    assert result.exit_code != 0
    assert "network error" in result.output


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def served_gateway(tmp_path_factory):
    """secss-gate serve running as a subprocess on the demo fixtures."""
    tmp = tmp_path_factory.mktemp("serve")
    keys = tmp / "keys"
    trust = tmp / "trust"
    runner = CliRunner()
    assert runner.invoke(main, ["keygen", "--out-dir", str(keys), "--name", "dev",
                                "--trust-dir", str(trust)]).exit_code == 0
    db = tmp / "t23.db"
    assert runner.invoke(main, ["seed", "--backend", f"sqlite:{db}",
                                "--fixture-set", "demo"]).exit_code == 0
    port = _free_port()
    env = dict(os.environ)
    proc = subprocess.Popen(
        [sys.executable, "-m", "secss_gate.cli", "serve",
         "--listen", f"127.0.0.1:{port}",
         "--ela", str(data_file("demo_ela.xml")),
         "--backend", f"sqlite:{db}",
         "--trust-dir", str(trust),
         "--pinned-clock", "2012-07-15T12:00:00"],
        env=env, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(f"{base}/health", timeout=1).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.1)
        else:
            raise RuntimeError("server did not come up: " + proc.stderr.peek().decode())
        yield base, keys, tmp
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()


def test_serve_health_and_ela(served_gateway):
    base, _, _ = served_gateway
    assert httpx.get(f"{base}/health").json() == {"ok": True}
    assert httpx.get(f"{base}/ela").status_code == 200


def test_serve_then_submit_signed_insert(served_gateway, runner):
    base, keys, tmp = served_gateway
    sql_file = tmp / "insert.sql"
    sql_file.write_text("INSERT INTO sandbox (name, toy) VALUES ('Loys', 'ball');")
    req_file = tmp / "request.json"
    result = runner.invoke(main, [
        "sign", "--key", str(keys / "dev.key.pem"), "--cert", str(keys / "dev.cert.pem"),
        "--out", str(req_file), str(sql_file),
    ])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["submit", "--url", base, "--json", str(req_file)])
    assert result.exit_code == 0, result.output
    envelope = json.loads(result.output)
    assert envelope["OK"] is True
    assert "FROM DUAL WHERE @toy IN" in envelope["Results"][0]["ExecutedSQL"]


def test_submit_surfaces_server_400(served_gateway, runner, tmp_path):
    base, _, _ = served_gateway
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json at all")
    result = runner.invoke(main, ["submit", "--url", base, str(garbage)])
    assert result.exit_code != 0
    assert "rejected the body" in result.output


def test_serve_uses_ela_connection_when_no_backend_given(runner, tmp_path):
    db = tmp_path / "conn.db"
    assert runner.invoke(main, ["seed", "--backend", f"sqlite:{db}",
                                "--fixture-set", "demo"]).exit_code == 0
    ela_with_connection = data_file("demo_ela.xml").read_bytes().replace(
        b"<Connection></Connection>",
        f"<Connection>sqlite:{db}</Connection>".encode(),
    )
    ela_path = tmp_path / "act.xml"
    ela_path.write_bytes(ela_with_connection)
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "secss_gate.cli", "serve",
         "--listen", f"127.0.0.1:{port}", "--ela", str(ela_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE,
    )
    try:
        base = f"http://127.0.0.1:{port}"
        for _ in range(100):
            try:
                if httpx.get(f"{base}/health", timeout=1).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.1)
        else:
            raise RuntimeError("server did not come up")
        envelope = httpx.post(
            f"{base}/query", json={"SQL": "SELECT name FROM children;"}
        ).json()
        assert envelope["OK"] is True
        assert len(envelope["Results"][0]["Rows"]) == 2
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()


def test_serve_rejects_invalid_ela(runner, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_bytes(
        data_file("playground_ela.xml").read_bytes().replace(
            b'ref="#suitableAge"', b'ref="#gone"', 1
        )
    )
    result = runner.invoke(main, ["serve", "--ela", str(bad), "--listen", "127.0.0.1:0"])
    assert result.exit_code != 0
    assert "gone" in result.output
