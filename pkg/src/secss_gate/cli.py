"""Operator and developer tooling around the gateway library.

Commands: serve, validate-ela, keygen, sign, submit, seed.  Every command
is scriptable: deterministic exit codes and --json output where it makes
sense.  Configuration flags fall back to the SECSS_ELA, SECSS_BACKEND and
SECSS_TRUST_DIR environment variables.
"""

from __future__ import annotations

import datetime
import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .backend import SqliteAdapter
from .ela import load_ela_file
from .errors import GateError
from .gateway import GatewayConfig, create_app
from .identity import load_trust_roots, sign_detached, verify, SignedRequest


@click.group()
@click.version_option(__version__)
def main():
    """secss-gate: policy-enforcing SQL gateway."""


def _load_roots(trust_dir: str | None):
    if not trust_dir:
        return []
    return load_trust_roots(trust_dir)


@main.command()
@click.option("--listen", default="127.0.0.1:8080", show_default=True, help="host:port to bind.")
@click.option("--ela", "ela_path", envvar="SECSS_ELA", required=True,
              type=click.Path(exists=True), help="Rule document (XML).")
@click.option("--backend", envvar="SECSS_BACKEND", default=None,
              help="Backend connection string (default: the rule document's"
                   " Connection element, else sqlite::memory:).")
@click.option("--trust-dir", envvar="SECSS_TRUST_DIR", type=click.Path(exists=True),
              help="Directory of trusted signer certificates.")
@click.option("--seed", "seed_set", type=click.Choice(["none", "playground", "demo"]),
              default="none", show_default=True, help="Seed fixtures at startup.")
@click.option("--pinned-clock", default=None,
              help="Freeze NOW() at an ISO timestamp (testing).")
@click.option("--dev-key", type=click.Path(exists=True),
              help="Private key enabling the /dev/sign endpoint (dev only).")
@click.option("--dev-cert", type=click.Path(exists=True),
              help="Certificate for /dev/sign (dev only).")
def serve(listen, ela_path, backend, trust_dir, seed_set, pinned_clock, dev_key, dev_cert):
    """Run the gateway."""
    import uvicorn

    try:
        roots = _load_roots(trust_dir)
        ela = load_ela_file(ela_path, roots)
        clock = None
        if pinned_clock:
            pinned = datetime.datetime.fromisoformat(pinned_clock.replace("Z", "+00:00"))
            pinned = pinned.replace(tzinfo=None)
            clock = lambda: pinned  # noqa: E731
        # flag wins over environment (click), which wins over the rule
        # document's Connection element
        adapter = SqliteAdapter.from_connection_string(
            backend or ela.connection or "sqlite::memory:", clock=clock
        )
        if seed_set != "none":
            from . import fixtures

            if seed_set == "playground":
                fixtures.seed_playground(adapter, force=True)
            else:
                fixtures.seed_demo(adapter, force=True)
        dev_signer = None
        if dev_key and dev_cert:
            dev_signer = (_read_cert(dev_cert), _read_key(dev_key))
        config = GatewayConfig(ela=ela, adapter=adapter, trust_roots=roots,
                               dev_signer=dev_signer)
        app = create_app(config)
    except (GateError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc))
    for warning in ela.warnings:
        click.echo(f"warning: {warning}", err=True)
    host, _, port = listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


@main.command("validate-ela")
@click.argument("path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable report.")
def validate_ela(path, as_json):
    """Validate a rule document and summarize its contents."""
    try:
        doc = load_ela_file(path)
    except GateError as exc:
        if as_json:
            click.echo(json.dumps({"valid": False, "error": exc.code, "detail": exc.detail}))
        else:
            click.echo(f"invalid: {exc.feedback}", err=True)
        sys.exit(1)
    permissions = []
    for schema in doc.schemas.values():
        for table in schema.tables.values():
            for entry in table.fields.values():
                for perm in entry.permissions:
                    permissions.append(
                        {
                            "field": f"{schema.name}.{table.name}.{entry.name}",
                            "user": perm.user,
                            "type": perm.type,
                            "restrictions": list(perm.applied_restrictions),
                            "enforced": perm.enforced,
                        }
                    )
    report = {
        "valid": True,
        "restrictions": [
            {
                "id": r.id,
                "type": r.type,
                "table": r.table,
                "field": r.field,
                "use": r.use,
                "vars": [{"field": v.field, "name": v.name} for v in r.vars],
            }
            for r in doc.restrictions.values()
        ],
        "permissions": permissions,
        "warnings": doc.warnings,
    }
    if as_json:
        click.echo(json.dumps(report, ensure_ascii=False, indent=2))
        return
    click.echo(f"valid: {len(doc.restrictions)} restriction(s), {len(permissions)} permission(s)")
    for r in report["restrictions"]:
        click.echo(f"  restriction {r['id']}: {r['type']} on {r['table']}, {r['field']} {r['use']} (...)")
    for p in permissions:
        marker = "" if p["enforced"] else "  [declared but not enforced]"
        applied = f" -> {', '.join(p['restrictions'])}" if p["restrictions"] else ""
        click.echo(f"  {p['field']}: {p['user']} {p['type']}{applied}{marker}")
    for warning in doc.warnings:
        click.echo(f"  warning: {warning}")


@main.command()
@click.option("--out-dir", type=click.Path(), required=True, help="Where to write key and cert.")
@click.option("--name", default="secss-dev", show_default=True, help="Certificate common name.")
@click.option("--trust-dir", type=click.Path(), help="Also copy the certificate here.")
def keygen(out_dir, name, trust_dir):
    """Generate a TEST-ONLY self-signed key pair."""
    from cryptography import x509
    from cryptography.hazmat.primitives import hashes, serialization
    from cryptography.hazmat.primitives.asymmetric import rsa
    from cryptography.x509.oid import NameOID

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    subject = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, name)])
    now = datetime.datetime.now(datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(subject)
        .issuer_name(subject)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(days=1))
        .not_valid_after(now + datetime.timedelta(days=3650))
        .sign(key, hashes.SHA256())
    )
    key_path = out / f"{name}.key.pem"
    cert_path = out / f"{name}.cert.pem"
    key_path.write_bytes(
        key.private_bytes(
            serialization.Encoding.PEM,
            serialization.PrivateFormat.PKCS8,
            serialization.NoEncryption(),
        )
    )
    cert_path.write_bytes(cert.public_bytes(serialization.Encoding.PEM))
    click.echo(f"wrote {key_path} and {cert_path} (test only, self-signed)")
    if trust_dir:
        trust = Path(trust_dir)
        trust.mkdir(parents=True, exist_ok=True)
        (trust / cert_path.name).write_bytes(cert.public_bytes(serialization.Encoding.PEM))
        click.echo(f"copied certificate into {trust}")


def _read_key(path):
    from cryptography.hazmat.primitives import serialization

    return serialization.load_pem_private_key(Path(path).read_bytes(), password=None)


def _read_cert(path):
    from cryptography import x509

    return x509.load_pem_x509_certificate(Path(path).read_bytes())


@main.command()
@click.option("--key", "key_path", type=click.Path(exists=True), required=True)
@click.option("--cert", "cert_path", type=click.Path(exists=True), required=True)
@click.option("--comment", default=None, help="Informative comment to attach.")
@click.option("--out", "out_path", type=click.Path(), help="Write the request here instead of stdout.")
@click.argument("sql_file", type=click.Path(exists=True))
def sign(key_path, cert_path, comment, out_path, sql_file):
    """Sign a SQL file and emit the request envelope JSON."""
    sql = Path(sql_file).read_text("utf-8").strip()
    key = _read_key(key_path)
    cert = _read_cert(cert_path)
    try:
        pkcs7 = sign_detached(sql.encode("utf-8"), cert, key)
        # sanity: key and certificate must belong together
        verify(SignedRequest(sql=sql, pkcs7=pkcs7), [cert])
    except GateError as exc:
        raise click.ClickException(f"key does not match certificate: {exc.detail}")
    request = {"SQL": sql, "Pkcs7": pkcs7}
    if comment is not None:
        request["Comment"] = comment
    payload = json.dumps(request, ensure_ascii=False, indent=2)
    if out_path:
        Path(out_path).write_text(payload, "utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(payload)


@main.command()
@click.option("--url", default="http://127.0.0.1:8080", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the raw envelope JSON.")
@click.argument("request_file", type=click.Path(exists=True))
def submit(url, as_json, request_file):
    """POST a request envelope to a running gateway."""
    body = Path(request_file).read_text("utf-8")
    try:
        response = httpx.post(f"{url.rstrip('/')}/query", content=body,
                              headers={"content-type": "application/json"}, timeout=30)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"network error: {exc}")
    if response.status_code == 400:
        raise click.ClickException(f"gateway rejected the body: {response.text}")
    envelope = response.json()
    if as_json:
        click.echo(json.dumps(envelope, ensure_ascii=False, indent=2))
        return
    click.echo(f"OK: {envelope['OK']}")
    click.echo(f"Feedback: {envelope['Feedback']}")
    for result in envelope.get("Results", []):
        click.echo(f"  requested: {result['RequestedSQL']}")
        executed = result["ExecutedSQL"].replace("\n", " ")
        click.echo(f"  executed:  {executed}")
        for row in result["Rows"]:
            click.echo("    " + ", ".join(f"{c['Name']}={c['Value']}" for c in row))
    sys.exit(0 if envelope.get("OK") else 2)


@main.command()
@click.option("--backend", envvar="SECSS_BACKEND", required=True,
              help="Backend connection string, e.g. sqlite:/tmp/playground.db")
@click.option("--fixture-set", type=click.Choice(["playground", "demo"]),
              default="playground", show_default=True)
@click.option("--force", is_flag=True, help="Drop and re-create existing fixture tables.")
def seed(backend, fixture_set, force):
    """Create and populate a fixture schema."""
    from . import fixtures

    adapter = SqliteAdapter.from_connection_string(backend)
    try:
        if fixture_set == "playground":
            fixtures.seed_playground(adapter, force=force)
        else:
            fixtures.seed_demo(adapter, force=force)
    except GateError as exc:
        raise click.ClickException(exc.detail)
    click.echo(f"seeded {fixture_set} fixtures into {backend}")


if __name__ == "__main__":
    main()
