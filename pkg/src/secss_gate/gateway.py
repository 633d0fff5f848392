"""HTTP/JSON front door.

POST /query takes the request envelope ({"SQL", "Pkcs7", "Comment"}) and
answers the response envelope ({"Results", "Feedback", "GenerationDate",
"OK"}); GET /ela publishes the loaded rule document verbatim.  Any
authorization or execution failure is reported inside the envelope with
HTTP 200; only an undecodable body earns a 400.

A request is all-or-nothing: every statement is authorized and rewritten
first, then all of them execute inside one backend session and commit
together.  The first denial aborts the request with no database change.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .backend import SqliteAdapter
from .ela import ElaDocument
from .errors import GateError
from .identity import SignedRequest, sign_detached, verify
from .rewriter import Denial, TransformedScript, rewrite_statement
from .sqlfront import StatementKind, parse_script


@dataclass
class GatewayConfig:
    ela: ElaDocument
    adapter: SqliteAdapter
    trust_roots: list | None = None
    dev_signer: tuple | None = None  # (certificate, private key), dev mode only

    def __post_init__(self):
        if self.trust_roots is None:
            self.trust_roots = []


def _generation_date() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _envelope(ok: bool, results: list[dict], feedback: str) -> dict:
    return {
        "Results": results,
        "Feedback": feedback,
        "GenerationDate": _generation_date(),
        "OK": ok,
    }


def _failure(feedback: str) -> dict:
    return _envelope(False, [], feedback)


def decode_signed_request(body: dict) -> SignedRequest:
    """Map the request envelope's JSON object onto a SignedRequest."""
    if not isinstance(body, dict):
        raise ValueError("request body must be a JSON object")
    sql = body.get("SQL")
    if not isinstance(sql, str) or not sql.strip():
        raise ValueError("field 'SQL' must be a non-empty string")
    pkcs7 = body.get("Pkcs7")
    if pkcs7 is not None and not isinstance(pkcs7, str):
        raise ValueError("field 'Pkcs7' must be a string when present")
    comment = body.get("Comment")
    if comment is not None and not isinstance(comment, str):
        raise ValueError("field 'Comment' must be a string when present")
    return SignedRequest(sql=sql, pkcs7=pkcs7, comment=comment)


def process_request(body: dict, config: GatewayConfig) -> dict:
    """Run the full pipeline for one decoded JSON request body."""
    try:
        req = decode_signed_request(body)
    except ValueError as exc:
        return _failure(f"MalformedEnvelope: {exc}")

    try:
        identity = verify(req, config.trust_roots)
    except GateError as exc:
        return _failure(exc.feedback)

    try:
        script = parse_script(req.sql)
    except GateError as exc:
        return _failure(exc.feedback)

    adapter = config.adapter
    transformed: list[TransformedScript] = []
    for i, stmt in enumerate(script.statements, start=1):
        try:
            outcome = rewrite_statement(
                stmt,
                config.ela,
                identity,
                adapter.default_schema,
                catalog_columns=adapter.catalog_columns,
                index=i,
            )
        except GateError as exc:
            return _failure(exc.feedback)
        if isinstance(outcome, Denial):
            return _failure(outcome.feedback)
        transformed.append(outcome)

    session = adapter.session()
    results: list[dict] = []
    feedback_parts: list[str] = []
    try:
        session.begin()
        for i, ts in enumerate(transformed, start=1):
            relation = session.execute(ts)
            rows = [
                [{"Name": name, "Value": value} for name, value in zip(relation.columns, row)]
                for row in relation.rows
            ]
            results.append(
                {
                    "ExecutedSQL": ts.executed_sql,
                    "RequestedSQL": ts.requested_sql,
                    "Rows": rows,
                }
            )
            if ts.kind in (StatementKind.SELECT, StatementKind.SHOW):
                feedback_parts.append(f"statement {i}: {len(rows)} row(s) returned")
            else:
                feedback_parts.append(f"statement {i}: {relation.rows_affected} row(s) affected")
        session.commit()
    except GateError as exc:
        session.rollback()
        return _failure(exc.feedback)
    finally:
        session.close()

    return _envelope(True, results, "OK: " + "; ".join(feedback_parts))


def create_app(config: GatewayConfig) -> FastAPI:
    if config.ela is None:
        raise ValueError("gateway cannot start without a loaded ELA")
    app = FastAPI(title="secss-gate", docs_url=None, redoc_url=None)
    # the rule document is public and the policy itself is the access control;
    # permissive CORS lets browser clients talk to a locally running gateway
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.config = config
    ela_bytes = config.ela.raw_bytes
    ela_etag = '"' + hashlib.sha256(ela_bytes).hexdigest() + '"'

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.get("/ela")
    def get_ela():
        return Response(
            content=ela_bytes,
            media_type="application/xml",
            headers={"ETag": ela_etag},
        )

    @app.post("/query")
    async def query(request: Request):
        raw = await request.body()
        try:
            body = json.loads(raw)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return JSONResponse(
                status_code=400,
                content=_failure(f"MalformedEnvelope: body is not valid JSON ({exc})"),
            )
        try:
            envelope = process_request(body, config)
        except Exception:  # the wire contract: failures live in the envelope
            envelope = _failure("Error: unexpected internal failure")
        return JSONResponse(status_code=200, content=envelope)

    if config.dev_signer is not None:
        cert, key = config.dev_signer

        @app.post("/dev/sign")
        async def dev_sign(request: Request):
            raw = await request.body()
            try:
                body = json.loads(raw)
                sql = body["SQL"]
                if not isinstance(sql, str):
                    raise TypeError("SQL must be a string")
            except Exception as exc:
                return JSONResponse(status_code=400, content={"error": str(exc)})
            return {"Pkcs7": sign_detached(sql.encode("utf-8"), cert, key)}

    return app
