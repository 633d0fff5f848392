"""Request authentication: detached CMS/PKCS#7 signatures over the SQL text.

A request without a signature maps to the public "anon" user.  A signed
request must carry a DER-encoded, Base64-wrapped SignedData structure whose
detached content is exactly the UTF-8 bytes of the SQL field; the signer
certificate must chain to a configured trust root.  The internal requester
id is Base64(SHA-256(certificate DER)).

No ASN.1 library is used for verification; a small DER reader below walks
the handful of SignedData fields we need (signer id, signed attributes,
message digest, signature).  Signing is delegated to ``cryptography``'s
PKCS7 builder.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from cryptography import x509
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, padding, rsa
from cryptography.hazmat.primitives.serialization import pkcs7

from .errors import BadSignatureError, MalformedEnvelopeError, UntrustedSignerError

OID_SIGNED_DATA = bytes.fromhex("2a864886f70d010702")      # 1.2.840.113549.1.7.2
OID_MESSAGE_DIGEST = bytes.fromhex("2a864886f70d010904")   # 1.2.840.113549.1.9.4
OID_SHA256 = bytes.fromhex("608648016503040201")           # 2.16.840.1.101.3.4.2.1


@dataclass(frozen=True)
class RequesterIdentity:
    """Anonymous, or certified by a verified signature."""

    id: str | None = None
    subject_name: str = ""
    cert_fingerprint: bytes = b""

    @property
    def is_anonymous(self) -> bool:
        return self.id is None

    @classmethod
    def anonymous(cls) -> "RequesterIdentity":
        return cls()

    @classmethod
    def certified(cls, cert: x509.Certificate) -> "RequesterIdentity":
        der = cert.public_bytes(serialization.Encoding.DER)
        digest = hashlib.sha256(der).digest()
        return cls(
            id=base64.b64encode(digest).decode("ascii"),
            subject_name=cert.subject.rfc4514_string(),
            cert_fingerprint=digest,
        )


@dataclass(frozen=True)
class SignedRequest:
    sql: str
    pkcs7: str | None = None
    comment: str | None = None


def identity_of(cert_der: bytes) -> str:
    """Internal requester id for a certificate: Base64(SHA-256(DER))."""
    if not cert_der:
        raise ValueError("certificate bytes must be non-empty")
    return base64.b64encode(hashlib.sha256(cert_der).digest()).decode("ascii")


def verify(req: SignedRequest, trust_roots: list[x509.Certificate]) -> RequesterIdentity:
    """Verify the request signature and derive the requester identity.

    No pkcs7 field means an anonymous (public) request.  Raises
    MalformedEnvelopeError, BadSignatureError or UntrustedSignerError.
    """
    if req.pkcs7 is None or req.pkcs7 == "":
        return RequesterIdentity.anonymous()
    cert = verify_detached_signature(req.sql.encode("utf-8"), req.pkcs7, trust_roots)
    return RequesterIdentity.certified(cert)


def verify_detached_signature(
    data: bytes, pkcs7_b64: str, trust_roots: list[x509.Certificate]
) -> x509.Certificate:
    """Verify a Base64 DER SignedData detached signature over *data*.

    Returns the signer certificate on success.
    """
    try:
        der = base64.b64decode(pkcs7_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise MalformedEnvelopeError(f"Pkcs7 is not valid Base64: {exc}") from exc
    try:
        signed = _parse_signed_data(der)
        certs = pkcs7.load_der_pkcs7_certificates(der)
    except MalformedEnvelopeError:
        raise
    except Exception as exc:
        raise MalformedEnvelopeError(f"undecodable CMS structure: {exc}") from exc
    if not certs:
        raise MalformedEnvelopeError("CMS structure carries no signer certificate")

    cert = _find_signer_cert(signed, certs)

    if signed.digest_oid != OID_SHA256:
        raise MalformedEnvelopeError("only SHA-256 digests are supported")
    if hashlib.sha256(data).digest() != signed.message_digest:
        raise BadSignatureError("message digest does not match the signed SQL")
    try:
        _verify_with_key(cert, signed.signature, signed.signed_attrs_der)
    except InvalidSignature as exc:
        raise BadSignatureError("signature verification failed") from exc

    _check_chain(cert, trust_roots)
    return cert


def sign_detached(data: bytes, cert: x509.Certificate, key) -> str:
    """Produce a Base64 detached CMS signature over *data*."""
    der = (
        pkcs7.PKCS7SignatureBuilder()
        .set_data(data)
        .add_signer(cert, key, hashes.SHA256())
        .sign(
            serialization.Encoding.DER,
            [pkcs7.PKCS7Options.DetachedSignature, pkcs7.PKCS7Options.Binary],
        )
    )
    return base64.b64encode(der).decode("ascii")


def load_trust_roots(directory: str | Path) -> list[x509.Certificate]:
    """Load every certificate (PEM or DER) found in *directory*."""
    roots: list[x509.Certificate] = []
    directory = Path(directory)
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in {".pem", ".crt", ".cer", ".der"}:
            continue
        blob = path.read_bytes()
        try:
            if blob.lstrip().startswith(b"-----BEGIN"):
                roots.append(x509.load_pem_x509_certificate(blob))
            else:
                roots.append(x509.load_der_x509_certificate(blob))
        except ValueError as exc:
            raise UntrustedSignerError(f"unreadable trust root {path.name}: {exc}") from exc
    return roots


# --- chain and key handling -------------------------------------------------


def _check_chain(cert: x509.Certificate, trust_roots: list[x509.Certificate]) -> None:
    now = datetime.now(timezone.utc)
    if not (cert.not_valid_before_utc <= now <= cert.not_valid_after_utc):
        raise UntrustedSignerError("signer certificate is outside its validity period")
    cert_der = cert.public_bytes(serialization.Encoding.DER)
    for root in trust_roots:
        if root.public_bytes(serialization.Encoding.DER) == cert_der:
            return
    for root in trust_roots:
        if root.subject != cert.issuer:
            continue
        try:
            _verify_with_key(
                root,
                cert.signature,
                cert.tbs_certificate_bytes,
                algorithm=cert.signature_hash_algorithm,
            )
            return
        except InvalidSignature:
            continue
    raise UntrustedSignerError("signer certificate does not chain to any trust root")


def _verify_with_key(cert: x509.Certificate, signature: bytes, payload: bytes, algorithm=None):
    key = cert.public_key()
    algorithm = algorithm or hashes.SHA256()
    if isinstance(key, rsa.RSAPublicKey):
        key.verify(signature, payload, padding.PKCS1v15(), algorithm)
    elif isinstance(key, ec.EllipticCurvePublicKey):
        key.verify(signature, payload, ec.ECDSA(algorithm))
    else:
        raise UntrustedSignerError("unsupported signer key type")


def _find_signer_cert(signed: "_SignedData", certs: list[x509.Certificate]) -> x509.Certificate:
    for cert in certs:
        if cert.serial_number != signed.signer_serial:
            continue
        issuer_der = cert.issuer.public_bytes()
        if issuer_der == signed.signer_issuer_der:
            return cert
    raise MalformedEnvelopeError("signer certificate not present in the CMS structure")


# --- minimal DER reader ------------------------------------------------------


@dataclass
class _Tlv:
    tag: int
    value: bytes
    raw: bytes


def _read_tlv(buf: bytes, offset: int) -> tuple[_Tlv, int]:
    if offset + 2 > len(buf):
        raise MalformedEnvelopeError("truncated DER structure")
    tag = buf[offset]
    length = buf[offset + 1]
    header = 2
    if length & 0x80:
        count = length & 0x7F
        if count == 0 or offset + 2 + count > len(buf):
            raise MalformedEnvelopeError("bad DER length")
        length = int.from_bytes(buf[offset + 2 : offset + 2 + count], "big")
        header = 2 + count
    end = offset + header + length
    if end > len(buf):
        raise MalformedEnvelopeError("DER value overruns the buffer")
    return _Tlv(tag, buf[offset + header : end], buf[offset:end]), end


def _children(value: bytes) -> list[_Tlv]:
    out: list[_Tlv] = []
    offset = 0
    while offset < len(value):
        tlv, offset = _read_tlv(value, offset)
        out.append(tlv)
    return out


@dataclass
class _SignedData:
    signer_issuer_der: bytes
    signer_serial: int
    digest_oid: bytes
    signed_attrs_der: bytes  # re-tagged as SET OF, the signature payload
    message_digest: bytes
    signature: bytes


def _parse_signed_data(der: bytes) -> _SignedData:
    content_info, _ = _read_tlv(der, 0)
    if content_info.tag != 0x30:
        raise MalformedEnvelopeError("CMS ContentInfo must be a SEQUENCE")
    parts = _children(content_info.value)
    if len(parts) < 2 or parts[0].tag != 0x06 or parts[0].value != OID_SIGNED_DATA:
        raise MalformedEnvelopeError("not a CMS SignedData structure")
    signed_data, _ = _read_tlv(parts[1].value, 0)
    fields = _children(signed_data.value)

    signer_infos = None
    for tlv in fields:
        if tlv.tag == 0x31:
            signer_infos = tlv  # last SET in SignedData is signerInfos
    if signer_infos is None:
        raise MalformedEnvelopeError("SignedData carries no SignerInfo")
    infos = _children(signer_infos.value)
    if len(infos) != 1:
        raise MalformedEnvelopeError("exactly one SignerInfo is expected")
    si = _children(infos[0].value)
    # version, sid, digestAlgorithm, [0] signedAttrs, signatureAlgorithm, signature
    if len(si) < 5 or si[1].tag != 0x30:
        raise MalformedEnvelopeError("unsupported SignerInfo shape")
    sid = _children(si[1].value)
    if len(sid) != 2 or sid[1].tag != 0x02:
        raise MalformedEnvelopeError("only issuerAndSerialNumber signer ids are supported")
    issuer_der = sid[0].raw
    serial = int.from_bytes(sid[1].value, "big", signed=True)

    digest_alg = _children(si[2].value)
    if not digest_alg or digest_alg[0].tag != 0x06:
        raise MalformedEnvelopeError("missing digest algorithm")
    digest_oid = digest_alg[0].value

    signed_attrs = next((t for t in si if t.tag == 0xA0), None)
    if signed_attrs is None:
        raise MalformedEnvelopeError("signed attributes are required")
    retagged = bytearray(signed_attrs.raw)
    retagged[0] = 0x31

    message_digest = None
    for attr in _children(signed_attrs.value):
        attr_parts = _children(attr.value)
        if len(attr_parts) == 2 and attr_parts[0].value == OID_MESSAGE_DIGEST:
            values = _children(attr_parts[1].value)
            if values and values[0].tag == 0x04:
                message_digest = values[0].value
    if message_digest is None:
        raise MalformedEnvelopeError("signed attributes carry no message digest")

    signature = next((t.value for t in si if t.tag == 0x04), None)
    if signature is None:
        raise MalformedEnvelopeError("SignerInfo carries no signature")

    return _SignedData(
        signer_issuer_der=issuer_der,
        signer_serial=serial,
        digest_oid=digest_oid,
        signed_attrs_der=bytes(retagged),
        message_digest=message_digest,
        signature=signature,
    )
