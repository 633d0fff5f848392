import datetime

import pytest
from cryptography import x509
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import rsa
from cryptography.x509.oid import NameOID

from secss_gate.backend import SqliteAdapter
from secss_gate.fixtures import (
    PINNED_CLOCK,
    load_playground_ela,
    load_demo_ela,
    seed_playground,
    seed_demo,
)
from secss_gate.gateway import GatewayConfig
from secss_gate.identity import RequesterIdentity


def make_cert(common_name: str, issuer_cert=None, issuer_key=None, not_after_days=3650):
    """Self-signed certificate, or one issued by the given CA pair."""
    key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    subject = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, common_name)])
    issuer_name = issuer_cert.subject if issuer_cert is not None else subject
    signing_key = issuer_key if issuer_key is not None else key
    now = datetime.datetime.now(datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(subject)
        .issuer_name(issuer_name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(days=1))
        .not_valid_after(now + datetime.timedelta(days=not_after_days))
        .sign(signing_key, hashes.SHA256())
    )
    return cert, key


@pytest.fixture(scope="session")
def signer():
    """A self-signed dev certificate/key pair shared across tests."""
    return make_cert("test-signer")


@pytest.fixture
def anon():
    return RequesterIdentity.anonymous()


@pytest.fixture(scope="session")
def demo_ela():
    return load_demo_ela()


@pytest.fixture(scope="session")
def playground_ela():
    return load_playground_ela()


def fresh_demo_adapter() -> SqliteAdapter:
    adapter = SqliteAdapter(clock=lambda: PINNED_CLOCK)
    seed_demo(adapter)
    return adapter


def fresh_playground_adapter(clock=None) -> SqliteAdapter:
    adapter = SqliteAdapter(clock=clock or (lambda: PINNED_CLOCK))
    seed_playground(adapter)
    return adapter


@pytest.fixture
def demo_gateway(demo_ela, signer):
    cert, _ = signer
    return GatewayConfig(
        ela=demo_ela, adapter=fresh_demo_adapter(), trust_roots=[cert]
    )


@pytest.fixture
def playground_gateway(playground_ela, signer):
    cert, _ = signer
    return GatewayConfig(
        ela=playground_ela, adapter=fresh_playground_adapter(), trust_roots=[cert]
    )
