"""Deterministic cryptographic primitives for the simulated protocol.

Every operation is a pure function of its inputs so that whole protocol
runs replay byte for byte from a seed.  Signing uses Ed25519 (already
deterministic); encryption is a hybrid X25519 + keyed-stream construction
whose ephemeral key is derived from the caller-supplied randomness, which
makes ciphertexts reproducible and lets a commitment be re-derived from
``(pk, plaintext, randomness)`` alone.  An embedded MAC makes decryption
under the wrong secret key fail loudly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any

from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization

from .encoding import canonical_json
from .errors import CryptoError

DIGEST_SIZE = 32
ADDR_SIZE = 20
SEED_SIZE = 32

_RAW_PUBLIC = serialization.PublicFormat.Raw
_RAW_PRIVATE = serialization.PrivateFormat.Raw
_RAW = serialization.Encoding.Raw
_NO_ENC = serialization.NoEncryption()


def hash_bytes(data: bytes) -> bytes:
    """32-byte digest of ``data``."""
    return hashlib.sha256(data).digest()


def hash_hex(data: bytes) -> str:
    return hash_bytes(data).hex()


def hash_json(value: Any) -> str:
    """Hex digest of the canonical JSON form of ``value``."""
    return hash_bytes(canonical_json(value)).hex()


@dataclass(frozen=True)
class KeyPair:
    """Seed-derived identity: signing plus encryption keys and an address.

    ``pk`` is the 64-byte concatenation of the Ed25519 verify key and the
    X25519 exchange key; ``addr`` is the last 20 bytes of hash(pk) as hex.
    """

    seed: bytes
    pk: bytes
    sk: bytes
    addr: str


def _derive(seed: bytes, label: bytes) -> bytes:
    return hash_bytes(b"key:" + label + b":" + seed)


def keygen(seed: bytes) -> KeyPair:
    """Derive a key pair from a 32-byte seed.  Same seed, same keys."""
    if len(seed) != SEED_SIZE:
        raise ValueError(f"seed must be {SEED_SIZE} bytes, got {len(seed)}")
    sign_sk = Ed25519PrivateKey.from_private_bytes(_derive(seed, b"sign"))
    enc_sk = X25519PrivateKey.from_private_bytes(_derive(seed, b"enc"))
    pk = sign_sk.public_key().public_bytes(
        _RAW, _RAW_PUBLIC
    ) + enc_sk.public_key().public_bytes(_RAW, _RAW_PUBLIC)
    sk = sign_sk.private_bytes(_RAW, _RAW_PRIVATE, _NO_ENC) + enc_sk.private_bytes(
        _RAW, _RAW_PRIVATE, _NO_ENC
    )
    addr = hash_bytes(pk)[-ADDR_SIZE:].hex()
    return KeyPair(seed=seed, pk=pk, sk=sk, addr=addr)


def addr_of_pk(pk: bytes) -> str:
    return hash_bytes(pk)[-ADDR_SIZE:].hex()


def _keystream(key: bytes, length: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += hash_bytes(key + counter.to_bytes(8, "big"))
        counter += 1
    return bytes(out[:length])


def encrypt(pk: bytes, plaintext: bytes, randomness: bytes) -> bytes:
    """Encrypt to the holder of ``pk``; deterministic in all arguments."""
    enc_pk = X25519PublicKey.from_public_bytes(pk[32:])
    eph_sk = X25519PrivateKey.from_private_bytes(_derive(randomness, b"eph"))
    eph_pk = eph_sk.public_key().public_bytes(_RAW, _RAW_PUBLIC)
    shared = eph_sk.exchange(enc_pk)
    key = hash_bytes(b"box:" + shared + eph_pk)
    body = bytes(a ^ b for a, b in zip(plaintext, _keystream(key, len(plaintext))))
    mac = hash_bytes(b"mac:" + key + plaintext)
    return eph_pk + mac + body


def decrypt(sk: bytes, ciphertext: bytes) -> bytes:
    """Invert :func:`encrypt`; raises CryptoError unless ``sk`` matches."""
    if len(ciphertext) < 64:
        raise CryptoError("ciphertext too short")
    eph_pk, mac, body = ciphertext[:32], ciphertext[32:64], ciphertext[64:]
    enc_sk = X25519PrivateKey.from_private_bytes(sk[32:])
    try:
        shared = enc_sk.exchange(X25519PublicKey.from_public_bytes(eph_pk))
    except Exception as exc:  # malformed point
        raise CryptoError(f"bad ciphertext header: {exc}") from exc
    key = hash_bytes(b"box:" + shared + eph_pk)
    plaintext = bytes(a ^ b for a, b in zip(body, _keystream(key, len(body))))
    if hash_bytes(b"mac:" + key + plaintext) != mac:
        raise CryptoError("MAC check failed (wrong key or corrupted data)")
    return plaintext


def sign(sk: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(sk[:32]).sign(message)


def verify_sig(pk: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pk[:32]).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def commit(pk: bytes, data: bytes, randomness: bytes) -> bytes:
    """Openable commitment to ``data``: encrypt ``data || r`` under ``pk``.

    Deterministic, so anyone holding ``(pk, data, r)`` re-derives the exact
    ciphertext to check it; only the key holder can open a commitment cold.
    """
    if len(randomness) != SEED_SIZE:
        raise CryptoError("commitment randomness must be 32 bytes")
    return encrypt(pk, data + randomness, randomness)


def open_commit(sk: bytes, commitment: bytes) -> tuple[bytes, bytes]:
    """Decrypt a commitment back to ``(data, randomness)``."""
    plaintext = decrypt(sk, commitment)
    if len(plaintext) < SEED_SIZE:
        raise CryptoError("commitment too short to carry randomness")
    return plaintext[:-SEED_SIZE], plaintext[-SEED_SIZE:]


# Attestation is simulated: a fixed, well-known issuer key signs the
# enclave's public key and code measurement.  Anyone can verify the report
# against ISSUER.pk; nobody else can forge one without ISSUER.sk.
ISSUER = keygen(hash_bytes(b"attestation issuer"))


@dataclass(frozen=True)
class AttestationReport:
    enclave_pk: bytes
    measurement: str
    signature: bytes

    def to_json(self) -> dict:
        return {
            "enclave_pk": self.enclave_pk.hex(),
            "measurement": self.measurement,
            "signature": self.signature.hex(),
        }


def attest(enclave_pk: bytes, measurement: str) -> AttestationReport:
    body = canonical_json({"pk": enclave_pk.hex(), "measurement": measurement})
    return AttestationReport(enclave_pk, measurement, sign(ISSUER.sk, body))


def verify_attestation(report: AttestationReport) -> bool:
    body = canonical_json(
        {"pk": report.enclave_pk.hex(), "measurement": report.measurement}
    )
    return verify_sig(ISSUER.pk, body, report.signature)
