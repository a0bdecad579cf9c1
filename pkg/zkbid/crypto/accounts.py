"""
Blockchain accounts: key generation, address derivation, and the Schnorr signature used to sign transactions and the
seed account's identity hash.
"""
import json
from typing import Any, Dict, NamedTuple, Optional

from ..consts import ADDRESS_LEN, TAG_NONCE, TAG_SIGNATURE, Address
from ..errors import KeyMismatch, MalformedEncoding
from .primitives import (SCALAR_LEN, EntropySource, GroupElement, Q, Scalar, decode_scalar, digest, encode_scalar,
                         from_hex, hash_to_scalar, random_scalar, to_hex)

SIGNATURE_LEN = 2 * SCALAR_LEN


class AccountSignature(NamedTuple):
    """A Schnorr signature (challenge, response)."""
    challenge: Scalar
    response: Scalar

    def encode(self) -> bytes:
        return encode_scalar(self.challenge) + encode_scalar(self.response)

    @staticmethod
    def decode(data: bytes) -> "AccountSignature":
        if len(data) != SIGNATURE_LEN:
            raise MalformedEncoding(f"signature must be {SIGNATURE_LEN} bytes, got {len(data)}")
        return AccountSignature(decode_scalar(data[:SCALAR_LEN]), decode_scalar(data[SCALAR_LEN:]))

    def to_json(self) -> Dict[str, str]:
        return {"challenge": to_hex(encode_scalar(self.challenge)), "response": to_hex(encode_scalar(self.response))}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "AccountSignature":
        try:
            return AccountSignature(decode_scalar(from_hex(obj["challenge"], SCALAR_LEN)),
                                    decode_scalar(from_hex(obj["response"], SCALAR_LEN)))
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad signature JSON: {e!r}")


class Account(NamedTuple):
    """An (sk, pk, addr) triple.  Seed and soul accounts are both plain accounts."""
    sk: Scalar
    pk: GroupElement
    addr: Address

    def to_json(self, reveal_secret: bool = False) -> Dict[str, str]:
        """
        Returns the account as a JSON object.
        :param reveal_secret: if False, the private key is left out.
        """
        obj = {"pk": self.pk.hex(), "addr": to_hex(self.addr)}
        if reveal_secret:
            obj["sk"] = to_hex(encode_scalar(self.sk))
        return obj

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "Account":
        """Parses an account with its private key; checks that the three fields agree."""
        try:
            sk = decode_scalar(from_hex(obj["sk"], SCALAR_LEN))
            pk = GroupElement.decode(from_hex(obj["pk"]))
            addr = Address(from_hex(obj["addr"], ADDRESS_LEN))
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad account JSON: {e!r}")
        if sk == 0 or sk * GroupElement.generator() != pk:
            raise KeyMismatch("account public key does not match its private key")
        if derive_address(pk) != addr:
            raise KeyMismatch("account address does not match its public key")
        return Account(sk, pk, addr)

    def dumps(self, reveal_secret: bool = False) -> str:
        return json.dumps(self.to_json(reveal_secret), indent=2, sort_keys=True)


def derive_address(pk: GroupElement) -> Address:
    """Returns the last 20 bytes of the digest of the public key's compressed encoding."""
    return Address(digest(pk.encode())[-ADDRESS_LEN:])


def account_from_secret(sk: int) -> Account:
    if not 0 < sk < Q:
        raise KeyMismatch("private key out of range")
    pk = Scalar(sk) * GroupElement.generator()
    return Account(Scalar(sk), pk, derive_address(pk))


def generate_account(entropy: Optional[EntropySource] = None) -> Account:
    """Samples sk uniformly in [1, Q) and derives the public key and address."""
    return account_from_secret(random_scalar(entropy, nonzero=True))


def seeded_entropy(seed: Any) -> EntropySource:
    """
    Returns a deterministic entropy source for tests and simulations.

    Output is a Keccak-256 counter-mode stream keyed by `repr(seed)`; two sources with the same seed yield the same
    byte sequence.
    """
    key = repr(seed).encode()
    state = {"counter": 0, "buffer": b""}

    def entropy(n: int) -> bytes:
        while len(state["buffer"]) < n:
            block = digest(b"ZKBID/DRBG/v1" + key + state["counter"].to_bytes(8, "big"))
            state["counter"] += 1
            state["buffer"] += block
        out, state["buffer"] = state["buffer"][:n], state["buffer"][n:]
        return out

    return entropy


def _challenge(commitment: GroupElement, pk: GroupElement, message: bytes) -> Scalar:
    return hash_to_scalar(TAG_SIGNATURE, commitment.encode() + pk.encode() + message)


def account_sign(sk: Scalar, message: bytes, entropy: Optional[EntropySource] = None,
                 pk: Optional[GroupElement] = None) -> AccountSignature:
    """
    Signs `message` with a Schnorr signature.

    The nonce is derived from (sk, message, fresh entropy), so a repeated entropy output alone never reveals sk.
    :param pk: the signer's public key, if the caller already has it.
    """
    if not 0 < sk < Q:
        raise KeyMismatch("private key out of range")
    g = GroupElement.generator()
    pk = pk or sk * g
    while True:
        fresh = random_scalar(entropy, nonzero=False)
        r = hash_to_scalar(TAG_NONCE, encode_scalar(sk) + encode_scalar(fresh) + message)
        if r != 0:
            break
    c = _challenge(r * g, pk, message)
    return AccountSignature(c, Scalar((r - c * sk) % Q))


def account_verify(pk: GroupElement, message: bytes, sig: AccountSignature) -> bool:
    """Checks a Schnorr signature; returns False (never raises) on malformed input."""
    try:
        if not isinstance(pk, GroupElement) or pk.is_identity():
            return False
        c, s = int(sig.challenge), int(sig.response)
        if not (0 <= c < Q and 0 <= s < Q):
            return False
        commitment = GroupElement.generator().mul_add(s, pk, c)
        return _challenge(commitment, pk, bytes(message)) == c
    except (MalformedEncoding, TypeError, ValueError, AttributeError):
        return False
