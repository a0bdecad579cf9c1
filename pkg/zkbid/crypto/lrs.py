"""
Linkable spontaneous anonymous group (LSAG) signatures with ring-independent key images.

A signature is (I, c_1, s_1..s_n).  For each ring member j the verifier computes
    L_j = s_j*g + c_j*pk_j,    R_j = s_j*H_p(pk_j) + c_j*I,    c_{j+1} = H(ring, I, m, L_j, R_j)
and accepts iff the chain closes, i.e., the challenge after the last member equals c_1.  Two signatures by the same
private key carry the same key image I = sk*H_p(pk), whatever their rings and messages.
"""
from functools import lru_cache
import logging
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from ..consts import TAG_RING
from ..errors import ConfigError, KeyMismatch, MalformedEncoding, SignerNotInRing
from .primitives import (POINT_LEN, SCALAR_LEN, EntropySource, GroupElement, Q, Scalar, decode_scalar,
                         encode_scalar, from_hex, hash_to_point, hash_to_scalar, random_scalar, to_hex)

logger = logging.getLogger(__name__)

MAX_RING_SIZE = 1 << 16

# Called by the verifier once per ring member, in ring order, with (index, member).
VerifyTrace = Callable[[int, GroupElement], None]


class Ring(NamedTuple):
    """An ordered list of distinct public keys."""
    members: Tuple[GroupElement, ...]

    @staticmethod
    def of(members: Iterable[GroupElement]) -> "Ring":
        """Builds a ring; raises ConfigError if it is empty, too large, or has duplicates."""
        members = tuple(members)
        if not 1 <= len(members) <= MAX_RING_SIZE:
            raise ConfigError(f"ring size must be in [1, {MAX_RING_SIZE}], got {len(members)}")
        if len(set(members)) != len(members):
            raise ConfigError("ring members must be distinct")
        if any(m.is_identity() for m in members):
            raise ConfigError("ring members must not be the identity")
        return Ring(members)

    @property
    def size(self) -> int:
        return len(self.members)

    def encode(self) -> bytes:
        return len(self.members).to_bytes(2, "big") + b"".join(m.encode() for m in self.members)

    @staticmethod
    def decode(data: bytes) -> "Ring":
        if len(data) < 2:
            raise MalformedEncoding("truncated ring")
        n = int.from_bytes(data[:2], "big")
        if len(data) != 2 + n * POINT_LEN:
            raise MalformedEncoding(f"ring of {n} members must be {2 + n * POINT_LEN} bytes, got {len(data)}")
        members = [GroupElement.decode(data[2 + i * POINT_LEN:2 + (i + 1) * POINT_LEN]) for i in range(n)]
        try:
            return Ring.of(members)
        except ConfigError as e:
            raise MalformedEncoding(str(e))

    def to_json(self) -> List[str]:
        return [m.hex() for m in self.members]

    @staticmethod
    def from_json(obj: Sequence[str]) -> "Ring":
        try:
            return Ring.of(GroupElement.decode(from_hex(h)) for h in obj)
        except ConfigError as e:
            raise MalformedEncoding(str(e))


class LinkableRingSig(NamedTuple):
    key_image: GroupElement
    c1: Scalar
    responses: Tuple[Scalar, ...]

    def encode(self) -> bytes:
        return (self.key_image.encode() + encode_scalar(self.c1) + len(self.responses).to_bytes(2, "big") +
                b"".join(encode_scalar(s) for s in self.responses))

    @staticmethod
    def decode(data: bytes) -> "LinkableRingSig":
        header = POINT_LEN + SCALAR_LEN + 2
        if len(data) < header:
            raise MalformedEncoding("truncated ring signature")
        n = int.from_bytes(data[POINT_LEN + SCALAR_LEN:header], "big")
        if len(data) != header + n * SCALAR_LEN:
            raise MalformedEncoding(f"ring signature with {n} responses must be {header + n * SCALAR_LEN} bytes")
        key_image = GroupElement.decode(data[:POINT_LEN])
        c1 = decode_scalar(data[POINT_LEN:POINT_LEN + SCALAR_LEN])
        responses = tuple(decode_scalar(data[header + i * SCALAR_LEN:header + (i + 1) * SCALAR_LEN])
                          for i in range(n))
        return LinkableRingSig(key_image, c1, responses)

    def to_json(self) -> Dict[str, Any]:
        return {"key_image": self.key_image.hex(), "c1": to_hex(encode_scalar(self.c1)),
                "s": [to_hex(encode_scalar(s)) for s in self.responses]}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "LinkableRingSig":
        try:
            return LinkableRingSig(GroupElement.decode(from_hex(obj["key_image"])),
                                   decode_scalar(from_hex(obj["c1"], SCALAR_LEN)),
                                   tuple(decode_scalar(from_hex(s, SCALAR_LEN)) for s in obj["s"]))
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad ring signature JSON: {e!r}")


@lru_cache(maxsize=4096)
def _member_base(pk: GroupElement) -> GroupElement:
    """H_p(pk); ring members recur across signatures, so results are cached."""
    return hash_to_point(pk.encode())


def key_image(sk: Scalar, pk: GroupElement) -> GroupElement:
    """Returns sk*H_p(pk); raises KeyMismatch unless pk = sk*g."""
    if not 0 < sk < Q or sk * GroupElement.generator() != pk:
        raise KeyMismatch("public key does not match private key")
    return sk * _member_base(pk)


def _chain_challenge(ring_bytes: bytes, image: GroupElement, message: bytes, left: GroupElement,
                     right: GroupElement) -> Scalar:
    return hash_to_scalar(TAG_RING, ring_bytes + image.encode() + message + left.encode() + right.encode())


def ring_sign(sk: Scalar, signer_index: int, ring: Ring, message: bytes,
              entropy: Optional[EntropySource] = None) -> LinkableRingSig:
    """
    Signs `message` anonymously on behalf of `ring`.
    :param sk: the signer's private key.
    :param signer_index: position of the signer's public key in the ring.
    :param entropy: randomness for the nonce and the decoy responses.
    """
    n = ring.size
    g = GroupElement.generator()
    if not 0 <= signer_index < n or not 0 < sk < Q or ring.members[signer_index] != sk * g:
        raise SignerNotInRing(f"signer's key is not at ring position {signer_index}")

    pk = ring.members[signer_index]
    image = key_image(sk, pk)
    ring_bytes = ring.encode()

    c: List[int] = [0] * n
    s: List[int] = [0] * n
    u = random_scalar(entropy)
    c[(signer_index + 1) % n] = _chain_challenge(ring_bytes, image, message, u * g, u * _member_base(pk))
    for step in range(1, n):
        j = (signer_index + step) % n
        s[j] = random_scalar(entropy, nonzero=False)
        left = g.mul_add(s[j], ring.members[j], c[j])
        right = _member_base(ring.members[j]).mul_add(s[j], image, c[j])
        c[(j + 1) % n] = _chain_challenge(ring_bytes, image, message, left, right)
    s[signer_index] = (u - c[signer_index] * sk) % Q
    return LinkableRingSig(image, Scalar(c[0]), tuple(Scalar(x) for x in s))


def ring_verify(ring: Ring, message: bytes, sig: LinkableRingSig, trace: Optional[VerifyTrace] = None) -> bool:
    """
    Checks that the challenge chain closes.  Every member is processed the same way; there is no early exit.
    Returns False (never raises) on malformed input.
    """
    try:
        n = len(ring.members)
        if n == 0 or len(sig.responses) != n or sig.key_image.is_identity():
            return False
        if not 0 <= sig.c1 < Q or any(not 0 <= s < Q for s in sig.responses):
            return False
        g = GroupElement.generator()
        ring_bytes = ring.encode()
        message = bytes(message)
        c = int(sig.c1)
        for j, member in enumerate(ring.members):
            left = g.mul_add(sig.responses[j], member, c)
            right = _member_base(member).mul_add(sig.responses[j], sig.key_image, c)
            c = _chain_challenge(ring_bytes, sig.key_image, message, left, right)
            if trace is not None:
                trace(j, member)
        return c == sig.c1
    except (MalformedEncoding, TypeError, ValueError, AttributeError) as e:
        logger.debug("Ring signature rejected as malformed: %r", e)
        return False


def link(sig1: LinkableRingSig, sig2: LinkableRingSig) -> bool:
    """True iff both signatures carry the same key image.  Both must have been verified by the caller."""
    return sig1.key_image == sig2.key_image
