"""
Prime-field scalars, the secp256k1 group, and the hash functions used by accounts and ring signatures.

Points are always hashed through their canonical 33-byte compressed encoding; the identity element encodes as 33
zero bytes.
"""
import secrets
from typing import Callable, NewType, Optional

from Crypto.Hash import keccak
from ecdsa import SECP256k1
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.errors import MalformedPointError

from ..consts import TAG_HASH_TO_POINT
from ..errors import AbortedHashToPoint, ConfigError, MalformedEncoding

Scalar = NewType("Scalar", int)  # Integer in [0, Q).
Digest32 = NewType("Digest32", bytes)

# An entropy source returns the requested number of random bytes.
EntropySource = Callable[[int], bytes]

Q = SECP256k1.order  # Group order (prime, > 2^250).
P = SECP256k1.curve.p()  # Base field modulus.

SCALAR_LEN = 32
POINT_LEN = 33
IDENTITY_ENCODING = bytes(POINT_LEN)

HASH_TO_POINT_MAX_COUNTER = 1 << 16


def digest(data: bytes) -> Digest32:
    """Keccak-256 of `data`."""
    return Digest32(keccak.new(digest_bits=256, data=data).digest())


def _framed(domain_tag: bytes, block: int, data: bytes) -> bytes:
    return len(domain_tag).to_bytes(2, "big") + domain_tag + bytes([block]) + data


def hash_to_scalar(domain_tag: bytes, data: bytes) -> Scalar:
    """
    Hashes `data` to a scalar in [0, Q).

    Two domain-separated Keccak-256 blocks give 512 bits, which are reduced mod Q (bias below 2^-250).
    """
    if not domain_tag:
        raise ConfigError("domain tag must not be empty")
    wide = digest(_framed(domain_tag, 0, data)) + digest(_framed(domain_tag, 1, data))
    return Scalar(int.from_bytes(wide, "big") % Q)


def scalar(value: int) -> Scalar:
    """Reduces an integer mod Q."""
    return Scalar(value % Q)


def encode_scalar(s: int) -> bytes:
    return (s % Q).to_bytes(SCALAR_LEN, "big")


def decode_scalar(data: bytes) -> Scalar:
    """Decodes a 32-byte big-endian scalar; rejects non-canonical values (>= Q)."""
    if len(data) != SCALAR_LEN:
        raise MalformedEncoding(f"scalar must be {SCALAR_LEN} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= Q:
        raise MalformedEncoding("scalar is not reduced")
    return Scalar(value)


def random_scalar(entropy: Optional[EntropySource] = None, *, nonzero: bool = True) -> Scalar:
    """Samples a uniform scalar by rejection sampling over 32-byte draws."""
    entropy = entropy or secrets.token_bytes
    while True:
        raw = entropy(SCALAR_LEN)
        if len(raw) < SCALAR_LEN:
            raise ConfigError("entropy source returned fewer than 32 bytes")
        value = int.from_bytes(raw[:SCALAR_LEN], "big")
        if value < Q and (value != 0 or not nonzero):
            return Scalar(value)


def _is_infinity(point) -> bool:
    return point is None or point is INFINITY or point == INFINITY


class GroupElement(object):
    """An element of the secp256k1 group (prime order, cofactor 1)."""
    __slots__ = ("_point", "_encoding")

    def __init__(self, point) -> None:
        """Wraps an `ecdsa` point; pass `None` (or `INFINITY`) for the identity."""
        self._point: Optional[PointJacobi] = None if _is_infinity(point) else point
        self._encoding: Optional[bytes] = None

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(None)

    @staticmethod
    def generator() -> "GroupElement":
        return _GENERATOR

    def is_identity(self) -> bool:
        return self._point is None

    def encode(self) -> bytes:
        """Returns the canonical 33-byte compressed encoding."""
        if self._encoding is None:
            if self._point is None:
                self._encoding = IDENTITY_ENCODING
            else:
                self._encoding = bytes(self._point.to_bytes("compressed"))
        return self._encoding

    @staticmethod
    def decode(data: bytes) -> "GroupElement":
        """Decodes a canonical encoding; raises MalformedEncoding for anything that is not a group element."""
        data = bytes(data)
        if len(data) != POINT_LEN:
            raise MalformedEncoding(f"point must be {POINT_LEN} bytes, got {len(data)}")
        if data == IDENTITY_ENCODING:
            return GroupElement.identity()
        if data[0] not in (2, 3) or int.from_bytes(data[1:], "big") >= P:
            raise MalformedEncoding("not a canonical compressed point")
        try:
            point = PointJacobi.from_bytes(SECP256k1.curve, data, valid_encodings=("compressed",), order=Q)
        except MalformedPointError as e:
            raise MalformedEncoding(f"not a curve point: {e}")
        element = GroupElement(point)
        element._encoding = data
        return element

    def hex(self) -> str:
        return self.encode().hex()

    def __add__(self, other: "GroupElement") -> "GroupElement":
        if self._point is None:
            return other
        if other._point is None:
            return self
        return GroupElement(self._point + other._point)

    def __neg__(self) -> "GroupElement":
        if self._point is None:
            return self
        return GroupElement(-self._point)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def __rmul__(self, k: int) -> "GroupElement":
        """Scalar multiplication, written `k * P`."""
        k %= Q
        if k == 0 or self._point is None:
            return GroupElement.identity()
        return GroupElement(self._point * k)

    __mul__ = __rmul__

    def mul_add(self, a: int, other: "GroupElement", b: int) -> "GroupElement":
        """Returns a*self + b*other in one pass."""
        a %= Q
        b %= Q
        if self._point is None or a == 0:
            return b * other
        if other._point is None or b == 0:
            return a * self
        return GroupElement(self._point.mul_add(a, other._point, b))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupElement) and self.encode() == other.encode()

    def __hash__(self) -> int:
        return hash(self.encode())

    def __repr__(self) -> str:
        return f"GroupElement({self.hex()})"


_GENERATOR = GroupElement(SECP256k1.generator)


def hash_to_point(data: bytes) -> GroupElement:
    """
    Maps `data` to a non-identity group element by try-and-increment.

    Each attempt hashes (tag, data, counter) to a candidate x-coordinate and tries to decode the even-y compressed
    point with that x-coordinate.
    """
    for counter in range(HASH_TO_POINT_MAX_COUNTER):
        candidate = digest(_framed(TAG_HASH_TO_POINT, 0, data + counter.to_bytes(4, "big")))
        if int.from_bytes(candidate, "big") >= P:
            continue
        try:
            return GroupElement.decode(b"\x02" + candidate)
        except MalformedEncoding:
            continue
    raise AbortedHashToPoint(f"no curve point after {HASH_TO_POINT_MAX_COUNTER} attempts")


def to_hex(data: bytes) -> str:
    """Lowercase hex without prefix."""
    return bytes(data).hex()


def from_hex(text: str, length: Optional[int] = None) -> bytes:
    """Parses lowercase/uppercase hex (an optional 0x prefix is tolerated); checks length if given."""
    if text.startswith(("0x", "0X")):
        text = text[2:]
    try:
        data = bytes.fromhex(text)
    except ValueError as e:
        raise MalformedEncoding(f"bad hex: {e}")
    if length is not None and len(data) != length:
        raise MalformedEncoding(f"expected {length} bytes, got {len(data)}")
    return data


