"""Exceptions raised by the ZKBID library.

Every exception carries an `exit_code`, which the command-line tool uses as its process exit status.
"""
from enum import Enum
from typing import Optional


class ZkbidError(Exception):
    """Base class for all ZKBID errors."""
    exit_code = 1


class ConfigError(ZkbidError):
    """Raised when a configuration value or a function parameter is invalid."""
    exit_code = 2


class MalformedEncoding(ZkbidError):
    """Raised when bytes (or hex) fail to decode into the expected object."""
    exit_code = 3


class AbortedHashToPoint(ZkbidError):
    """Raised when try-and-increment exhausts its counter without finding a curve point."""


class KeyMismatch(ZkbidError):
    """Raised when a public key does not correspond to a private key."""


class SignerNotInRing(ZkbidError):
    """Raised when the signer's public key is not at the claimed ring position."""


class ZeroNormVector(ZkbidError):
    """Raised when a feature vector cannot be normalized."""
    exit_code = 11


class SimilarityBelowThreshold(ZkbidError):
    """Raised by witness synthesis when the two feature vectors do not match."""
    exit_code = 10


class NormOutOfTolerance(ZkbidError):
    """Raised by witness synthesis when a feature vector is not unit-norm within tolerance."""
    exit_code = 10


class UnsatisfiedWitness(ZkbidError):
    """Raised by the prover when an assignment fails a constraint."""
    exit_code = 12

    def __init__(self, constraint_index: int) -> None:
        super(UnsatisfiedWitness, self).__init__(f"assignment violates constraint {constraint_index}")
        self.constraint_index = constraint_index


class FaceMismatch(ZkbidError):
    """Raised by enrollment when the live capture does not match the ID card photo."""
    exit_code = 10


class ProverFailure(ZkbidError):
    """Raised by enrollment when proof generation fails."""
    exit_code = 12


class InsufficientAnonymitySet(ZkbidError):
    """Raised when the seed registry is smaller than the requested ring."""
    exit_code = 13


class InconsistentRegInfo(ZkbidError):
    """Raised when a registration bundle does not belong to the seed account submitting it."""
    exit_code = 14


class UnknownNode(ZkbidError):
    """Raised when a simulation node index does not exist."""


class Timeout(ZkbidError):
    """Raised when a simulation exhausts its event budget before reaching its goal."""


class EndpointUnreachable(ZkbidError):
    """Raised when the chain endpoint cannot be opened."""
    exit_code = 30


class ChainIntegrityError(ZkbidError):
    """Raised when a chain fails replay verification."""
    exit_code = 31


class BrokenLinkage(ChainIntegrityError):
    """Raised when a block does not extend its predecessor."""


class StateRootMismatch(ChainIntegrityError):
    """Raised when re-executing a block yields a different commitment than the block records."""

    def __init__(self, height: int, field: str) -> None:
        super(StateRootMismatch, self).__init__(f"block {height}: {field} mismatch")
        self.height = height
        self.field = field


class RejectCode(Enum):
    """Reasons for which block execution rejects a transaction; recorded in receipts."""
    MALFORMED_TX = 20
    BAD_NONCE = 21
    INVALID_TX_SIGNATURE = 22
    BAD_TARGET = 23
    DUPLICATE_IDENTITY = 24
    INVALID_PROOF = 25
    INVALID_SEED_SIGNATURE = 26
    UNREGISTERED_RING_MEMBER = 27
    INVALID_RING_SIGNATURE = 28
    DUPLICATE_KEY_IMAGE = 29

    def __str__(self):
        """Returns the CamelCase error name used in receipts and messages (e.g., "DuplicateIdentity")."""
        return "".join(word.capitalize() for word in self.name.split("_"))

    @staticmethod
    def parse(name: str) -> "RejectCode":
        for code in RejectCode:
            if str(code) == name or code.name == name:
                return code
        raise MalformedEncoding(f"unknown reject code: {name}")


class ContractRejection(ZkbidError):
    """Raised on the wallet side when a transaction's receipt reports a rejection."""

    def __init__(self, code: RejectCode, detail: Optional[str] = None) -> None:
        message = str(code) if detail is None else f"{code}: {detail}"
        super(ContractRejection, self).__init__(message)
        self.code = code
        self.exit_code = code.value
