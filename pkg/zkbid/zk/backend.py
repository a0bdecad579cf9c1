"""Exports proving backends, which generate keys for the face-match circuit and prove/verify statements over it.

Keys and proofs travel as self-describing byte strings: a 4-byte magic (`ZKPK`, `ZKVK` or `ZKPF`), a u16 format
version and the id of the backend that produced them, followed by the backend's own encoding.  Verification goes
through `verify_proof`, which picks the backend named by the verification key.
"""
from abc import ABC, abstractmethod
from functools import lru_cache
import hmac
import logging
import secrets
from typing import Dict, NamedTuple, Optional, Tuple, Type

from ..codec import Reader, Writer
from ..config import Settings, load_settings
from ..crypto.primitives import EntropySource, digest
from ..errors import ConfigError, MalformedEncoding, UnsatisfiedWitness
from . import groth16
from .circuit import FaceMatchCircuit, PublicInputs, Witness, default_circuit

PK_MAGIC = b"ZKPK"
VK_MAGIC = b"ZKVK"
PROOF_MAGIC = b"ZKPF"
FORMAT_VERSION = 1

TRANSPARENT_TAG = b"ZKBID/TRANSPARENT/v1"
TRANSPARENT_NONCE_LEN = 16


class KeyPair(NamedTuple):
    """Encoded proving and verification keys, headers included."""
    pk: bytes
    vk: bytes


def _wrap(magic: bytes, backend_id: int, body: bytes) -> bytes:
    return Writer().raw(magic).u16(FORMAT_VERSION).u8(backend_id).blob(body).getvalue()


def unwrap(magic: bytes, data: bytes) -> Tuple[int, bytes]:
    """
    Parses the header of an encoded key or proof.
    :returns (backend id, backend-specific body).
    :raise MalformedEncoding: wrong magic, unknown version, or trailing bytes.
    """
    r = Reader(data)
    r.expect(magic)
    version = r.u16()
    if version != FORMAT_VERSION:
        raise MalformedEncoding(f"unsupported {magic.decode()} format version {version}")
    backend_id = r.u8()
    body = r.blob()
    r.finish()
    return backend_id, body


@lru_cache(maxsize=1)
def default_circuit_id() -> bytes:
    return groth16.circuit_id(default_circuit())


class ProvingBackend(ABC):
    """Abstract base class for proving backends.  Subclasses implement the body-level operations."""
    logger = logging.getLogger(__name__)

    name = ""
    backend_id = 0

    def keygen(self, circuit: Optional[FaceMatchCircuit] = None, entropy: Optional[EntropySource] = None,
               processes: Optional[int] = None) -> KeyPair:
        """
        Runs the setup for the face-match circuit.
        :param entropy: source of the setup randomness; pass a seeded source only in tests.
        :param processes: worker processes for the setup, if the backend can use them.
        """
        circuit = circuit or default_circuit()
        pk_body, vk_body = self._keygen(circuit, entropy or secrets.token_bytes, processes)
        self.logger.info("Generated %s keys: pk %d bytes, vk %d bytes", self.name, len(pk_body), len(vk_body))
        return KeyPair(_wrap(PK_MAGIC, self.backend_id, pk_body), _wrap(VK_MAGIC, self.backend_id, vk_body))

    def prove(self, pk: bytes, pub: PublicInputs, witness: Witness, entropy: Optional[EntropySource] = None) -> bytes:
        """
        Proves that `witness` satisfies the face-match circuit for `pub`.
        :raise UnsatisfiedWitness: the assignment fails a constraint.
        :raise ConfigError: `pk` was made by another backend or for another circuit.
        """
        backend_id, body = unwrap(PK_MAGIC, pk)
        if backend_id != self.backend_id:
            raise ConfigError(f"proving key belongs to backend {backend_id}, not {self.name}")
        circuit = default_circuit()
        z = witness.assignment(pub)
        violated = circuit.first_violation(z)
        if violated is not None:
            raise UnsatisfiedWitness(violated)
        proof_body = self._prove(body, circuit, pub, z, entropy or secrets.token_bytes)
        return _wrap(PROOF_MAGIC, self.backend_id, proof_body)

    def verify(self, vk: bytes, pub: PublicInputs, proof: bytes) -> bool:
        """Accepts or rejects; malformed keys or proofs are rejections."""
        try:
            vk_backend, vk_body = unwrap(VK_MAGIC, vk)
            proof_backend, proof_body = unwrap(PROOF_MAGIC, proof)
        except MalformedEncoding as e:
            self.logger.debug("Rejecting proof: %s", e)
            return False
        if vk_backend != self.backend_id or proof_backend != self.backend_id:
            return False
        return self._verify(vk_body, pub, proof_body)

    @abstractmethod
    def _keygen(self, circuit: FaceMatchCircuit, entropy: EntropySource,
                processes: Optional[int]) -> Tuple[bytes, bytes]:
        pass

    @abstractmethod
    def _prove(self, pk_body: bytes, circuit: FaceMatchCircuit, pub: PublicInputs, z: list,
               entropy: EntropySource) -> bytes:
        pass

    @abstractmethod
    def _verify(self, vk_body: bytes, pub: PublicInputs, proof_body: bytes) -> bool:
        pass


@lru_cache(maxsize=2)
def _decoded_pk(pk_body: bytes) -> groth16.ProvingKey:
    return groth16.ProvingKey.decode(pk_body)


class Groth16Backend(ProvingBackend):
    """Pairing-based succinct proofs over BN254."""
    name = "groth16"
    backend_id = 1

    def _keygen(self, circuit, entropy, processes):
        pk, vk = groth16.keygen(circuit, entropy, processes)
        return pk.encode(), vk.encode()

    def _prove(self, pk_body, circuit, pub, z, entropy):
        pk = _decoded_pk(pk_body)
        if pk.circuit_id != default_circuit_id():
            raise ConfigError("proving key was generated for a different circuit")
        return groth16.prove(pk, circuit, z, entropy).encode()

    def _verify(self, vk_body, pub, proof_body):
        return groth16.verify_encoded(vk_body, tuple(pub.to_field_elements()), proof_body)


class TransparentBackend(ProvingBackend):
    """
    Test-only backend.  The prover checks the assignment against the circuit and then commits to the statement with a
    keyed digest; the verifier recomputes the commitment.  It convinces nobody who does not trust the prover.
    """
    name = "transparent"
    backend_id = 2

    def _keygen(self, circuit, entropy, processes):
        key = Writer().blob(groth16.circuit_id(circuit)).raw(entropy(32)).getvalue()
        return key, key

    @staticmethod
    def _commitment(key: bytes, pub: PublicInputs, nonce: bytes) -> bytes:
        return bytes(digest(TRANSPARENT_TAG + key + pub.encode() + nonce))

    def _prove(self, pk_body, circuit, pub, z, entropy):
        if Reader(pk_body).blob() != default_circuit_id():
            raise ConfigError("proving key was generated for a different circuit")
        nonce = entropy(TRANSPARENT_NONCE_LEN)
        return nonce + self._commitment(pk_body, pub, nonce)

    def _verify(self, vk_body, pub, proof_body):
        if len(proof_body) != TRANSPARENT_NONCE_LEN + 32:
            return False
        nonce, tag = proof_body[:TRANSPARENT_NONCE_LEN], proof_body[TRANSPARENT_NONCE_LEN:]
        return hmac.compare_digest(tag, self._commitment(vk_body, pub, nonce))


_BACKENDS: Dict[str, Type[ProvingBackend]] = {cls.name: cls for cls in (Groth16Backend, TransparentBackend)}
_BACKEND_NAMES: Dict[int, str] = {cls.backend_id: cls.name for cls in _BACKENDS.values()}


def select_backend(name: Optional[str] = None, settings: Optional[Settings] = None) -> ProvingBackend:
    """
    Returns the backend called `name`, or the one configured through the environment.
    :raise ConfigError: unknown name, or the transparent backend without ZKBID_ALLOW_TEST_BACKEND=1.
    """
    settings = settings or load_settings()
    return _BACKENDS[settings.check_backend(name)]()


def backend_for_id(backend_id: int, settings: Optional[Settings] = None) -> ProvingBackend:
    if backend_id not in _BACKEND_NAMES:
        raise ConfigError(f"unknown backend id: {backend_id}")
    return select_backend(_BACKEND_NAMES[backend_id], settings)


def key_backend(vk: bytes) -> int:
    """Returns the id of the backend that produced an encoded verification key."""
    return unwrap(VK_MAGIC, vk)[0]


def verify_proof(vk: bytes, pub: PublicInputs, proof: bytes, settings: Optional[Settings] = None) -> bool:
    """
    Verifies `proof` with the backend that produced `vk`.  Never raises on malformed input, except ConfigError when
    the key's backend may not be used in this process.
    """
    try:
        backend_id = key_backend(vk)
    except MalformedEncoding:
        return False
    if backend_id not in _BACKEND_NAMES:
        return False
    return backend_for_id(backend_id, settings).verify(vk, pub, proof)
