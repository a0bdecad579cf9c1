"""
User-side IAAC flows: enrollment (registration information), seed-account registration, and soul-account
certification.

Timed steps are written to the event log under the actor "wallet".
"""
import logging
import random
from typing import NamedTuple, Optional, Sequence, Tuple

from ..chain.block import build_cert_tx, build_registration_tx
from ..chain.state import RegistrySummary
from ..chain.types import CerInfo, Receipt, RegInfo
from ..consts import DEFAULT_RING_SIZE, EPS_NORM, TAG_IDENTITY, Height
from ..crypto.accounts import Account, account_sign, generate_account
from ..crypto.lrs import Ring, ring_sign
from ..crypto.primitives import EntropySource, GroupElement, digest
from ..errors import (ConfigError, ContractRejection, FaceMismatch, InsufficientAnonymitySet, NormOutOfTolerance,
                      ProverFailure, SimilarityBelowThreshold, UnsatisfiedWitness)
from ..facematch import FeatureVector, ThresholdConfig, face_match, normalize_features
from ..logging import log_duration
from ..zk.backend import ProvingBackend, select_backend
from ..zk.circuit import PublicInputs, seed_key_digest, synthesize_witness
from .endpoint import ChainEndpoint
from .store import SEED, SOUL, WalletStore

logger = logging.getLogger(__name__)

ACTOR = "wallet"


class IdentityInput(NamedTuple):
    id_number: str
    feature_live: Sequence[float]
    feature_card: Sequence[float]


class Enrollment(NamedTuple):
    seed: Account
    reg: RegInfo
    live: FeatureVector
    card: FeatureVector


class ChainStatus(NamedTuple):
    height: Height
    registry: RegistrySummary


def identity_hash(id_number: str) -> bytes:
    """Domain-separated digest of the UTF-8 ID number; the ID number itself never leaves the wallet."""
    if not id_number:
        raise ConfigError("ID number must not be empty")
    return digest(TAG_IDENTITY + id_number.encode("utf-8"))


def create_reginfo(seed: Account, id_hash: bytes, live: FeatureVector, card: FeatureVector, pk: bytes,
                   cfg: ThresholdConfig, backend: ProvingBackend, eps_norm: int = EPS_NORM,
                   entropy: Optional[EntropySource] = None) -> RegInfo:
    """
    Proves the face match for the statement (threshold, eps_norm, id_hash, seed key) and signs id_hash with the seed
    key.
    :raise SimilarityBelowThreshold, NormOutOfTolerance: the vectors do not satisfy the circuit.
    """
    pub = PublicInputs.for_statement(cfg, id_hash, seed_key_digest(seed.pk), eps_norm)
    witness = synthesize_witness(live, card, pub)
    zkp = backend.prove(pk, pub, witness, entropy)
    return RegInfo(zkp, id_hash, seed.pk, account_sign(seed.sk, id_hash, entropy, pk=seed.pk))


def enroll(inp: IdentityInput, pk: bytes, cfg: ThresholdConfig, backend: Optional[ProvingBackend] = None,
           store: Optional[WalletStore] = None, eps_norm: int = EPS_NORM,
           entropy: Optional[EntropySource] = None) -> Enrollment:
    """
    Compares the live capture with the ID card photo and, if they match, creates the seed account and its
    registration information.  Nothing is written to `store` unless every step succeeds.
    :raise FaceMismatch: the two vectors do not match at the threshold.
    :raise ZeroNormVector: a vector cannot be normalized.
    :raise ProverFailure: witness synthesis or proving failed.
    """
    backend = backend or select_backend()
    live = normalize_features(inp.feature_live)
    card = normalize_features(inp.feature_card)
    id_hash = identity_hash(inp.id_number)

    with log_duration(ACTOR, 1, "face comparison"):
        matched = face_match(live, card, cfg)
    if not matched:
        raise FaceMismatch("the live capture does not match the ID card photo")

    with log_duration(ACTOR, 2, "seed account generation"):
        seed = generate_account(entropy)
    try:
        with log_duration(ACTOR, 3, "zkp generation"):
            reg = create_reginfo(seed, id_hash, live, card, pk, cfg, backend, eps_norm, entropy)
    except (SimilarityBelowThreshold, NormOutOfTolerance, UnsatisfiedWitness) as e:
        raise ProverFailure(str(e))

    if store is not None:
        store.save_features(live, card)
        store.save_account(SEED, seed)
        store.save_reginfo(reg)
    logger.info("Enrolled seed account %s", seed.addr.hex())
    return Enrollment(seed, reg, live, card)


def _settle(endpoint: ChainEndpoint, tx_hash: bytes, kind: str, store: Optional[WalletStore]) -> Receipt:
    receipt = endpoint.wait_for_receipt(tx_hash)
    if store is not None:
        store.add_receipt(kind, receipt)
    if not receipt.accepted:
        raise ContractRejection(receipt.error, f"{kind} transaction rejected in block {receipt.height}")
    return receipt


def register(seed: Account, reg: RegInfo, endpoint: ChainEndpoint, store: Optional[WalletStore] = None,
             entropy: Optional[EntropySource] = None) -> Receipt:
    """
    Submits the seed-account registration transaction and waits for its receipt.
    :raise ContractRejection: the identity-auth contract rejected the transaction; the receipt is still stored.
    """
    tx = build_registration_tx(seed, reg, endpoint.nonce(seed.addr), entropy)
    endpoint.submit(tx)
    return _settle(endpoint, tx.tx_hash(), "registration", store)


def sample_ring(own: GroupElement, registry: Sequence[GroupElement], n: int,
                rng: random.Random) -> Tuple[Ring, int]:
    """
    Draws n - 1 distinct decoys uniformly from `registry` (excluding `own`) and puts `own` at a uniformly random
    position.
    :return: the ring and the signer's position.
    :raise InsufficientAnonymitySet: the registry holds fewer than n keys.
    """
    if n < 1:
        raise ConfigError(f"ring size must be positive, got {n}")
    others = [key for key in registry if key != own]
    if len(others) < n - 1:
        raise InsufficientAnonymitySet(f"ring of {n} needs {n} registered seed keys, registry has {len(registry)}")
    decoys = rng.sample(others, n - 1)
    position = rng.randrange(n)
    return Ring.of(decoys[:position] + [own] + decoys[position:]), position


def make_cerinfo(seed: Account, soul: Account, registry: Sequence[GroupElement], ring_size: int,
                 rng: random.Random, entropy: Optional[EntropySource] = None) -> CerInfo:
    ring, position = sample_ring(seed.pk, registry, ring_size, rng)
    with log_duration(ACTOR, 5, "ring signing"):
        sig = ring_sign(seed.sk, position, ring, soul.pk.encode(), entropy)
    return CerInfo(soul.pk, ring, sig)


def certify_soul(seed: Account, endpoint: ChainEndpoint, ring_size: int = DEFAULT_RING_SIZE,
                 rng: Optional[random.Random] = None, store: Optional[WalletStore] = None,
                 entropy: Optional[EntropySource] = None) -> Tuple[Account, Receipt]:
    """
    Creates a soul account, ring-signs its public key over a ring sampled from the current seed registry, and
    submits the certification transaction from the soul account.
    :raise InsufficientAnonymitySet: the registry is smaller than the ring.
    :raise ContractRejection: the soul-cert contract rejected the transaction; the soul account is then discarded.
    """
    rng = rng or random.SystemRandom()
    with log_duration(ACTOR, 4, "soul account generation"):
        soul = generate_account(entropy)
    cer = make_cerinfo(seed, soul, endpoint.state().registered_seed_keys(), ring_size, rng, entropy)
    tx = build_cert_tx(soul, cer, endpoint.nonce(soul.addr), entropy)
    endpoint.submit(tx)
    receipt = _settle(endpoint, tx.tx_hash(), "certification", store)
    if store is not None:
        store.save_account(SOUL, soul)
        store.save_cerinfo(cer)
    return soul, receipt


def status(endpoint: ChainEndpoint) -> ChainStatus:
    """Registry counts and chain height; the state holds no relation between soul and seed keys to report."""
    return ChainStatus(endpoint.height(), endpoint.state().summary())
