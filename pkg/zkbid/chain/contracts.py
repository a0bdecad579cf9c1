"""
The identity-auth and soul-cert contracts, executed natively.

Execution never raises for a bad transaction: the result carries a `RejectCode` and no state delta.  Transaction-level
checks (well-formed data, nonce, sender signature) come first, then the contract's own checks in their fixed order,
so a receipt always names the first check that failed.
"""
from functools import lru_cache
import logging
from typing import NamedTuple, Optional

from ..consts import IDENTITY_AUTH_CONTRACT, SOUL_CERT_CONTRACT
from ..crypto.accounts import AccountSignature, account_verify, derive_address
from ..crypto.lrs import LinkableRingSig, Ring, ring_verify
from ..crypto.primitives import GroupElement
from ..errors import MalformedEncoding, RejectCode
from ..zk.backend import verify_proof
from .state import ChainState, SeedRecord, StateDelta
from .types import CerInfo, Genesis, RegInfo, Transaction

logger = logging.getLogger(__name__)


class ExecResult(NamedTuple):
    error: Optional[RejectCode]
    delta: Optional[StateDelta]

    @property
    def accepted(self) -> bool:
        return self.error is None


def _reject(code: RejectCode) -> ExecResult:
    return ExecResult(code, None)


# Signature checks are pure functions of their encodings; every node of a simulation checks the same bytes.
@lru_cache(maxsize=1 << 16)
def _signature_valid(pk: bytes, message: bytes, sig: bytes) -> bool:
    return account_verify(GroupElement.decode(pk), message, AccountSignature.decode(sig))


@lru_cache(maxsize=1 << 14)
def _ring_signature_valid(ring: bytes, message: bytes, sig: bytes) -> bool:
    return ring_verify(Ring.decode(ring), message, LinkableRingSig.decode(sig))


def _check_sender(state: ChainState, tx: Transaction, pk: GroupElement) -> Optional[RejectCode]:
    """Nonce first, then the sender signature; the sender must be the address of `pk`."""
    if tx.nonce != state.nonce(tx.sender):
        return RejectCode.BAD_NONCE
    if derive_address(pk) != tx.sender:
        return RejectCode.INVALID_TX_SIGNATURE
    if not _signature_valid(pk.encode(), tx.signing_digest(), tx.signature.encode()):
        return RejectCode.INVALID_TX_SIGNATURE
    return None


def exec_identity_auth(state: ChainState, tx: Transaction, genesis: Genesis) -> ExecResult:
    """
    Authenticates a seed account.  Checks, in order: (i) the identity hash is not registered yet, and the seed key is
    not bound to another identity; (ii) the proof verifies for the statement derived from the RegInfo; (iii) sig_seed
    signs the identity hash under pk_seed.
    """
    if tx.recipient != IDENTITY_AUTH_CONTRACT:
        return _reject(RejectCode.BAD_TARGET)
    try:
        reg = RegInfo.decode(tx.data)
    except MalformedEncoding as e:
        logger.debug("Malformed RegInfo: %s", e)
        return _reject(RejectCode.MALFORMED_TX)
    sender_error = _check_sender(state, tx, reg.pk_seed)
    if sender_error is not None:
        return _reject(sender_error)

    if reg.id_hash in state.seed_store or reg.pk_seed in state.seed_keys:
        return _reject(RejectCode.DUPLICATE_IDENTITY)
    if not verify_proof(genesis.vk, reg.public_inputs(genesis.threshold, genesis.eps_norm), reg.zkp):
        return _reject(RejectCode.INVALID_PROOF)
    if not _signature_valid(reg.pk_seed.encode(), reg.id_hash, reg.sig_seed.encode()):
        return _reject(RejectCode.INVALID_SEED_SIGNATURE)
    return ExecResult(None, StateDelta(tx.sender, seed=(reg.id_hash, SeedRecord(reg.pk_seed, reg.zkp))))


def exec_soul_cert(state: ChainState, tx: Transaction, genesis: Genesis) -> ExecResult:
    """
    Certifies a soul account.  Checks, in order: (i) every ring member is a registered seed key; (ii) the ring
    signature over pk_soul verifies; (iii) its key image has not been recorded, and pk_soul is not certified already.
    """
    if tx.recipient != SOUL_CERT_CONTRACT:
        return _reject(RejectCode.BAD_TARGET)
    try:
        cer = CerInfo.decode(tx.data)
    except MalformedEncoding as e:
        logger.debug("Malformed CerInfo: %s", e)
        return _reject(RejectCode.MALFORMED_TX)
    sender_error = _check_sender(state, tx, cer.pk_soul)
    if sender_error is not None:
        return _reject(sender_error)

    if any(member not in state.seed_keys for member in cer.ring.members):
        return _reject(RejectCode.UNREGISTERED_RING_MEMBER)
    if not _ring_signature_valid(cer.ring.encode(), cer.pk_soul.encode(), cer.sig.encode()):
        return _reject(RejectCode.INVALID_RING_SIGNATURE)
    if cer.sig.key_image in state.key_images or cer.pk_soul in state.soul_store:
        return _reject(RejectCode.DUPLICATE_KEY_IMAGE)
    return ExecResult(None, StateDelta(tx.sender, key_image=cer.sig.key_image, pk_soul=cer.pk_soul))


def execute_transaction(state: ChainState, tx: Transaction, genesis: Genesis) -> ExecResult:
    """Runs `tx` against the contract it targets; does not modify `state`."""
    if tx.recipient == IDENTITY_AUTH_CONTRACT:
        return exec_identity_auth(state, tx, genesis)
    if tx.recipient == SOUL_CERT_CONTRACT:
        return exec_soul_cert(state, tx, genesis)
    return _reject(RejectCode.BAD_TARGET)
