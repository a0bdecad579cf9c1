"""Transaction construction, the transaction pool, block production and chain replay."""
import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from ..consts import DEFAULT_BLOCK_CAPACITY, GENESIS_HEIGHT, IDENTITY_AUTH_CONTRACT, SOUL_CERT_CONTRACT, Height
from ..crypto.accounts import Account, account_sign, derive_address
from ..crypto.primitives import EntropySource
from ..errors import BrokenLinkage, ConfigError, InconsistentRegInfo, KeyMismatch, StateRootMismatch
from ..zk.backend import backend_for_id
from .contracts import execute_transaction
from .state import ChainState
from .types import Block, BlockHeader, CerInfo, Genesis, Receipt, RegInfo, Transaction, list_root

logger = logging.getLogger(__name__)


def _signed_tx(account: Account, recipient: bytes, nonce: int, data: bytes,
               entropy: Optional[EntropySource]) -> Transaction:
    unsigned = Transaction(account.addr, recipient, nonce, data, None)
    sig = account_sign(account.sk, unsigned.signing_digest(), entropy, pk=account.pk)
    return unsigned._replace(signature=sig)


def build_registration_tx(seed: Account, reg: RegInfo, nonce: int,
                          entropy: Optional[EntropySource] = None) -> Transaction:
    """
    Builds the seed-account registration transaction for the identity-auth contract.
    :raise InconsistentRegInfo: the RegInfo does not belong to `seed`, or sig_seed does not sign its identity hash.
    """
    if reg.pk_seed != seed.pk or seed.addr != derive_address(reg.pk_seed):
        raise InconsistentRegInfo("RegInfo seed key does not belong to the sending account")
    if not reg.is_consistent():
        raise InconsistentRegInfo("sig_seed does not sign the identity hash under pk_seed")
    return _signed_tx(seed, IDENTITY_AUTH_CONTRACT, nonce, reg.encode(), entropy)


def build_cert_tx(soul: Account, cer: CerInfo, nonce: int, entropy: Optional[EntropySource] = None) -> Transaction:
    """Builds the soul-account certification transaction; the soul account itself is the sender."""
    if cer.pk_soul != soul.pk:
        raise KeyMismatch("CerInfo soul key does not belong to the sending account")
    return _signed_tx(soul, SOUL_CERT_CONTRACT, nonce, cer.encode(), entropy)


class _PoolEntry(NamedTuple):
    arrival: int
    sender: bytes
    seq: int
    tx: Transaction


class TxPool(object):
    """
    Pending transactions in deterministic order: arrival time, then sender address, then submission order.
    A transaction is accepted once; later receptions of the same digest are ignored, even after it leaves the pool.
    """

    def __init__(self) -> None:
        self._entries: Dict[bytes, _PoolEntry] = {}
        self._seen = set()
        self._seq = 0

    def add(self, tx: Transaction, arrival: int = 0) -> bool:
        """Returns False if the transaction was seen before."""
        tx_hash = tx.tx_hash()
        if tx_hash in self._seen:
            return False
        self._seen.add(tx_hash)
        self._entries[tx_hash] = _PoolEntry(arrival, tx.sender, self._seq, tx)
        self._seq += 1
        return True

    def pending(self, limit: Optional[int] = None) -> List[Transaction]:
        ordered = sorted(self._entries.values(), key=lambda e: (e.arrival, e.sender, e.seq))
        return [e.tx for e in ordered[:limit]]

    def remove(self, tx_hashes: Iterable[bytes]) -> None:
        for tx_hash in tx_hashes:
            self._seen.add(tx_hash)
            self._entries.pop(tx_hash, None)

    def __contains__(self, tx_hash: bytes) -> bool:
        return tx_hash in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def _execute_all(state: ChainState, txs: Sequence[Transaction], genesis: Genesis,
                 height: Height) -> Tuple[ChainState, List[Receipt]]:
    new_state = state.copy()
    receipts = []
    for index, tx in enumerate(txs):
        result = execute_transaction(new_state, tx, genesis)
        if result.delta is not None:
            new_state.apply(result.delta)
        receipts.append(Receipt(tx.tx_hash(), height, index, result.error))
    return new_state, receipts


def pack_block(pool: TxPool, state: ChainState, genesis: Genesis, parent_hash: bytes, height: Height,
               capacity: Optional[int] = None) -> Tuple[Block, ChainState, List[Receipt]]:
    """
    Executes up to `capacity` pending transactions in pool order and packs all of them, accepted or rejected, into
    a block.  They leave the pool either way; rejections are recorded in the receipts.  `state` is not modified.
    """
    capacity = capacity or genesis.block_capacity
    txs = tuple(pool.pending(capacity))
    new_state, receipts = _execute_all(state, txs, genesis, height)
    pool.remove(r.tx_hash for r in receipts)
    header = BlockHeader(height, parent_hash, list_root(tuple(tx.encode() for tx in txs)),
                         list_root(tuple(r.encode() for r in receipts)), new_state.state_root())
    rejected = sum(1 for r in receipts if not r.accepted)
    logger.debug("Packed block %d: %d transactions, %d rejected", height, len(txs), rejected)
    return Block(header, txs), new_state, receipts


def apply_block(state: ChainState, block: Block, genesis: Genesis) -> Tuple[ChainState, List[Receipt]]:
    """
    Re-executes a block on `state` and checks every commitment in its header.
    :raise StateRootMismatch: naming the first commitment that differs.
    """
    height = block.height
    if len(block.txs) > genesis.block_capacity:
        raise StateRootMismatch(height, "capacity")
    if list_root(tuple(tx.encode() for tx in block.txs)) != block.header.tx_root:
        raise StateRootMismatch(height, "tx_root")
    new_state, receipts = _execute_all(state, block.txs, genesis, height)
    if list_root(tuple(r.encode() for r in receipts)) != block.header.receipts_root:
        raise StateRootMismatch(height, "receipts_root")
    if new_state.state_root() != block.header.state_root:
        raise StateRootMismatch(height, "state_root")
    return new_state, receipts


class Chain(object):
    """A single node's view: genesis, the blocks on top of it, the current state and every receipt."""

    def __init__(self, genesis: Genesis) -> None:
        if genesis.block_capacity < 1:
            raise ConfigError("block capacity must be positive")
        backend_for_id(genesis.backend_id)  # Fails early if this process may not verify the chain's proofs.
        self.genesis = genesis
        self.blocks: List[Block] = []
        self.state = ChainState()
        self.receipts: Dict[bytes, Receipt] = {}

    @property
    def height(self) -> Height:
        return Height(len(self.blocks))

    @property
    def head_hash(self) -> bytes:
        return self.blocks[-1].block_hash() if self.blocks else self.genesis.genesis_hash()

    def append(self, block: Block) -> List[Receipt]:
        """
        Validates and appends a block produced elsewhere.
        :raise BrokenLinkage: the block does not extend the head.
        :raise StateRootMismatch: re-execution disagrees with the header.
        """
        if block.height != self.height + 1 or block.header.parent_hash != self.head_hash:
            raise BrokenLinkage(f"block {block.height} does not extend head {self.height}")
        self.state, receipts = apply_block(self.state, block, self.genesis)
        self._record(block, receipts)
        return receipts

    def produce(self, pool: TxPool, capacity: Optional[int] = None) -> Tuple[Block, List[Receipt]]:
        block, self.state, receipts = pack_block(pool, self.state, self.genesis, self.head_hash,
                                                 Height(self.height + 1), capacity)
        self._record(block, receipts)
        return block, receipts

    def _record(self, block: Block, receipts: List[Receipt]) -> None:
        self.blocks.append(block)
        for receipt in receipts:
            self.receipts[receipt.tx_hash] = receipt


def replay_chain(genesis: Genesis, blocks: Iterable[Block]) -> ChainState:
    """
    Re-executes `blocks` from genesis, checking linkage and every header commitment.
    :raise BrokenLinkage: a block does not extend its predecessor.
    :raise StateRootMismatch: re-execution disagrees with a header.
    """
    chain = Chain(genesis)
    for block in blocks:
        chain.append(block)
    logger.info("Replayed %d blocks from height %d", chain.height, GENESIS_HEIGHT)
    return chain.state
