"""Chain endpoints: where the wallet submits transactions and polls for receipts."""
from abc import ABC, abstractmethod
import logging
from pathlib import Path
from typing import Optional

from ..chain.block import Chain, TxPool
from ..chain.state import ChainState
from ..chain.store import ChainStore
from ..chain.types import Genesis, Receipt, Transaction
from ..consts import Address, Height
from ..errors import EndpointUnreachable, Timeout
from ..net.sim import Simulation

DEFAULT_MAX_POLLS = 64


class ChainEndpoint(ABC):
    """Abstract base class for chain endpoints."""
    logger = logging.getLogger(__name__)

    @abstractmethod
    def genesis(self) -> Genesis:
        pass

    @abstractmethod
    def state(self) -> ChainState:
        """The state at the endpoint's current head."""
        pass

    @abstractmethod
    def height(self) -> Height:
        pass

    @abstractmethod
    def submit(self, tx: Transaction) -> None:
        pass

    @abstractmethod
    def receipt(self, tx_hash: bytes) -> Optional[Receipt]:
        pass

    @abstractmethod
    def poll(self) -> None:
        """Waits for the next block."""
        pass

    def nonce(self, addr: Address) -> int:
        return self.state().nonce(addr)

    def wait_for_receipt(self, tx_hash: bytes, max_polls: int = DEFAULT_MAX_POLLS) -> Receipt:
        """
        Polls until the transaction has a receipt.
        :raise Timeout: no receipt after `max_polls` blocks.
        """
        for _ in range(max_polls + 1):
            receipt = self.receipt(tx_hash)
            if receipt is not None:
                return receipt
            self.poll()
        raise Timeout(f"no receipt for {tx_hash.hex()} after {max_polls} blocks")


class LocalChainEndpoint(ChainEndpoint):
    """
    A single-node chain persisted in a directory.  Submitted transactions wait in memory; every poll with a
    non-empty pool produces one block and appends it to disk.
    """

    def __init__(self, directory: Path) -> None:
        self.store = ChainStore(directory)
        if not self.store.exists():
            raise EndpointUnreachable(f"no chain in {directory}; run `zkbid genesis` first")
        self.chain: Chain = self.store.load()
        self.pool = TxPool()

    def genesis(self) -> Genesis:
        return self.chain.genesis

    def state(self) -> ChainState:
        return self.chain.state

    def height(self) -> Height:
        return self.chain.height

    def submit(self, tx: Transaction) -> None:
        self.pool.add(tx)

    def receipt(self, tx_hash: bytes) -> Optional[Receipt]:
        return self.chain.receipts.get(tx_hash)

    def poll(self) -> None:
        if not len(self.pool):
            return
        block, receipts = self.chain.produce(self.pool)
        self.store.append(block, receipts)
        self.logger.info("Appended block %d with %d transactions", block.height, len(block.txs))


class SimulationEndpoint(ChainEndpoint):
    """One node of a running simulation; polling advances simulated time until that node gains a block."""

    def __init__(self, sim: Simulation, node_index: int) -> None:
        self.sim = sim
        self.node = sim.node(node_index)

    def genesis(self) -> Genesis:
        return self.sim.genesis

    def state(self) -> ChainState:
        return self.node.chain.state

    def height(self) -> Height:
        return self.node.chain.height

    def submit(self, tx: Transaction) -> None:
        self.sim.submit_tx(self.node.index, tx)

    def receipt(self, tx_hash: bytes) -> Optional[Receipt]:
        return self.node.chain.receipts.get(tx_hash)

    def poll(self) -> None:
        height = self.node.chain.height
        self.sim.run_until(lambda sim: self.node.chain.height > height)
