"""A chain persisted in a directory: the genesis, an append-only block file, and receipts as JSON lines."""
import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, List

from ..codec import Reader, Writer
from ..errors import ChainIntegrityError, ConfigError, MalformedEncoding
from .. import storage
from .block import Chain
from .types import Block, Genesis, Receipt

GENESIS_FILE = "genesis.bin"
BLOCKS_FILE = "blocks.bin"
RECEIPTS_FILE = "receipts.jsonl"


class ChainStore(object):
    logger = logging.getLogger(__name__)

    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)

    def exists(self) -> bool:
        return (self.directory / GENESIS_FILE).exists()

    def create(self, genesis: Genesis) -> None:
        """Starts a new chain; the genesis file is written atomically."""
        if self.exists():
            raise ConfigError(f"a chain already exists in {self.directory}")
        self.directory.mkdir(parents=True, exist_ok=True)
        (self.directory / BLOCKS_FILE).write_bytes(b"")
        (self.directory / RECEIPTS_FILE).write_text("")
        storage.put(self.directory / GENESIS_FILE, genesis.encode())
        self.logger.info("Created chain in %s", self.directory)

    def genesis(self) -> Genesis:
        try:
            return Genesis.decode(storage.get(self.directory / GENESIS_FILE))
        except MalformedEncoding as e:
            raise ChainIntegrityError(f"bad genesis file: {e}")

    def blocks(self) -> Iterator[Block]:
        """Reads every stored block in order."""
        data = (self.directory / BLOCKS_FILE).read_bytes()
        r = Reader(data)
        offset = 0
        while offset < len(data):
            try:
                record = r.blob()
                block = Block.decode(record)
            except MalformedEncoding as e:
                raise ChainIntegrityError(f"bad block record at offset {offset}: {e}")
            offset += 4 + len(record)
            yield block

    def receipts(self) -> List[Receipt]:
        with (self.directory / RECEIPTS_FILE).open("r") as f:
            return [Receipt.from_json(json.loads(line)) for line in f if line.strip()]

    def append(self, block: Block, receipts: Iterable[Receipt]) -> None:
        with (self.directory / BLOCKS_FILE).open("ab") as f:
            storage.append(f, Writer().blob(block.encode()).getvalue())
        lines = "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in receipts)
        with (self.directory / RECEIPTS_FILE).open("ab") as f:
            storage.append(f, lines.encode())

    def load(self) -> Chain:
        """
        Rebuilds the chain by replaying every stored block.
        :raise ChainIntegrityError: a block is unreadable, unlinked, or disagrees with its header.
        """
        chain = Chain(self.genesis())
        for block in self.blocks():
            chain.append(block)
        self.logger.debug("Loaded chain from %s at height %d", self.directory, chain.height)
        return chain
