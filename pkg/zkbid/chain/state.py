"""
The chain state of the two identity contracts.

The stores only grow: SeedKeyStore maps an identity hash to the seed key (and proof) registered for it, the key-image
set records every ring signature accepted by the soul-cert contract, and SoulKeyStore holds the certified soul keys.
No store relates a soul key to a seed key.
"""
from typing import Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

from ..codec import Writer
from ..consts import Address
from ..crypto.primitives import Digest32, GroupElement, digest

STATE_ROOT_TAG = b"ZKBID/STATE/v1"


class SeedRecord(NamedTuple):
    pk_seed: GroupElement
    zkp: bytes


class StateDelta(NamedTuple):
    """The effect of one accepted transaction."""
    sender: Address
    seed: Optional[Tuple[bytes, SeedRecord]] = None  # (id_hash, record)
    key_image: Optional[GroupElement] = None
    pk_soul: Optional[GroupElement] = None


class RegistrySummary(NamedTuple):
    seeds: int
    souls: int
    key_images: int


class ChainState(object):
    def __init__(self) -> None:
        self.seed_store: Dict[bytes, SeedRecord] = {}
        self.seed_keys: Set[GroupElement] = set()  # The values of seed_store, for ring-membership checks.
        self.key_images: Set[GroupElement] = set()
        self.soul_store: Set[GroupElement] = set()
        self.account_nonces: Dict[Address, int] = {}

    def nonce(self, addr: Address) -> int:
        """The nonce the next transaction from `addr` must carry."""
        return self.account_nonces.get(addr, 0)

    def apply(self, delta: StateDelta) -> None:
        """Applies an accepted transaction.  Callers have already run the contract checks."""
        if delta.seed is not None:
            id_hash, record = delta.seed
            assert id_hash not in self.seed_store
            self.seed_store[id_hash] = record
            self.seed_keys.add(record.pk_seed)
        if delta.key_image is not None:
            assert delta.key_image not in self.key_images
            self.key_images.add(delta.key_image)
        if delta.pk_soul is not None:
            self.soul_store.add(delta.pk_soul)
        self.account_nonces[delta.sender] = self.nonce(delta.sender) + 1

    def copy(self) -> "ChainState":
        """An independent snapshot."""
        other = ChainState()
        other.seed_store = dict(self.seed_store)
        other.seed_keys = set(self.seed_keys)
        other.key_images = set(self.key_images)
        other.soul_store = set(self.soul_store)
        other.account_nonces = dict(self.account_nonces)
        return other

    def registered_seed_keys(self) -> List[GroupElement]:
        """The seed keys in canonical (encoding) order."""
        return _sorted_points(self.seed_keys)

    def summary(self) -> RegistrySummary:
        return RegistrySummary(len(self.seed_store), len(self.soul_store), len(self.key_images))

    def serialize(self) -> bytes:
        """Canonical encoding: every store sorted, then the nonces sorted by address."""
        w = Writer().u32(len(self.seed_store))
        for id_hash in sorted(self.seed_store):
            record = self.seed_store[id_hash]
            w.raw(id_hash).raw(record.pk_seed.encode()).blob(record.zkp)
        w.blobs(p.encode() for p in _sorted_points(self.key_images))
        w.blobs(p.encode() for p in _sorted_points(self.soul_store))
        w.u32(len(self.account_nonces))
        for addr in sorted(self.account_nonces):
            w.raw(addr).u64(self.account_nonces[addr])
        return w.getvalue()

    def state_root(self) -> Digest32:
        return digest(STATE_ROOT_TAG + self.serialize())


def _sorted_points(points: Iterable[GroupElement]) -> List[GroupElement]:
    return sorted(points, key=lambda p: p.encode())
