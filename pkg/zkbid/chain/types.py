"""
On-chain data types and their canonical encodings.

Every binary encoding starts with a 2-byte format id, followed by its fields in a fixed order; integers are big
endian and variable-length fields carry a u32 length prefix (see `zkbid.codec`).
"""
from typing import Any, Dict, NamedTuple, Optional, Tuple

from ..codec import Reader, Writer
from ..consts import ADDRESS_LEN, DEFAULT_BLOCK_CAPACITY, DIGEST_LEN, EPS_NORM, Address, Height
from ..crypto.accounts import AccountSignature, account_verify
from ..crypto.lrs import LinkableRingSig, Ring
from ..crypto.primitives import POINT_LEN, Digest32, GroupElement, digest, from_hex, to_hex
from ..errors import MalformedEncoding, RejectCode
from ..facematch import SIMILARITY_SCALE, ThresholdConfig
from ..zk.backend import key_backend
from ..zk.circuit import PublicInputs, seed_key_digest

TX_FORMAT = 0x0101
BLOCK_FORMAT = 0x0201
REGINFO_FORMAT = 0x0301
CERINFO_FORMAT = 0x0401
GENESIS_FORMAT = 0x0501
RECEIPT_FORMAT = 0x0601


def _check_format(r: Reader, expected: int, what: str) -> None:
    found = r.u16()
    if found != expected:
        raise MalformedEncoding(f"{what}: format id {found:#06x}, expected {expected:#06x}")


def _point(r: Reader) -> GroupElement:
    return GroupElement.decode(r.raw(POINT_LEN))


class RegInfo(NamedTuple):
    """The registration bundle a seed account submits to the identity-auth contract."""
    zkp: bytes
    id_hash: bytes
    pk_seed: GroupElement
    sig_seed: AccountSignature

    def is_consistent(self) -> bool:
        """True iff sig_seed is a signature over id_hash under pk_seed."""
        return len(self.id_hash) == DIGEST_LEN and account_verify(self.pk_seed, self.id_hash, self.sig_seed)

    def public_inputs(self, cfg: ThresholdConfig, eps_norm: int = EPS_NORM) -> PublicInputs:
        """The statement the proof must be valid for."""
        return PublicInputs.for_statement(cfg, self.id_hash, seed_key_digest(self.pk_seed), eps_norm)

    def encode(self) -> bytes:
        return (Writer().u16(REGINFO_FORMAT).blob(self.zkp).raw(self.id_hash).raw(self.pk_seed.encode())
                .raw(self.sig_seed.encode()).getvalue())

    @staticmethod
    def decode(data: bytes) -> "RegInfo":
        r = Reader(data)
        _check_format(r, REGINFO_FORMAT, "RegInfo")
        reg = RegInfo(zkp=r.blob(), id_hash=r.raw(DIGEST_LEN), pk_seed=_point(r),
                      sig_seed=AccountSignature.decode(r.raw(64)))
        r.finish()
        return reg

    def to_json(self) -> Dict[str, Any]:
        return {"zkp": to_hex(self.zkp), "id_hash": to_hex(self.id_hash), "pk_seed": self.pk_seed.hex(),
                "sig_seed": self.sig_seed.to_json()}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "RegInfo":
        try:
            return RegInfo(from_hex(obj["zkp"]), from_hex(obj["id_hash"], DIGEST_LEN),
                           GroupElement.decode(from_hex(obj["pk_seed"])), AccountSignature.from_json(obj["sig_seed"]))
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad RegInfo JSON: {e!r}")


class CerInfo(NamedTuple):
    """The certification bundle a soul account submits to the soul-cert contract."""
    pk_soul: GroupElement
    ring: Ring
    sig: LinkableRingSig

    def encode(self) -> bytes:
        return (Writer().u16(CERINFO_FORMAT).raw(self.pk_soul.encode()).blob(self.ring.encode())
                .blob(self.sig.encode()).getvalue())

    @staticmethod
    def decode(data: bytes) -> "CerInfo":
        r = Reader(data)
        _check_format(r, CERINFO_FORMAT, "CerInfo")
        cer = CerInfo(pk_soul=_point(r), ring=Ring.decode(r.blob()), sig=LinkableRingSig.decode(r.blob()))
        r.finish()
        return cer

    def to_json(self) -> Dict[str, Any]:
        return {"pk_soul": self.pk_soul.hex(), "ring": self.ring.to_json(), "sig": self.sig.to_json()}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "CerInfo":
        try:
            return CerInfo(GroupElement.decode(from_hex(obj["pk_soul"])), Ring.from_json(obj["ring"]),
                           LinkableRingSig.from_json(obj["sig"]))
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad CerInfo JSON: {e!r}")


class Transaction(NamedTuple):
    sender: Address
    recipient: Address
    nonce: int
    data: bytes
    signature: AccountSignature

    def signing_payload(self) -> bytes:
        return Writer().raw(self.sender).raw(self.recipient).u64(self.nonce).blob(self.data).getvalue()

    def signing_digest(self) -> Digest32:
        """The message the sender signs: digest(sender || recipient || nonce || data)."""
        return digest(self.signing_payload())

    def encode(self) -> bytes:
        return Writer().u16(TX_FORMAT).raw(self.signing_payload()).raw(self.signature.encode()).getvalue()

    @staticmethod
    def decode(data: bytes) -> "Transaction":
        r = Reader(data)
        tx = Transaction.read(r)
        r.finish()
        return tx

    @staticmethod
    def read(r: Reader) -> "Transaction":
        _check_format(r, TX_FORMAT, "Transaction")
        return Transaction(sender=Address(r.raw(ADDRESS_LEN)), recipient=Address(r.raw(ADDRESS_LEN)), nonce=r.u64(),
                           data=r.blob(), signature=AccountSignature.decode(r.raw(64)))

    def tx_hash(self) -> Digest32:
        return digest(self.encode())


class Receipt(NamedTuple):
    """The outcome of executing one transaction.  `error` is None for an accepted transaction."""
    tx_hash: bytes
    height: Height
    index: int
    error: Optional[RejectCode]

    @property
    def accepted(self) -> bool:
        return self.error is None

    def encode(self) -> bytes:
        code = 0 if self.error is None else self.error.value
        return Writer().u16(RECEIPT_FORMAT).raw(self.tx_hash).u64(self.height).u32(self.index).u8(code).getvalue()

    def to_json(self) -> Dict[str, Any]:
        return {"tx_hash": to_hex(self.tx_hash), "height": self.height, "index": self.index,
                "status": "accepted" if self.accepted else "rejected",
                "error": None if self.error is None else str(self.error)}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "Receipt":
        try:
            error = obj.get("error")
            return Receipt(from_hex(obj["tx_hash"], DIGEST_LEN), Height(int(obj["height"])), int(obj["index"]),
                           None if error is None else RejectCode.parse(error))
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedEncoding(f"bad receipt JSON: {e!r}")


def list_root(items: Tuple[bytes, ...]) -> Digest32:
    """Digest of a length-prefixed list; the commitment scheme for tx and receipt lists."""
    return digest(Writer().blobs(items).getvalue())


class BlockHeader(NamedTuple):
    height: Height
    parent_hash: bytes
    tx_root: bytes
    receipts_root: bytes
    state_root: bytes

    def encode(self) -> bytes:
        return (Writer().u64(self.height).raw(self.parent_hash).raw(self.tx_root).raw(self.receipts_root)
                .raw(self.state_root).getvalue())

    @staticmethod
    def read(r: Reader) -> "BlockHeader":
        return BlockHeader(Height(r.u64()), r.raw(DIGEST_LEN), r.raw(DIGEST_LEN), r.raw(DIGEST_LEN), r.raw(DIGEST_LEN))

    def block_hash(self) -> Digest32:
        return digest(self.encode())


class Block(NamedTuple):
    header: BlockHeader
    txs: Tuple[Transaction, ...]

    @property
    def height(self) -> Height:
        return self.header.height

    def block_hash(self) -> Digest32:
        return self.header.block_hash()

    def encode(self) -> bytes:
        w = Writer().u16(BLOCK_FORMAT).raw(self.header.encode()).u32(len(self.txs))
        for tx in self.txs:
            w.blob(tx.encode())
        return w.getvalue()

    @staticmethod
    def decode(data: bytes) -> "Block":
        r = Reader(data)
        _check_format(r, BLOCK_FORMAT, "Block")
        header = BlockHeader.read(r)
        count = r.u32()
        txs = tuple(Transaction.decode(r.blob()) for _ in range(count))
        r.finish()
        return Block(header, txs)


class Genesis(NamedTuple):
    """Chain parameters fixed at creation; its digest is the parent hash of block 1."""
    vk: bytes
    tau_fixed: int
    eps_norm: int
    block_capacity: int
    backend_id: int

    @staticmethod
    def create(vk: bytes, cfg: ThresholdConfig, eps_norm: int = EPS_NORM,
               block_capacity: int = DEFAULT_BLOCK_CAPACITY) -> "Genesis":
        """Genesis for a chain whose proofs verify under `vk`; the backend id is read from the key header."""
        return Genesis(vk, cfg.tau_fixed, eps_norm, block_capacity, key_backend(vk))

    @property
    def threshold(self) -> ThresholdConfig:
        return ThresholdConfig(self.tau_fixed / SIMILARITY_SCALE, self.tau_fixed)

    def encode(self) -> bytes:
        return (Writer().u16(GENESIS_FORMAT).blob(self.vk).raw(self.tau_fixed.to_bytes(8, "big", signed=True))
                .u64(self.eps_norm).u32(self.block_capacity).u8(self.backend_id).getvalue())

    @staticmethod
    def decode(data: bytes) -> "Genesis":
        r = Reader(data)
        _check_format(r, GENESIS_FORMAT, "Genesis")
        genesis = Genesis(vk=r.blob(), tau_fixed=int.from_bytes(r.raw(8), "big", signed=True), eps_norm=r.u64(),
                          block_capacity=r.u32(), backend_id=r.u8())
        r.finish()
        return genesis

    def genesis_hash(self) -> Digest32:
        return digest(self.encode())
