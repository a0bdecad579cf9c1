"""
The wallet directory.

    $ZKBID_HOME/
        keys/pk.bin, keys/vk.bin    proving and verification keys (backend file format)
        keys/setup.json             the threshold given to `zkbid setup`
        seed.json, soul.json        accounts, private keys included
        features/live.json, features/card.json
        reginfo.json, cerinfo.json
        receipts.json               every receipt the wallet received, in order
        chain/                      the local chain (see `ChainStore`)

Every JSON file carries a format version and a kind; files of another version or kind are rejected.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..chain.types import CerInfo, Receipt, RegInfo
from ..config import Settings, load_settings
from ..crypto.accounts import Account
from ..errors import ConfigError, MalformedEncoding
from ..facematch import FeatureVector, dump_feature_file, load_feature_file
from .. import storage
from ..zk.backend import KeyPair

WALLET_FORMAT_VERSION = 1

SEED = "seed"
SOUL = "soul"


class WalletStore(object):
    logger = logging.getLogger(__name__)

    def __init__(self, home: Path) -> None:
        self.home = Path(home)

    @staticmethod
    def open(settings: Optional[Settings] = None) -> "WalletStore":
        """Opens the wallet at $ZKBID_HOME (default ~/.zkbid)."""
        return WalletStore((settings or load_settings()).home)

    @property
    def chain_dir(self) -> Path:
        return self.home / "chain"

    def _path(self, name: str) -> Path:
        path = self.home / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _put(self, name: str, kind: str, data: Any) -> None:
        storage.put_json(self._path(name), {"version": WALLET_FORMAT_VERSION, "kind": kind, "data": data})

    def _get(self, name: str, kind: str, hint: str) -> Any:
        try:
            obj = storage.get_json(self.home / name)
        except KeyError:
            raise ConfigError(f"wallet {self.home} has no {kind}; run `zkbid {hint}` first")
        if not isinstance(obj, dict) or obj.get("version") != WALLET_FORMAT_VERSION or obj.get("kind") != kind:
            raise MalformedEncoding(f"{self.home / name} is not a version {WALLET_FORMAT_VERSION} {kind} file")
        return obj["data"]

    def has(self, name: str) -> bool:
        return (self.home / name).exists()

    def save_keys(self, keys: KeyPair, tau: Optional[float] = None) -> None:
        """
        Stores the setup keys.
        :param tau: the threshold the keys were set up with; it becomes the default of `zkbid genesis`.
        """
        write_key_files(self.home / "keys", keys)
        if tau is not None:
            self._put("keys/setup.json", "setup", {"threshold": tau})
        self.logger.info("Saved keys in %s", self.home / "keys")

    def setup_threshold(self) -> Optional[float]:
        """The threshold recorded by `zkbid setup`, if any."""
        if not self.has("keys/setup.json"):
            return None
        return float(self._get("keys/setup.json", "setup", "setup")["threshold"])

    def _key(self, name: str) -> bytes:
        try:
            return storage.get(self.home / "keys" / name)
        except KeyError:
            raise ConfigError(f"wallet {self.home} has no setup keys; run `zkbid setup` first")

    def proving_key(self) -> bytes:
        return self._key("pk.bin")

    def verification_key(self) -> bytes:
        return self._key("vk.bin")

    def save_account(self, role: str, account: Account) -> None:
        # Private keys live only in the wallet files; they are printed only on request.
        self._put(f"{role}.json", f"{role} account", account.to_json(reveal_secret=True))

    def load_account(self, role: str) -> Account:
        hint = "enroll" if role == SEED else "certify"
        return Account.from_json(self._get(f"{role}.json", f"{role} account", hint))

    def save_features(self, live: FeatureVector, card: FeatureVector) -> None:
        dump_feature_file(self._path("features/live.json"), live)
        dump_feature_file(self._path("features/card.json"), card)

    def load_features(self) -> Dict[str, FeatureVector]:
        return {name: load_feature_file(self.home / "features" / f"{name}.json") for name in ("live", "card")}

    def save_reginfo(self, reg: RegInfo) -> None:
        self._put("reginfo.json", "reginfo", reg.to_json())

    def load_reginfo(self) -> RegInfo:
        return RegInfo.from_json(self._get("reginfo.json", "reginfo", "enroll"))

    def save_cerinfo(self, cer: CerInfo) -> None:
        self._put("cerinfo.json", "cerinfo", cer.to_json())

    def load_cerinfo(self) -> CerInfo:
        return CerInfo.from_json(self._get("cerinfo.json", "cerinfo", "certify"))

    def add_receipt(self, kind: str, receipt: Receipt) -> None:
        """Appends a receipt; `kind` is "registration" or "certification"."""
        entries = self.receipts_json()
        entries.append({"kind": kind, **receipt.to_json()})
        self._put("receipts.json", "receipts", entries)

    def receipts_json(self) -> List[Dict[str, Any]]:
        if not self.has("receipts.json"):
            return []
        return list(self._get("receipts.json", "receipts", "register"))

    def receipts(self, kind: Optional[str] = None) -> List[Receipt]:
        return [Receipt.from_json(e) for e in self.receipts_json() if kind is None or e.get("kind") == kind]


def write_key_files(directory: Path, keys: KeyPair) -> None:
    """Writes `pk.bin` and `vk.bin` into `directory`, creating it if needed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    storage.put(directory / "pk.bin", keys.pk)
    storage.put(directory / "vk.bin", keys.vk)
