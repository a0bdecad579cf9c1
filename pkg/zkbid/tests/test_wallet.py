"""Tests for the wallet store, the user-side flows and the `zkbid` command-line tool."""
import csv
import io
import json
from pathlib import Path
import random
import shutil
import sys
from typing import Any, Iterator, List

import numpy as np
import pytest

from zkbid import cli
from zkbid.chain.store import ChainStore
from zkbid.chain.types import Genesis, Receipt
from zkbid.consts import EPS_NORM, Height
from zkbid.crypto.accounts import generate_account, seeded_entropy
from zkbid.errors import (ConfigError, ContractRejection, EndpointUnreachable, FaceMismatch, InsufficientAnonymitySet,
                          MalformedEncoding, ProverFailure, RejectCode, ZeroNormVector)
from zkbid.facematch import ThresholdConfig, dump_raw_features
from zkbid import logging as event_log
from zkbid.net.sim import SimConfig, at_height, spawn_network
from zkbid.wallet.endpoint import LocalChainEndpoint, SimulationEndpoint
from zkbid.wallet.flows import (ACTOR, IdentityInput, certify_soul, enroll, identity_hash, register, sample_ring,
                                status)
from zkbid.wallet.store import SEED, SOUL, WalletStore
from zkbid.zk.backend import KeyPair, TransparentBackend

pytestmark = pytest.mark.usefixtures("allow_test_backend")

THRESHOLD = ThresholdConfig.of(0.90)

entropy = seeded_entropy("test-wallet")


def _inputs(index: int, id_number: str = None, noise: float = 0.01) -> IdentityInput:
    rng = np.random.default_rng(index)
    v = rng.standard_normal(128)
    return IdentityInput(id_number or f"ID-{index}", list(v), list(v + rng.standard_normal(128) * noise))


def _json_objects(text: str) -> List[Any]:
    """Parses consecutive JSON documents, as printed by commands that report progress."""
    decoder = json.JSONDecoder()
    objects, pos = [], 0
    text = text.strip()
    while pos < len(text):
        obj, pos = decoder.raw_decode(text, pos)
        objects.append(obj)
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return objects


def _orthogonal(id_number: str = "ID-X") -> IdentityInput:
    live, card = [0.0] * 128, [0.0] * 128
    live[0], card[1] = 1.0, 1.0
    return IdentityInput(id_number, live, card)


@pytest.fixture(scope="module")
def genesis(transparent_keys: KeyPair) -> Genesis:
    return Genesis.create(transparent_keys.vk, THRESHOLD, EPS_NORM, block_capacity=10)


def _endpoint(directory: Path, genesis: Genesis) -> LocalChainEndpoint:
    ChainStore(directory).create(genesis)
    return LocalChainEndpoint(directory)


def _enroll(keys: KeyPair, index: int, store: WalletStore = None, id_number: str = None):
    return enroll(_inputs(index, id_number), keys.pk, THRESHOLD, TransparentBackend(), store, entropy=entropy)


@pytest.fixture(scope="module")
def five_registered(allow_test_backend, tmp_path_factory, transparent_keys: KeyPair, genesis: Genesis) -> Path:
    """A chain directory with five registered seed accounts, and their wallets next to it."""
    root = tmp_path_factory.mktemp("five")
    endpoint = _endpoint(root / "chain", genesis)
    for i in range(5):
        store = WalletStore(root / f"wallet{i}")
        enrollment = _enroll(transparent_keys, i, store)
        register(enrollment.seed, enrollment.reg, endpoint, store)
    return root


@pytest.fixture()
def five(tmp_path: Path, five_registered: Path) -> Path:
    """A private copy of `five_registered`."""
    shutil.copytree(five_registered, tmp_path / "five")
    return tmp_path / "five"


@pytest.fixture()
def event_lines() -> Iterator[io.StringIO]:
    buf = io.StringIO()
    event_log.set_sink(buf)
    try:
        yield buf
    finally:
        event_log.set_sink(sys.stderr)


class TestEnroll(object):
    def test_writes_wallet(self, tmp_path: Path, transparent_keys: KeyPair):
        store = WalletStore(tmp_path)
        enrollment = _enroll(transparent_keys, 0, store)
        assert store.load_account(SEED) == enrollment.seed
        assert store.load_reginfo() == enrollment.reg
        assert enrollment.reg.id_hash == identity_hash("ID-0")
        assert store.load_features() == {"live": enrollment.live, "card": enrollment.card}

    def test_face_mismatch_writes_nothing(self, tmp_path: Path, transparent_keys: KeyPair):
        with pytest.raises(FaceMismatch):
            enroll(_orthogonal(), transparent_keys.pk, THRESHOLD, TransparentBackend(), WalletStore(tmp_path))
        assert list(tmp_path.iterdir()) == []

    def test_norm_tolerance(self, transparent_keys: KeyPair):
        raw = [3.0, 4.0] + [0.0] * 126
        with pytest.raises(ProverFailure):
            enroll(IdentityInput("ID-N", raw, raw), transparent_keys.pk, THRESHOLD, TransparentBackend(), eps_norm=0)

    def test_bad_inputs(self, transparent_keys: KeyPair):
        with pytest.raises(ConfigError):
            enroll(_inputs(0)._replace(id_number=""), transparent_keys.pk, THRESHOLD, TransparentBackend())
        with pytest.raises(ZeroNormVector):
            enroll(IdentityInput("ID-Z", [0.0] * 128, [1.0] * 128), transparent_keys.pk, THRESHOLD,
                   TransparentBackend())

    def test_identity_hash(self):
        assert identity_hash("ID-1") == identity_hash("ID-1") != identity_hash("ID-2")
        assert len(identity_hash("ÄÖÜ-3")) == 32

    def test_event_log(self, transparent_keys: KeyPair, event_lines: io.StringIO):
        _enroll(transparent_keys, 1)
        entries = [event_log.parse_line(line) for line in event_lines.getvalue().splitlines()]
        assert [(e.actor, e.step, e.phase, e.event) for e in entries] == [
            (ACTOR, 1, "begin", "face comparison"), (ACTOR, 1, "end", "face comparison"),
            (ACTOR, 2, "begin", "seed account generation"), (ACTOR, 2, "end", "seed account generation"),
            (ACTOR, 3, "begin", "zkp generation"), (ACTOR, 3, "end", "zkp generation")]
        assert entries[0].time_micro <= entries[-1].time_micro


class TestRegister(object):
    def test_register(self, tmp_path: Path, transparent_keys: KeyPair, genesis: Genesis):
        endpoint = _endpoint(tmp_path / "chain", genesis)
        store = WalletStore(tmp_path / "wallet")
        enrollment = _enroll(transparent_keys, 0, store)
        receipt = register(enrollment.seed, enrollment.reg, endpoint, store)
        assert receipt.accepted and receipt.height == 1
        assert store.receipts("registration") == [receipt]

        reopened = LocalChainEndpoint(tmp_path / "chain")
        assert reopened.height() == 1
        assert status(reopened).registry == (1, 0, 0)

        with pytest.raises(ContractRejection) as e:
            register(enrollment.seed, enrollment.reg, endpoint, store)
        assert e.value.code == RejectCode.DUPLICATE_IDENTITY
        assert [r.accepted for r in store.receipts()] == [True, False]

    def test_same_identity_other_wallet(self, five: Path, transparent_keys: KeyPair):
        endpoint = LocalChainEndpoint(five / "chain")
        store = WalletStore(five / "intruder")
        enrollment = _enroll(transparent_keys, 40, store, id_number="ID-2")
        with pytest.raises(ContractRejection) as e:
            register(enrollment.seed, enrollment.reg, endpoint, store)
        assert e.value.exit_code == RejectCode.DUPLICATE_IDENTITY.value
        assert store.receipts()[0].error == RejectCode.DUPLICATE_IDENTITY
        assert status(endpoint).registry.seeds == 5

    def test_no_chain(self, tmp_path: Path):
        with pytest.raises(EndpointUnreachable):
            LocalChainEndpoint(tmp_path / "chain")


class TestCertify(object):
    def test_certify(self, five: Path):
        endpoint = LocalChainEndpoint(five / "chain")
        store = WalletStore(five / "wallet3")
        seed = store.load_account(SEED)
        soul, receipt = certify_soul(seed, endpoint, ring_size=3, rng=random.Random(0), store=store, entropy=entropy)
        assert receipt.accepted and receipt.height == 6
        assert store.load_account(SOUL) == soul
        cer = store.load_cerinfo()
        assert cer.pk_soul == soul.pk and cer.ring.size == 3 and seed.pk in cer.ring.members
        assert status(endpoint) == (Height(6), (5, 1, 1))

        with pytest.raises(ContractRejection) as e:
            certify_soul(seed, endpoint, ring_size=5, rng=random.Random(1), store=store)
        assert e.value.code == RejectCode.DUPLICATE_KEY_IMAGE
        assert store.load_account(SOUL) == soul
        assert [r.accepted for r in store.receipts("certification")] == [True, False]

    def test_registry_too_small(self, five: Path):
        endpoint = LocalChainEndpoint(five / "chain")
        store = WalletStore(five / "wallet0")
        with pytest.raises(InsufficientAnonymitySet):
            certify_soul(store.load_account(SEED), endpoint, ring_size=11, store=store)
        assert endpoint.height() == 5
        assert not store.has("soul.json")


class TestSampleRing(object):
    @pytest.fixture(scope="class")
    def registry(self) -> List:
        return [generate_account(seeded_entropy(("registry", i))).pk for i in range(20)]

    def test_members(self, registry: List):
        own = registry[7]
        ring, position = sample_ring(own, registry, 11, random.Random(3))
        assert ring.size == 11 and ring.members[position] == own
        assert len(set(ring.members)) == 11
        assert set(ring.members) <= set(registry)

    def test_ring_of_one(self, registry: List):
        assert sample_ring(registry[0], registry, 1, random.Random(0)) == ((registry[0],), 0)

    def test_sizes(self, registry: List):
        with pytest.raises(ConfigError):
            sample_ring(registry[0], registry, 0, random.Random(0))
        sample_ring(registry[0], registry, 20, random.Random(0))
        with pytest.raises(InsufficientAnonymitySet):
            sample_ring(registry[0], registry, 21, random.Random(0))

    def test_own_key_outside_registry(self, registry: List):
        own = generate_account(entropy).pk
        ring, position = sample_ring(own, registry, 21, random.Random(0))
        assert ring.members[position] == own

    def test_position_uniform(self, registry: List, trials):
        n = 11
        rng = random.Random(4)
        counts = np.zeros(n)
        draws = trials(22000, 2200)
        for _ in range(draws):
            counts[sample_ring(registry[0], registry, n, rng)[1]] += 1
        expected = draws / n
        chi_square = float(((counts - expected) ** 2 / expected).sum())
        assert chi_square < 23.21  # 10 degrees of freedom, significance 0.01.


class TestWalletStore(object):
    def test_missing(self, tmp_path: Path):
        store = WalletStore(tmp_path)
        with pytest.raises(ConfigError, match="zkbid enroll"):
            store.load_account(SEED)
        with pytest.raises(ConfigError, match="zkbid setup"):
            store.proving_key()
        assert store.receipts() == []

    @pytest.mark.parametrize("obj", [{"version": 2, "kind": "reginfo", "data": {}},
                                     {"version": 1, "kind": "cerinfo", "data": {}}, [1, 2]])
    def test_version_and_kind(self, tmp_path: Path, obj):
        (tmp_path / "reginfo.json").write_text(json.dumps(obj))
        with pytest.raises(MalformedEncoding):
            WalletStore(tmp_path).load_reginfo()

    def test_accounts(self, tmp_path: Path):
        store = WalletStore(tmp_path)
        account = generate_account(entropy)
        store.save_account(SOUL, account)
        assert store.load_account(SOUL) == account
        assert "sk" not in account.to_json()

    def test_receipts_by_kind(self, tmp_path: Path):
        store = WalletStore(tmp_path)
        first = Receipt(bytes(32), Height(1), 0, None)
        second = Receipt(bytes(range(32)), Height(2), 1, RejectCode.DUPLICATE_KEY_IMAGE)
        store.add_receipt("registration", first)
        store.add_receipt("certification", second)
        assert store.receipts() == [first, second]
        assert store.receipts("certification") == [second]

    def test_open_uses_environment(self, tmp_path: Path, monkeypatch):
        monkeypatch.setenv("ZKBID_HOME", str(tmp_path / "home"))
        assert WalletStore.open().home == tmp_path / "home"
        assert WalletStore.open().chain_dir == tmp_path / "home" / "chain"


class TestSimulationEndpoint(object):
    def test_flows_over_network(self, transparent_keys: KeyPair, genesis: Genesis):
        sim = spawn_network(SimConfig(), genesis)
        enrollments = [_enroll(transparent_keys, i) for i in range(3)]
        for i, enrollment in enumerate(enrollments):
            receipt = register(enrollment.seed, enrollment.reg, SimulationEndpoint(sim, i))
            assert receipt.accepted
        sim.run_until(at_height(3))
        endpoint = SimulationEndpoint(sim, 4)
        soul, receipt = certify_soul(enrollments[1].seed, endpoint, ring_size=3, rng=random.Random(0))
        assert receipt.accepted
        assert endpoint.nonce(soul.addr) == 1
        sim.run_until(at_height(receipt.height))
        assert all(node.chain.state.summary() == (3, 1, 1) for node in sim.nodes)
        assert status(endpoint).registry == (3, 1, 1)
        assert sim.converged()


class TestCli(object):
    def run(self, home: Path, capsys, *argv: str):
        code = cli.main(["--home", str(home), *argv])
        out = capsys.readouterr().out
        return code, (json.loads(out) if out.strip() else None)

    @pytest.fixture()
    def home(self, tmp_path: Path, capsys) -> Path:
        home = tmp_path / "home"
        assert self.run(home, capsys, "setup", "--backend", "transparent", "--seed", "1")[0] == 0
        assert self.run(home, capsys, "genesis", "--block-capacity", "10")[0] == 0
        return home

    @pytest.fixture()
    def features(self, tmp_path: Path) -> List[str]:
        inp = _inputs(0)
        dump_raw_features(tmp_path / "live.json", inp.feature_live)
        dump_raw_features(tmp_path / "card.json", inp.feature_card)
        return ["--live", str(tmp_path / "live.json"), "--card", str(tmp_path / "card.json")]

    def test_full_flow(self, home: Path, features: List[str], capsys):
        code, out = self.run(home, capsys, "enroll", "--id", "ID-0", *features)
        assert code == 0 and "sk" not in out["seed"]
        code, out = self.run(home, capsys, "register")
        assert code == 0 and out["status"] == "accepted"
        assert self.run(home, capsys, "register")[0] == RejectCode.DUPLICATE_IDENTITY.value

        assert self.run(home, capsys, "certify")[0] == InsufficientAnonymitySet.exit_code
        code, out = self.run(home, capsys, "certify", "--ring-size", "1", "--seed", "0")
        assert code == 0 and out["receipt"]["status"] == "accepted"
        assert self.run(home, capsys, "certify", "--ring-size", "1")[0] == RejectCode.DUPLICATE_KEY_IMAGE.value

        code, out = self.run(home, capsys, "status")
        assert code == 0
        assert (out["seeds"], out["souls"], out["key_images"]) == (1, 1, 1)
        assert "sk" not in self.run(home, capsys, "account", "--soul")[1]
        assert "sk" in self.run(home, capsys, "account", "--reveal-secret")[1]

    def test_face_mismatch(self, home: Path, tmp_path: Path, capsys):
        inp = _orthogonal()
        dump_raw_features(tmp_path / "a.json", inp.feature_live)
        dump_raw_features(tmp_path / "b.json", inp.feature_card)
        code, _ = self.run(home, capsys, "enroll", "--id", "ID-X", "--live", str(tmp_path / "a.json"),
                           "--card", str(tmp_path / "b.json"))
        assert code == FaceMismatch.exit_code
        assert not (home / "seed.json").exists()

    def test_threshold_must_match_chain(self, home: Path, features: List[str], capsys):
        assert self.run(home, capsys, "enroll", "--id", "ID-0", "--threshold", "0.5", *features)[0] == 2

    def test_order_of_commands(self, tmp_path: Path, features: List[str], capsys):
        home = tmp_path / "fresh"
        assert self.run(home, capsys, "enroll", "--id", "ID-0", *features)[0] == ConfigError.exit_code
        assert self.run(home, capsys, "register")[0] == EndpointUnreachable.exit_code
        assert self.run(home, capsys, "setup", "--backend", "transparent", "--seed", "2")[0] == 0
        assert self.run(home, capsys, "genesis")[0] == 0
        assert self.run(home, capsys, "genesis")[0] == ConfigError.exit_code

    def test_sweep(self, tmp_path: Path, capsys):
        out_path = tmp_path / "sweep.csv"
        code, out = self.run(tmp_path, capsys, "sweep", "--subjects", "5", "--per-subject", "2", "--start", "0.5",
                             "--stop", "0.6", "--step", "0.05", "--out", str(out_path))
        assert code == 0
        assert [row["threshold"] for row in out] == [0.5, 0.55, 0.6]
        with out_path.open() as f:
            assert len(list(csv.reader(f))) == 4
        assert out_path.with_suffix(".manifest.json").exists()
        assert self.run(tmp_path, capsys, "sweep", "--step", "0")[0] == ConfigError.exit_code

    def test_bench(self, home: Path, tmp_path: Path, capsys):
        code = cli.main(["--home", str(home), "bench", "--users", "1", "3", "--block-capacity", "2",
                         "--csv", str(tmp_path / "bench.csv"), "--dat", str(tmp_path / "bench.dat")])
        assert code == 0
        rows = _json_objects(capsys.readouterr().out)
        assert [r["n_users"] for r in rows] == [1, 3]
        assert rows[0]["max_ms"] == 2000 and rows[1]["max_ms"] == 4000
        with (tmp_path / "bench.csv").open() as f:
            assert len(list(csv.reader(f))) == 3
        assert (tmp_path / "bench.dat").read_text().startswith("# users")

    def test_timings(self, home: Path, capsys):
        code, out = self.run(home, capsys, "timings", "--runs", "1", "--ring-size", "2")
        assert code == 0
        assert [t["operation"] for t in out] == ["face comparison", "zkp generation", "seed account generation",
                                                 "soul account generation", "ring signing"]
