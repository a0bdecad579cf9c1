#!/usr/bin/env python3
"""
End-to-end tests that
  - drive many identities through registration and certification on a simulated multi-node network, and
  - run the `zkbid` command-line wallet as a subprocess, several wallets sharing one local chain.

Example usage:
    pytest test_integration.py -v -n 4                     # Four worker processes, verbose.
    pytest test_integration.py -v -n 4 --write-logs        # Run tests and gather wallet logs into working directory.
    pytest test_integration.py -k "TestCli and groth16" --acceptance   # Run the CLI test with the real prover.
"""
from enum import Enum
import json
import os
from pathlib import Path
import random
import shutil
import subprocess
import sys
from typing import Any, Dict, Generator, List

import numpy as np
import pytest

from zkbid.chain.block import replay_chain
from zkbid.chain.types import Genesis
from zkbid.consts import DEFAULT_RING_SIZE, EPS_NORM
from zkbid.crypto.accounts import seeded_entropy
from zkbid.errors import ContractRejection, RejectCode
from zkbid.facematch import ThresholdConfig, dump_raw_features
from zkbid.net.sim import SimConfig, Simulation, at_height, spawn_network
from zkbid.wallet.endpoint import SimulationEndpoint
from zkbid.wallet.flows import Enrollment, IdentityInput, certify_soul, enroll, register
from zkbid.zk.backend import KeyPair, TransparentBackend

N_IDENTITIES = 20


class Backend(Enum):
    """Proving backends, so that the backend shows up nicely in test names."""
    TRANSPARENT = "transparent"
    GROTH16 = "groth16"

    def __str__(self):
        return self.value


def _features(index: int, noise: float = 0.01) -> IdentityInput:
    rng = np.random.default_rng([17, index])
    v = rng.standard_normal(128)
    return IdentityInput(f"ID-{index:04d}", list(v), list(v + rng.standard_normal(128) * noise))


class Wallet(object):
    """Runs `python -m zkbid` against one wallet directory."""

    def __init__(self, name: str, home: Path, log_dir: Path, backend: Backend) -> None:
        """
        :param log_dir: where the standard error of every run is collected, one file per wallet.
        :param backend: the backend the wallet is allowed to use.
        """
        self.name = name
        self.home = home
        self.log_path = log_dir / f"{name}.log"
        self.env = dict(os.environ, ZKBID_HOME=str(home))
        if backend is Backend.TRANSPARENT:
            self.env["ZKBID_ALLOW_TEST_BACKEND"] = "1"

    def run(self, *args: str, expected_code: int = 0) -> Any:
        """Runs one command, checks its exit status, and returns its parsed JSON output."""
        with self.log_path.open("a") as log_f:
            proc = subprocess.run([sys.executable, "-m", "zkbid", "-v", *args], env=self.env, stdout=subprocess.PIPE,
                                  stderr=log_f, cwd=Path(__file__).parent)
        assert proc.returncode == expected_code, f"zkbid {' '.join(args)}: exit {proc.returncode}; see {self.log_path}"
        out = proc.stdout.decode("utf-8").strip()
        return json.loads(out) if out else None

    def share_chain(self, other: "Wallet") -> None:
        """Makes this wallet use the keys and the local chain of `other`."""
        shutil.copytree(other.home / "keys", self.home / "keys")
        (self.home / "chain").symlink_to(other.home / "chain", target_is_directory=True)

    def enroll(self, inp: IdentityInput, expected_code: int = 0) -> Any:
        dump_raw_features(self.home / "live-input.json", inp.feature_live)
        dump_raw_features(self.home / "card-input.json", inp.feature_card)
        return self.run("enroll", "--id", inp.id_number, "--live", str(self.home / "live-input.json"),
                        "--card", str(self.home / "card-input.json"), expected_code=expected_code)


def _assert_no_warnings(log_path: Path):
    """Asserts that no run logged a warning."""
    with log_path.open("r") as log_f:
        for line in log_f:
            if "WARNING" in line:
                assert False, line


@pytest.fixture()
def log_dir(tmp_path: Path, should_log: bool) -> Path:
    return Path.cwd() if should_log else tmp_path


class TestNetwork(object):
    """Many identities on a six-node network."""
    @pytest.fixture(scope="class")
    def sim(self, allow_test_backend, transparent_keys: KeyPair) -> Simulation:
        genesis = Genesis.create(transparent_keys.vk, ThresholdConfig.of(0.90), EPS_NORM, block_capacity=50)
        return spawn_network(SimConfig(rng_seed=3), genesis)

    @pytest.fixture(scope="class")
    def enrollments(self, allow_test_backend, transparent_keys: KeyPair, sim: Simulation) -> List[Enrollment]:
        entropy = seeded_entropy("integration-enroll")
        return [enroll(_features(i), transparent_keys.pk, sim.genesis.threshold, TransparentBackend(),
                       entropy=entropy) for i in range(N_IDENTITIES)]

    @pytest.fixture(scope="class")
    def souls(self, sim: Simulation, enrollments: List[Enrollment]) -> Dict[int, Any]:
        """Registers everyone, each through another node, and then certifies a soul account for everyone."""
        n_nodes = len(sim.nodes)
        for i, e in enumerate(enrollments):
            assert register(e.seed, e.reg, SimulationEndpoint(sim, i % n_nodes)).accepted
        sim.run_until(at_height(sim.height))
        rng = random.Random(5)
        souls = {}
        for i, e in enumerate(enrollments):
            soul, receipt = certify_soul(e.seed, SimulationEndpoint(sim, (i + 3) % n_nodes), DEFAULT_RING_SIZE, rng)
            assert receipt.accepted
            souls[i] = soul
        sim.run_until(at_height(sim.height))
        return souls

    def test_every_node_agrees(self, sim: Simulation, souls: Dict[int, Any]):
        assert sim.converged()
        assert {n.chain.state.summary() for n in sim.nodes} == {(N_IDENTITIES, N_IDENTITIES, N_IDENTITIES)}
        chains = {tuple(b.encode() for b in n.chain.blocks) for n in sim.nodes}
        assert len(chains) == 1

    def test_replay(self, sim: Simulation, souls: Dict[int, Any]):
        chain = sim.nodes[0].chain
        assert replay_chain(sim.genesis, chain.blocks).state_root() == chain.state.state_root()

    def test_duplicates_rejected(self, transparent_keys: KeyPair, sim: Simulation, enrollments: List[Enrollment],
                                 souls: Dict[int, Any]):
        twin = enroll(_features(100)._replace(id_number=_features(0).id_number), transparent_keys.pk,
                      sim.genesis.threshold, TransparentBackend())
        with pytest.raises(ContractRejection) as e:
            register(twin.seed, twin.reg, SimulationEndpoint(sim, 2))
        assert e.value.code == RejectCode.DUPLICATE_IDENTITY

        with pytest.raises(ContractRejection) as e:
            certify_soul(enrollments[7].seed, SimulationEndpoint(sim, 5), DEFAULT_RING_SIZE)
        assert e.value.code == RejectCode.DUPLICATE_KEY_IMAGE
        sim.run_until(at_height(sim.height))
        assert sim.nodes[0].chain.state.summary() == (N_IDENTITIES, N_IDENTITIES, N_IDENTITIES)

    def test_state_reveals_no_identity(self, sim: Simulation, enrollments: List[Enrollment], souls: Dict[int, Any]):
        state = sim.nodes[0].chain.state
        serialized = state.serialize()
        ledger = serialized + b"".join(b.encode() for b in sim.nodes[0].chain.blocks)
        for i, e in enumerate(enrollments):
            assert _features(i).id_number.encode() not in ledger
            assert e.seed.pk in state.seed_keys
        seed_keys = {e.seed.pk for e in enrollments}
        assert not seed_keys & state.soul_store
        assert not seed_keys & state.key_images
        assert state.soul_store == {soul.pk for soul in souls.values()}


class TestCli(object):
    @pytest.fixture(params=list(Backend), ids=str)
    def backend(self, request, acceptance: bool) -> Backend:
        if request.param is Backend.GROTH16 and not acceptance:
            pytest.skip("the pairing-based setup and prover take minutes; run with --acceptance")
        return request.param

    @pytest.fixture()
    def wallets(self, tmp_path: Path, log_dir: Path, backend: Backend) -> Generator[List[Wallet], None, None]:
        wallets = [Wallet(f"wallet{i}", tmp_path / f"wallet{i}", log_dir, backend) for i in range(3)]
        for w in wallets:
            w.home.mkdir()
        yield wallets
        for w in wallets:
            if w.log_path.exists():
                _assert_no_warnings(w.log_path)

    def test_shared_chain(self, wallets: List[Wallet], backend: Backend):
        alice, bob, mallory = wallets
        alice.run("setup", "--backend", str(backend), "--seed", "11")
        assert alice.run("genesis", "--block-capacity", "10")["block_capacity"] == 10
        bob.share_chain(alice)
        mallory.share_chain(alice)

        alice.enroll(_features(1))
        assert alice.run("register")["status"] == "accepted"
        bob.enroll(_features(2))
        assert bob.run("register")["height"] == 2

        # The same ID number with another face and another seed account.
        mallory.enroll(_features(3)._replace(id_number=_features(1).id_number))
        mallory.run("register", expected_code=RejectCode.DUPLICATE_IDENTITY.value)

        alice.run("certify", "--ring-size", "3", expected_code=13)
        certified = alice.run("certify", "--ring-size", "2", "--seed", "0")
        assert certified["receipt"]["status"] == "accepted"
        alice.run("certify", "--ring-size", "2", expected_code=RejectCode.DUPLICATE_KEY_IMAGE.value)

        status = bob.run("status")
        assert (status["height"], status["seeds"], status["souls"], status["key_images"]) == (5, 2, 1, 1)
        assert alice.run("account", "--soul")["pk"] == certified["soul"]["pk"]
        assert "sk" not in certified["soul"]

    def test_mismatched_faces(self, wallets: List[Wallet], backend: Backend):
        alice = wallets[0]
        alice.run("setup", "--backend", str(backend), "--seed", "12")
        alice.enroll(_features(4, noise=10.0), expected_code=10)
        assert not (alice.home / "seed.json").exists()
