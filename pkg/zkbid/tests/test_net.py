"""Tests for the network simulator, its reports and the IAAC benchmark."""
import csv
import json
import math
from pathlib import Path
from typing import List

import numpy as np
import pytest

from zkbid.chain.block import build_registration_tx
from zkbid.chain.types import Genesis, Transaction
from zkbid.consts import EPS_NORM, NodeIndex, SimTime
from zkbid.crypto.accounts import seeded_entropy
from zkbid.errors import ConfigError, Timeout, UnknownNode
from zkbid.facematch import ThresholdConfig
from zkbid.net.bench import TIMED_OPERATIONS, BenchUser, measure_iaac_latency, measure_operation_timings, prepare_users
from zkbid.net.events import EventKind, EventQueue
from zkbid.net.report import CSV_HEADER, LatencyReport, write_csv, write_dat
from zkbid.net.sim import (SimConfig, Topology, at_height, at_time, build_links, load_sim_config, pools_empty,
                           receipts_for, spawn_network)
from zkbid.zk.backend import KeyPair, TransparentBackend

pytestmark = pytest.mark.usefixtures("allow_test_backend")

THRESHOLD = ThresholdConfig.of(0.90)
INTERVAL = 1000


@pytest.fixture(scope="module")
def genesis(transparent_keys: KeyPair) -> Genesis:
    return Genesis.create(transparent_keys.vk, THRESHOLD, EPS_NORM, block_capacity=50)


@pytest.fixture(scope="module")
def reg_txs(allow_test_backend, transparent_keys: KeyPair) -> List[Transaction]:
    users: List[BenchUser] = prepare_users(8, transparent_keys, TransparentBackend(), THRESHOLD, seed=7)
    return [build_registration_tx(u.seed, u.reg, 0, seeded_entropy(("net-tx", i))) for i, u in enumerate(users)]


class TestEventQueue(object):
    def test_order(self):
        queue = EventQueue()
        queue.push(SimTime(10), EventKind.BLOCK_TICK, NodeIndex(0))
        queue.push(SimTime(10), EventKind.GOSSIP, NodeIndex(1), "b")
        queue.push(SimTime(5), EventKind.BLOCK_DELIVERY, NodeIndex(2))
        queue.push(SimTime(10), EventKind.GOSSIP, NodeIndex(3), "a")
        assert queue.pending(EventKind.GOSSIP) == 2
        assert [(e.time, e.kind, e.node) for e in (queue.pop() for _ in range(4))] == [
            (5, EventKind.BLOCK_DELIVERY, 2), (10, EventKind.GOSSIP, 1), (10, EventKind.GOSSIP, 3),
            (10, EventKind.BLOCK_TICK, 0)]
        assert queue.peek() is None and len(queue) == 0

    def test_kind_names(self):
        assert str(EventKind.BLOCK_DELIVERY) == "block_delivery"


class TestSimConfig(object):
    @pytest.mark.parametrize("fields", [{"n_nodes": 0}, {"block_interval": 0}, {"block_capacity": 0},
                                        {"jitter": -1}, {"isolated": (6,)}, {"n_nodes": 2, "isolated": (0, 1)},
                                        {"max_events": 0}])
    def test_invalid(self, fields):
        with pytest.raises(ConfigError):
            SimConfig(**fields).validate()

    def test_from_dict(self):
        cfg = SimConfig.from_dict({"n_nodes": "4", "topology": "fully-connected", "isolated": [3]})
        assert cfg == SimConfig(n_nodes=4, topology=Topology.FULL, isolated=(3,))
        with pytest.raises(ConfigError):
            SimConfig.from_dict({"nodes": 4})
        with pytest.raises(ConfigError):
            SimConfig.from_dict({"topology": "mesh"})

    def test_yaml(self, tmp_path: Path):
        path = tmp_path / "sim.yml"
        path.write_text("n_nodes: 8\ntopology: ring\nblock_interval: 500\njitter: 0\n")
        assert load_sim_config(path) == SimConfig(n_nodes=8, topology=Topology.RING, block_interval=500, jitter=0)

    def test_json(self, tmp_path: Path):
        path = tmp_path / "sim.json"
        path.write_text(json.dumps({"block_capacity": 5, "rng_seed": 3, "produce_empty_blocks": False}))
        assert load_sim_config(path) == SimConfig(block_capacity=5, rng_seed=3, produce_empty_blocks=False)

    @pytest.mark.parametrize("name,content", [("sim.ini", "n_nodes = 3"), ("sim.yml", "- 1\n- 2\n"),
                                              ("sim.json", "{")])
    def test_bad_files(self, tmp_path: Path, name: str, content: str):
        (tmp_path / name).write_text(content)
        with pytest.raises(ConfigError):
            load_sim_config(tmp_path / name)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError):
            load_sim_config(tmp_path / "absent.yml")

    def test_shipped_configs(self):
        for path in sorted(Path(__file__).parents[2].joinpath("configs").glob("*.yml")):
            load_sim_config(path)


class TestTopology(object):
    def test_full(self):
        links = build_links(SimConfig(n_nodes=6))
        assert all(len(peers) == 5 and i not in peers for i, peers in enumerate(links))

    def test_ring(self):
        links = build_links(SimConfig(n_nodes=6, topology=Topology.RING))
        assert links[0] == (1, 5)
        assert all(len(peers) == 2 for peers in links)

    def test_star(self):
        links = build_links(SimConfig(n_nodes=4, topology=Topology.STAR))
        assert links == [(1, 2, 3), (0,), (0,), (0,)]

    def test_isolated(self):
        links = build_links(SimConfig(n_nodes=4, topology=Topology.RING, isolated=(1,)))
        assert links == [(2, 3), (), (0, 3), (0, 2)]


class TestSimulation(object):
    def test_common_genesis(self, genesis: Genesis):
        sim = spawn_network(SimConfig(), genesis)
        assert len(sim.nodes) == 6
        assert {n.chain.head_hash for n in sim.nodes} == {genesis.genesis_hash()}
        assert len({n.chain.state.state_root() for n in sim.nodes}) == 1
        assert sim.converged()

    def test_empty_blocks(self, genesis: Genesis):
        sim = spawn_network(SimConfig(), genesis)
        sim.run_until(at_height(3))
        assert sim.produced == [(1000, 1), (2000, 2), (3000, 3)]
        assert [sim.proposer(h) for h in (1, 2, 7)] == [0, 1, 0]
        assert sim.converged()
        for node in sim.nodes:
            assert [len(b.txs) for b in node.chain.blocks] == [0, 0, 0]

    def test_no_empty_blocks(self, genesis: Genesis):
        sim = spawn_network(SimConfig(produce_empty_blocks=False), genesis)
        sim.run_until(at_time(5 * INTERVAL))
        assert sim.produced == [] and sim.height == 0

    def test_gossip_reaches_every_pool(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(), genesis)
        sim.submit_tx(2, reg_txs[0])
        sim.run_until(at_time(INTERVAL // 2))
        assert all(reg_txs[0].tx_hash() in node.pool for node in sim.nodes)
        assert sim.in_flight() == 0

    def test_ring_gossip(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(topology=Topology.RING), genesis)
        sim.submit_tx(0, reg_txs[0])
        sim.run_until(at_time(INTERVAL // 2))
        assert all(reg_txs[0].tx_hash() in node.pool for node in sim.nodes)
        sim.run_until(pools_empty())
        assert sim.height == 1 and sim.converged()
        assert all(node.chain.receipts[reg_txs[0].tx_hash()].accepted for node in sim.nodes)

    def test_duplicate_submission(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(), genesis)
        for node in (0, 0, 3):
            sim.submit_tx(node, reg_txs[0])
        sim.run_until(at_height(2))
        assert [len(b.txs) for b in sim.nodes[0].chain.blocks] == [1, 0]
        assert sim.converged()

    def test_isolated_node(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(isolated=(5,)), genesis)
        assert sim.active == (0, 1, 2, 3, 4)
        sim.submit_tx(5, reg_txs[0])
        sim.run_until(at_height(2))
        assert reg_txs[0].tx_hash() in sim.nodes[5].pool
        assert sim.nodes[5].chain.height == 0
        assert all(reg_txs[0].tx_hash() not in sim.nodes[i].chain.receipts for i in sim.active)
        assert all(reg_txs[0].tx_hash() not in sim.nodes[i].pool for i in sim.active)

    def test_unknown_node(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(), genesis)
        with pytest.raises(UnknownNode):
            sim.node(6)
        with pytest.raises(UnknownNode):
            sim.submit_tx(-1, reg_txs[0])

    def test_timeout(self, genesis: Genesis):
        sim = spawn_network(SimConfig(max_events=10), genesis)
        with pytest.raises(Timeout):
            sim.run_until(at_height(20))

    def test_capacity_above_genesis(self, genesis: Genesis):
        with pytest.raises(ConfigError):
            spawn_network(SimConfig(block_capacity=51), genesis)

    def test_run_report(self, genesis: Genesis, reg_txs: List[Transaction]):
        sim = spawn_network(SimConfig(block_capacity=5), genesis)
        for i, tx in enumerate(reg_txs):
            sim.submit_tx(i % 6, tx)
        report = sim.run_until(receipts_for(tx.tx_hash() for tx in reg_txs))
        assert report.n_users == len(reg_txs)
        assert report.completions == (INTERVAL,) * 5 + (2 * INTERVAL,) * 3
        assert report.blocks == 2
        assert sim.run_until(at_height(3)).n_users == 0

    def test_deterministic(self, genesis: Genesis, reg_txs: List[Transaction]):
        def run(seed: int):
            sim = spawn_network(SimConfig(rng_seed=seed, block_capacity=3), genesis)
            for i, tx in enumerate(reg_txs):
                sim.submit_tx(i % 6, tx)
            sim.run_until(at_height(4))
            return sim

        a, b, c = run(1), run(1), run(2)
        assert a.trace == b.trace
        assert a.trace != c.trace
        chains = {tuple(blk.encode() for blk in node.chain.blocks) for sim in (a, b) for node in sim.nodes}
        assert len(chains) == 1
        assert c.converged()


class TestBench(object):
    @pytest.fixture()
    def sim(self, genesis: Genesis):
        return spawn_network(SimConfig(block_capacity=5), genesis)

    @pytest.mark.parametrize("n_users", [1, 5])
    def test_within_capacity(self, sim, transparent_keys: KeyPair, n_users: int):
        report = measure_iaac_latency(sim, n_users, transparent_keys, TransparentBackend())
        assert report.completions == (2 * INTERVAL,) * n_users
        assert (report.registration_blocks, report.certification_blocks) == (1, 1)

    def test_capacity_law(self, sim, transparent_keys: KeyPair):
        report = measure_iaac_latency(sim, 10, transparent_keys, TransparentBackend(), ring_size=4)
        k = 2
        assert report.max == 2 * k * INTERVAL
        assert report.mean == (1.5 * k + 0.5) * INTERVAL
        assert report.blocks == 2 * k
        assert sim.converged()
        assert sim.nodes[0].chain.state.summary() == (10, 10, 10)

    def test_full_blocks(self, genesis: Genesis, transparent_keys: KeyPair, acceptance: bool):
        if not acceptance:
            pytest.skip("runs 1,576 users through the simulator; run with --acceptance")
        capacity = genesis.block_capacity
        reports = {n: measure_iaac_latency(spawn_network(SimConfig(block_capacity=capacity), genesis), n,
                                           transparent_keys, TransparentBackend())
                   for n in (1, 25, 50, 100, 200, 300, 400, 500)}

        assert {c for n in (1, 25, 50) for c in reports[n].completions} == {2 * INTERVAL}

        large = (100, 200, 300, 400, 500)
        blocks = np.array([math.ceil(n / capacity) for n in large], dtype=float)
        for metric in ("max", "mean"):
            latency = np.array([getattr(reports[n], metric) for n in large], dtype=float)
            fit = np.polyval(np.polyfit(blocks, latency, 1), blocks)
            r_squared = 1 - np.sum((latency - fit) ** 2) / np.sum((latency - latency.mean()) ** 2)
            assert r_squared >= 0.999, metric

    def test_no_users(self, sim, transparent_keys: KeyPair):
        with pytest.raises(ConfigError):
            measure_iaac_latency(sim, 0, transparent_keys, TransparentBackend())

    def test_operation_timings(self, transparent_keys: KeyPair):
        timings = measure_operation_timings(transparent_keys, TransparentBackend(), runs=2, ring_size=3)
        assert tuple(t.operation for t in timings) == TIMED_OPERATIONS
        assert all(t.runs == 2 and t.mean_s >= 0 and t.median_s >= 0 for t in timings)


class TestReport(object):
    def test_statistics(self):
        report = LatencyReport(4, (SimTime(1000), SimTime(2000), SimTime(2000), SimTime(4000)), 3)
        assert (report.mean, report.median, report.max) == (2250.0, 2000.0, 4000)
        assert LatencyReport(0, (), 0).mean == 0.0

    def test_csv(self, tmp_path: Path):
        reports = [LatencyReport(1, (SimTime(2000),), 2, 1, 1), LatencyReport(2, (SimTime(2000), SimTime(3000)), 2)]
        write_csv(tmp_path / "bench.csv", reports)
        with (tmp_path / "bench.csv").open() as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == CSV_HEADER
        assert rows[1] == ["1", "2000.000", "2000.000", "2000", "2", "1", "1"]
        assert rows[2][:4] == ["2", "2500.000", "2500.000", "3000"]

    def test_dat(self, tmp_path: Path):
        write_dat(tmp_path / "bench.dat", [LatencyReport(3, (SimTime(1500), SimTime(2500)), 2)])
        assert (tmp_path / "bench.dat").read_text() == "# users mean_s max_s\n3 2.000000 2.500000\n"
