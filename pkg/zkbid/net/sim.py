"""
A deterministic discrete-event simulation of a small blockchain network.

Every node keeps its own chain and transaction pool.  Transactions and blocks spread by flooding over the links of
the topology; each hop takes the link delay plus a uniformly drawn jitter.  Block production is round-robin: a global
tick fires every block interval, and the proposer for height h is `active[(h - 1) % len(active)]`.  The proposer
produces only if it holds block h - 1, so the chain never forks.
"""
from enum import Enum
import json
import logging
from pathlib import Path
import random
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

import yaml

from ..chain.block import Chain, TxPool
from ..chain.types import Block, Genesis, Transaction
from ..consts import DEFAULT_BLOCK_CAPACITY, DEFAULT_NODES, Height, NodeIndex, SimTime
from ..errors import ChainIntegrityError, ConfigError, Timeout, UnknownNode
from .. import logging as event_log
from .events import Event, EventKind, EventQueue
from .report import LatencyReport

logger = logging.getLogger(__name__)


class Topology(Enum):
    FULL = "full"
    RING = "ring"
    STAR = "star"

    def __str__(self):
        return self.value

    @staticmethod
    def parse(name: str) -> "Topology":
        aliases = {"fully-connected": Topology.FULL, "full": Topology.FULL, "ring": Topology.RING,
                   "star": Topology.STAR}
        try:
            return aliases[name]
        except KeyError:
            raise ConfigError(f"unknown topology: {name}")


class SimConfig(NamedTuple):
    n_nodes: int = DEFAULT_NODES
    topology: Topology = Topology.FULL
    block_interval: int = 1000  # Simulated milliseconds.
    block_capacity: int = DEFAULT_BLOCK_CAPACITY
    rng_seed: int = 0
    link_delay: int = 20  # Per hop, in simulated milliseconds.
    jitter: int = 10  # Upper bound of the extra per-hop delay.
    isolated: Tuple[int, ...] = ()  # Nodes without links; they never propose.
    produce_empty_blocks: bool = True
    max_events: int = 1_000_000  # Event budget of a single `run_until`.

    def validate(self) -> "SimConfig":
        if self.n_nodes < 1:
            raise ConfigError("a simulation needs at least one node")
        if self.block_interval <= 0:
            raise ConfigError("block_interval must be positive")
        if self.block_capacity < 1:
            raise ConfigError("block_capacity must be positive")
        if self.link_delay < 0 or self.jitter < 0:
            raise ConfigError("link delays must be non-negative")
        if self.max_events < 1:
            raise ConfigError("max_events must be positive")
        if any(not 0 <= i < self.n_nodes for i in self.isolated):
            raise ConfigError(f"isolated nodes must be in [0, {self.n_nodes})")
        if len(set(self.isolated)) == self.n_nodes:
            raise ConfigError("at least one node must take part in block production")
        return self

    @staticmethod
    def from_dict(obj: Dict[str, Any]) -> "SimConfig":
        """Builds a config from parsed JSON, TOML or YAML; unknown keys are errors."""
        unknown = set(obj) - set(SimConfig._fields)
        if unknown:
            raise ConfigError(f"unknown simulation settings: {', '.join(sorted(unknown))}")
        fields = dict(obj)
        try:
            if "topology" in fields:
                fields["topology"] = Topology.parse(str(fields["topology"]))
            if "isolated" in fields:
                fields["isolated"] = tuple(int(i) for i in fields["isolated"] or ())
            for name in ("n_nodes", "block_interval", "block_capacity", "rng_seed", "link_delay", "jitter",
                         "max_events"):
                if name in fields:
                    fields[name] = int(fields[name])
            if "produce_empty_blocks" in fields:
                fields["produce_empty_blocks"] = bool(fields["produce_empty_blocks"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad simulation setting: {e}")
        return SimConfig(**fields).validate()


def load_sim_config(path: Path) -> SimConfig:
    """Reads a config file; the format follows the extension (.json, .toml, .yml or .yaml)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read simulation config {path}: {e}")
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            obj = json.loads(text)
        elif suffix == ".toml":
            import tomllib
            obj = tomllib.loads(text)
        elif suffix in (".yml", ".yaml"):
            obj = yaml.safe_load(text)
        else:
            raise ConfigError(f"unknown config format: {path.suffix}")
    except (ValueError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse simulation config {path}: {e}")
    if not isinstance(obj, dict):
        raise ConfigError(f"simulation config {path} must be a mapping")
    return SimConfig.from_dict(obj)


def build_links(cfg: SimConfig) -> List[Tuple[NodeIndex, ...]]:
    """Returns each node's neighbours; isolated nodes have none and are skipped when wiring the others."""
    isolated = set(cfg.isolated)
    members = [i for i in range(cfg.n_nodes) if i not in isolated]
    adjacency: Dict[int, Set[int]] = {i: set() for i in range(cfg.n_nodes)}

    def connect(a: int, b: int) -> None:
        if a != b:
            adjacency[a].add(b)
            adjacency[b].add(a)

    if cfg.topology is Topology.FULL:
        for a in members:
            for b in members:
                connect(a, b)
    elif cfg.topology is Topology.RING:
        if len(members) > 1:
            for k, a in enumerate(members):
                connect(a, members[(k + 1) % len(members)])
    else:
        for b in members[1:]:
            connect(members[0], b)
    return [tuple(NodeIndex(j) for j in sorted(adjacency[i])) for i in range(cfg.n_nodes)]


class Node(object):
    """One full node: a chain, a pool, and a buffer of blocks received before their parent."""

    def __init__(self, index: NodeIndex, genesis: Genesis, links: Tuple[NodeIndex, ...]) -> None:
        self.index = index
        self.chain = Chain(genesis)
        self.pool = TxPool()
        self.links = links
        self.seen_blocks: Set[bytes] = set()
        self.orphans: Dict[Height, Block] = {}

    @property
    def actor(self) -> str:
        return f"node{self.index}"

    def receive_block(self, block: Block) -> bool:
        """
        Appends `block` and any buffered successors.  Returns False if the block was seen before, in which case it
        is not forwarded again.
        """
        block_hash = block.block_hash()
        if block_hash in self.seen_blocks:
            return False
        self.seen_blocks.add(block_hash)
        if block.height > self.chain.height:
            self.orphans[block.height] = block
        while Height(self.chain.height + 1) in self.orphans:
            successor = self.orphans.pop(Height(self.chain.height + 1))
            try:
                self.chain.append(successor)
            except ChainIntegrityError as e:
                logger.warning("Node %d dropped block %d: %s", self.index, successor.height, e)
                break
            self.pool.remove(tx.tx_hash() for tx in successor.txs)
        return True


Predicate = Callable[["Simulation"], bool]


class Simulation(object):
    """A running network.  Create one with `spawn_network`."""

    def __init__(self, cfg: SimConfig, genesis: Genesis) -> None:
        self.cfg = cfg
        self.genesis = genesis
        links = build_links(cfg)
        self.nodes = [Node(NodeIndex(i), genesis, links[i]) for i in range(cfg.n_nodes)]
        isolated = set(cfg.isolated)
        self.active = tuple(NodeIndex(i) for i in range(cfg.n_nodes) if i not in isolated)
        self.now = SimTime(0)
        self.queue = EventQueue()
        self.rng = random.Random(cfg.rng_seed)
        # (time, kind, node, payload id) of every processed event.
        self.trace: List[Tuple[int, str, int, str]] = []
        self.submitted: Dict[bytes, SimTime] = {}
        self.included: Dict[bytes, SimTime] = {}
        self.produced: List[Tuple[SimTime, Height]] = []
        self._handlers = {
            EventKind.TX_ARRIVAL: self._on_tx,
            EventKind.GOSSIP: self._on_tx,
            EventKind.BLOCK_DELIVERY: self._on_block,
            EventKind.BLOCK_TICK: self._on_tick,
        }
        self.queue.push(SimTime(cfg.block_interval), EventKind.BLOCK_TICK, self.active[0])

    def node(self, index: int) -> Node:
        if not 0 <= index < len(self.nodes):
            raise UnknownNode(f"no node {index} in a network of {len(self.nodes)}")
        return self.nodes[index]

    @property
    def height(self) -> Height:
        """The highest chain among the block-producing nodes."""
        return max(self.nodes[i].chain.height for i in self.active)

    def proposer(self, height: Height) -> NodeIndex:
        return self.active[(height - 1) % len(self.active)]

    def submit_tx(self, node_index: int, tx: Transaction) -> None:
        """Hands `tx` to a node at the current time; the node gossips it on to its peers."""
        self.node(node_index)
        self.submitted.setdefault(tx.tx_hash(), self.now)
        self.queue.push(self.now, EventKind.TX_ARRIVAL, NodeIndex(node_index), tx)

    def _hop_delay(self) -> int:
        return self.cfg.link_delay + (self.rng.randint(0, self.cfg.jitter) if self.cfg.jitter else 0)

    def _flood(self, node: Node, kind: EventKind, payload: Any) -> None:
        for peer in node.links:
            self.queue.push(SimTime(self.now + self._hop_delay()), kind, peer, payload)

    def _on_tx(self, event: Event) -> None:
        node = self.nodes[event.node]
        if node.pool.add(event.payload, arrival=self.now):
            self._flood(node, EventKind.GOSSIP, event.payload)

    def _on_block(self, event: Event) -> None:
        node = self.nodes[event.node]
        if node.receive_block(event.payload):
            self._flood(node, EventKind.BLOCK_DELIVERY, event.payload)

    def _on_tick(self, event: Event) -> None:
        self.queue.push(SimTime(self.now + self.cfg.block_interval), EventKind.BLOCK_TICK, self.active[0])
        height = Height(self.height + 1)
        node = self.nodes[self.proposer(height)]
        if node.chain.height != height - 1:
            logger.debug("Proposer %d lacks block %d; slot skipped", node.index, height - 1)
            return
        if not len(node.pool) and not self.cfg.produce_empty_blocks:
            return
        block, receipts = node.chain.produce(node.pool, self.cfg.block_capacity)
        node.seen_blocks.add(block.block_hash())
        for receipt in receipts:
            self.included.setdefault(receipt.tx_hash, self.now)
        self.produced.append((self.now, height))
        event_log.log(node.actor, height, f"produced block with {len(block.txs)} transactions",
                      timestamp=self.now / 1000)
        self._flood(node, EventKind.BLOCK_DELIVERY, block)

    def step(self) -> Event:
        """Processes the next event."""
        event = self.queue.pop()
        assert event.time >= self.now, "events must be processed in time order"
        self.now = event.time
        payload = event.payload
        payload_id = payload.tx_hash().hex() if isinstance(payload, Transaction) else (
            payload.block_hash().hex() if isinstance(payload, Block) else "")
        self.trace.append((event.time, str(event.kind), event.node, payload_id))
        self._handlers[event.kind](event)
        return event

    def run_until(self, predicate: Predicate) -> LatencyReport:
        """
        Processes events until `predicate` holds.
        :raise Timeout: the predicate still fails after `max_events` events.
        :return: the transactions included during this run, each timed from its submission.
        """
        start = self.now
        n_blocks = len(self.produced)
        processed = 0
        while not predicate(self):
            if processed >= self.cfg.max_events:
                raise Timeout(f"predicate not reached after {processed} events (t={self.now} ms)")
            self.step()
            processed += 1
        completions = tuple(SimTime(t - self.submitted[h]) for h, t in self.included.items()
                            if t >= start and h in self.submitted)
        blocks = len(self.produced) - n_blocks
        logger.debug("Ran %d events up to t=%d ms; %d blocks", processed, self.now, blocks)
        return LatencyReport(len(completions), tuple(sorted(completions)), blocks)

    def converged(self) -> bool:
        """True iff every block-producing node holds the same chain."""
        heads = {(self.nodes[i].chain.height, self.nodes[i].chain.head_hash) for i in self.active}
        return len(heads) == 1

    def in_flight(self) -> int:
        return self.queue.pending(EventKind.TX_ARRIVAL, EventKind.GOSSIP, EventKind.BLOCK_DELIVERY)


def spawn_network(cfg: SimConfig, genesis: Genesis) -> Simulation:
    """
    Starts a network whose nodes all hold `genesis`.
    :raise ConfigError: `cfg` is invalid, or this process may not verify the genesis' proving backend.
    """
    cfg.validate()
    if cfg.block_capacity > genesis.block_capacity:
        raise ConfigError(f"block_capacity {cfg.block_capacity} exceeds the genesis limit {genesis.block_capacity}")
    sim = Simulation(cfg, genesis)
    logger.info("Spawned %d nodes (%s topology, %d ms blocks)", cfg.n_nodes, cfg.topology, cfg.block_interval)
    return sim


def pools_empty() -> Predicate:
    """No transaction is pending or in flight, and no block is in flight."""
    def check(sim: Simulation) -> bool:
        return sim.in_flight() == 0 and all(not len(sim.nodes[i].pool) for i in sim.active)
    return check


def at_height(height: int) -> Predicate:
    """Every block-producing node holds at least `height` blocks."""
    def check(sim: Simulation) -> bool:
        return all(sim.nodes[i].chain.height >= height for i in sim.active)
    return check


def at_time(time: int) -> Predicate:
    """Every event up to `time` has been processed."""
    def check(sim: Simulation) -> bool:
        upcoming = sim.queue.peek()
        return upcoming is None or upcoming.time > time
    return check


def receipts_for(tx_hashes: Iterable[bytes], nodes: Optional[Iterable[int]] = None) -> Predicate:
    """Each of `nodes` (default: the block-producing nodes) holds a receipt for every transaction."""
    wanted = tuple(tx_hashes)

    def check(sim: Simulation) -> bool:
        indexes = sim.active if nodes is None else tuple(nodes)
        return all(h in sim.nodes[i].chain.receipts for i in indexes for h in wanted)
    return check
