"""
Benchmarks: IAAC completion latency on a simulated network, and wall-clock timings of the user-side operations.

In the latency benchmark every user is honest.  Registration bundles (including proofs) are prepared before the
simulation starts, optionally in a pool of worker processes; crypto work takes no simulated time.
"""
import logging
import multiprocessing
import random
import statistics
import time
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..chain.block import build_cert_tx, build_registration_tx
from ..chain.types import RegInfo, Transaction
from ..consts import DEFAULT_RING_SIZE, EPS_NORM, SimTime
from ..crypto.accounts import Account, account_from_secret, generate_account, seeded_entropy
from ..crypto.lrs import Ring, ring_sign
from ..errors import ConfigError, ContractRejection
from ..facematch import FeatureVector, ThresholdConfig, face_match, normalize_features, synthetic_samples
from ..logging import log, log_duration
from ..wallet.flows import create_reginfo, identity_hash, make_cerinfo
from ..zk.backend import KeyPair, ProvingBackend, select_backend
from ..zk.circuit import PublicInputs, seed_key_digest, synthesize_witness
from .report import LatencyReport
from .sim import Simulation, receipts_for

logger = logging.getLogger(__name__)

BENCH_INTRA_NOISE = 0.05

# Row order of `measure_operation_timings`.
TIMED_OPERATIONS = ("face comparison", "zkp generation", "seed account generation", "soul account generation",
                    "ring signing")


class BenchUser(NamedTuple):
    seed: Account
    reg: RegInfo


class _UserJob(NamedTuple):
    backend: str
    pk: bytes
    tau: float
    eps_norm: int
    seed: int
    index: int


def _user_features(seed: int, index: int) -> Tuple[FeatureVector, FeatureVector]:
    """Two captures of one synthetic subject, seeded per user."""
    samples = synthetic_samples(1, 2, BENCH_INTRA_NOISE, np.random.default_rng([seed, index]))
    return normalize_features(samples[0, 0]), normalize_features(samples[0, 1])


def _prepare_user(job: _UserJob) -> Tuple[int, bytes]:
    """Runs in a worker process; returns (seed sk, encoded RegInfo) so the result pickles cheaply."""
    seed_account = generate_account(seeded_entropy(("bench-seed", job.seed, job.index)))
    live, card = _user_features(job.seed, job.index)
    reg = create_reginfo(seed_account, identity_hash(f"bench-{job.seed}-{job.index}"), live, card, job.pk,
                         ThresholdConfig.of(job.tau), select_backend(job.backend), job.eps_norm,
                         seeded_entropy(("bench-prove", job.seed, job.index)))
    return seed_account.sk, reg.encode()


def prepare_users(n_users: int, keys: KeyPair, backend: ProvingBackend, cfg: ThresholdConfig,
                  eps_norm: int = EPS_NORM, seed: int = 0, processes: Optional[int] = None) -> List[BenchUser]:
    """Generates n_users seed accounts and their registration bundles, deterministically under `seed`."""
    jobs = [_UserJob(backend.name, keys.pk, cfg.tau, eps_norm, seed, i) for i in range(n_users)]
    if processes is None or processes <= 1 or n_users < 2:
        results = [_prepare_user(job) for job in jobs]
    else:
        with multiprocessing.Pool(processes) as pool:
            results = pool.map(_prepare_user, jobs)
    return [BenchUser(account_from_secret(sk), RegInfo.decode(reg)) for sk, reg in results]


def _settle_all(sim: Simulation, txs: Sequence[Transaction]) -> int:
    """Runs until every node holds a receipt for each of `txs`; returns the number of blocks they span."""
    hashes = [tx.tx_hash() for tx in txs]
    sim.run_until(receipts_for(hashes))
    receipts = sim.nodes[sim.active[0]].chain.receipts
    for h in hashes:
        if not receipts[h].accepted:
            raise ContractRejection(receipts[h].error, f"benchmark transaction {h.hex()} rejected")
    return len({receipts[h].height for h in hashes})


def measure_iaac_latency(sim: Simulation, n_users: int, keys: KeyPair, backend: Optional[ProvingBackend] = None,
                         ring_size: int = DEFAULT_RING_SIZE, seed: int = 0,
                         processes: Optional[int] = None) -> LatencyReport:
    """
    Drives n_users through registration and then certification, all concurrently.

    All registration transactions are submitted at once, spread over the block-producing nodes.  Once every
    registration is settled, each user samples a ring of min(ring_size, registry size) seed keys and submits the
    certification transaction from a fresh soul account.  A user's completion time runs from the submission of the
    registrations to the inclusion of their certification.
    :raise ContractRejection: a benchmark transaction was rejected.
    """
    if n_users < 1:
        raise ConfigError("the benchmark needs at least one user")
    backend = backend or select_backend()
    genesis = sim.genesis
    users = prepare_users(n_users, keys, backend, genesis.threshold, genesis.eps_norm, seed, processes)
    homes = [sim.active[i % len(sim.active)] for i in range(n_users)]

    start = sim.now
    log("bench", 0, f"begin: registration of {n_users} users", timestamp=start / 1000)
    reg_txs = [build_registration_tx(u.seed, u.reg, 0, seeded_entropy(("bench-reg-tx", seed, i)))
               for i, u in enumerate(users)]
    for home, tx in zip(homes, reg_txs):
        sim.submit_tx(home, tx)
    registration_blocks = _settle_all(sim, reg_txs)

    log("bench", 1, f"begin: certification of {n_users} users", timestamp=sim.now / 1000)
    registry = sim.nodes[sim.active[0]].chain.state.registered_seed_keys()
    n = min(ring_size, len(registry))
    rng = random.Random(seed)
    cert_txs = []
    for i, u in enumerate(users):
        soul = generate_account(seeded_entropy(("bench-soul", seed, i)))
        cer = make_cerinfo(u.seed, soul, registry, n, rng, seeded_entropy(("bench-ring", seed, i)))
        cert_txs.append(build_cert_tx(soul, cer, 0, seeded_entropy(("bench-cert-tx", seed, i))))
    for home, tx in zip(homes, cert_txs):
        sim.submit_tx(home, tx)
    certification_blocks = _settle_all(sim, cert_txs)

    completions = tuple(SimTime(sim.included[tx.tx_hash()] - start) for tx in cert_txs)
    report = LatencyReport(n_users, completions, registration_blocks + certification_blocks, registration_blocks,
                           certification_blocks)
    log("bench", 2, f"end: {n_users} users, mean {report.mean:.1f} ms, max {report.max} ms",
        timestamp=sim.now / 1000)
    return report


class OperationTiming(NamedTuple):
    operation: str
    mean_s: float
    median_s: float
    runs: int


def measure_operation_timings(keys: KeyPair, backend: Optional[ProvingBackend] = None, runs: int = 5,
                              ring_size: int = DEFAULT_RING_SIZE, cfg: Optional[ThresholdConfig] = None,
                              seed: int = 0) -> List[OperationTiming]:
    """Wall-clock time of each user-side operation, in `TIMED_OPERATIONS` order."""
    if runs < 1:
        raise ConfigError("runs must be positive")
    backend = backend or select_backend()
    cfg = cfg or ThresholdConfig.of()
    samples: Dict[str, List[float]] = {name: [] for name in TIMED_OPERATIONS}
    decoys = [generate_account(seeded_entropy(("timing-decoy", seed, j))).pk for j in range(ring_size - 1)]

    def timed(name: str, fn):
        with log_duration("timings", run, name):
            t0 = time.perf_counter()
            result = fn()
            samples[name].append(time.perf_counter() - t0)
        return result

    for run in range(runs):
        entropy = seeded_entropy(("timing", seed, run))
        live, card = _user_features(seed, run)
        timed("face comparison", lambda: face_match(live, card, cfg))
        seed_account = timed("seed account generation", lambda: generate_account(entropy))
        pub = PublicInputs.for_statement(cfg, identity_hash(f"timing-{run}"), seed_key_digest(seed_account.pk))
        timed("zkp generation", lambda: backend.prove(keys.pk, pub, synthesize_witness(live, card, pub), entropy))
        soul = timed("soul account generation", lambda: generate_account(entropy))
        ring = Ring.of([seed_account.pk] + decoys)
        timed("ring signing", lambda: ring_sign(seed_account.sk, 0, ring, soul.pk.encode(), entropy))

    return [OperationTiming(name, statistics.fmean(samples[name]), statistics.median(samples[name]), runs)
            for name in TIMED_OPERATIONS]
