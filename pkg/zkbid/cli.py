"""
The `zkbid` command-line wallet.

Results are printed to standard output as JSON.  On failure, an error message goes to standard error and the process
exits with the status code of the error class (see `zkbid.errors`); a rejected transaction exits with the code of its
reject reason.  Private keys are printed only by `zkbid account --reveal-secret`.
"""
import argparse
import json
import logging
from pathlib import Path
import random
import sys
from typing import Any, List, Optional, Sequence

import numpy as np

from .chain.store import ChainStore
from .chain.types import Genesis
from .config import load_settings
from .consts import DEFAULT_BLOCK_CAPACITY, DEFAULT_NODES, DEFAULT_RING_SIZE, DEFAULT_THRESHOLD, EPS_NORM
from .crypto.accounts import seeded_entropy
from .errors import ConfigError, ZkbidError
from .facematch import (DEFAULT_INTRA_NOISE, DEFAULT_PER_SUBJECT, DEFAULT_SUBJECTS, ThresholdConfig, accuracy_sweep,
                        generate_synthetic_dataset, load_feature_file, write_sweep_csv)
from .net.bench import measure_iaac_latency, measure_operation_timings
from .net.report import write_csv, write_dat
from .net.sim import SimConfig, load_sim_config, spawn_network
from .wallet.endpoint import LocalChainEndpoint
from .wallet.flows import IdentityInput, certify_soul, enroll, register, status
from .wallet.store import SEED, SOUL, WalletStore, write_key_files
from .zk.backend import KeyPair, backend_for_id, key_backend, select_backend
from .zk.circuit import build_facematch_circuit

logger = logging.getLogger(__name__)


def _print(obj: Any) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _wallet_keys(store: WalletStore) -> KeyPair:
    return KeyPair(store.proving_key(), store.verification_key())


def _threshold(store: WalletStore, tau: Optional[float]) -> ThresholdConfig:
    """The local chain's threshold if a chain exists, else `tau`, else the setup threshold (or the default)."""
    chain = ChainStore(store.chain_dir)
    if chain.exists():
        genesis_cfg = chain.genesis().threshold
        if tau is not None and ThresholdConfig.of(tau).tau_fixed != genesis_cfg.tau_fixed:
            raise ConfigError(f"threshold {tau} differs from the chain's {genesis_cfg.tau}")
        return genesis_cfg
    if tau is None:
        tau = store.setup_threshold()
    return ThresholdConfig.of(DEFAULT_THRESHOLD if tau is None else tau)


def cmd_setup(args: argparse.Namespace, store: WalletStore) -> None:
    backend = select_backend(args.backend)
    cfg = ThresholdConfig.of(args.threshold)
    entropy = None if args.seed is None else seeded_entropy(("setup", args.seed))
    keys = backend.keygen(build_facematch_circuit(cfg), entropy=entropy, processes=args.processes)
    store.save_keys(keys, cfg.tau)
    out = {"backend": backend.name, "threshold": cfg.tau, "pk_bytes": len(keys.pk), "vk_bytes": len(keys.vk)}
    if args.out_dir is not None:
        write_key_files(Path(args.out_dir), keys)
        out["out_dir"] = str(Path(args.out_dir))
    _print(out)


def cmd_genesis(args: argparse.Namespace, store: WalletStore) -> None:
    tau = args.threshold if args.threshold is not None else store.setup_threshold()
    tau = DEFAULT_THRESHOLD if tau is None else tau
    genesis = Genesis.create(store.verification_key(), ThresholdConfig.of(tau), args.eps_norm,
                             args.block_capacity)
    ChainStore(store.chain_dir).create(genesis)
    _print({"genesis_hash": genesis.genesis_hash().hex(), "threshold": tau,
            "block_capacity": args.block_capacity})


def cmd_enroll(args: argparse.Namespace, store: WalletStore) -> None:
    inp = IdentityInput(args.id, load_feature_file(Path(args.live)).to_floats(),
                        load_feature_file(Path(args.card)).to_floats())
    keys = _wallet_keys(store)
    backend = backend_for_id(key_backend(keys.vk))
    enrollment = enroll(inp, keys.pk, _threshold(store, args.threshold), backend, store)
    _print({"seed": enrollment.seed.to_json(), "id_hash": enrollment.reg.id_hash.hex()})


def cmd_register(args: argparse.Namespace, store: WalletStore) -> None:
    endpoint = LocalChainEndpoint(store.chain_dir)
    receipt = register(store.load_account(SEED), store.load_reginfo(), endpoint, store)
    _print(receipt.to_json())


def cmd_certify(args: argparse.Namespace, store: WalletStore) -> None:
    endpoint = LocalChainEndpoint(store.chain_dir)
    rng = None if args.seed is None else random.Random(args.seed)
    soul, receipt = certify_soul(store.load_account(SEED), endpoint, args.ring_size, rng, store)
    _print({"soul": soul.to_json(), "receipt": receipt.to_json()})


def cmd_status(args: argparse.Namespace, store: WalletStore) -> None:
    chain_status = status(LocalChainEndpoint(store.chain_dir))
    _print({"height": chain_status.height, **chain_status.registry._asdict()})


def cmd_account(args: argparse.Namespace, store: WalletStore) -> None:
    account = store.load_account(SOUL if args.soul else SEED)
    _print(account.to_json(reveal_secret=args.reveal_secret))


def cmd_bench(args: argparse.Namespace, store: WalletStore) -> None:
    cfg = load_sim_config(Path(args.config)) if args.config else SimConfig()
    overrides = {"n_nodes": args.nodes, "rng_seed": args.seed, "block_capacity": args.block_capacity,
                 "block_interval": args.block_interval}
    cfg = cfg._replace(**{k: v for k, v in overrides.items() if v is not None}).validate()
    keys = _wallet_keys(store)
    backend = backend_for_id(key_backend(keys.vk))
    genesis = Genesis.create(keys.vk, ThresholdConfig.of(args.threshold), EPS_NORM, cfg.block_capacity)

    reports = []
    for n_users in args.users:
        sim = spawn_network(cfg, genesis)
        report = measure_iaac_latency(sim, n_users, keys, backend, args.ring_size, cfg.rng_seed, args.processes)
        reports.append(report)
        _print({"n_users": n_users, "mean_ms": report.mean, "median_ms": report.median, "max_ms": report.max,
                "blocks": report.blocks})
    if args.csv:
        write_csv(Path(args.csv), reports)
    if args.dat:
        write_dat(Path(args.dat), reports)


def cmd_sweep(args: argparse.Namespace, store: WalletStore) -> None:
    if args.step <= 0 or args.stop < args.start:
        raise ConfigError("sweep needs start <= stop and a positive step")
    dataset = generate_synthetic_dataset(args.subjects, args.per_subject, args.intra_noise, args.seed)
    thresholds = np.round(np.arange(args.start, args.stop + args.step / 2, args.step), 6)
    rows = accuracy_sweep(dataset, thresholds, decide=args.decide)
    if args.out:
        write_sweep_csv(Path(args.out), rows)
        dataset.dump_manifest(Path(args.out).with_suffix(".manifest.json"))
    _print([{"threshold": tau, "accuracy": accuracy} for tau, accuracy in rows])


def cmd_timings(args: argparse.Namespace, store: WalletStore) -> None:
    keys = _wallet_keys(store)
    timings = measure_operation_timings(keys, backend_for_id(key_backend(keys.vk)), args.runs, args.ring_size,
                                        seed=args.seed)
    _print([t._asdict() for t in timings])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkbid", description="ZKBID identity wallet")
    parser.add_argument("--home", help="wallet directory; defaults to $ZKBID_HOME or ~/.zkbid")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", help="generate proving and verification keys")
    p.add_argument("--backend", help="proving backend (groth16, or transparent for tests)")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="face-match threshold the keys are set up for; the default of `zkbid genesis`")
    p.add_argument("--out-dir", help="also write pk.bin and vk.bin to this directory")
    p.add_argument("--seed", type=int, help="deterministic setup randomness; for tests only")
    p.add_argument("--processes", type=int, help="worker processes for the setup")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("genesis", help="create the local chain with the wallet's verification key")
    p.add_argument("--threshold", type=float, help="defaults to the threshold given to `zkbid setup`")
    p.add_argument("--eps-norm", type=int, default=EPS_NORM)
    p.add_argument("--block-capacity", type=int, default=DEFAULT_BLOCK_CAPACITY)
    p.set_defaults(func=cmd_genesis)

    p = sub.add_parser("enroll", help="compare faces and create the seed account and registration information")
    p.add_argument("--id", required=True, help="ID number, as printed on the ID card")
    p.add_argument("--live", required=True, help="feature file of the live capture")
    p.add_argument("--card", required=True, help="feature file of the ID card photo")
    p.add_argument("--threshold", type=float, help="match threshold; must agree with the local chain's")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("register", help="register the seed account")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("certify", help="create and certify a soul account")
    p.add_argument("--ring-size", type=int, default=DEFAULT_RING_SIZE)
    p.add_argument("--seed", type=int, help="seed for ring sampling; for tests only")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("status", help="print registry counts and chain height")
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("account", help="print an account")
    p.add_argument("--soul", action="store_true", help="print the soul account instead of the seed account")
    p.add_argument("--reveal-secret", action="store_true", help="include the private key")
    p.set_defaults(func=cmd_account)

    p = sub.add_parser("bench", help="measure IAAC completion time on a simulated network")
    p.add_argument("--users", type=int, nargs="+", default=[1, 50, 100, 200, 300, 400, 500])
    p.add_argument("--nodes", type=int, default=DEFAULT_NODES)
    p.add_argument("--seed", type=int, help="simulation seed")
    p.add_argument("--config", help="simulation config file (.json, .toml or .yml)")
    p.add_argument("--block-capacity", type=int)
    p.add_argument("--block-interval", type=int, help="simulated milliseconds between blocks")
    p.add_argument("--ring-size", type=int, default=DEFAULT_RING_SIZE)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--processes", type=int, help="worker processes for preparing registrations")
    p.add_argument("--csv", help="write the reports as CSV to this file")
    p.add_argument("--dat", help="write the reports as a gnuplot data file")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="face-match accuracy as a function of the threshold")
    p.add_argument("--subjects", type=int, default=DEFAULT_SUBJECTS)
    p.add_argument("--per-subject", type=int, default=DEFAULT_PER_SUBJECT)
    p.add_argument("--intra-noise", type=float, default=DEFAULT_INTRA_NOISE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=float, default=0.50)
    p.add_argument("--stop", type=float, default=1.00)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--decide", choices=("plaintext", "circuit"), default="plaintext")
    p.add_argument("--out", help="write the sweep as CSV to this file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("timings", help="wall-clock time of each user-side operation")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--ring-size", type=int, default=DEFAULT_RING_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_timings)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    store = WalletStore(Path(args.home).expanduser()) if args.home else WalletStore.open(load_settings())
    try:
        args.func(args, store)
    except ZkbidError as e:
        print(f"zkbid {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"zkbid {args.command}: {e}", file=sys.stderr)
        return ZkbidError.exit_code
    return 0


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
