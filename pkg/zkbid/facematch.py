"""
Plaintext face-match arithmetic: fixed-point feature vectors, inner-product similarity, the threshold rule, and the
synthetic-data accuracy sweep.

Coordinates are integers at scale 2^16, similarities integers at scale 2^32.  Everything the circuit later proves is
computed here with exact integer arithmetic, so the two always agree.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .consts import DEFAULT_THRESHOLD, EPS_NORM, FEATURE_DIM, FEATURE_SCALE_BITS, SIMILARITY_SCALE_BITS
from .errors import ConfigError, MalformedEncoding, ZeroNormVector

logger = logging.getLogger(__name__)

FEATURE_SCALE = 1 << FEATURE_SCALE_BITS
SIMILARITY_SCALE = 1 << SIMILARITY_SCALE_BITS
COORD_BOUND = 1 << (FEATURE_SCALE_BITS + 1)  # |coord| < 2^17.
MIN_NORM = 1e-9

# Default synthetic dataset shape (500 subjects with 5 samples each).
DEFAULT_SUBJECTS = 500
DEFAULT_PER_SUBJECT = 5
DEFAULT_INTRA_NOISE = 0.05


class FeatureVector(NamedTuple):
    """128 signed fixed-point coordinates; value = integer / 2^16."""
    coords: Tuple[int, ...]

    @property
    def squared_norm(self) -> int:
        return sum(c * c for c in self.coords)

    def is_valid(self) -> bool:
        """Checks the dimension, the coordinate bound, and unit norm within EPS_NORM."""
        return (len(self.coords) == FEATURE_DIM and all(abs(c) < COORD_BOUND for c in self.coords) and
                abs(self.squared_norm - SIMILARITY_SCALE) <= EPS_NORM)

    def to_floats(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.float64) / FEATURE_SCALE


class ThresholdConfig(NamedTuple):
    tau: float
    tau_fixed: int

    @staticmethod
    def of(tau: float = DEFAULT_THRESHOLD) -> "ThresholdConfig":
        if not -1.0 <= tau <= 1.0:
            raise ConfigError(f"threshold must be in [-1, 1], got {tau}")
        return ThresholdConfig(float(tau), int(round(tau * SIMILARITY_SCALE)))


def normalize_features(raw: Sequence[float]) -> FeatureVector:
    """Scales `raw` to unit norm and rounds every coordinate to the nearest multiple of 2^-16."""
    arr = np.asarray(raw, dtype=np.float64)
    if arr.shape != (FEATURE_DIM,):
        raise ConfigError(f"feature vector must have {FEATURE_DIM} coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("feature vector has non-finite coordinates")
    norm = float(np.linalg.norm(arr))
    if norm < MIN_NORM:
        raise ZeroNormVector(f"feature vector norm {norm} is below {MIN_NORM}")
    coords = np.rint(arr / norm * FEATURE_SCALE).astype(np.int64)
    return FeatureVector(tuple(int(c) for c in coords))


def cosine_similarity_fixed(a: FeatureVector, b: FeatureVector) -> int:
    """Returns D = sum a_i*b_i exactly, at scale 2^32."""
    return sum(x * y for x, y in zip(a.coords, b.coords))


def face_match(a: FeatureVector, b: FeatureVector, cfg: ThresholdConfig) -> bool:
    """True iff the similarity reaches the threshold (boundary inclusive)."""
    return cosine_similarity_fixed(a, b) >= cfg.tau_fixed


# Feature files.
def parse_features(obj: Any) -> FeatureVector:
    """
    Parses a feature vector from JSON: either a bare array of 128 fixed-point integers, or an object
    `{"encoding": "fixed16" | "float", "coords": [...]}`.  Float vectors are normalized.
    """
    encoding = "fixed16"
    coords = obj
    if isinstance(obj, dict):
        encoding = obj.get("encoding", "fixed16")
        coords = obj.get("coords")
    if not isinstance(coords, list):
        raise MalformedEncoding("feature vector coordinates must be a JSON array")

    if encoding == "float":
        return normalize_features([float(c) for c in coords])
    if encoding != "fixed16":
        raise MalformedEncoding(f"unknown feature encoding: {encoding}")
    if not all(isinstance(c, int) and not isinstance(c, bool) for c in coords):
        raise MalformedEncoding("fixed16 coordinates must be integers")
    vec = FeatureVector(tuple(coords))
    if len(vec.coords) != FEATURE_DIM:
        raise MalformedEncoding(f"feature vector must have {FEATURE_DIM} coordinates, got {len(vec.coords)}")
    if vec.squared_norm == 0:
        raise ZeroNormVector("feature vector is all zeros")
    return vec


def load_feature_file(path: Path) -> FeatureVector:
    try:
        with Path(path).open("r") as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedEncoding(f"{path}: {e}")
    return parse_features(obj)


def dump_feature_file(path: Path, vec: FeatureVector) -> None:
    with Path(path).open("w") as f:
        json.dump({"encoding": "fixed16", "coords": list(vec.coords)}, f)


def dump_raw_features(path: Path, raw: Sequence[float]) -> None:
    with Path(path).open("w") as f:
        json.dump({"encoding": "float", "coords": [float(x) for x in raw]}, f)


# Synthetic data.
class LabeledPair(NamedTuple):
    a: FeatureVector
    b: FeatureVector
    same_subject: bool


class Dataset(NamedTuple):
    n_subjects: int
    per_subject: int
    intra_noise: float
    seed: int
    pairs: List[LabeledPair]

    def dump_manifest(self, path: Path) -> None:
        """Writes the generator parameters and pair counts; the pairs are reproducible from them."""
        n_same = sum(1 for p in self.pairs if p.same_subject)
        manifest = {
            "generator": "gaussian-centroid",
            "n_subjects": self.n_subjects,
            "per_subject": self.per_subject,
            "intra_noise": self.intra_noise,
            "seed": self.seed,
            "same_subject_pairs": n_same,
            "cross_subject_pairs": len(self.pairs) - n_same,
        }
        with Path(path).open("w") as f:
            json.dump(manifest, f, indent=2)


def synthetic_samples(n_subjects: int, per_subject: int, intra_noise: float, rng: np.random.Generator) -> np.ndarray:
    """
    Returns an array of shape (n_subjects, per_subject, 128) of unit vectors.

    Each subject gets a uniformly random unit centroid; a sample is the centroid plus Gaussian noise of expected
    Euclidean norm `intra_noise`, renormalized.
    """
    centroids = rng.standard_normal((n_subjects, FEATURE_DIM))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    noise = rng.standard_normal((n_subjects, per_subject, FEATURE_DIM)) * (intra_noise / np.sqrt(FEATURE_DIM))
    samples = centroids[:, None, :] + noise
    return samples / np.linalg.norm(samples, axis=2, keepdims=True)


def generate_synthetic_dataset(n_subjects: int = DEFAULT_SUBJECTS, per_subject: int = DEFAULT_PER_SUBJECT,
                               intra_noise: float = DEFAULT_INTRA_NOISE, seed: int = 0) -> Dataset:
    """
    Generates labeled pairs: every same-subject pair, plus an equal number of cross-subject pairs drawn uniformly
    without repetition.  Deterministic under `seed`.
    """
    if n_subjects < 2 or per_subject < 2:
        raise ConfigError("need at least 2 subjects with at least 2 samples each")
    if intra_noise < 0 or not np.isfinite(intra_noise):
        raise ConfigError(f"intra_noise must be a non-negative number, got {intra_noise}")

    rng = np.random.default_rng(seed)
    samples = synthetic_samples(n_subjects, per_subject, intra_noise, rng)
    vectors = [[normalize_features(samples[s, k]) for k in range(per_subject)] for s in range(n_subjects)]

    pairs: List[LabeledPair] = []
    for s in range(n_subjects):
        for i in range(per_subject):
            for j in range(i + 1, per_subject):
                pairs.append(LabeledPair(vectors[s][i], vectors[s][j], True))

    n_cross = len(pairs)
    seen = set()
    while len(seen) < n_cross:
        s1, s2 = (int(x) for x in rng.choice(n_subjects, size=2, replace=False))
        k1, k2 = (int(x) for x in rng.integers(per_subject, size=2))
        key = (min((s1, k1), (s2, k2)), max((s1, k1), (s2, k2)))
        if key in seen:
            continue
        seen.add(key)
        pairs.append(LabeledPair(vectors[s1][k1], vectors[s2][k2], False))

    logger.debug("Generated %d pairs for %d subjects", len(pairs), n_subjects)
    return Dataset(n_subjects, per_subject, intra_noise, seed, pairs)


def _circuit_decides(pair: LabeledPair, cfg: ThresholdConfig) -> bool:
    """Decides a pair by attempting witness synthesis for the face-match circuit."""
    from .zk.circuit import PublicInputs, synthesize_witness
    from .errors import NormOutOfTolerance, SimilarityBelowThreshold

    try:
        synthesize_witness(pair.a, pair.b, PublicInputs.for_statement(cfg, bytes(32), bytes(32)))
    except (SimilarityBelowThreshold, NormOutOfTolerance):
        return False
    return True


def accuracy_sweep(dataset: Dataset, thresholds: Iterable[float],
                   decide: str = "plaintext") -> List[Tuple[float, float]]:
    """
    Returns (threshold, accuracy) rows ordered by threshold; accuracy is the fraction of pairs whose decision agrees
    with the ground-truth label.
    :param decide: "plaintext" compares similarities directly; "circuit" decides by witness synthesis.
    """
    if not dataset.pairs:
        raise ConfigError("dataset has no pairs")
    if decide not in ("plaintext", "circuit"):
        raise ConfigError(f"unknown decision mode: {decide}")

    labels = np.array([p.same_subject for p in dataset.pairs], dtype=bool)
    similarities = np.array([cosine_similarity_fixed(p.a, p.b) for p in dataset.pairs], dtype=np.int64)
    rows = []
    for tau in sorted(set(float(t) for t in thresholds)):
        cfg = ThresholdConfig.of(tau)
        if decide == "plaintext":
            decisions = similarities >= cfg.tau_fixed
        else:
            decisions = np.array([_circuit_decides(p, cfg) for p in dataset.pairs], dtype=bool)
        rows.append((tau, float(np.mean(decisions == labels))))
    return rows


def write_sweep_csv(path: Path, rows: Iterable[Tuple[float, float]]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("threshold", "accuracy"))
        for tau, accuracy in rows:
            writer.writerow((f"{tau:.4f}", f"{accuracy:.6f}"))
