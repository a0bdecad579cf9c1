"""
The face-match circuit.

Public inputs: the similarity threshold tau_fixed, the norm tolerance eps_norm, the identity hash and a digest of the
seed public key.  Witness: both feature vectors plus the auxiliary values of every range check.  The circuit
enforces
  1. D = sum a_i*b_i (one product per coordinate);
  2. D - tau_fixed = slack, with slack in [0, 2^35);
  3. |sum a_i^2 - 2^32| <= eps_norm and likewise for b, as u = sum a_i^2 - 2^32 + eps_norm in [0, 2^34) and
     2*eps_norm - u in [0, 2^34);
  4. every coordinate is (1 - 2*sign) * magnitude with a 17-bit magnitude;
  5. id_hash * 1 = id_hash and seed_pk_digest * 1 = seed_pk_digest, so both appear in a constraint.
"""
from functools import lru_cache
import logging
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from ..consts import EPS_NORM, FEATURE_DIM, SIMILARITY_SCALE_BITS
from ..crypto.primitives import GroupElement, digest, from_hex
from ..errors import ConfigError, MalformedEncoding, NormOutOfTolerance, SimilarityBelowThreshold
from ..facematch import FeatureVector, ThresholdConfig, cosine_similarity_fixed
from .field import R, fe, signed
from .r1cs import ONE, R1CS, ConstraintSystem, LinearCombination

logger = logging.getLogger(__name__)

MAGNITUDE_BITS = 17
SLACK_BITS = 35
NORM_BITS = 34
MAX_EPS_NORM = 1 << (NORM_BITS - 1)
UNIT = 1 << SIMILARITY_SCALE_BITS
FE_LEN = 32


class PublicInputs(NamedTuple):
    """The statement; all four values are field elements."""
    tau_fixed: int
    eps_norm: int
    id_hash: int
    seed_pk_digest: int

    @staticmethod
    def for_statement(cfg: ThresholdConfig, id_hash: bytes, seed_pk_digest: bytes,
                      eps_norm: int = EPS_NORM) -> "PublicInputs":
        """
        :param id_hash: the 32-byte identity hash.
        :param seed_pk_digest: the 32-byte digest of the seed public key (see `seed_key_digest`).
        """
        return PublicInputs(fe(cfg.tau_fixed), fe(eps_norm), fe(int.from_bytes(id_hash, "big")),
                            fe(int.from_bytes(seed_pk_digest, "big")))

    def to_field_elements(self) -> List[int]:
        return [v % R for v in self]

    def encode(self) -> bytes:
        return b"".join((v % R).to_bytes(FE_LEN, "big") for v in self)

    def to_json(self) -> Dict[str, str]:
        return {name: (value % R).to_bytes(FE_LEN, "big").hex() for name, value in zip(self._fields, self)}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "PublicInputs":
        try:
            values = [int.from_bytes(from_hex(obj[name], FE_LEN), "big") for name in PublicInputs._fields]
        except (KeyError, TypeError) as e:
            raise MalformedEncoding(f"bad public inputs JSON: {e!r}")
        if any(v >= R for v in values):
            raise MalformedEncoding("public input is not a field element")
        return PublicInputs(*values)


def seed_key_digest(pk_seed: GroupElement) -> bytes:
    """The value that binds a proof to a seed public key."""
    return digest(pk_seed.encode())


class Witness(NamedTuple):
    a: Tuple[int, ...]
    b: Tuple[int, ...]
    slack: int
    norm_slacks: Tuple[int, int]
    values: Tuple[int, ...]  # The whole witness part of the assignment, bit decompositions included.

    def assignment(self, pub: PublicInputs) -> List[int]:
        """z = (1, public inputs, witness)."""
        return [1] + pub.to_field_elements() + list(self.values)


class _VectorVars(NamedTuple):
    coords: List[int]
    magnitude_bits: List[List[int]]
    signs: List[int]
    squares: List[int]
    norm_slack: int
    norm_bits: List[int]
    norm_complement_bits: List[int]


def _weighted(bits: Sequence[int]) -> LinearCombination:
    return {bit: 1 << k for k, bit in enumerate(bits)}


class FaceMatchCircuit(R1CS):
    """The face-match R1CS plus the variable layout used to synthesize witnesses."""

    def __init__(self, cfg: ThresholdConfig) -> None:
        self.cfg = cfg
        cs = ConstraintSystem()
        self.tau_var = cs.public("tau_fixed")
        self.eps_var = cs.public("eps_norm")
        self.id_hash_var = cs.public("id_hash")
        self.seed_pk_var = cs.public("seed_pk_digest")

        coord_vars = {}
        for name in ("a", "b"):
            coords, mags, signs = [], [], []
            for i in range(FEATURE_DIM):
                coord = cs.witness(f"{name}[{i}]")
                bits = [cs.witness(f"{name}[{i}].m{k}") for k in range(MAGNITUDE_BITS)]
                sign = cs.witness(f"{name}[{i}].sign")
                for bit in bits + [sign]:
                    cs.enforce_boolean(bit)
                cs.enforce({ONE: 1, sign: -2}, _weighted(bits), {coord: 1})
                coords.append(coord)
                mags.append(bits)
                signs.append(sign)
            coord_vars[name] = (coords, mags, signs)

        a_coords, b_coords = coord_vars["a"][0], coord_vars["b"][0]
        self.product_vars = []
        for i in range(FEATURE_DIM):
            p = cs.witness(f"p[{i}]")
            cs.enforce({a_coords[i]: 1}, {b_coords[i]: 1}, {p: 1})
            self.product_vars.append(p)
        squares = {}
        for name, coords in (("a", a_coords), ("b", b_coords)):
            squares[name] = []
            for i in range(FEATURE_DIM):
                q = cs.witness(f"{name}[{i}]^2")
                cs.enforce({coords[i]: 1}, {coords[i]: 1}, {q: 1})
                squares[name].append(q)

        self.slack_var = cs.witness("slack")
        self.slack_bit_vars = [cs.witness(f"slack.b{k}") for k in range(SLACK_BITS)]
        similarity: LinearCombination = {p: 1 for p in self.product_vars}
        similarity[self.tau_var] = -1
        cs.enforce_equal(similarity, {self.slack_var: 1})
        for bit in self.slack_bit_vars:
            cs.enforce_boolean(bit)
        self.slack_range_constraint = cs.enforce_equal(_weighted(self.slack_bit_vars), {self.slack_var: 1})

        self.vectors: Dict[str, _VectorVars] = {}
        for name in ("a", "b"):
            u = cs.witness(f"norm_slack_{name}")
            shifted: LinearCombination = {q: 1 for q in squares[name]}
            shifted[ONE] = -UNIT
            shifted[self.eps_var] = 1
            cs.enforce_equal(shifted, {u: 1})
            u_bits = [cs.witness(f"norm_slack_{name}.b{k}") for k in range(NORM_BITS)]
            for bit in u_bits:
                cs.enforce_boolean(bit)
            cs.enforce_equal(_weighted(u_bits), {u: 1})
            w_bits = [cs.witness(f"norm_complement_{name}.b{k}") for k in range(NORM_BITS)]
            for bit in w_bits:
                cs.enforce_boolean(bit)
            cs.enforce_equal({self.eps_var: 2, u: -1}, _weighted(w_bits))
            coords, mags, signs = coord_vars[name]
            self.vectors[name] = _VectorVars(coords, mags, signs, squares[name], u, u_bits, w_bits)

        cs.enforce({self.id_hash_var: 1}, {ONE: 1}, {self.id_hash_var: 1})
        cs.enforce({self.seed_pk_var: 1}, {ONE: 1}, {self.seed_pk_var: 1})

        self.labels = cs.labels
        super(FaceMatchCircuit, self).__init__(cs.num_public, cs.num_witness, cs.constraints)

    def assign(self, a: FeatureVector, b: FeatureVector, pub: PublicInputs) -> List[int]:
        """
        Computes the full assignment z without checking any predicate.  Range-checked values are decomposed modulo
        2^width, so an out-of-range value yields an assignment that violates its recomposition constraint.
        """
        z = [0] * self.num_variables
        z[ONE] = 1
        for var, value in zip((self.tau_var, self.eps_var, self.id_hash_var, self.seed_pk_var), pub):
            z[var] = value % R

        def set_bits(bits: List[int], value: int) -> None:
            value %= 1 << len(bits)
            for k, bit in enumerate(bits):
                z[bit] = (value >> k) & 1

        for name, vec in (("a", a), ("b", b)):
            vv = self.vectors[name]
            for i, c in enumerate(vec.coords):
                z[vv.coords[i]] = fe(c)
                z[vv.signs[i]] = 1 if c < 0 else 0
                set_bits(vv.magnitude_bits[i], abs(c))
                z[vv.squares[i]] = c * c % R
            u = fe(vec.squared_norm - UNIT + signed(pub.eps_norm))
            z[vv.norm_slack] = u
            set_bits(vv.norm_bits, u)
            set_bits(vv.norm_complement_bits, fe(2 * pub.eps_norm - u))

        for i, p in enumerate(self.product_vars):
            z[p] = a.coords[i] * b.coords[i] % R
        slack = fe(cosine_similarity_fixed(a, b) - signed(pub.tau_fixed))
        z[self.slack_var] = slack
        set_bits(self.slack_bit_vars, slack)
        return z


def build_facematch_circuit(cfg: ThresholdConfig) -> FaceMatchCircuit:
    """Builds the face-match R1CS.  Its structure does not depend on `cfg`; the threshold is a public input."""
    circuit = FaceMatchCircuit(cfg)
    logger.debug("Face-match circuit: %d constraints, %d variables", circuit.constraint_count,
                 circuit.num_variables)
    return circuit


@lru_cache(maxsize=1)
def default_circuit() -> FaceMatchCircuit:
    return build_facematch_circuit(ThresholdConfig.of())


def _check_vector(name: str, vec: FeatureVector, eps_norm: int) -> None:
    if len(vec.coords) != FEATURE_DIM:
        raise NormOutOfTolerance(f"vector {name} has {len(vec.coords)} coordinates")
    if any(abs(c) >= 1 << MAGNITUDE_BITS for c in vec.coords):
        raise NormOutOfTolerance(f"vector {name} has a coordinate outside (-2^17, 2^17)")
    if abs(vec.squared_norm - UNIT) > eps_norm:
        raise NormOutOfTolerance(f"vector {name} squared norm {vec.squared_norm} is not within {eps_norm} of 2^32")


def synthesize_witness(a: FeatureVector, b: FeatureVector, pub: PublicInputs,
                       circuit: Optional[FaceMatchCircuit] = None) -> Witness:
    """
    Returns a satisfying witness, or fails the way the plaintext face match would.
    :raise NormOutOfTolerance: a vector is not unit-norm within eps_norm.
    :raise SimilarityBelowThreshold: the similarity is below tau_fixed.
    """
    circuit = circuit or default_circuit()
    eps = signed(pub.eps_norm)
    tau = signed(pub.tau_fixed)
    if not 0 <= eps < MAX_EPS_NORM:
        raise ConfigError(f"eps_norm must be in [0, 2^{NORM_BITS - 1})")
    if not -UNIT <= tau <= UNIT:
        raise ConfigError("tau_fixed must be in [-2^32, 2^32]")

    _check_vector("a", a, eps)
    _check_vector("b", b, eps)
    similarity = cosine_similarity_fixed(a, b)
    if similarity < tau:
        raise SimilarityBelowThreshold(f"similarity {similarity / UNIT:.6f} is below threshold {tau / UNIT:.6f}")

    z = circuit.assign(a, b, pub)
    violated = circuit.first_violation(z)
    # Unreachable for inputs that pass the checks above.
    assert violated is None, f"synthesized witness violates constraint {violated}"
    vv_a, vv_b = circuit.vectors["a"], circuit.vectors["b"]
    start = 1 + circuit.num_public
    return Witness(a=tuple(z[v] for v in vv_a.coords), b=tuple(z[v] for v in vv_b.coords),
                   slack=z[circuit.slack_var], norm_slacks=(z[vv_a.norm_slack], z[vv_b.norm_slack]),
                   values=tuple(z[start:]))
