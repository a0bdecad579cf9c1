"""
Groth16 over BN254 (py_ecc's optimized_bn128).

Keygen evaluates every column polynomial at the secret point tau through the Lagrange basis of the evaluation domain,
so no polynomial is ever interpolated; all fixed-base multiplications go through windowed tables, optionally spread
over a process pool.  The prover multiplies the queries by the assignment with bucket (Pippenger) multi-scalar
multiplication; bit-valued and small witness values take cheap paths.  The verifier computes one product of four
Miller loops and a single final exponentiation.
"""
from functools import lru_cache
import logging
import multiprocessing
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from py_ecc.optimized_bn128 import (FQ, FQ2, FQ12, G1, G2, Z1, Z2, add, b, b2, double, final_exponentiate, is_inf,
                                    is_on_curve, multiply, neg, normalize, pairing)

from ..codec import Reader, Writer
from ..crypto.primitives import EntropySource, digest
from ..errors import MalformedEncoding, UnsatisfiedWitness
from .field import R, batch_inverse, domain_size_for, lagrange_basis_at, powers, signed
from .qap import QAP
from .r1cs import R1CS

logger = logging.getLogger(__name__)

FIELD_MODULUS = FQ.field_modulus
COORD_LEN = 32
G1_LEN = 2 * COORD_LEN
G2_LEN = 4 * COORD_LEN
PROOF_LEN = 2 * G1_LEN + G2_LEN

WINDOW_BITS = 8
SMALL_SCALAR_BITS = 40

Point = Tuple[Any, Any, Any]  # Projective coordinates over FQ (G1) or FQ2 (G2).


# Point encoding: uncompressed affine coordinates, big endian; the point at infinity is all zeros.
def _int(x: Any) -> int:
    return x if isinstance(x, int) else x.n


def _affine(pt: Point) -> Optional[Tuple[Any, Any]]:
    if is_inf(pt):
        return None
    return normalize(pt)


def encode_g1(pt: Point) -> bytes:
    aff = _affine(pt)
    if aff is None:
        return bytes(G1_LEN)
    x, y = aff
    return _int(x).to_bytes(COORD_LEN, "big") + _int(y).to_bytes(COORD_LEN, "big")


def encode_g2(pt: Point) -> bytes:
    aff = _affine(pt)
    if aff is None:
        return bytes(G2_LEN)
    x, y = aff
    return b"".join(_int(c).to_bytes(COORD_LEN, "big") for c in tuple(x.coeffs) + tuple(y.coeffs))


def _coords(data: bytes, count: int) -> List[int]:
    values = [int.from_bytes(data[i * COORD_LEN:(i + 1) * COORD_LEN], "big") for i in range(count)]
    if any(v >= FIELD_MODULUS for v in values):
        raise MalformedEncoding("coordinate is not reduced")
    return values


def decode_g1(data: bytes) -> Point:
    """Decodes a G1 point; checks curve membership (G1 has cofactor 1)."""
    if len(data) != G1_LEN:
        raise MalformedEncoding(f"G1 point must be {G1_LEN} bytes, got {len(data)}")
    if data == bytes(G1_LEN):
        return Z1
    x, y = _coords(data, 2)
    pt = (FQ(x), FQ(y), FQ.one())
    if not is_on_curve(pt, b):
        raise MalformedEncoding("G1 point is not on the curve")
    return pt


def decode_g2(data: bytes, check_subgroup: bool = True) -> Point:
    """Decodes a G2 point; checks curve and subgroup membership."""
    if len(data) != G2_LEN:
        raise MalformedEncoding(f"G2 point must be {G2_LEN} bytes, got {len(data)}")
    if data == bytes(G2_LEN):
        return Z2
    x0, x1, y0, y1 = _coords(data, 4)
    pt = (FQ2([x0, x1]), FQ2([y0, y1]), FQ2.one())
    if not is_on_curve(pt, b2):
        raise MalformedEncoding("G2 point is not on the twisted curve")
    if check_subgroup and not is_inf(multiply(pt, R)):
        raise MalformedEncoding("G2 point is not in the prime-order subgroup")
    return pt


# Keys and proofs.
class ProvingKey(NamedTuple):
    circuit_id: bytes
    domain_size: int
    num_public: int
    alpha_g1: Point
    beta_g1: Point
    beta_g2: Point
    delta_g1: Point
    delta_g2: Point
    a_query: List[Point]  # A_j(tau)*g1 for every variable j.
    b_g1_query: List[Point]
    b_g2_query: List[Point]
    h_query: List[Point]  # tau^k * t(tau) / delta * g1 for k < N - 1.
    l_query: List[Point]  # (beta*A_j + alpha*B_j + C_j)(tau) / delta * g1 for witness variables j.

    def encode(self) -> bytes:
        w = Writer().blob(self.circuit_id).u32(self.domain_size).u32(self.num_public)
        w.raw(encode_g1(self.alpha_g1)).raw(encode_g1(self.beta_g1)).raw(encode_g2(self.beta_g2))
        w.raw(encode_g1(self.delta_g1)).raw(encode_g2(self.delta_g2))
        w.blobs(encode_g1(p) for p in self.a_query)
        w.blobs(encode_g1(p) for p in self.b_g1_query)
        w.blobs(encode_g2(p) for p in self.b_g2_query)
        w.blobs(encode_g1(p) for p in self.h_query)
        w.blobs(encode_g1(p) for p in self.l_query)
        return w.getvalue()

    @staticmethod
    def decode(data: bytes) -> "ProvingKey":
        """Decodes a proving key.  Query points are checked to be on the curve; G2 subgroup checks are skipped."""
        r = Reader(data)
        pk = ProvingKey(
            circuit_id=r.blob(), domain_size=r.u32(), num_public=r.u32(),
            alpha_g1=decode_g1(r.raw(G1_LEN)), beta_g1=decode_g1(r.raw(G1_LEN)), beta_g2=decode_g2(r.raw(G2_LEN)),
            delta_g1=decode_g1(r.raw(G1_LEN)), delta_g2=decode_g2(r.raw(G2_LEN)),
            a_query=[decode_g1(x) for x in r.blobs()],
            b_g1_query=[decode_g1(x) for x in r.blobs()],
            b_g2_query=[decode_g2(x, check_subgroup=False) for x in r.blobs()],
            h_query=[decode_g1(x) for x in r.blobs()],
            l_query=[decode_g1(x) for x in r.blobs()])
        r.finish()
        return pk


class VerificationKey(NamedTuple):
    circuit_id: bytes
    alpha_g1: Point
    beta_g2: Point
    gamma_g2: Point
    delta_g2: Point
    ic: List[Point]  # (beta*A_j + alpha*B_j + C_j)(tau) / gamma * g1 for the constant and each public input.

    @property
    def num_public(self) -> int:
        return len(self.ic) - 1

    def encode(self) -> bytes:
        w = Writer().blob(self.circuit_id)
        w.raw(encode_g1(self.alpha_g1)).raw(encode_g2(self.beta_g2)).raw(encode_g2(self.gamma_g2))
        w.raw(encode_g2(self.delta_g2))
        w.blobs(encode_g1(p) for p in self.ic)
        return w.getvalue()

    @staticmethod
    def decode(data: bytes) -> "VerificationKey":
        r = Reader(data)
        vk = VerificationKey(circuit_id=r.blob(), alpha_g1=decode_g1(r.raw(G1_LEN)),
                             beta_g2=decode_g2(r.raw(G2_LEN)), gamma_g2=decode_g2(r.raw(G2_LEN)),
                             delta_g2=decode_g2(r.raw(G2_LEN)), ic=[decode_g1(x) for x in r.blobs()])
        r.finish()
        return vk


class Proof(NamedTuple):
    a: Point
    b: Point
    c: Point

    def encode(self) -> bytes:
        return encode_g1(self.a) + encode_g2(self.b) + encode_g1(self.c)

    @staticmethod
    def decode(data: bytes) -> "Proof":
        if len(data) != PROOF_LEN:
            raise MalformedEncoding(f"proof must be {PROOF_LEN} bytes, got {len(data)}")
        return Proof(decode_g1(data[:G1_LEN]), decode_g2(data[G1_LEN:G1_LEN + G2_LEN]),
                     decode_g1(data[G1_LEN + G2_LEN:]))


# Fixed-base multiplication.
class FixedBaseTable(object):
    """Precomputed d * 2^(8w) * base for every window w and digit d, so a multiplication costs at most 32 additions."""

    def __init__(self, base: Point, zero: Point) -> None:
        self.zero = zero
        self.windows: List[List[Point]] = []
        window_base = base
        for _ in range((R.bit_length() + WINDOW_BITS - 1) // WINDOW_BITS):
            row = [zero, window_base]
            for _ in range(2, 1 << WINDOW_BITS):
                row.append(add(row[-1], window_base))
            self.windows.append(row)
            for _ in range(WINDOW_BITS):
                window_base = double(window_base)

    def mul(self, k: int) -> Point:
        k %= R
        acc = None
        w = 0
        while k:
            digit = k & ((1 << WINDOW_BITS) - 1)
            if digit:
                term = self.windows[w][digit]
                acc = term if acc is None else add(acc, term)
            k >>= WINDOW_BITS
            w += 1
        return self.zero if acc is None else acc


_tables: Dict[str, FixedBaseTable] = {}


def _generator_table(group: str) -> FixedBaseTable:
    table = _tables.get(group)
    if table is None:
        table = FixedBaseTable(G1, Z1) if group == "g1" else FixedBaseTable(G2, Z2)
        _tables[group] = table
    return table


def _affine_ints(pt: Point) -> Optional[Tuple]:
    aff = _affine(pt)
    if aff is None:
        return None
    x, y = aff
    if isinstance(x, FQ):
        return _int(x), _int(y)
    return tuple(_int(c) for c in x.coeffs), tuple(_int(c) for c in y.coeffs)


def _from_affine_ints(group: str, aff: Optional[Tuple]) -> Point:
    if aff is None:
        return Z1 if group == "g1" else Z2
    if group == "g1":
        return FQ(aff[0]), FQ(aff[1]), FQ.one()
    return FQ2(list(aff[0])), FQ2(list(aff[1])), FQ2.one()


def _generator_batch(group: str, scalars: List[int]) -> List[Optional[Tuple]]:
    """Process-pool worker: multiplies the group generator by each scalar; returns affine coordinates as ints."""
    table = _generator_table(group)
    return [_affine_ints(table.mul(k)) for k in scalars]


def generator_multiples(group: str, scalars: Sequence[int], processes: Optional[int] = None) -> List[Point]:
    """Returns [k * generator for k in scalars] in G1 ("g1") or G2 ("g2")."""
    scalars = [k % R for k in scalars]
    if processes is None or processes <= 1 or len(scalars) < 256:
        table = _generator_table(group)
        return [table.mul(k) for k in scalars]
    chunk = (len(scalars) + processes - 1) // processes
    chunks = [scalars[i:i + chunk] for i in range(0, len(scalars), chunk)]
    with multiprocessing.Pool(processes) as pool:
        results = pool.starmap(_generator_batch, ((group, c) for c in chunks))
    return [_from_affine_ints(group, aff) for part in results for aff in part]


# Variable-base multi-scalar multiplication.
def _bucket_msm(pairs: List[Tuple[Point, int]], bits: int, zero: Point) -> Point:
    """Pippenger's bucket method for nonnegative scalars below 2^bits."""
    if not pairs:
        return zero
    c = max(2, min(12, len(pairs).bit_length() - 3))
    mask = (1 << c) - 1
    result = None
    for shift in range(((bits + c - 1) // c - 1) * c, -1, -c):
        if result is not None:
            for _ in range(c):
                result = double(result)
        buckets: List[Optional[Point]] = [None] * (mask + 1)
        for base, k in pairs:
            d = (k >> shift) & mask
            if d:
                buckets[d] = base if buckets[d] is None else add(buckets[d], base)
        running = None
        window_sum = None
        for d in range(mask, 0, -1):
            if buckets[d] is not None:
                running = buckets[d] if running is None else add(running, buckets[d])
            if running is not None:
                window_sum = running if window_sum is None else add(window_sum, running)
        if window_sum is not None:
            result = window_sum if result is None else add(result, window_sum)
    return zero if result is None else result


def msm(bases: Sequence[Point], scalars: Sequence[int], zero: Point) -> Point:
    """
    Returns sum k_i * P_i.  Scalars of +-1 become additions, small signed scalars (|k| < 2^40) share one bucket pass,
    and the remaining scalars share another.
    """
    acc = None
    small: List[Tuple[Point, int]] = []
    large: List[Tuple[Point, int]] = []
    for base, k in zip(bases, scalars):
        k %= R
        if k == 0 or is_inf(base):
            continue
        s = signed(k)
        if s == 1 or s == -1:
            term = base if s == 1 else neg(base)
            acc = term if acc is None else add(acc, term)
        elif abs(s) < 1 << SMALL_SCALAR_BITS:
            small.append((base if s > 0 else neg(base), abs(s)))
        else:
            large.append((base, k))
    acc = zero if acc is None else acc
    if small:
        acc = add(acc, _bucket_msm(small, SMALL_SCALAR_BITS, zero))
    if large:
        acc = add(acc, _bucket_msm(large, R.bit_length(), zero))
    return acc


# Setup, prove, verify.
def _random_field_element(entropy: EntropySource) -> int:
    while True:
        k = int.from_bytes(entropy(64), "big") % R
        if k:
            return k


def circuit_id(r1cs: R1CS) -> bytes:
    """A digest identifying the constraint system; keys record it so they are never used with another circuit."""
    w = Writer().u32(r1cs.num_public).u32(r1cs.num_witness).u32(r1cs.constraint_count)
    for constraint in r1cs.constraints:
        for lc in constraint:
            w.u32(len(lc))
            for var in sorted(lc):
                w.u32(var).raw((lc[var] % R).to_bytes(32, "big"))
    return bytes(digest(w.getvalue()))


def keygen(r1cs: R1CS, entropy: EntropySource, processes: Optional[int] = None) -> Tuple[ProvingKey, VerificationKey]:
    """
    Generates a structured reference string for `r1cs`.  The trapdoor (tau, alpha, beta, gamma, delta) lives only in
    this function's frame.
    :param entropy: source of the trapdoor; a seeded source gives reproducible keys (tests only).
    :param processes: spread the fixed-base multiplications over this many worker processes.
    """
    n = domain_size_for(r1cs.constraint_count)
    m = r1cs.num_variables
    num_public = r1cs.num_public
    tau, alpha, beta, gamma, delta = (_random_field_element(entropy) for _ in range(5))

    basis = lagrange_basis_at(n, tau)
    a_tau, b_tau, c_tau = [0] * m, [0] * m, [0] * m
    for row, (a, b_lc, c) in enumerate(r1cs.constraints):
        lag = basis[row]
        for var, coeff in a.items():
            a_tau[var] = (a_tau[var] + coeff * lag) % R
        for var, coeff in b_lc.items():
            b_tau[var] = (b_tau[var] + coeff * lag) % R
        for var, coeff in c.items():
            c_tau[var] = (c_tau[var] + coeff * lag) % R

    gamma_inv, delta_inv = batch_inverse([gamma, delta])
    t_tau = (pow(tau, n, R) - 1) % R
    combined = [(beta * a_tau[j] + alpha * b_tau[j] + c_tau[j]) % R for j in range(m)]
    h_scalars = [p * t_tau % R * delta_inv % R for p in powers(tau, n - 1)]

    g1_scalars = ([alpha, beta, delta] + a_tau + b_tau + h_scalars +
                  [combined[j] * delta_inv % R for j in range(1 + num_public, m)] +
                  [combined[j] * gamma_inv % R for j in range(1 + num_public)])
    g2_scalars = [beta, gamma, delta] + b_tau
    logger.info("Keygen: %d G1 and %d G2 fixed-base multiplications", len(g1_scalars), len(g2_scalars))
    g1_points = generator_multiples("g1", g1_scalars, processes)
    g2_points = generator_multiples("g2", g2_scalars, processes)
    del tau, alpha, beta, gamma, delta, gamma_inv, delta_inv

    it1 = iter(g1_points)
    alpha_g1, beta_g1, delta_g1 = next(it1), next(it1), next(it1)
    a_query = [next(it1) for _ in range(m)]
    b_g1_query = [next(it1) for _ in range(m)]
    h_query = [next(it1) for _ in range(n - 1)]
    l_query = [next(it1) for _ in range(m - 1 - num_public)]
    ic = [next(it1) for _ in range(1 + num_public)]
    beta_g2, gamma_g2, delta_g2 = g2_points[:3]
    b_g2_query = g2_points[3:]

    cid = circuit_id(r1cs)
    pk = ProvingKey(cid, n, num_public, alpha_g1, beta_g1, beta_g2, delta_g1, delta_g2, a_query, b_g1_query,
                    b_g2_query, h_query, l_query)
    vk = VerificationKey(cid, alpha_g1, beta_g2, gamma_g2, delta_g2, ic)
    return pk, vk


def prove(pk: ProvingKey, r1cs: R1CS, z: Sequence[int], entropy: EntropySource) -> Proof:
    """
    Proves knowledge of the witness part of assignment `z` = (1, public, witness).
    :raise UnsatisfiedWitness: if `z` violates a constraint.
    """
    violated = r1cs.first_violation(z)
    if violated is not None:
        raise UnsatisfiedWitness(violated)

    h, remainder = QAP(r1cs).divide(z)
    assert not any(remainder)
    r = _random_field_element(entropy)
    s = _random_field_element(entropy)

    a = add(add(pk.alpha_g1, msm(pk.a_query, z, Z1)), multiply(pk.delta_g1, r))
    b_g2 = add(add(pk.beta_g2, msm(pk.b_g2_query, z, Z2)), multiply(pk.delta_g2, s))
    b_g1 = add(add(pk.beta_g1, msm(pk.b_g1_query, z, Z1)), multiply(pk.delta_g1, s))
    c = msm(pk.l_query, z[1 + pk.num_public:], Z1)
    c = add(c, msm(pk.h_query, h, Z1))
    c = add(c, multiply(a, s))
    c = add(c, multiply(b_g1, r))
    c = add(c, neg(multiply(pk.delta_g1, r * s % R)))
    return Proof(a, b_g2, c)


def verify(vk: VerificationKey, public: Sequence[int], proof: Proof) -> bool:
    """Checks e(A, B) = e(alpha, beta) * e(sum x_i*IC_i, gamma) * e(C, delta)."""
    if len(public) != vk.num_public:
        return False
    acc = vk.ic[0]
    for x, point in zip(public, vk.ic[1:]):
        acc = add(acc, multiply(point, x % R))
    f = (pairing(proof.b, proof.a, final_exponentiate=False) *
         pairing(vk.beta_g2, neg(vk.alpha_g1), final_exponentiate=False) *
         pairing(vk.gamma_g2, neg(acc), final_exponentiate=False) *
         pairing(vk.delta_g2, neg(proof.c), final_exponentiate=False))
    return final_exponentiate(f) == FQ12.one()


@lru_cache(maxsize=4)
def _decoded_vk(vk_bytes: bytes) -> VerificationKey:
    return VerificationKey.decode(vk_bytes)


@lru_cache(maxsize=4096)
def verify_encoded(vk_bytes: bytes, public: Tuple[int, ...], proof_bytes: bytes) -> bool:
    """`verify` on canonical encodings, memoized; malformed encodings are rejected, never raised."""
    try:
        return verify(_decoded_vk(vk_bytes), public, Proof.decode(proof_bytes))
    except (MalformedEncoding, AssertionError, ValueError, ZeroDivisionError) as e:
        logger.debug("Proof rejected as malformed: %r", e)
        return False
