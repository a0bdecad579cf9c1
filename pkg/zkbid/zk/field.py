"""
Arithmetic in the BN254 scalar field: roots of unity, radix-2 number-theoretic transforms, and Lagrange bases over
power-of-two evaluation domains.  Field elements are plain ints in [0, R).
"""
from functools import lru_cache
from typing import List, Sequence

from py_ecc.optimized_bn128 import curve_order

R = curve_order  # BN254 scalar field modulus (prime, ~2^254).


def _two_adicity(n: int) -> int:
    k = 0
    while n % 2 == 0:
        n //= 2
        k += 1
    return k


TWO_ADICITY = _two_adicity(R - 1)  # 28 for BN254.


def fe(value: int) -> int:
    """Reduces a (possibly negative) integer into the field."""
    return value % R


def signed(value: int) -> int:
    """Maps a field element to the representative in (-R/2, R/2]."""
    value %= R
    return value - R if value > R // 2 else value


def inverse(value: int) -> int:
    if value % R == 0:
        raise ZeroDivisionError("inverse of zero")
    return pow(value, R - 2, R)


def batch_inverse(values: Sequence[int]) -> List[int]:
    """Inverts all (nonzero) values with a single exponentiation."""
    prefix = [1] * (len(values) + 1)
    for i, v in enumerate(values):
        if v % R == 0:
            raise ZeroDivisionError(f"inverse of zero at position {i}")
        prefix[i + 1] = prefix[i] * v % R
    inv = inverse(prefix[-1])
    out = [0] * len(values)
    for i in range(len(values) - 1, -1, -1):
        out[i] = prefix[i] * inv % R
        inv = inv * values[i] % R
    return out


@lru_cache(maxsize=None)
def _nonresidue() -> int:
    g = 2
    while pow(g, (R - 1) // 2, R) == 1:
        g += 1
    return g


def coset_shift() -> int:
    """A field element outside every power-of-two subgroup."""
    return _nonresidue()


@lru_cache(maxsize=None)
def root_of_unity(n: int) -> int:
    """Returns a primitive n-th root of unity; n must be a power of two not exceeding 2^TWO_ADICITY."""
    if n < 1 or n & (n - 1) or n > 1 << TWO_ADICITY:
        raise ValueError(f"no power-of-two root of unity of order {n}")
    return pow(_nonresidue(), (R - 1) // n, R)


def domain_size_for(count: int) -> int:
    """Smallest power of two >= count (and >= 2)."""
    return max(2, 1 << (count - 1).bit_length())


def ntt(values: Sequence[int], omega: int) -> List[int]:
    """Evaluates the polynomial with coefficients `values` at omega^0 .. omega^(n-1); len(values) a power of two."""
    n = len(values)
    out = [v % R for v in values]
    if n <= 1:
        return out
    # Bit-reversal permutation.
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            out[i], out[j] = out[j], out[i]
    length = 2
    while length <= n:
        w_len = pow(omega, n // length, R)
        half = length // 2
        twiddles = [1] * half
        for k in range(1, half):
            twiddles[k] = twiddles[k - 1] * w_len % R
        for start in range(0, n, length):
            for k in range(half):
                u = out[start + k]
                v = out[start + k + half] * twiddles[k] % R
                out[start + k] = (u + v) % R
                out[start + k + half] = (u - v) % R
        length *= 2
    return out


def intt(values: Sequence[int], omega: int) -> List[int]:
    """Inverse of `ntt`: interpolates coefficients from evaluations at the powers of omega."""
    n = len(values)
    out = ntt(values, inverse(omega))
    n_inv = inverse(n)
    return [v * n_inv % R for v in out]


def evaluate(coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % R
    return acc


def powers(x: int, count: int) -> List[int]:
    out = [1] * count
    for i in range(1, count):
        out[i] = out[i - 1] * x % R
    return out


def lagrange_basis_at(n: int, x: int) -> List[int]:
    """
    Returns L_0(x) .. L_{n-1}(x) for the domain of n-th roots of unity, in O(n):
        L_i(x) = (x^n - 1) * omega^i / (n * (x - omega^i)).
    """
    omega = root_of_unity(n)
    points = powers(omega, n)
    x %= R
    if x in points:
        return [1 if p == x else 0 for p in points]
    vanishing = (pow(x, n, R) - 1) % R
    scale = vanishing * inverse(n) % R
    inv = batch_inverse([(x - p) % R for p in points])
    return [scale * p % R * d % R for p, d in zip(points, inv)]
