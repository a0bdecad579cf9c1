"""
Quadratic arithmetic program view of an R1CS.

Constraint i is attached to the domain point omega^i, where omega is a primitive N-th root of unity and N is the
smallest power of two covering all constraints; the target polynomial is t(X) = X^N - 1.  For an assignment z,
A(X) = sum_j z_j*A_j(X) (likewise B, C) interpolates the per-constraint values, and z satisfies the R1CS iff t(X)
divides A(X)*B(X) - C(X).
"""
from typing import List, Sequence, Tuple

from .field import R, domain_size_for, intt, ntt, root_of_unity
from .r1cs import R1CS, lc_eval

Polynomial = List[int]  # Coefficients, lowest degree first.


class QAP(object):
    def __init__(self, r1cs: R1CS) -> None:
        self.r1cs = r1cs
        self.domain_size = domain_size_for(r1cs.constraint_count)
        self.omega = root_of_unity(self.domain_size)

    def target(self) -> Polynomial:
        """t(X) = X^N - 1."""
        return [R - 1] + [0] * (self.domain_size - 1) + [1]

    def _interpolate(self, evaluations: Sequence[int]) -> Polynomial:
        padded = list(evaluations) + [0] * (self.domain_size - len(evaluations))
        return intt(padded, self.omega)

    def column_polynomials(self, j: int) -> Tuple[Polynomial, Polynomial, Polynomial]:
        """Returns (A_j, B_j, C_j): the polynomials interpolating column j of the three constraint matrices."""
        out = []
        for which in range(3):
            column = [constraint[which].get(j, 0) % R for constraint in self.r1cs.constraints]
            out.append(self._interpolate(column))
        return out[0], out[1], out[2]

    def evaluations(self, z: Sequence[int]) -> Tuple[List[int], List[int], List[int]]:
        """Per-constraint values (<a_i,z>, <b_i,z>, <c_i,z>)."""
        a, b, c = [], [], []
        for constraint in self.r1cs.constraints:
            a.append(lc_eval(constraint.a, z))
            b.append(lc_eval(constraint.b, z))
            c.append(lc_eval(constraint.c, z))
        return a, b, c

    def combine(self, z: Sequence[int]) -> Tuple[Polynomial, Polynomial, Polynomial]:
        """Returns A(X), B(X), C(X) for assignment z."""
        a, b, c = self.evaluations(z)
        return self._interpolate(a), self._interpolate(b), self._interpolate(c)

    def divide(self, z: Sequence[int]) -> Tuple[Polynomial, Polynomial]:
        """
        Returns (H, remainder) with A*B - C = H*t + remainder.  The remainder is identically zero iff z satisfies
        the R1CS; H has degree at most N - 2.
        """
        n = self.domain_size
        big = 2 * n
        omega2 = root_of_unity(big)
        a, b, c = self.combine(z)
        a_ev = ntt(a + [0] * n, omega2)
        b_ev = ntt(b + [0] * n, omega2)
        c_ev = ntt(c + [0] * n, omega2)
        product = intt([(x * y - w) % R for x, y, w in zip(a_ev, b_ev, c_ev)], omega2)
        # X^N = 1 modulo t, so P = sum p_k X^k splits into H_k = p_{k+N} and remainder_k = p_k + p_{k+N}.
        quotient = product[n:]
        remainder = [(product[k] + product[k + n]) % R for k in range(n)]
        return quotient[:n - 1], remainder

    def is_divisible(self, z: Sequence[int]) -> bool:
        _, remainder = self.divide(z)
        return not any(remainder)


def r1cs_to_qap(r1cs: R1CS) -> QAP:
    return QAP(r1cs)
