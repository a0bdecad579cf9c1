"""
Rank-1 constraint systems.

Variable 0 is the constant one, variables 1..num_public are the public inputs, and the rest are witness variables.
A linear combination is a sparse map from variable index to coefficient.
"""
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence

from ..errors import ConfigError
from .field import R

LinearCombination = Dict[int, int]

ONE = 0  # Index of the constant-one variable.


class Constraint(NamedTuple):
    """<a, z> * <b, z> = <c, z>."""
    a: LinearCombination
    b: LinearCombination
    c: LinearCombination


def lc_eval(lc: LinearCombination, z: Sequence[int]) -> int:
    return sum(coeff * z[var] for var, coeff in lc.items()) % R


class R1CS(object):
    def __init__(self, num_public: int, num_witness: int, constraints: List[Constraint]) -> None:
        self.num_public = num_public
        self.num_witness = num_witness
        self.constraints = constraints
        self.check()

    @property
    def num_variables(self) -> int:
        return 1 + self.num_public + self.num_witness

    @property
    def constraint_count(self) -> int:
        return len(self.constraints)

    def check(self) -> None:
        """Raises ConfigError if a constraint references a variable out of range."""
        n = self.num_variables
        for i, constraint in enumerate(self.constraints):
            for lc in constraint:
                for var in lc:
                    if not 0 <= var < n:
                        raise ConfigError(f"constraint {i} references variable {var}; only {n} exist")

    def first_violation(self, z: Sequence[int]) -> Optional[int]:
        """Returns the index of the first unsatisfied constraint, or None if `z` satisfies all of them."""
        if len(z) != self.num_variables:
            raise ConfigError(f"assignment has {len(z)} values, circuit has {self.num_variables} variables")
        for i, (a, b, c) in enumerate(self.constraints):
            if lc_eval(a, z) * lc_eval(b, z) % R != lc_eval(c, z):
                return i
        return None

    def is_satisfied(self, z: Sequence[int]) -> bool:
        return self.first_violation(z) is None

    def columns(self, which: int) -> Iterator[Dict[int, int]]:
        """
        Yields, for each variable j, the sparse column {row: coefficient} of matrix A (which=0), B (1) or C (2).
        """
        cols: List[Dict[int, int]] = [dict() for _ in range(self.num_variables)]
        for row, constraint in enumerate(self.constraints):
            for var, coeff in constraint[which].items():
                if coeff % R:
                    cols[var][row] = coeff % R
        return iter(cols)


class ConstraintSystem(object):
    """Builder that allocates variables and collects constraints.  Public inputs must be allocated first."""

    def __init__(self) -> None:
        self.num_public = 0
        self.num_witness = 0
        self.constraints: List[Constraint] = []
        self.labels: Dict[int, str] = {ONE: "one"}

    def public(self, label: str) -> int:
        if self.num_witness:
            raise ConfigError("public inputs must be allocated before witness variables")
        self.num_public += 1
        self.labels[self.num_public] = label
        return self.num_public

    def witness(self, label: str) -> int:
        self.num_witness += 1
        var = self.num_public + self.num_witness
        self.labels[var] = label
        return var

    def enforce(self, a: LinearCombination, b: LinearCombination, c: LinearCombination) -> int:
        """Adds <a,z>*<b,z> = <c,z>; returns the constraint index."""
        self.constraints.append(Constraint({k: v % R for k, v in a.items()}, {k: v % R for k, v in b.items()},
                                           {k: v % R for k, v in c.items()}))
        return len(self.constraints) - 1

    def enforce_boolean(self, var: int) -> int:
        """var * var = var, i.e. var is 0 or 1."""
        return self.enforce({var: 1}, {var: 1}, {var: 1})

    def enforce_equal(self, lc: LinearCombination, var_lc: LinearCombination) -> int:
        """lc * 1 = var_lc."""
        return self.enforce(lc, {ONE: 1}, var_lc)

    def build(self) -> R1CS:
        return R1CS(self.num_public, self.num_witness, list(self.constraints))
