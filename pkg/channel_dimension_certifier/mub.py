from dataclasses import dataclass
from typing import Tuple

import numpy as np

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.numerics import MUB_TOL, UNITARY_TOL, unitarity_error


@dataclass(frozen=True, eq=False)
class MubFamily:
    """Basis-change matrices W^(x) relative to the standard basis.

    Column b of ``matrices[x]`` is the b-th vector of basis x.
    ``matrices[0]`` is always the identity.
    """

    dim: int
    matrices: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.matrices) < 1:
            raise exc.InvalidArgumentError("A MUB family needs at least one basis.")
        for x, w in enumerate(self.matrices):
            if w.shape != (self.dim, self.dim):
                raise exc.InvalidArgumentError(
                    f"Basis {x} has shape {w.shape}, expected ({self.dim}, {self.dim})."
                )

    @property
    def num_bases(self) -> int:
        return len(self.matrices)

    def stacked(self) -> np.ndarray:
        return np.stack(self.matrices)

    def restrict(self, m: int) -> "MubFamily":
        if not 1 <= m <= self.num_bases:
            raise exc.InvalidArgumentError(
                f"Cannot take {m} bases from a family of {self.num_bases}."
            )
        return MubFamily(self.dim, self.matrices[:m])

    def max_unitarity_error(self) -> float:
        return max(unitarity_error(w) for w in self.matrices)

    def max_unbiasedness_error(self) -> float:
        """Largest deviation of |<e_i|f_j>|^2 from 1/d over all basis pairs."""
        worst = 0.0
        for x in range(self.num_bases):
            for y in range(x + 1, self.num_bases):
                overlaps = np.abs(self.matrices[x].conj().T @ self.matrices[y]) ** 2
                worst = max(worst, float(np.max(np.abs(overlaps - 1 / self.dim))))
        return worst

    def is_valid(self) -> bool:
        return (
            self.max_unitarity_error() <= UNITARY_TOL
            and self.max_unbiasedness_error() <= MUB_TOL
        )


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _root_of_unity_matrix(exponents: np.ndarray, d: int) -> np.ndarray:
    # exponents are reduced mod d before exponentiating so entries are exact
    return np.exp(2j * np.pi * (exponents % d) / d) / np.sqrt(d)


def fourier_pair(d: int) -> MubFamily:
    """Standard basis and the discrete Fourier basis, a MUB pair in any d >= 2.

    :param d: dimension
    :type d: int
    :return: two-basis family
    :rtype: MubFamily
    """
    if d < 2:
        raise exc.InvalidArgumentError(f"A MUB pair needs d >= 2, got {d}.")
    j = np.arange(d)
    fourier = _root_of_unity_matrix(np.outer(j, j), d)
    return MubFamily(d, (np.eye(d, dtype=complex), fourier))


_QUBIT_BASES = (
    np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
)


def prime_family(d: int, m: int) -> MubFamily:
    """Identity plus m-1 bases of the complete prime-dimension construction.

    For odd prime d basis x (x = 0, ..., m-2) has entries
    ``omega**(x*j**2 + b*j) / sqrt(d)`` in row j, column b. For d = 2 the
    bases are the eigenbases of Pauli X and Y.
    """
    if not is_prime(d):
        raise exc.UnsupportedDimensionError(
            f"More than two MUBs are only constructed for prime dimensions, got d={d}."
        )
    if not 2 <= m <= d + 1:
        raise exc.InvalidArgumentError(
            f"Number of MUBs must satisfy 2 <= m <= d+1 = {d + 1}, got {m}."
        )
    if d == 2:
        return MubFamily(2, (np.eye(2, dtype=complex),) + _QUBIT_BASES[: m - 1])
    j = np.arange(d)
    bases = [np.eye(d, dtype=complex)]
    for x in range(m - 1):
        exponents = x * (j ** 2)[:, None] + np.outer(j, j)
        bases.append(_root_of_unity_matrix(exponents, d))
    return MubFamily(d, tuple(bases))


def mub_family(d: int, m: int) -> MubFamily:
    if m == 2:
        return fourier_pair(d)
    return prime_family(d, m)
