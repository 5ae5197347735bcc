"""Dense complex linear algebra shared by every other module.

Matrices are plain ``numpy`` ``complex128`` arrays; wavelength-indexed stacks
are 3-D arrays ordered ``[wavelength, row, col]``. All numerical tolerances
used anywhere in the package live in this module.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from channel_dimension_certifier import exceptions as exc

UNITARY_TOL = 1e-10
RECONSTRUCTION_RTOL = 1e-8
DEGENERACY_RTOL = 1e-9
MUB_TOL = 1e-9
NORMALIZATION_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-12
TRACE_TOL = 1e-10
VIOLATION_RTOL = 1e-9

Rng = np.random.Generator

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> Rng:
    """Deterministic generator: numpy's PCG64 bit generator seeded with ``seed``.

    Any signed or unsigned 64-bit integer is accepted; negative seeds are
    taken modulo 2**64.
    """
    seed = int(seed)
    if not -(1 << 63) <= seed <= SEED_MASK:
        raise exc.InvalidArgumentError(f"Seed must be a 64-bit integer, got {seed}.")
    return np.random.Generator(np.random.PCG64(seed & SEED_MASK))


@dataclass(frozen=True, eq=False)
class Svd:
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.conj().T


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    gram = adjoint(u) @ u
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return unitarity_error(u) <= tol


def _is_diagonal(a: np.ndarray) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    return not np.any(a - np.diag(np.diag(a)))


def _diagonal_svd(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    entries = np.diag(a)
    magnitudes = np.abs(entries)
    # stable sort keeps index order inside ties
    order = np.argsort(-magnitudes, kind="stable")
    phases = np.ones(len(entries), dtype=complex)
    nonzero = magnitudes > 0
    phases[nonzero] = entries[nonzero] / magnitudes[nonzero]
    eye = np.eye(len(entries), dtype=complex)
    v = eye[:, order]
    u = v * phases[order]
    return u, magnitudes[order], v


def _canonicalize_phases(u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    cols = np.arange(v.shape[1])
    pivots = np.argmax(np.abs(v), axis=0)
    pivot_entries = v[pivots, cols]
    magnitudes = np.abs(pivot_entries)
    phases = np.ones(v.shape[1], dtype=complex)
    nonzero = magnitudes > 0
    phases[nonzero] = pivot_entries[nonzero] / magnitudes[nonzero]
    return u * phases.conj(), v * phases.conj()


def _degenerate_clusters(s: np.ndarray):
    scale = max(float(s[0]), np.finfo(float).tiny) if len(s) else 1.0
    start = 0
    for i in range(1, len(s) + 1):
        if i == len(s) or (s[i - 1] - s[i]) > DEGENERACY_RTOL * scale:
            yield start, i
            start = i


def _order_degenerate_clusters(u, s, v):
    order = np.arange(len(s))
    for start, stop in _degenerate_clusters(s):
        if stop - start < 2:
            continue
        block = list(range(start, stop))
        block.sort(key=lambda i: tuple(np.round(-np.abs(v[:, i]), 9)))
        order[start:stop] = block
    return u[:, order], s[order], v[:, order]


def svd(a: np.ndarray) -> Svd:
    """Singular value decomposition ``a = u @ diag(s) @ v^H``

    Singular values are sorted descending. Each column of ``v`` is rotated so
    that its largest-magnitude entry is real positive and the matching column
    of ``u`` takes the same phase. Inside numerically degenerate clusters the
    columns are ordered by the magnitude pattern of ``v``, which for diagonal
    input means index order. Downstream quantities only depend on the spanned
    subspaces, so this choice is a reproducibility convention.

    :param a: matrix to decompose
    :type a: numpy.ndarray
    :return: the decomposition
    :rtype: Svd
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise exc.InvalidArgumentError(f"svd expects a matrix, got an array of shape {a.shape}")
    rows, cols = a.shape
    if not np.all(np.isfinite(a)):
        raise exc.InvalidArgumentError(
            f"Cannot decompose a {rows}x{cols} matrix with non-finite entries."
        )
    if _is_diagonal(a):
        u, s, v = _diagonal_svd(a)
    else:
        try:
            u, s, vh = np.linalg.svd(a, full_matrices=False)
        except np.linalg.LinAlgError as err:
            raise exc.NumericFailureError(
                f"SVD did not converge for a {rows}x{cols} matrix."
            ) from err
        v = adjoint(vh)
    u, v = _canonicalize_phases(u, v)
    u, s, v = _order_degenerate_clusters(u, s, v)
    return Svd(u=u, singular_values=s, v=v)


def random_unitary(d: int, rng: Rng) -> np.ndarray:
    """Haar-random d x d unitary: QR of a Ginibre matrix, with the phases of
    R's diagonal moved into Q."""
    if d < 1:
        raise exc.InvalidArgumentError(f"Unitary dimension must be at least 1, got {d}.")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = scipy.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_states(count: int, d: int, rng: Rng) -> np.ndarray:
    """``count`` Haar-random unit vectors of length d, one per row."""
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
