"""Schmidt-number witnesses on MUB correlation tensors and the inversion of
their bounds into a certified dimension.

A channel with Schmidt number at most n satisfies ``lhs <= B(n)`` for every
witness here, so a strict violation of ``B(n)`` certifies a Schmidt number of
at least ``n + 1``.
"""
from dataclasses import dataclass
import enum
from typing import Optional

import numpy as np

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.correlations import CorrelationTensor
from channel_dimension_certifier.numerics import VIOLATION_RTOL


class WitnessKind(enum.Enum):
    FT_BAVARESCO = "ft_bavaresco"
    PT_STEERING = "pt_steering"
    FT_MORELLI = "ft_morelli"


def gamma_sum(c0: np.ndarray) -> float:
    """``sum sqrt(C[a', b'] C[a, b])`` over a != a', a != b, b != b', a' != b'
    with ``(a - a' - b + b') mod d == 0``.

    The constraint pairs entries on the same cyclic diagonal
    ``s = (a - b) mod d``, so the sum is ``(sum_a r)^2 - sum_a r^2`` per
    diagonal s != 0, where r are the square roots along that diagonal.
    """
    d = c0.shape[0]
    a = np.arange(d)
    s = np.arange(1, d)
    roots = np.sqrt(np.clip(c0[a[None, :], (a[None, :] - s[:, None]) % d], 0, None))
    return float(np.sum(roots.sum(axis=1) ** 2 - (roots ** 2).sum(axis=1)))


def ft_bavaresco_value(c: CorrelationTensor) -> float:
    """``sum_a (C[0,a,a] + d C[1,a,a]) - gamma_sum(C[0])``, bounded by ``d(n+1)``."""
    if c.num_bases < 2:
        raise exc.InvalidArgumentError(
            f"The two-basis fully trusted witness needs 2 bases, the tensor has {c.num_bases}."
        )
    sums = c.diagonal_sums()
    return float(sums[0] + c.dim * sums[1] - gamma_sum(c.values[0]))


def pt_steering_value(c: CorrelationTensor) -> float:
    if c.num_bases != 2:
        raise exc.InvalidArgumentError(
            f"The partially trusted witness is defined for exactly 2 bases, got {c.num_bases}."
        )
    return float(np.sum(c.diagonal_sums()))


def ft_morelli_value(c: CorrelationTensor, m: int) -> float:
    if m < 2:
        raise exc.InvalidArgumentError(f"The multi-basis witness needs m >= 2, got {m}.")
    if c.num_bases < m:
        raise exc.InvalidArgumentError(
            f"The multi-basis witness with m={m} needs {m} bases, the tensor has {c.num_bases}."
        )
    return float(np.sum(c.diagonal_sums()[:m]))


def witness_bound(kind: WitnessKind, d: int, n, m: Optional[int] = None):
    """Largest left-hand side reachable with Schmidt number n. ``n`` may be an array."""
    n = np.asarray(n, dtype=float)
    if kind is WitnessKind.FT_BAVARESCO:
        return d * (n + 1)
    if kind is WitnessKind.PT_STEERING:
        root_n = np.sqrt(n)
        return 2 * root_n * (d + np.sqrt(d)) / (root_n + 1)
    if kind is WitnessKind.FT_MORELLI:
        if m is None or m < 2:
            raise exc.InvalidArgumentError(f"The multi-basis bound needs m >= 2, got {m}.")
        return d + (m - 1) * n
    raise exc.InvalidArgumentError(f"Unknown witness {kind!r}.")


@dataclass(frozen=True)
class CertificationResult:
    kind: WitnessKind
    dim: int
    num_bases: int
    lhs: float
    certified_n: int

    def bound_at(self, n):
        return witness_bound(self.kind, self.dim, n, self.num_bases)


def is_violated(lhs: float, bound) -> np.ndarray:
    """Strict violation; values within ``VIOLATION_RTOL`` of the bound count as equal."""
    bound = np.asarray(bound, dtype=float)
    return lhs > bound + VIOLATION_RTOL * np.maximum(1.0, np.abs(bound))


def certify(
    c: CorrelationTensor, kind: WitnessKind, m: Optional[int] = None
) -> CertificationResult:
    """Evaluate a witness and report ``1 + max{n in [1, d-1]: lhs > B(n)}``.

    :param c: correlation tensor
    :type c: CorrelationTensor
    :param kind: which witness
    :type kind: WitnessKind
    :param m: number of bases for the multi-basis witness, all of the
        tensor's bases when omitted; the two-basis witnesses ignore it
    :type m: int or None
    :return: witness value and certified Schmidt number
    :rtype: CertificationResult
    """
    if kind is WitnessKind.FT_BAVARESCO:
        lhs, num_bases = ft_bavaresco_value(c), 2
    elif kind is WitnessKind.PT_STEERING:
        lhs, num_bases = pt_steering_value(c), 2
    elif kind is WitnessKind.FT_MORELLI:
        num_bases = c.num_bases if m is None else m
        lhs = ft_morelli_value(c, num_bases)
    else:
        raise exc.InvalidArgumentError(f"Unknown witness {kind!r}.")
    d = c.dim
    n = np.arange(1, d)
    violated = n[is_violated(lhs, witness_bound(kind, d, n, num_bases))]
    certified_n = int(violated.max()) + 1 if len(violated) else 1
    return CertificationResult(kind, d, num_bases, lhs, certified_n)
