"""MUB correlation tensors ``C[x, a, b]`` = probability of outcome a in basis x
when state b of basis x was prepared, and the white-noise model on top of them.
"""
from dataclasses import dataclass
import enum
import os
from typing import Dict, Tuple, Union

import numpy as np
import pandas as pd

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.fiber import Mstm
from channel_dimension_certifier.mub import MubFamily
from channel_dimension_certifier.numerics import NORMALIZATION_TOL

PathLike = Union[str, os.PathLike]

CORRELATION_COLUMNS = ["x", "a", "b", "value"]


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """``values[x, a, b]``: non-negative, each column ``values[x, :, b]`` sums to 1."""

    values: np.ndarray

    def __post_init__(self):
        values = self.values
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise exc.InvalidArgumentError(
                f"Correlation values must have shape (m, d, d), got {values.shape}."
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise exc.InvalidArgumentError("Correlations must be finite and non-negative.")
        column_error = np.max(np.abs(values.sum(axis=1) - 1)) if values.size else 0.0
        if column_error > NORMALIZATION_TOL:
            raise exc.InvalidArgumentError(
                f"Correlation columns must sum to 1, worst deviation {column_error:.3e}."
            )

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def num_bases(self) -> int:
        return self.values.shape[0]

    def restrict(self, m: int) -> "CorrelationTensor":
        if not 1 <= m <= self.num_bases:
            raise exc.InvalidArgumentError(
                f"Cannot take {m} bases from a tensor with {self.num_bases}."
            )
        return CorrelationTensor(self.values[:m])

    def diagonal_sums(self) -> np.ndarray:
        """``sum_a C[x, a, a]`` for every basis x."""
        return np.trace(self.values, axis1=1, axis2=2)


def normalize_columns(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    sums = values.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise exc.NumericFailureError("A correlation column has no weight and cannot be normalised.")
    return values / sums


class NoiseKind(enum.Enum):
    NONE = "none"
    FIXED = "fixed"
    QUADRATIC = "quadratic"


# p(d) = a d^2 + b d + c for the noisy fiber simulations
QUADRATIC_NOISE_PRESETS: Dict[str, Tuple[float, float, float]] = {
    "paper-2m": (7.415e-6, -2.851e-3, 9.864e-1),
    "paper-5m": (6.167e-6, -2.549e-3, 8.769e-1),
}


@dataclass(frozen=True)
class NoiseModel:
    """White-noise mixing parameter p, either fixed or quadratic in d."""

    kind: NoiseKind = NoiseKind.NONE
    p: float = 1.0
    coefficients: Tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.kind is NoiseKind.FIXED and not 0 <= self.p <= 1:
            raise exc.InvalidArgumentError(f"Mixing parameter p must lie in [0, 1], got {self.p}.")

    @classmethod
    def fixed(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.FIXED, p=p)

    @classmethod
    def quadratic(cls, a: float, b: float, c: float) -> "NoiseModel":
        return cls(NoiseKind.QUADRATIC, coefficients=(a, b, c))

    @classmethod
    def preset(cls, name: str) -> "NoiseModel":
        try:
            return cls.quadratic(*QUADRATIC_NOISE_PRESETS[name])
        except KeyError:
            raise exc.InvalidArgumentError(
                f"Unknown noise preset {name!r}, expected one of "
                f"{', '.join(sorted(QUADRATIC_NOISE_PRESETS))}."
            )

    def p_at(self, d: int) -> float:
        if self.kind is NoiseKind.NONE:
            return 1.0
        if self.kind is NoiseKind.FIXED:
            return float(self.p)
        a, b, c = self.coefficients
        return float(np.clip(a * d ** 2 + b * d + c, 0.0, 1.0))


def spectral_correlations(
    diagonals: np.ndarray,
    weights: np.ndarray,
    bases: Tuple[np.ndarray, np.ndarray],
    mubs: MubFamily,
) -> CorrelationTensor:
    """Correlations of a diagonal transmission stack (one row of ``diagonals``
    per wavelength) restricted to the given input/output subspace.

    Wavelengths are accumulated in the order given.
    """
    input_basis, output_basis = bases
    d = mubs.dim
    if input_basis.shape[1] != d or output_basis.shape[1] != d:
        raise exc.InvalidArgumentError(
            f"Subspace bases have {input_basis.shape[1]} and {output_basis.shape[1]} columns "
            f"but the MUB family has dimension {d}."
        )
    if input_basis.shape[0] != diagonals.shape[1] or output_basis.shape[0] != diagonals.shape[1]:
        raise exc.InvalidArgumentError(
            f"Subspace bases must have {diagonals.shape[1]} rows, one per mode."
        )
    if len(weights) != len(diagonals):
        raise exc.InvalidArgumentError("Need exactly one weight per wavelength.")
    w = mubs.stacked()
    w_adj = w.conj().transpose(0, 2, 1)
    out_adj = output_basis.conj().T
    accumulated = np.zeros((mubs.num_bases, d, d))
    for weight, t in zip(weights, diagonals):
        reduced = (out_adj * t) @ input_basis
        accumulated += weight * np.abs(w_adj @ reduced @ w) ** 2
    return CorrelationTensor(normalize_columns(accumulated))


def mub_correlations(
    mstm: Mstm, bases: Tuple[np.ndarray, np.ndarray], mubs: MubFamily
) -> CorrelationTensor:
    """Spectrally averaged MUB correlations of the fiber in a d-dimensional
    subspace: average over wavelengths first, then normalise columns.

    :param mstm: the fiber's transmission stack
    :type mstm: Mstm
    :param bases: (input_basis, output_basis), each D x d
    :type bases: tuple
    :param mubs: bases to rotate the subspace into
    :type mubs: MubFamily
    :return: correlation tensor with ``mubs.num_bases`` bases
    :rtype: CorrelationTensor
    """
    return spectral_correlations(mstm.diagonals, mstm.weights, bases, mubs)


def apply_noise(c: CorrelationTensor, model: NoiseModel) -> CorrelationTensor:
    p = model.p_at(c.dim)
    return CorrelationTensor(p * c.values + (1 - p) / c.dim)


def perfect_tensor(d: int, m: int) -> CorrelationTensor:
    if d < 1 or m < 1:
        raise exc.InvalidArgumentError(f"Need d >= 1 and m >= 1, got d={d}, m={m}.")
    return CorrelationTensor(np.tile(np.eye(d), (m, 1, 1)))


def depolarized_tensor(d: int, m: int, p: float) -> CorrelationTensor:
    """``p * delta + (1 - p) / d`` in each of m bases."""
    return apply_noise(perfect_tensor(d, m), NoiseModel.fixed(p))


def write_correlations_csv(c: CorrelationTensor, path: PathLike) -> None:
    x, a, b = np.meshgrid(
        np.arange(c.num_bases), np.arange(c.dim), np.arange(c.dim), indexing="ij"
    )
    frame = pd.DataFrame(
        {"x": x.ravel(), "a": a.ravel(), "b": b.ravel(), "value": c.values.ravel()},
        columns=CORRELATION_COLUMNS,
    )
    frame.to_csv(path, index=False, float_format="%.17g")


def read_correlations_csv(path: PathLike, normalize: bool = False) -> CorrelationTensor:
    """Read a ``x, a, b, value`` table. Every (x, a, b) must appear exactly once.

    With ``normalize`` the columns are rescaled to sum to 1, which is how raw
    measured coincidence counts are ingested.
    """
    frame = pd.read_csv(path)
    if list(frame.columns) != CORRELATION_COLUMNS:
        raise exc.InvalidArgumentError(
            f"{path} must have columns {', '.join(CORRELATION_COLUMNS)}, "
            f"got {', '.join(map(str, frame.columns))}."
        )
    if frame.empty:
        raise exc.InvalidArgumentError(f"{path} holds no correlations.")
    index = frame[["x", "a", "b"]].to_numpy(dtype=np.int64)
    if index.min() < 0:
        raise exc.InvalidArgumentError(f"{path} has negative indices.")
    m = int(index[:, 0].max()) + 1
    d = int(index[:, 1:].max()) + 1
    if len(frame) != m * d * d or frame.duplicated(["x", "a", "b"]).any():
        raise exc.InvalidArgumentError(
            f"{path} must list each of the {m}x{d}x{d} entries exactly once, found {len(frame)} rows."
        )
    values = np.zeros((m, d, d))
    values[index[:, 0], index[:, 1], index[:, 2]] = frame["value"].to_numpy(dtype=float)
    if normalize:
        values = normalize_columns(values)
    return CorrelationTensor(values)
