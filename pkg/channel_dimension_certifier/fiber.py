"""Idealised graded-index multi-mode fiber as a multi-spectral transmission
matrix (MSTM): one diagonal unitary per wavelength in the eigenmode basis.
"""
from dataclasses import dataclass
import functools
import os
import struct
from typing import List, Tuple, Union

import numpy as np
from scipy.special import gamma

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.numerics import WEIGHT_SUM_TOL

PathLike = Union[str, os.PathLike]

MSTM_MAGIC = b"MSTM\x00\x01\x00\x00"


@dataclass(frozen=True)
class FiberSpec:
    length_m: float = 2.0
    core_radius_m: float = 25e-6
    n_core: float = 1.444
    numerical_aperture: float = 0.22
    alpha: float = 2.0
    center_wavelength_m: float = 810e-9
    bandwidth_m: float = 3e-9
    num_wavelengths: int = 201
    sigma_m: float = 0.75e-9

    def __post_init__(self):
        for name in (
            "length_m",
            "core_radius_m",
            "n_core",
            "numerical_aperture",
            "alpha",
            "center_wavelength_m",
            "sigma_m",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise exc.InvalidArgumentError(f"FiberSpec.{name} must be positive, got {value}.")
        if self.numerical_aperture >= self.n_core:
            raise exc.InvalidArgumentError(
                f"Numerical aperture {self.numerical_aperture} must be below the core index "
                f"{self.n_core}."
            )
        if self.num_wavelengths < 1 or self.num_wavelengths % 2 == 0:
            raise exc.InvalidArgumentError(
                f"num_wavelengths must be odd so the center wavelength is on the grid, "
                f"got {self.num_wavelengths}."
            )
        if self.bandwidth_m < 0 or (self.num_wavelengths > 1 and self.bandwidth_m == 0):
            raise exc.InvalidArgumentError(
                f"bandwidth_m must be positive for {self.num_wavelengths} wavelengths, "
                f"got {self.bandwidth_m}."
            )
        if self.bandwidth_m / 2 >= self.center_wavelength_m:
            raise exc.InvalidArgumentError("The wavelength band must stay above zero.")

    @property
    def n_cladding(self) -> float:
        return float(np.sqrt(self.n_core ** 2 - self.numerical_aperture ** 2))

    @property
    def delta(self) -> float:
        return (self.n_core ** 2 - self.n_cladding ** 2) / (2 * self.n_core ** 2)

    def wavenumber(self, wavelength_m):
        return 2 * np.pi / wavelength_m

    def v_number(self, wavelength_m):
        return (
            self.wavenumber(wavelength_m)
            * self.core_radius_m
            * self.n_core
            * np.sqrt(2 * self.delta)
        )

    def wavelength_grid(self) -> np.ndarray:
        """Uniform grid center +- bandwidth/2, endpoints included, exactly symmetric."""
        if self.num_wavelengths == 1:
            return np.array([self.center_wavelength_m])
        step = self.bandwidth_m / (self.num_wavelengths - 1)
        offsets = (np.arange(self.num_wavelengths) - (self.num_wavelengths - 1) // 2) * step
        return self.center_wavelength_m + offsets

    def spectral_weights(self) -> np.ndarray:
        offsets = self.wavelength_grid() - self.center_wavelength_m
        weights = np.exp(-(offsets ** 2) / (2 * self.sigma_m ** 2))
        return weights / weights.sum()


# NA = 0.22 gives V ~ 42.7 at 810 nm and 231 guided modes, more than the
# ~190-200 quoted for the measured fibers (datasheet NA 0.200).
FIBER_PRESETS = {
    "paper-2m": FiberSpec(length_m=2.0),
    "paper-5m": FiberSpec(length_m=5.0),
}


@dataclass(frozen=True)
class ModeIndex:
    m: int
    n: int

    @property
    def group(self) -> int:
        return self.m + self.n + 1


def _group_parameter(groups, wavelength_m, spec: FiberSpec):
    inv_alpha = 1 / spec.alpha
    v = spec.v_number(wavelength_m)
    inner = (
        gamma(inv_alpha + 0.5)
        * (spec.alpha + 2)
        * groups
        * np.sqrt(np.pi)
        * v ** (2 * inv_alpha)
        / (2 * gamma(inv_alpha))
    )
    return inner ** (2 * spec.alpha / (spec.alpha + 2))


def mode_group_parameter(group: int, wavelength_m: float, spec: FiberSpec) -> float:
    """The dimensionless B~ of a mode group, so that beta = sqrt((n1 k r)^2 - B~) / r.

    For a parabolic core (alpha = 2) this reduces to ``2 * group * V``.
    """
    return float(_group_parameter(group, wavelength_m, spec))


def _is_guided(b_tilde, wavelength_m, spec: FiberSpec):
    # beta > n2 k  <=>  B~ < V^2
    return b_tilde < spec.v_number(wavelength_m) ** 2


def propagation_constant(mode: ModeIndex, wavelength_m: float, spec: FiberSpec) -> float:
    """Propagation constant beta (1/m) of ``mode`` at ``wavelength_m``.

    :raises UnguidedModeError: if the mode is beyond cutoff at this wavelength
    """
    b_tilde = mode_group_parameter(mode.group, wavelength_m, spec)
    if not _is_guided(b_tilde, wavelength_m, spec):
        raise exc.UnguidedModeError(
            f"Mode ({mode.m}, {mode.n}) of group {mode.group} is not guided at "
            f"{wavelength_m * 1e9:.4f} nm."
        )
    core = (spec.n_core * spec.wavenumber(wavelength_m) * spec.core_radius_m) ** 2
    return float(np.sqrt(core - b_tilde) / spec.core_radius_m)


def enumerate_modes(spec: FiberSpec) -> List[ModeIndex]:
    """Guided modes at the center wavelength, ordered by group then by m."""
    modes = []
    group = 1
    while _is_guided(mode_group_parameter(group, spec.center_wavelength_m, spec),
                     spec.center_wavelength_m, spec):
        modes.extend(ModeIndex(m, group - 1 - m) for m in range(group))
        group += 1
    return modes


@dataclass(frozen=True, eq=False)
class Mstm:
    spec: FiberSpec
    wavelengths: np.ndarray
    weights: np.ndarray
    diagonals: np.ndarray
    modes: Tuple[ModeIndex, ...]

    def __post_init__(self):
        n, d = self.diagonals.shape
        if len(self.wavelengths) != n or len(self.weights) != n or len(self.modes) != d:
            raise exc.InvalidArgumentError("MSTM wavelength, weight and mode counts disagree.")
        if abs(float(np.sum(self.weights)) - 1) > WEIGHT_SUM_TOL or np.any(self.weights < 0):
            raise exc.InvalidArgumentError("MSTM weights must be non-negative and sum to 1.")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise exc.InvalidArgumentError("MSTM wavelengths must be strictly ascending.")
        if np.any(np.abs(np.abs(self.diagonals) - 1) > 1e-12):
            raise exc.InvalidArgumentError("MSTM entries must have unit modulus.")

    @property
    def num_wavelengths(self) -> int:
        return self.diagonals.shape[0]

    @property
    def num_modes(self) -> int:
        return self.diagonals.shape[1]

    @property
    def matrices(self) -> np.ndarray:
        """Dense stack of shape (N, D, D)."""
        n, d = self.diagonals.shape
        stack = np.zeros((n, d, d), dtype=complex)
        idx = np.arange(d)
        stack[:, idx, idx] = self.diagonals
        return stack


def build_mstm(spec: FiberSpec) -> Mstm:
    """Build the MSTM of an idealised fiber: T(lambda) = diag(exp(-i beta L)).

    :param spec: fiber and source parameters
    :type spec: FiberSpec
    :return: the wavelength-indexed transmission stack with Gaussian weights
    :rtype: Mstm
    """
    modes = enumerate_modes(spec)
    wavelengths = spec.wavelength_grid()
    groups = np.array([mode.group for mode in modes], dtype=float)
    lam = wavelengths[:, None]
    b_tilde = _group_parameter(groups[None, :], lam, spec)
    guided = _is_guided(b_tilde, lam, spec)
    if not np.all(guided):
        i, j = np.argwhere(~guided)[0]
        raise exc.UnguidedModeError(
            f"Mode ({modes[j].m}, {modes[j].n}) guided at the center wavelength is not "
            f"guided at {wavelengths[i] * 1e9:.4f} nm."
        )
    core = (spec.n_core * spec.wavenumber(lam) * spec.core_radius_m) ** 2
    beta = np.sqrt(core - b_tilde) / spec.core_radius_m
    diagonals = np.exp(-1j * beta * spec.length_m)
    return Mstm(
        spec=spec,
        wavelengths=wavelengths,
        weights=spec.spectral_weights(),
        diagonals=diagonals.reshape(len(wavelengths), len(modes)),
        modes=tuple(modes),
    )


@functools.lru_cache(maxsize=8)
def cached_mstm(spec: FiberSpec) -> Mstm:
    return build_mstm(spec)


def save_mstm(mstm: Mstm, path: PathLike) -> None:
    """Write the MSTM as a little-endian binary blob.

    Layout: 8-byte magic, uint32 N, uint32 D, N float64 wavelengths,
    N float64 weights, D pairs of int32 (m, n), N*D complex64 diagonal entries
    (row-major by wavelength).
    """
    n, d = mstm.diagonals.shape
    with open(path, "wb") as f:
        f.write(MSTM_MAGIC)
        f.write(struct.pack("<II", n, d))
        f.write(np.asarray(mstm.wavelengths, dtype="<f8").tobytes())
        f.write(np.asarray(mstm.weights, dtype="<f8").tobytes())
        f.write(np.array([(mode.m, mode.n) for mode in mstm.modes], dtype="<i4").reshape(d, 2).tobytes())
        f.write(np.asarray(mstm.diagonals, dtype="<c8").tobytes())


def load_mstm(path: PathLike, spec: FiberSpec) -> Mstm:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[: len(MSTM_MAGIC)] != MSTM_MAGIC:
        raise exc.InvalidArgumentError(f"{path} is not an MSTM file.")
    offset = len(MSTM_MAGIC)

    def take(dtype, count):
        nonlocal offset
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
        offset += arr.nbytes
        return arr

    try:
        n, d = struct.unpack_from("<II", blob, offset)
        offset += 8
        wavelengths = take("<f8", n).astype(float)
        weights = take("<f8", n).astype(float)
        pairs = take("<i4", 2 * d).reshape(d, 2)
        diagonals = take("<c8", n * d).astype(complex).reshape(n, d)
    except (struct.error, ValueError) as err:
        raise exc.InvalidArgumentError(f"{path} is a truncated MSTM file: {err}") from err
    if offset != len(blob):
        raise exc.InvalidArgumentError(f"{path} has {len(blob) - offset} trailing bytes.")
    return Mstm(
        spec=spec,
        wavelengths=wavelengths,
        weights=weights,
        # single precision storage; restore unit modulus
        diagonals=diagonals / np.abs(diagonals),
        modes=tuple(ModeIndex(int(m), int(k)) for m, k in pairs),
    )
