"""Single-matrix approximations of an impure (multi-wavelength) channel and
the SVD basis used to prepare and measure states in a d-dimensional subspace.
"""
from dataclasses import dataclass
import enum
import os
import pathlib
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.fiber import Mstm
from channel_dimension_certifier.numerics import Rng, Svd, random_states, svd

PathLike = Union[str, os.PathLike]
ProbeSource = Union[Mstm, np.ndarray]

PROBE_COLUMNS = ["probe_in_id", "probe_out_id", "intensity"]
DIVERGENCE_PATIENCE = 10
_CHUNK = 2048


class TmMethod(enum.Enum):
    SPECTRAL_MEAN = "spectral_mean"
    INTENSITY_FIT = "intensity_fit"


@dataclass(frozen=True, eq=False)
class ProbeDataset:
    """Spectrally averaged intensities ``|<y|T|x>|^2`` for pairs of probe vectors.

    ``inputs`` and ``outputs`` hold one probe vector per row; ``pairs`` has
    one ``(probe_in_id, probe_out_id)`` row per entry of ``intensities``.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    pairs: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.outputs.ndim != 2:
            raise exc.InvalidArgumentError("Probe vectors must be stored one per row.")
        if self.inputs.shape[1] != self.outputs.shape[1]:
            raise exc.InvalidArgumentError(
                f"Input probes have length {self.inputs.shape[1]} but output probes have "
                f"length {self.outputs.shape[1]}."
            )
        if self.pairs.shape != (len(self.intensities), 2):
            raise exc.InvalidArgumentError("Need exactly one (in, out) pair per intensity.")
        if not np.all(np.isfinite(self.intensities)) or np.any(self.intensities < 0):
            raise exc.InvalidArgumentError("Intensities must be finite and non-negative.")
        if len(self.pairs) and (
            self.pairs.min() < 0
            or self.pairs[:, 0].max() >= len(self.inputs)
            or self.pairs[:, 1].max() >= len(self.outputs)
        ):
            raise exc.InvalidArgumentError("Probe pair refers to a probe that does not exist.")

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True, eq=False)
class ApproxTm:
    matrix: np.ndarray
    method: TmMethod
    svd: Svd
    residual: float = 0.0


def spectral_mean_tm(mstm: Mstm, reference_mode: Optional[int] = 0) -> ApproxTm:
    """Weighted mean of the transmission stack.

    Each wavelength's transmission matrix is first multiplied by the conjugate
    phase of its ``reference_mode`` entry (the fundamental mode by default),
    since a common phase per wavelength is not observable in intensities.
    ``reference_mode=None`` gives the plain weighted mean.

    :param mstm: multi-spectral transmission matrix
    :type mstm: Mstm
    :param reference_mode: mode whose phase is removed per wavelength, or None
    :type reference_mode: int or None
    :return: diagonal approximation with its (exact) SVD
    :rtype: ApproxTm
    """
    diagonals = mstm.diagonals
    if reference_mode is not None:
        if not 0 <= reference_mode < mstm.num_modes:
            raise exc.InvalidArgumentError(
                f"Reference mode {reference_mode} is outside the {mstm.num_modes} guided modes."
            )
        diagonals = diagonals * diagonals[:, reference_mode : reference_mode + 1].conj()
    mean = mstm.weights @ diagonals
    matrix = np.diag(mean)
    return ApproxTm(matrix=matrix, method=TmMethod.SPECTRAL_MEAN, svd=svd(matrix))


def _probe_intensities(source: ProbeSource, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if isinstance(source, Mstm):
        amplitudes = (y.conj() * x) @ source.diagonals.T
        return np.abs(amplitudes) ** 2 @ source.weights
    amplitudes = np.einsum("kj,kj->k", y.conj() @ source, x)
    return np.abs(amplitudes) ** 2


def _source_dim(source: ProbeSource) -> int:
    if isinstance(source, Mstm):
        return source.num_modes
    source = np.asarray(source)
    if source.ndim != 2 or source.shape[0] != source.shape[1]:
        raise exc.InvalidArgumentError(f"Expected a square matrix, got shape {source.shape}.")
    return source.shape[0]


def measure_probes(
    source: ProbeSource,
    inputs: np.ndarray,
    outputs: np.ndarray,
    pairs: Optional[np.ndarray] = None,
) -> ProbeDataset:
    """Weighted intensity ``sum_l w_l |<y|T(l)|x>|^2`` for every requested pair.

    ``source`` is either an :class:`Mstm` or a single dense transmission
    matrix. When ``pairs`` is None every input is paired with every output.
    """
    dim = _source_dim(source)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=complex))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=complex))
    if inputs.shape[1] != dim or outputs.shape[1] != dim:
        raise exc.InvalidArgumentError(
            f"Probe vectors must have length {dim}, got {inputs.shape[1]} and {outputs.shape[1]}."
        )
    if pairs is None:
        ii, oo = np.meshgrid(np.arange(len(inputs)), np.arange(len(outputs)), indexing="ij")
        pairs = np.column_stack([ii.ravel(), oo.ravel()])
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    intensities = np.empty(len(pairs))
    for start in range(0, len(pairs), _CHUNK):
        chunk = pairs[start : start + _CHUNK]
        intensities[start : start + len(chunk)] = _probe_intensities(
            source, inputs[chunk[:, 0]], outputs[chunk[:, 1]]
        )
    return ProbeDataset(inputs, outputs, pairs, intensities)


def simulate_probe_dataset(source: ProbeSource, num_probes: int, rng: Rng) -> ProbeDataset:
    """``num_probes`` Haar-random input and output vectors, paired one-to-one."""
    if num_probes < 1:
        raise exc.InvalidArgumentError(f"num_probes must be at least 1, got {num_probes}.")
    dim = _source_dim(source)
    inputs = random_states(num_probes, dim, rng)
    outputs = random_states(num_probes, dim, rng)
    pairs = np.column_stack([np.arange(num_probes), np.arange(num_probes)])
    return measure_probes(source, inputs, outputs, pairs)


def _fit_once(x, y_conj, y_t, target, scale, dim, iters, rng) -> Tuple[float, np.ndarray]:
    n2 = dim * dim
    last = {"params": None, "loss": np.inf}

    def loss_and_grad(params):
        t = (params[:n2] + 1j * params[n2:]).reshape(dim, dim)
        z = np.einsum("kj,kj->k", y_conj @ t, x)
        r = np.abs(z) ** 2 - target
        loss = float(r @ r) / scale
        # Wirtinger derivative dL/dT*; the real gradient is 2 Re / 2 Im of it
        g = ((y_t * (2 * r * z)) @ x.conj()) / scale
        last["params"], last["loss"] = params, loss
        return loss, np.concatenate([2 * g.real.ravel(), 2 * g.imag.ravel()])

    residuals = []

    def check_divergence(params):
        if last["params"] is not None and np.array_equal(params, last["params"]):
            loss = last["loss"]
        else:
            loss = loss_and_grad(params)[0]
        residuals.append(np.sqrt(loss))
        recent = residuals[-(DIVERGENCE_PATIENCE + 1) :]
        if len(recent) == DIVERGENCE_PATIENCE + 1 and all(np.diff(recent) > 0):
            raise exc.OptimizationFailureError(
                f"Intensity fit diverged: residual rose for {DIVERGENCE_PATIENCE} consecutive "
                f"iterations, last residual {residuals[-1]:.3e}.",
                residual=float(residuals[-1]),
            )

    start = (rng.standard_normal(2 * n2)) / np.sqrt(2 * dim)
    result = optimize.minimize(
        loss_and_grad,
        start,
        jac=True,
        method="L-BFGS-B",
        callback=check_divergence,
        options={"maxiter": iters, "maxcor": 20, "ftol": 1e-24, "gtol": 1e-14},
    )
    return float(result.fun), result.x


def intensity_fit_tm(
    dataset: ProbeDataset, dim: int, iters: int, rng: Rng, restarts: int = 1
) -> ApproxTm:
    """Fit a single matrix T to intensity data by minimising
    ``sum (I - |<y|T|x>|^2)^2`` with L-BFGS from Ginibre starting points.

    The intensities only fix T up to a global phase and the gauge of
    per-probe phases, so comparisons should use intensities or subspaces.

    :param dataset: measured or simulated probe intensities
    :type dataset: ProbeDataset
    :param dim: number of modes
    :type dim: int
    :param iters: maximum optimizer iterations per start
    :type iters: int
    :param rng: random generator for the starting points
    :type rng: numpy.random.Generator
    :param restarts: independent starts; the lowest residual wins
    :type restarts: int
    :return: fitted matrix, its SVD and the relative RMS residual
    :rtype: ApproxTm
    :raises OptimizationFailureError: if the residual keeps rising
    """
    if iters < 1:
        raise exc.InvalidArgumentError(f"iters must be at least 1, got {iters}.")
    if restarts < 1:
        raise exc.InvalidArgumentError(f"restarts must be at least 1, got {restarts}.")
    if dataset.dim != dim:
        raise exc.InvalidArgumentError(
            f"Dataset probes have length {dataset.dim}, expected {dim}."
        )
    x = dataset.inputs[dataset.pairs[:, 0]]
    y = dataset.outputs[dataset.pairs[:, 1]]
    target = dataset.intensities
    scale = max(float(target @ target), np.finfo(float).tiny)
    best_loss, best_params = np.inf, None
    for _ in range(restarts):
        loss, params = _fit_once(x, y.conj(), y.T, target, scale, dim, iters, rng)
        if loss < best_loss:
            best_loss, best_params = loss, params
    n2 = dim * dim
    matrix = (best_params[:n2] + 1j * best_params[n2:]).reshape(dim, dim)
    return ApproxTm(
        matrix=matrix,
        method=TmMethod.INTENSITY_FIT,
        svd=svd(matrix),
        residual=float(np.sqrt(best_loss)),
    )


def leading_subspace(approx: ApproxTm, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """First d right (input) and left (output) singular vectors."""
    available = len(approx.svd.singular_values)
    if not 1 <= d <= available:
        raise exc.InvalidArgumentError(
            f"Subspace dimension {d} must lie between 1 and the {available} available modes."
        )
    return approx.svd.v[:, :d], approx.svd.u[:, :d]


def _probes_path(path: PathLike) -> pathlib.Path:
    return pathlib.Path(path).with_suffix(".probes.npz")


def save_probe_dataset(dataset: ProbeDataset, path: PathLike) -> None:
    """CSV of intensities plus a ``.probes.npz`` file holding the probe vectors."""
    frame = pd.DataFrame(
        {
            "probe_in_id": dataset.pairs[:, 0],
            "probe_out_id": dataset.pairs[:, 1],
            "intensity": dataset.intensities,
        },
        columns=PROBE_COLUMNS,
    )
    frame.to_csv(path, index=False, float_format="%.17g")
    np.savez(_probes_path(path), inputs=dataset.inputs, outputs=dataset.outputs)


def load_probe_dataset(path: PathLike, probes_path: Optional[PathLike] = None) -> ProbeDataset:
    frame = pd.read_csv(path)
    if list(frame.columns) != PROBE_COLUMNS:
        raise exc.InvalidArgumentError(
            f"{path} must have columns {', '.join(PROBE_COLUMNS)}, got {', '.join(frame.columns)}."
        )
    with np.load(probes_path or _probes_path(path)) as probes:
        inputs, outputs = probes["inputs"], probes["outputs"]
    return ProbeDataset(
        inputs=inputs,
        outputs=outputs,
        pairs=frame[["probe_in_id", "probe_out_id"]].to_numpy(dtype=np.int64),
        intensities=frame["intensity"].to_numpy(dtype=float),
    )
