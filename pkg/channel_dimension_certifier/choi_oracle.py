"""Brute-force checks of the channel witnesses on explicit Kraus channels.

Everything here works with dense d^2 x d^2 Choi matrices, so it is meant for
small d (up to about 6).
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.correlations import CorrelationTensor, NoiseModel, apply_noise
from channel_dimension_certifier.mub import MubFamily, fourier_pair, prime_family, is_prime
from channel_dimension_certifier.numerics import (
    TRACE_TOL,
    VIOLATION_RTOL,
    Rng,
    adjoint,
    make_rng,
    random_unitary,
)
from channel_dimension_certifier.witness import (
    WitnessKind,
    certify,
    ft_bavaresco_value,
    ft_morelli_value,
    gamma_sum,
    witness_bound,
)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.kraus:
            raise exc.InvalidChannelError("A channel needs at least one Kraus operator.")
        d = self.kraus[0].shape[0]
        for k in self.kraus:
            if k.shape != (d, d):
                raise exc.InvalidChannelError(
                    f"Kraus operators must all be {d}x{d}, got {k.shape}."
                )
        stack = self.stacked()
        completeness = np.einsum("kji,kjl->il", stack.conj(), stack)
        error = float(np.max(np.abs(completeness - np.eye(d))))
        if error > TRACE_TOL:
            raise exc.InvalidChannelError(
                f"Kraus operators are not trace preserving: |sum K^H K - 1| = {error:.3e}."
            )

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def stacked(self) -> np.ndarray:
        return np.stack(self.kraus)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        stack = self.stacked()
        return np.sum(stack @ rho @ stack.conj().transpose(0, 2, 1), axis=0)


@dataclass(frozen=True, eq=False)
class ChoiState:
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape != (self.dim ** 2, self.dim ** 2):
            raise exc.InvalidArgumentError(
                f"A Choi state of dimension {self.dim} is {self.dim ** 2}x{self.dim ** 2}, "
                f"got {self.matrix.shape}."
            )
        if np.max(np.abs(self.matrix - adjoint(self.matrix))) > TRACE_TOL:
            raise exc.InvalidArgumentError("Choi state is not Hermitian.")
        if abs(np.trace(self.matrix) - 1) > TRACE_TOL:
            raise exc.InvalidArgumentError("Choi state does not have unit trace.")
        if np.min(np.linalg.eigvalsh(self.matrix)) < -TRACE_TOL:
            raise exc.InvalidArgumentError("Choi state is not positive semidefinite.")

    def product_expectations(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """``<u_a v_b| rho |u_a v_b>`` for every column a of u and b of v."""
        d = self.dim
        rho = self.matrix.reshape(d, d, d, d)
        values = np.einsum("ia,jb,ijkl,ka,lb->ab", u.conj(), v.conj(), rho, u, v)
        return values.real


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d, dtype=complex),))


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),))


def depolarizing_channel(d: int) -> KrausChannel:
    """Completely depolarizing channel, Kraus operators ``|i><j| / sqrt(d)``."""
    ops = []
    for i in range(d):
        for j in range(d):
            k = np.zeros((d, d), dtype=complex)
            k[i, j] = 1 / np.sqrt(d)
            ops.append(k)
    return KrausChannel(tuple(ops))


def mix_channels(channels: Sequence[KrausChannel], probabilities: Sequence[float]) -> KrausChannel:
    if len(channels) != len(probabilities) or not channels:
        raise exc.InvalidArgumentError("Need one probability per channel.")
    probabilities = np.asarray(probabilities, dtype=float)
    if np.any(probabilities < 0) or abs(probabilities.sum() - 1) > TRACE_TOL:
        raise exc.InvalidArgumentError("Mixing probabilities must be non-negative and sum to 1.")
    if len({channel.dim for channel in channels}) != 1:
        raise exc.InvalidArgumentError("Only channels of equal dimension can be mixed.")
    ops = []
    for channel, p in zip(channels, probabilities):
        if p > 0:
            ops.extend(np.sqrt(p) * k for k in channel.kraus)
    return KrausChannel(tuple(ops))


def noisy_channel(ideal: KrausChannel, p: float) -> KrausChannel:
    """``p * ideal + (1 - p) * depolarizing``."""
    if not 0 <= p <= 1:
        raise exc.InvalidArgumentError(f"Mixing parameter p must lie in [0, 1], got {p}.")
    return mix_channels([ideal, depolarizing_channel(ideal.dim)], [p, 1 - p])


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """The channel that applies ``inner`` first, then ``outer``."""
    if outer.dim != inner.dim:
        raise exc.InvalidArgumentError("Only channels of equal dimension can be composed.")
    return KrausChannel(tuple(a @ b for a in outer.kraus for b in inner.kraus))


def random_kraus_channel(d: int, num_kraus: int, rng: Rng) -> KrausChannel:
    """Kraus operators are the d x d blocks of the first d columns of a Haar unitary."""
    if num_kraus < 1:
        raise exc.InvalidArgumentError(f"num_kraus must be at least 1, got {num_kraus}.")
    isometry = random_unitary(num_kraus * d, rng)[:, :d]
    return KrausChannel(tuple(isometry[k * d : (k + 1) * d] for k in range(num_kraus)))


def choi_of(channel: KrausChannel) -> ChoiState:
    """``(channel x id)|psi+><psi+|`` with ``|psi+> = sum_i |ii> / sqrt(d)``."""
    d = channel.dim
    # (K x 1)|psi+> is K flattened row-major, divided by sqrt(d)
    vectors = channel.stacked().reshape(len(channel.kraus), d * d)
    matrix = vectors.T @ vectors.conj() / d
    return ChoiState(d, matrix)


def channel_correlations(channel: KrausChannel, mubs: MubFamily) -> CorrelationTensor:
    """Exact ``C[x, a, b] = <e_a|channel(|e_b><e_b|)|e_a>`` in every basis x."""
    if mubs.dim != channel.dim:
        raise exc.InvalidArgumentError(
            f"MUB dimension {mubs.dim} does not match channel dimension {channel.dim}."
        )
    w = mubs.stacked()
    w_adj = w.conj().transpose(0, 2, 1)
    values = np.zeros((mubs.num_bases, mubs.dim, mubs.dim))
    for k in channel.kraus:
        values += np.abs(w_adj @ k @ w) ** 2
    return CorrelationTensor(values)


def state_side_ft_value(choi: ChoiState, mubs: MubFamily) -> float:
    """Two-basis fully trusted witness evaluated on the Choi state.

    The second party is measured in the conjugate basis, which for the
    maximally entangled reference makes ``<e_a e_b*|rho|e_a e_b*> = C[a, b] / d``.
    The result is multiplied by d so it shares the channel bound ``d(n+1)``.
    """
    d = choi.dim
    if mubs.dim != d or mubs.num_bases < 2:
        raise exc.InvalidArgumentError("Need a MUB family of the Choi state's dimension with 2 bases.")
    eye = mubs.matrices[0]
    computational = choi.product_expectations(eye, eye.conj())
    second = mubs.matrices[1]
    rotated = choi.product_expectations(second, second.conj())
    return d * (
        np.trace(computational) + d * np.trace(rotated) - gamma_sum(computational)
    )


def state_side_morelli_value(choi: ChoiState, mubs: MubFamily, m: int) -> float:
    """Multi-basis fully trusted witness on the Choi state, scaled by d."""
    if mubs.dim != choi.dim or not 2 <= m <= mubs.num_bases:
        raise exc.InvalidArgumentError(
            f"Need a MUB family of dimension {choi.dim} with at least m={m} bases."
        )
    total = 0.0
    for w in mubs.matrices[:m]:
        total += np.trace(choi.product_expectations(w, w.conj()))
    return float(choi.dim * total)


def known_sn_channel(d: int, k: int) -> KrausChannel:
    """Channel with Schmidt number exactly k: coherent on the first k levels,
    fully dephasing on the rest."""
    if not 1 <= k <= d:
        raise exc.InvalidArgumentError(f"Schmidt number k must satisfy 1 <= k <= d={d}, got {k}.")
    projector = np.diag([1.0 + 0j] * k + [0j] * (d - k))
    ops = [projector]
    for j in range(k, d):
        dephase = np.zeros((d, d), dtype=complex)
        dephase[j, j] = 1
        ops.append(dephase)
    return KrausChannel(tuple(ops))


def dress_channel(channel: KrausChannel, rng: Rng) -> KrausChannel:
    """Random local unitaries before and after, then a random amount of white noise."""
    d = channel.dim
    before = unitary_channel(random_unitary(d, rng))
    after = unitary_channel(random_unitary(d, rng))
    p = float(rng.uniform())
    return noisy_channel(compose(after, compose(channel, before)), p)


def _best_measurement(outputs: np.ndarray, start: np.ndarray, trials: int, rng: Rng) -> float:
    def score(basis):
        return float(np.einsum("ia,aij,ja->", basis.conj(), outputs, basis).real)

    d = start.shape[0]
    current, best = start, score(start)
    step = 0.5
    for _ in range(trials):
        h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        candidate = current @ scipy.linalg.expm(0.5j * step * (h + adjoint(h)))
        value = score(candidate)
        if value > best:
            current, best = candidate, value
        else:
            step = max(step * 0.95, 1e-3)
    return best


def max_pt_value(channel: KrausChannel, mubs: MubFamily, trials: int, rng: Rng) -> float:
    """Largest partially trusted left-hand side found by a random search over
    rank-1 projective measurements, preparing the first two MUBs.

    Outcome a is scored against preparation a. The two bases are searched
    independently since the witness separates over them.
    """
    if mubs.dim != channel.dim:
        raise exc.InvalidArgumentError(
            f"MUB dimension {mubs.dim} does not match channel dimension {channel.dim}."
        )
    total = 0.0
    for w in mubs.matrices[:2]:
        outputs = np.stack([channel.apply(np.outer(w[:, b], w[:, b].conj())) for b in range(mubs.dim)])
        total += _best_measurement(outputs, w, trials, rng)
    return total


@dataclass(frozen=True)
class OracleCheck:
    name: str
    passed: bool
    detail: str


def _oracle_families(d: int) -> List[Tuple[MubFamily, int]]:
    families = [(fourier_pair(d), 2)]
    if is_prime(d):
        families.append((prime_family(d, d + 1), d + 1))
    return families


def check_equivalence(d: int, trials: int, rng: Rng) -> OracleCheck:
    mubs = fourier_pair(d)
    worst = 0.0
    for _ in range(trials):
        channel = random_kraus_channel(d, 2, rng)
        channel_side = ft_bavaresco_value(channel_correlations(channel, mubs))
        state_side = state_side_ft_value(choi_of(channel), mubs)
        worst = max(worst, abs(channel_side - state_side))
    return OracleCheck(
        f"choi_equivalence d={d}", worst <= 1e-9, f"max deviation {worst:.2e} over {trials} channels"
    )


def check_soundness(d: int, k: int, trials: int, rng: Rng) -> OracleCheck:
    worst = 0
    for _ in range(trials):
        channel = dress_channel(known_sn_channel(d, k), rng)
        for mubs, m in _oracle_families(d):
            c = channel_correlations(channel, mubs)
            worst = max(worst, certify(c, WitnessKind.FT_MORELLI, m).certified_n)
            if m == 2:
                worst = max(worst, certify(c, WitnessKind.FT_BAVARESCO).certified_n)
                worst = max(worst, certify(c, WitnessKind.PT_STEERING).certified_n)
    return OracleCheck(
        f"soundness d={d} k={k}", worst <= k, f"highest certified {worst} over {trials} dressings"
    )


def check_pt_bound(d: int, k: int, trials: int, rng: Rng) -> OracleCheck:
    mubs = fourier_pair(d)
    found = max_pt_value(dress_channel(known_sn_channel(d, k), rng), mubs, trials, rng)
    bound = float(witness_bound(WitnessKind.PT_STEERING, d, k))
    return OracleCheck(
        f"pt_bound d={d} k={k}",
        found <= bound * (1 + VIOLATION_RTOL),
        f"best value {found:.6f}, bound {bound:.6f}",
    )


def check_noise_consistency(d: int, p: float) -> OracleCheck:
    """The noisy channel's correlations equal the white-noise model on the tensor."""
    mubs = fourier_pair(d)
    ideal = channel_correlations(identity_channel(d), mubs)
    noisy = channel_correlations(noisy_channel(identity_channel(d), p), mubs)
    expected = apply_noise(ideal, NoiseModel.fixed(p))
    worst = float(np.max(np.abs(noisy.values - expected.values)))
    return OracleCheck(f"noise_model d={d}", worst <= 1e-12, f"max deviation {worst:.2e}")


def check_state_side_morelli(d: int, trials: int, rng: Rng) -> OracleCheck:
    worst = 0.0
    for _ in range(trials):
        channel = random_kraus_channel(d, 2, rng)
        for mubs, m in _oracle_families(d):
            channel_side = ft_morelli_value(channel_correlations(channel, mubs), m)
            state_side = state_side_morelli_value(choi_of(channel), mubs, m)
            worst = max(worst, abs(channel_side - state_side))
    return OracleCheck(
        f"morelli_equivalence d={d}", worst <= 1e-9, f"max deviation {worst:.2e}"
    )


def run_oracle_checks(seed: int, trials: int = 20) -> List[OracleCheck]:
    """The full validation battery on d = 2..6, deterministic for a seed."""
    rng = make_rng(seed)
    checks = []
    for d in range(2, 6):
        checks.append(check_equivalence(d, trials, rng))
        checks.append(check_state_side_morelli(d, trials, rng))
        checks.append(check_noise_consistency(d, 0.3))
    for d in range(2, 7):
        for k in range(1, d + 1):
            checks.append(check_soundness(d, k, trials, rng))
    for d in (2, 3):
        for k in range(1, d + 1):
            checks.append(check_pt_bound(d, k, trials, rng))
    return checks
