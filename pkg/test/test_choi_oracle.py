import numpy as np
import pytest

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.choi_oracle import (
    KrausChannel,
    channel_correlations,
    choi_of,
    compose,
    depolarizing_channel,
    dress_channel,
    identity_channel,
    known_sn_channel,
    max_pt_value,
    mix_channels,
    noisy_channel,
    random_kraus_channel,
    run_oracle_checks,
    state_side_ft_value,
    state_side_morelli_value,
    unitary_channel,
)
from channel_dimension_certifier.correlations import NoiseModel, apply_noise
from channel_dimension_certifier.mub import fourier_pair, is_prime, prime_family
from channel_dimension_certifier.numerics import make_rng, random_unitary
from channel_dimension_certifier.witness import (
    WitnessKind,
    certify,
    ft_bavaresco_value,
    ft_morelli_value,
    witness_bound,
)


def test_identity_choi():
    choi = choi_of(identity_channel(2))
    eigenvalues = np.linalg.eigvalsh(choi.matrix)
    assert eigenvalues[-1] == pytest.approx(1)
    assert np.allclose(eigenvalues[:-1], 0, atol=1e-12)


def test_depolarizing_choi():
    choi = choi_of(depolarizing_channel(3))
    assert np.allclose(choi.matrix, np.eye(9) / 9)


def test_unitary_choi_is_maximally_entangled():
    d = 4
    choi = choi_of(unitary_channel(random_unitary(d, make_rng(8))))
    assert np.linalg.matrix_rank(choi.matrix, tol=1e-10) == 1
    # the pure state's reduced state is maximally mixed, so its Schmidt rank is d
    vector = np.linalg.eigh(choi.matrix)[1][:, -1].reshape(d, d)
    assert np.allclose(vector @ vector.conj().T, np.eye(d) / d)


def test_not_trace_preserving():
    with pytest.raises(exc.InvalidChannelError, match=r"not trace preserving"):
        KrausChannel((0.5 * np.eye(2),))
    with pytest.raises(exc.InvalidChannelError, match=r"must all be 2x2"):
        KrausChannel((np.eye(2), np.eye(3)))


def test_apply():
    channel = depolarizing_channel(3)
    rho = np.diag([1.0, 0, 0])
    assert np.allclose(channel.apply(rho), np.eye(3) / 3)


def test_identity_and_depolarizing_correlations():
    mubs = prime_family(5, 6)
    assert np.allclose(channel_correlations(identity_channel(5), mubs).values, np.eye(5))
    assert np.allclose(channel_correlations(depolarizing_channel(5), mubs).values, 1 / 5)


@pytest.mark.parametrize("p", [0.0, 0.35, 1.0])
def test_noisy_channel_matches_noise_model(p):
    mubs = prime_family(3, 4)
    ideal = unitary_channel(np.diag(np.exp(1j * np.array([0.1, 0.7, -2.0]))))
    expected = apply_noise(channel_correlations(ideal, mubs), NoiseModel.fixed(p))
    noisy = channel_correlations(noisy_channel(ideal, p), mubs)
    assert np.allclose(noisy.values, expected.values, rtol=0, atol=1e-12)


def test_mix_and_compose():
    rng = make_rng(4)
    u, v = random_unitary(3, rng), random_unitary(3, rng)
    composed = compose(unitary_channel(u), unitary_channel(v))
    rho = np.diag([0.5, 0.3, 0.2])
    assert np.allclose(composed.apply(rho), u @ v @ rho @ (u @ v).conj().T)
    mixed = mix_channels([identity_channel(3), depolarizing_channel(3)], [0.25, 0.75])
    assert np.allclose(mixed.apply(rho), 0.25 * rho + 0.75 * np.eye(3) / 3)
    with pytest.raises(exc.InvalidArgumentError, match=r"sum to 1"):
        mix_channels([identity_channel(3)], [0.5])


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_choi_equivalence(d):
    rng = make_rng(100 + d)
    mubs = fourier_pair(d)
    for _ in range(100):
        channel = random_kraus_channel(d, 2, rng)
        channel_side = ft_bavaresco_value(channel_correlations(channel, mubs))
        state_side = state_side_ft_value(choi_of(channel), mubs)
        assert abs(channel_side - state_side) <= 1e-9


@pytest.mark.parametrize("channel", [identity_channel(3), depolarizing_channel(4)])
def test_choi_equivalence_fixed_channels(channel):
    mubs = fourier_pair(channel.dim)
    assert state_side_ft_value(choi_of(channel), mubs) == pytest.approx(
        ft_bavaresco_value(channel_correlations(channel, mubs)), abs=1e-9
    )


@pytest.mark.parametrize("d", [2, 3, 5])
def test_multi_basis_equivalence(d):
    rng = make_rng(d)
    mubs = prime_family(d, d + 1)
    for _ in range(20):
        channel = random_kraus_channel(d, 2, rng)
        for m in range(2, d + 2):
            assert state_side_morelli_value(choi_of(channel), mubs, m) == pytest.approx(
                ft_morelli_value(channel_correlations(channel, mubs), m), abs=1e-9
            )


def test_known_sn_channel():
    assert len(known_sn_channel(4, 4).kraus) == 1
    assert np.array_equal(known_sn_channel(4, 4).kraus[0], np.eye(4))
    for k in (1, 2, 3):
        assert max(np.linalg.matrix_rank(op) for op in known_sn_channel(5, k).kraus) == k
    with pytest.raises(exc.InvalidArgumentError, match=r"1 <= k <= d=3, got 4"):
        known_sn_channel(3, 4)


def test_known_sn_channel_is_certified():
    c = channel_correlations(known_sn_channel(4, 2), fourier_pair(4))
    assert certify(c, WitnessKind.FT_BAVARESCO).certified_n == 2
    assert certify(c, WitnessKind.FT_MORELLI).certified_n == 2
    assert certify(c, WitnessKind.PT_STEERING).certified_n <= 2


def test_entanglement_breaking_channel():
    for d in (2, 3, 5):
        channel = known_sn_channel(d, 1)
        families = [fourier_pair(d), prime_family(d, d + 1)]
        for mubs in families:
            c = channel_correlations(channel, mubs)
            assert certify(c, WitnessKind.FT_MORELLI).certified_n == 1
        c = channel_correlations(channel, fourier_pair(d))
        assert certify(c, WitnessKind.FT_BAVARESCO).certified_n == 1
        assert certify(c, WitnessKind.PT_STEERING).certified_n == 1


def test_soundness():
    rng = make_rng(2024)
    dressings = 0
    for d in range(2, 7):
        families = [(fourier_pair(d), 2)]
        if is_prime(d):
            families.append((prime_family(d, 3), 3))
            families.append((prime_family(d, d + 1), d + 1))
        for k in range(1, d + 1):
            for _ in range(25):
                channel = dress_channel(known_sn_channel(d, k), rng)
                dressings += 1
                for mubs, m in families:
                    c = channel_correlations(channel, mubs)
                    assert certify(c, WitnessKind.FT_MORELLI, m).certified_n <= k
                    if m == 2:
                        assert certify(c, WitnessKind.FT_BAVARESCO).certified_n <= k
                        assert certify(c, WitnessKind.PT_STEERING).certified_n <= k
    assert dressings == 500


def test_pt_search_respects_bound():
    rng = make_rng(5)
    for d in (2, 3):
        mubs = fourier_pair(d)
        for k in range(1, d + 1):
            bound = float(witness_bound(WitnessKind.PT_STEERING, d, k))
            for channel in (known_sn_channel(d, k), dress_channel(known_sn_channel(d, k), rng)):
                assert max_pt_value(channel, mubs, 200, rng) <= bound * (1 + 1e-9)


def test_pt_search_finds_identity_value():
    assert max_pt_value(identity_channel(3), fourier_pair(3), 20, make_rng(0)) == pytest.approx(6)


def test_oracle_battery():
    checks = run_oracle_checks(seed=1, trials=3)
    names = [check.name for check in checks]
    assert "choi_equivalence d=5" in names
    assert "soundness d=6 k=3" in names
    assert "pt_bound d=3 k=2" in names
    failed = [check for check in checks if not check.passed]
    assert failed == []
