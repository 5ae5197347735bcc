import pathlib
import tempfile

import numpy as np
import pytest

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.correlations import (
    CorrelationTensor,
    NoiseKind,
    NoiseModel,
    apply_noise,
    depolarized_tensor,
    mub_correlations,
    perfect_tensor,
    read_correlations_csv,
    spectral_correlations,
    write_correlations_csv,
)
from channel_dimension_certifier.fiber import FIBER_PRESETS, FiberSpec, build_mstm
from channel_dimension_certifier.mub import fourier_pair, prime_family
from channel_dimension_certifier.numerics import make_rng
from channel_dimension_certifier.tm_estimation import leading_subspace, spectral_mean_tm


def fiber_correlations(spec, d, mubs):
    mstm = build_mstm(spec)
    return mub_correlations(mstm, leading_subspace(spectral_mean_tm(mstm), d), mubs)


@pytest.mark.parametrize("d", [2, 5, 13])
def test_monochromatic_fiber_is_perfect(d):
    c = fiber_correlations(FiberSpec(num_wavelengths=1), d, prime_family(d, d + 1))
    assert c.num_bases == d + 1
    assert np.allclose(c.values, np.eye(d), atol=1e-12)
    assert np.allclose(c.diagonal_sums(), d)


def test_preset_fiber_columns_normalised():
    c = fiber_correlations(FIBER_PRESETS["paper-5m"], 13, prime_family(13, 5))
    assert np.allclose(c.values.sum(axis=1), 1, atol=1e-9)
    assert np.all(c.values >= 0)
    # basis 0 stays sharp, the rotated bases pick up the intermodal dephasing
    sums = c.diagonal_sums()
    assert sums[0] == pytest.approx(13)
    assert np.all(sums[1:] < 13)
    assert np.all(sums[1:] > 13 / 2)


def test_preset_fiber_diagonal_dominant():
    c = fiber_correlations(FIBER_PRESETS["paper-2m"], 29, fourier_pair(29))
    values = c.values[1]
    assert np.all(np.diag(values) > values.max(axis=0) - 1e-12)


def test_wavelength_order_does_not_matter():
    mstm = build_mstm(FiberSpec(num_wavelengths=21, core_radius_m=10e-6))
    bases = leading_subspace(spectral_mean_tm(mstm), 7)
    mubs = prime_family(7, 4)
    order = make_rng(9).permutation(mstm.num_wavelengths)
    forward = spectral_correlations(mstm.diagonals, mstm.weights, bases, mubs)
    shuffled = spectral_correlations(mstm.diagonals[order], mstm.weights[order], bases, mubs)
    assert np.allclose(forward.values, shuffled.values, rtol=0, atol=1e-9)


def test_subspace_dimension_mismatch():
    mstm = build_mstm(FiberSpec(num_wavelengths=1))
    bases = leading_subspace(spectral_mean_tm(mstm), 4)
    with pytest.raises(exc.InvalidArgumentError, match=r"MUB family has dimension 5"):
        mub_correlations(mstm, bases, fourier_pair(5))


def test_tensor_validation():
    with pytest.raises(exc.InvalidArgumentError, match=r"finite and non-negative"):
        CorrelationTensor(np.array([[[1.5, 0.0], [-0.5, 1.0]]]))
    with pytest.raises(exc.InvalidArgumentError, match=r"columns must sum to 1"):
        CorrelationTensor(np.full((1, 2, 2), 0.4))
    with pytest.raises(exc.InvalidArgumentError, match=r"shape \(m, d, d\)"):
        CorrelationTensor(np.ones((2, 2)))


def test_restrict():
    c = perfect_tensor(3, 4)
    assert c.restrict(2).num_bases == 2
    with pytest.raises(exc.InvalidArgumentError, match=r"Cannot take 5 bases"):
        c.restrict(5)


def test_noise_extremes():
    c = fiber_correlations(FIBER_PRESETS["paper-2m"], 8, fourier_pair(8))
    assert np.array_equal(apply_noise(c, NoiseModel.fixed(1.0)).values, c.values)
    assert np.allclose(apply_noise(c, NoiseModel.fixed(0.0)).values, 1 / 8)
    assert np.array_equal(apply_noise(c, NoiseModel()).values, c.values)


def test_quadratic_presets():
    assert NoiseModel.preset("paper-2m").p_at(100) == pytest.approx(0.77545, abs=1e-12)
    model = NoiseModel.preset("paper-5m")
    assert model.kind is NoiseKind.QUADRATIC
    assert model.p_at(13) == pytest.approx(6.167e-6 * 169 - 2.549e-3 * 13 + 0.8769)


def test_quadratic_clamped():
    assert NoiseModel.quadratic(0.0, 0.1, 0.5).p_at(10) == 1.0
    assert NoiseModel.quadratic(0.0, -0.1, 0.5).p_at(10) == 0.0


def test_noise_validation():
    with pytest.raises(exc.InvalidArgumentError, match=r"p must lie in \[0, 1\], got 1.2"):
        NoiseModel.fixed(1.2)
    with pytest.raises(exc.InvalidArgumentError, match=r"Unknown noise preset 'paper-3m'"):
        NoiseModel.preset("paper-3m")


@pytest.mark.parametrize("p1,p2", [(0.3, 0.8), (0.95, 0.1), (0.5, 0.5)])
def test_noise_composes(p1, p2):
    c = fiber_correlations(FIBER_PRESETS["paper-5m"], 5, prime_family(5, 3))
    twice = apply_noise(apply_noise(c, NoiseModel.fixed(p1)), NoiseModel.fixed(p2))
    once = apply_noise(c, NoiseModel.fixed(p1 * p2))
    assert np.allclose(twice.values, once.values, rtol=0, atol=1e-12)


def test_depolarized_tensor():
    c = depolarized_tensor(4, 3, 0.25)
    assert c.values[2, 1, 1] == pytest.approx(0.25 + 0.75 / 4)
    assert c.values[0, 0, 3] == pytest.approx(0.75 / 4)


def test_csv_round_trip():
    c = depolarized_tensor(3, 2, 0.6)
    with tempfile.TemporaryDirectory() as tmpdir:
        path = pathlib.Path(tmpdir) / "c.csv"
        write_correlations_csv(c, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,a,b,value"
        assert len(lines) == 1 + 2 * 3 * 3
        assert np.array_equal(read_correlations_csv(path).values, c.values)


def test_csv_counts_are_normalised():
    with tempfile.TemporaryDirectory() as tmpdir:
        path = pathlib.Path(tmpdir) / "counts.csv"
        rows = ["x,a,b,value"]
        for x in range(2):
            for a in range(2):
                for b in range(2):
                    rows.append(f"{x},{a},{b},{90 if a == b else 10}")
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(exc.InvalidArgumentError, match=r"columns must sum to 1"):
            read_correlations_csv(path)
        c = read_correlations_csv(path, normalize=True)
    assert np.allclose(c.diagonal_sums(), 1.8)


def test_csv_missing_entries():
    with tempfile.TemporaryDirectory() as tmpdir:
        path = pathlib.Path(tmpdir) / "c.csv"
        path.write_text("x,a,b,value\n0,0,0,1\n0,1,1,1\n0,1,0,0\n")
        with pytest.raises(exc.InvalidArgumentError, match=r"exactly once, found 3 rows"):
            read_correlations_csv(path)
