from dataclasses import replace
import pathlib
import tempfile

import pytest

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier import fiber
from channel_dimension_certifier.config import RunConfig
from channel_dimension_certifier.correlations import NoiseModel
from channel_dimension_certifier.fiber import FIBER_PRESETS, cached_mstm
from channel_dimension_certifier.sweep import (
    SWEEP_COLUMNS,
    SweepRow,
    read_sweep_csv,
    run_sweep,
    write_sweep_csv,
)
from channel_dimension_certifier.tm_estimation import TmMethod
from channel_dimension_certifier.witness import WitnessKind

MONOCHROMATIC = replace(FIBER_PRESETS["paper-2m"], num_wavelengths=1)


def sweep_in_tmpdir(**kwargs):
    with tempfile.TemporaryDirectory() as tmpdir:
        config = RunConfig(output_dir=pathlib.Path(tmpdir), **kwargs)
        rows = run_sweep(config)
        csv_text = (pathlib.Path(tmpdir) / "sweep.csv").read_text()
    return rows, csv_text


def by_key(rows):
    return {(row.d, row.witness, row.m): row for row in rows}


def test_noiseless_single_row():
    rows, _ = sweep_in_tmpdir(
        fiber=MONOCHROMATIC, dims=(4,), witnesses=(WitnessKind.PT_STEERING,)
    )
    assert len(rows) == 1
    assert rows[0].certified_n == 4
    assert rows[0].p_used == 1.0
    assert rows[0].wall_time_ms == 0.0


def test_monochromatic_certifies_full_dimension():
    dims = (2, 3, 5, 7, 11, 13)
    rows, _ = sweep_in_tmpdir(
        fiber=MONOCHROMATIC,
        dims=dims,
        witnesses=tuple(WitnessKind),
        mub_counts=(2, 3, "d+1"),
    )
    for row in rows:
        assert row.certified_n == row.d
    keys = set(by_key(rows))
    for d in dims:
        assert (d, "ft_morelli", d + 1) in keys
        assert (d, "ft_morelli", 3) in keys
        assert (d, "ft_bavaresco", 2) in keys
        assert (d, "pt_steering", 2) in keys


def test_rows_ordered():
    with pytest.warns(UserWarning, match=r"Skipping d=8, m=3"):
        rows, csv_text = sweep_in_tmpdir(
            fiber=MONOCHROMATIC,
            dims=(13, 5, 8),
            witnesses=(WitnessKind.PT_STEERING, WitnessKind.FT_MORELLI, WitnessKind.FT_BAVARESCO),
            mub_counts=(3, 2),
            workers=4,
        )
    keys = [(row.d, row.witness, row.m) for row in rows]
    assert keys == sorted(keys)
    assert csv_text.splitlines()[0] == ",".join(SWEEP_COLUMNS)


def test_composite_dimension_skipped():
    with pytest.warns(UserWarning, match=r"Skipping d=4, m=3"):
        rows, _ = sweep_in_tmpdir(
            fiber=MONOCHROMATIC,
            dims=(4, 5),
            witnesses=(WitnessKind.FT_MORELLI,),
            mub_counts=(2, 3),
        )
    assert [(row.d, row.m) for row in rows] == [(4, 2), (5, 2), (5, 3)]


def test_ignored_mub_counts():
    with pytest.warns(UserWarning, match=r"MubCounts other than 2 are ignored"):
        rows, _ = sweep_in_tmpdir(fiber=MONOCHROMATIC, dims=(3,), mub_counts=(2, 3))
    assert len(rows) == 2


def test_deterministic_csv():
    kwargs = dict(
        fiber=FIBER_PRESETS["paper-5m"],
        dims=(4, 13),
        noise=NoiseModel.preset("paper-5m"),
        seed=11,
    )
    _, first = sweep_in_tmpdir(**kwargs)
    _, second = sweep_in_tmpdir(**kwargs)
    assert first == second


def test_timings_recorded():
    rows, _ = sweep_in_tmpdir(fiber=MONOCHROMATIC, dims=(13,), record_timings=True)
    assert all(row.wall_time_ms > 0 for row in rows)


def test_dimension_larger_than_fiber():
    with pytest.raises(exc.ConfigError, match=r"Dimensions 300 exceed the \d+ guided modes"):
        sweep_in_tmpdir(fiber=MONOCHROMATIC, dims=(4, 300))


def test_unwritable_output_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        blocker = pathlib.Path(tmpdir) / "file"
        blocker.write_text("")
        config = RunConfig(fiber=MONOCHROMATIC, dims=(4,), output_dir=blocker / "out")
        with pytest.raises(exc.ConfigError, match=r"Cannot create output directory"):
            run_sweep(config)


def test_fiber_simulated_once(mocker):
    cached_mstm.cache_clear()
    spy = mocker.spy(fiber, "build_mstm")
    sweep_in_tmpdir(fiber=MONOCHROMATIC, dims=(4,))
    sweep_in_tmpdir(fiber=MONOCHROMATIC, dims=(5,), seed=3)
    assert spy.call_count == 1


def test_estimators_agree():
    small = replace(MONOCHROMATIC, core_radius_m=5e-6)
    kwargs = dict(fiber=small, dims=(4, 7), witnesses=(WitnessKind.PT_STEERING,))
    spectral, _ = sweep_in_tmpdir(**kwargs)
    fitted, _ = sweep_in_tmpdir(
        estimator=TmMethod.INTENSITY_FIT, iterations=3000, restarts=2, seed=5, **kwargs
    )
    for a, b in zip(spectral, fitted):
        assert a.d == b.d
        assert abs(a.certified_n - b.certified_n) <= 1


def test_noisy_5m_table_values():
    rows, _ = sweep_in_tmpdir(
        fiber=FIBER_PRESETS["paper-5m"],
        dims=(13, 89),
        noise=NoiseModel.preset("paper-5m"),
    )
    rows = by_key(rows)
    assert rows[(13, "pt_steering", 2)].certified_n in {3, 4, 5}
    assert 19.5 <= rows[(89, "ft_bavaresco", 2)].certified_n <= 32.5


def test_noisy_2m_table_values():
    rows, _ = sweep_in_tmpdir(
        fiber=FIBER_PRESETS["paper-2m"],
        dims=(29, 131),
        noise=NoiseModel.preset("paper-2m"),
    )
    rows = by_key(rows)
    # the 2 m noise preset alone caps this witness at 12 for d=29
    assert 7 <= rows[(29, "pt_steering", 2)].certified_n <= 12
    assert 44.25 <= rows[(131, "ft_bavaresco", 2)].certified_n <= 73.75


def test_more_bases_never_hurt():
    rows, _ = sweep_in_tmpdir(
        fiber=FIBER_PRESETS["paper-5m"],
        dims=(5, 13, 29, 53),
        witnesses=(WitnessKind.FT_MORELLI,),
        mub_counts=(2, 3, 5, "d+1"),
        noise=NoiseModel.preset("paper-5m"),
    )
    for d in (5, 13, 29, 53):
        certified = [row.certified_n for row in rows if row.d == d]
        assert len(certified) == 4
        assert certified == sorted(certified)


def test_complete_bases_on_noiseless_channel():
    rows, _ = sweep_in_tmpdir(
        fiber=MONOCHROMATIC,
        dims=(29, 53),
        witnesses=(WitnessKind.FT_MORELLI,),
        mub_counts=("d+1",),
    )
    assert [(row.m, row.certified_n) for row in rows] == [(30, 29), (54, 53)]


def test_sweep_csv_round_trip():
    rows = [
        SweepRow(2.0, 4, "pt_steering", 2, 0.9, 7.25, 3, 0.0),
        SweepRow(2.0, 5, "ft_morelli", 3, 1.0, 15.0, 5, 1.5),
    ]
    with tempfile.TemporaryDirectory() as tmpdir:
        path = pathlib.Path(tmpdir) / "rows.csv"
        write_sweep_csv(rows, path)
        assert read_sweep_csv(path) == rows


def test_sweep_csv_columns():
    with tempfile.TemporaryDirectory() as tmpdir:
        path = pathlib.Path(tmpdir) / "rows.csv"
        path.write_text("d,witness\n4,pt_steering\n")
        with pytest.raises(exc.InvalidArgumentError, match=r"must have columns fiber_length_m"):
            read_sweep_csv(path)
