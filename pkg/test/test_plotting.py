import pathlib
import tempfile

import pytest

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.plotting import (
    MULTI_BASIS_FIGURE,
    TWO_BASIS_FIGURE,
    _series,
    emit_plots,
)
from channel_dimension_certifier.sweep import SweepRow


def row(d, witness, m, certified_n):
    return SweepRow(5.0, d, witness, m, 0.8, 0.0, certified_n, 0.0)


def test_one_series_per_mub_count():
    rows = [row(d, "ft_morelli", m, min(d, m + 2)) for d in (5, 13) for m in (2, 3, 5)]
    series = _series(rows)
    assert list(series) == [("ft_morelli", 2), ("ft_morelli", 3), ("ft_morelli", 5)]
    assert series[("ft_morelli", 3)] == [(5, 5), (13, 5)]
    with tempfile.TemporaryDirectory() as tmpdir:
        written = emit_plots(rows, tmpdir)
        assert written == [pathlib.Path(tmpdir) / MULTI_BASIS_FIGURE]
        assert written[0].read_text().lstrip().startswith("<?xml")


def test_both_figures():
    rows = [row(4, "pt_steering", 2, 3), row(4, "ft_bavaresco", 2, 4), row(5, "ft_morelli", 6, 5)]
    with tempfile.TemporaryDirectory() as tmpdir:
        written = emit_plots(rows, tmpdir)
        assert [path.name for path in written] == [TWO_BASIS_FIGURE, MULTI_BASIS_FIGURE]
        assert all(path.stat().st_size > 0 for path in written)


def test_single_point():
    with tempfile.TemporaryDirectory() as tmpdir:
        written = emit_plots([row(4, "pt_steering", 2, 3)], pathlib.Path(tmpdir) / "plots")
        assert written[0].exists()


def test_no_rows():
    with pytest.raises(exc.InvalidArgumentError, match=r"empty sweep"):
        emit_plots([], "unused")
