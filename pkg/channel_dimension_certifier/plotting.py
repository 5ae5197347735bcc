import os
import pathlib
from typing import Dict, List, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from channel_dimension_certifier import exceptions as exc  # noqa: E402
from channel_dimension_certifier.sweep import SweepRow  # noqa: E402

PathLike = Union[str, os.PathLike]

TWO_BASIS_FIGURE = "certified_two_basis.svg"
MULTI_BASIS_FIGURE = "certified_multi_basis.svg"

_LABELS = {
    "ft_bavaresco": "FT, two bases",
    "pt_steering": "PT, two bases",
    "ft_morelli": "FT",
}


def _series(rows: List[SweepRow]) -> Dict[Tuple[str, int], List[Tuple[int, int]]]:
    series = {}
    for row in rows:
        series.setdefault((row.witness, row.m), []).append((row.d, row.certified_n))
    return {key: sorted(points) for key, points in sorted(series.items())}


def _figure(series, title: str, path: pathlib.Path) -> pathlib.Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    largest = 2
    for (witness, m), points in series.items():
        dims, certified = zip(*points)
        label = _LABELS.get(witness, witness)
        if witness == "ft_morelli":
            label = f"{label}, m={m}"
        ax.plot(dims, certified, marker="o", label=label)
        largest = max(largest, max(dims))
    ax.plot([2, largest], [2, largest], color="0.6", linestyle="--", linewidth=1, label="n = d")
    ax.set_xlabel("subspace dimension d")
    ax.set_ylabel("certified dimension n")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def emit_plots(rows: List[SweepRow], output_dir: PathLike) -> List[pathlib.Path]:
    """Certified dimension against subspace dimension, as SVG files.

    Two-basis witnesses share one figure; the multi-basis witness gets its own
    with one series per number of bases. Figures without rows are not written.
    """
    if not rows:
        raise exc.InvalidArgumentError("Cannot plot an empty sweep.")
    output_dir = pathlib.Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    lengths = sorted({row.fiber_length_m for row in rows})
    suffix = ", ".join(f"{length:g} m" for length in lengths)
    written = []
    two_basis = [row for row in rows if row.witness != "ft_morelli"]
    if two_basis:
        written.append(
            _figure(_series(two_basis), f"Two-basis witnesses ({suffix})", output_dir / TWO_BASIS_FIGURE)
        )
    multi_basis = [row for row in rows if row.witness == "ft_morelli"]
    if multi_basis:
        written.append(
            _figure(_series(multi_basis), f"Multi-basis witness ({suffix})", output_dir / MULTI_BASIS_FIGURE)
        )
    return written
