"""Certified-dimension sweeps over subspace dimension, witness and number of
MUBs for one simulated fiber, written to ``sweep.csv``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
import os
import pathlib
import time
from typing import List, Tuple, Union
import warnings

import pandas as pd

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.config import FULL_MUB_SET, MubCount, RunConfig
from channel_dimension_certifier.correlations import apply_noise, mub_correlations
from channel_dimension_certifier.fiber import Mstm, cached_mstm
from channel_dimension_certifier.mub import fourier_pair, is_prime, prime_family
from channel_dimension_certifier.numerics import make_rng
from channel_dimension_certifier.tm_estimation import (
    ApproxTm,
    TmMethod,
    intensity_fit_tm,
    leading_subspace,
    simulate_probe_dataset,
    spectral_mean_tm,
)
from channel_dimension_certifier.witness import WitnessKind, certify

PathLike = Union[str, os.PathLike]

SWEEP_FILENAME = "sweep.csv"
TWO_BASIS_WITNESSES = (WitnessKind.FT_BAVARESCO, WitnessKind.PT_STEERING)


@dataclass(frozen=True)
class SweepRow:
    fiber_length_m: float
    d: int
    witness: str
    m: int
    p_used: float
    lhs: float
    certified_n: int
    wall_time_ms: float


SWEEP_COLUMNS = [f.name for f in fields(SweepRow)]


def estimate_tm(config: RunConfig, mstm: Mstm) -> ApproxTm:
    if config.estimator is TmMethod.SPECTRAL_MEAN:
        return spectral_mean_tm(mstm)
    rng = make_rng(config.seed)
    num_probes = config.num_probes or 4 * mstm.num_modes ** 2
    dataset = simulate_probe_dataset(mstm, num_probes, rng)
    return intensity_fit_tm(
        dataset, mstm.num_modes, config.iterations, rng, restarts=config.restarts
    )


def resolve_mub_count(count: MubCount, d: int) -> int:
    return d + 1 if count == FULL_MUB_SET else int(count)


def _morelli_counts(config: RunConfig, d: int) -> Tuple[List[int], List[str]]:
    counts, notices = [], []
    for count in config.mub_counts:
        m = resolve_mub_count(count, d)
        if m > 2 and not is_prime(d):
            notices.append(f"Skipping d={d}, m={m}: more than two MUBs need a prime dimension.")
        elif m > d + 1:
            notices.append(f"Skipping d={d}, m={m}: at most d+1={d + 1} MUBs exist.")
        elif m not in counts:
            counts.append(m)
    return sorted(counts), notices


def _rows_for_dimension(config: RunConfig, mstm: Mstm, approx: ApproxTm, d: int):
    witnesses = sorted(config.witnesses, key=lambda kind: kind.value)
    morelli_counts, notices = [], []
    if WitnessKind.FT_MORELLI in witnesses:
        morelli_counts, notices = _morelli_counts(config, d)
    m_max = max(morelli_counts + [2])

    start = time.perf_counter()
    mubs = prime_family(d, m_max) if m_max > 2 else fourier_pair(d)
    clean = mub_correlations(mstm, leading_subspace(approx, d), mubs)
    p = config.noise.p_at(d)
    noisy = apply_noise(clean, config.noise)
    shared_ms = (time.perf_counter() - start) * 1000

    rows = []
    for kind in witnesses:
        if kind in TWO_BASIS_WITNESSES:
            tasks = [(noisy.restrict(2), 2)]
        else:
            tasks = [(noisy.restrict(m), m) for m in morelli_counts]
        for tensor, m in tasks:
            start = time.perf_counter()
            result = certify(tensor, kind, m)
            elapsed = shared_ms + (time.perf_counter() - start) * 1000
            rows.append(
                SweepRow(
                    fiber_length_m=config.fiber.length_m,
                    d=d,
                    witness=kind.value,
                    m=m,
                    p_used=p,
                    lhs=result.lhs,
                    certified_n=result.certified_n,
                    wall_time_ms=round(elapsed, 3) if config.record_timings else 0.0,
                )
            )
    return rows, notices


def prepare_output_dir(output_dir: pathlib.Path) -> None:
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise exc.ConfigError(f"Cannot create output directory {output_dir}: {err}") from err
    if not os.access(output_dir, os.W_OK):
        raise exc.ConfigError(f"Output directory {output_dir} is not writable.")


def run_sweep(config: RunConfig) -> List[SweepRow]:
    """Certify every (d, witness, m) combination of ``config`` and write
    ``sweep.csv`` into the output directory.

    Dimensions are processed in a thread pool; rows come back ordered by
    (d, witness, m). Combinations that need more than two MUBs in a composite
    dimension are skipped with a warning.

    :param config: validated run configuration
    :type config: RunConfig
    :return: one row per combination
    :rtype: list[SweepRow]
    """
    output_dir = pathlib.Path(config.output_dir)
    prepare_output_dir(output_dir)
    mstm = cached_mstm(config.fiber)
    too_large = [d for d in config.dims if d > mstm.num_modes]
    if too_large:
        raise exc.ConfigError(
            f"Dimensions {', '.join(map(str, too_large))} exceed the {mstm.num_modes} guided "
            f"modes of the fiber."
        )
    if WitnessKind.FT_MORELLI not in config.witnesses and set(config.mub_counts) - {2}:
        warnings.warn(
            "MubCounts other than 2 are ignored: only two-basis witnesses are selected."
        )
    approx = estimate_tm(config, mstm)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(
            pool.map(lambda d: _rows_for_dimension(config, mstm, approx, d), sorted(config.dims))
        )
    rows = []
    for dim_rows, notices in results:
        for notice in notices:
            warnings.warn(notice)
        rows.extend(dim_rows)
    write_sweep_csv(rows, output_dir / SWEEP_FILENAME)
    return rows


def write_sweep_csv(rows: List[SweepRow], path: PathLike) -> None:
    frame = pd.DataFrame([asdict(row) for row in rows], columns=SWEEP_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.12g")


def read_sweep_csv(path: PathLike) -> List[SweepRow]:
    frame = pd.read_csv(path)
    if list(frame.columns) != SWEEP_COLUMNS:
        raise exc.InvalidArgumentError(
            f"{path} must have columns {', '.join(SWEEP_COLUMNS)}, "
            f"got {', '.join(map(str, frame.columns))}."
        )
    return [
        SweepRow(
            fiber_length_m=float(rec["fiber_length_m"]),
            d=int(rec["d"]),
            witness=str(rec["witness"]),
            m=int(rec["m"]),
            p_used=float(rec["p_used"]),
            lhs=float(rec["lhs"]),
            certified_n=int(rec["certified_n"]),
            wall_time_ms=float(rec["wall_time_ms"]),
        )
        for rec in frame.to_dict("records")
    ]
