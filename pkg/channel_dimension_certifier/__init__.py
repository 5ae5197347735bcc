import argparse
from dataclasses import replace
import pathlib
import sys

import pandas as pd

from channel_dimension_certifier import exceptions as exc
from channel_dimension_certifier.choi_oracle import run_oracle_checks
from channel_dimension_certifier.config import RunConfig, get_config_versions, load_run_config
from channel_dimension_certifier.correlations import read_correlations_csv
from channel_dimension_certifier.fiber import cached_mstm, save_mstm
from channel_dimension_certifier.sweep import prepare_output_dir, run_sweep
from channel_dimension_certifier.witness import WitnessKind, certify

MSTM_FILENAME = "mstm.bin"


def _run_config(args) -> RunConfig:
    if args.config is None:
        config = RunConfig()
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, output_dir=pathlib.Path(args.out))
        return config
    return load_run_config(args.config, seed=args.seed, output_dir=args.out)


def _simulate(args) -> None:
    config = _run_config(args)
    mstm = cached_mstm(config.fiber)
    prepare_output_dir(config.output_dir)
    path = config.output_dir / MSTM_FILENAME
    save_mstm(mstm, path)
    print(
        f"{mstm.num_modes} guided modes at {mstm.num_wavelengths} wavelengths "
        f"({config.fiber.length_m:g} m fiber) written to {path}"
    )


def _sweep(args) -> None:
    config = _run_config(args)
    rows = run_sweep(config)
    print(f"{len(rows)} rows written to {config.output_dir / 'sweep.csv'}")
    if not args.no_plots and rows:
        from channel_dimension_certifier.plotting import emit_plots

        for path in emit_plots(rows, config.output_dir):
            print(f"plot written to {path}")


def _certify(args) -> None:
    c = read_correlations_csv(args.correlations, normalize=args.normalize)
    kinds = [WitnessKind(name) for name in args.witness] if args.witness else list(WitnessKind)
    records = []
    for kind in kinds:
        if kind is WitnessKind.FT_MORELLI:
            result = certify(c, kind, args.m)
        else:
            result = certify(c.restrict(2), kind)
        records.append(
            {
                "witness": kind.value,
                "d": result.dim,
                "m": result.num_bases,
                "lhs": result.lhs,
                "bound_n1": float(result.bound_at(1)),
                "certified_n": result.certified_n,
            }
        )
    print(pd.DataFrame(records).to_string(index=False))


def _oracle_check(args) -> int:
    checks = run_oracle_checks(args.seed if args.seed is not None else 0, trials=args.trials)
    frame = pd.DataFrame(
        [
            {"check": c.name, "result": "pass" if c.passed else "FAIL", "detail": c.detail}
            for c in checks
        ]
    )
    print(frame.to_string(index=False))
    return 0 if all(c.passed for c in checks) else 1


def _add_run_options(parser):
    parser.add_argument(
        "-c",
        "--config",
        help=f"SweepConfig XML file (schema versions {', '.join(get_config_versions())}). "
        "Defaults to the 2 m fiber preset without noise",
    )
    parser.add_argument("--seed", type=int, help="Overrides the configured seed")
    parser.add_argument("-o", "--out", help="Overrides the configured output directory")


def main(argv=sys.argv[1:]):
    parser = argparse.ArgumentParser(
        description="Channel Dimension Certifier, certify the Schmidt number of simulated "
        "multi-mode fiber channels"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Build the fiber's transmission stack")
    _add_run_options(simulate)
    simulate.set_defaults(func=_simulate)

    sweep = subparsers.add_parser("sweep", help="Certify over dimensions, witnesses and MUBs")
    _add_run_options(sweep)
    sweep.add_argument("--no-plots", action="store_true", help="Only write sweep.csv")
    sweep.set_defaults(func=_sweep)

    certify_parser = subparsers.add_parser("certify", help="Certify a correlation CSV file")
    certify_parser.add_argument("correlations", help="CSV file with columns x, a, b, value")
    certify_parser.add_argument(
        "-w",
        "--witness",
        action="append",
        choices=[kind.value for kind in WitnessKind],
        help="Witness to evaluate, may be repeated. Default: all",
    )
    certify_parser.add_argument(
        "-m", type=int, help="Bases for the multi-basis witness. Default: all in the file"
    )
    certify_parser.add_argument(
        "--normalize", action="store_true", help="Rescale raw counts so each column sums to 1"
    )
    certify_parser.set_defaults(func=_certify)

    oracle = subparsers.add_parser("oracle-check", help="Run the Choi-state validation battery")
    oracle.add_argument("--seed", type=int, help="Random seed, default: 0")
    oracle.add_argument("--trials", type=int, default=20, help="Random channels per check")
    oracle.set_defaults(func=_oracle_check)

    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except (exc.ConfigError, exc.InvalidArgumentError) as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(2)
    except exc.NumericFailureError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        raise SystemExit(3)
    if status:
        raise SystemExit(status)


if __name__ == "__main__":
    main()  # pragma: no cover
