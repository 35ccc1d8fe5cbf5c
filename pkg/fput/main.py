import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from fput.config import FULL_N_GRID, ExperimentConfig, RuntimeSettings
from fput.errors import FputError
from fput.experiment import ratio_sweep, scan_rows, simulate, transform_check, wick_check
from fput.lattice import LatticeParams
from fput.models import DeviationRow, RunRecord, ScanRow, TraceRow, WickRow
from fput.normalform import scan_bound_many
from fput.output import emit_outputs, read_csv, write_csv, write_svg

logger = logging.getLogger(__name__)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config (default: $FPUT_CONFIG_PATH)")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--seed", type=int, help="base seed (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads (default: $FPUT_THREADS)")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="fput",
        description="Normal-form validity toolkit for the β-FPUT chain",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sim.add_argument("--N", type=int)
    sim.add_argument("--betaN", type=float)
    sim.add_argument("--init", choices=["thermal", "out-of-equilibrium"])
    sim.add_argument("--trace", action="store_true", help="write the per-sample trace CSV")

    sweep = commands.add_parser("ratio-sweep", parents=[common], help="non-resonant fraction r against βN")
    sweep.add_argument("--N", type=int, nargs="+")
    sweep.add_argument("--betaN", type=float, nargs="+")
    sweep.add_argument("--init", nargs="+", choices=["thermal", "out-of-equilibrium"])
    sweep.add_argument("--ensembles", type=int)
    sweep.add_argument("--full-grid", action="store_true", help=f"use N = {FULL_N_GRID}")
    sweep.add_argument("--svg", action="store_true", help="also write the figure")
    sweep.add_argument("--timings", action="store_true", help="include wall_time in the CSV")

    scan = commands.add_parser("scan-bound", parents=[common], help="coefficient-sum scanner")
    scan.add_argument("--N", type=int, nargs="+", default=[64, 128, 256, 512, 1024])
    scan.add_argument("--k1", type=int, help="fixed k1 (default N/2)")
    scan.add_argument("--all-k1", action="store_true", help="scan every k1 in (0, N)")

    wick = commands.add_parser("wick-check", parents=[common], help="Wick contraction vs Monte-Carlo")
    wick.add_argument("--N", type=int, default=16)
    wick.add_argument("--k1", type=int, default=8)
    wick.add_argument("--samples", type=int, default=10_000)
    wick.add_argument("--phi", nargs="+", choices=["ones", "inverse-omega"], default=["ones", "inverse-omega"])
    wick.add_argument("--eta", choices=["complex-gaussian", "uniform-circle"], default="complex-gaussian")

    transform = commands.add_parser("transform-check", parents=[common], help="near-identity deviation sweep")
    transform.add_argument("--N", type=int, default=64)
    transform.add_argument("--betaN", type=float, nargs="+", default=[0.01, 0.1, 1.0])
    transform.add_argument("--seeds", type=int, default=100, help="number of seeds")

    plot = commands.add_parser("plot", parents=[common], help="render a sweep CSV as SVG")
    plot.add_argument("--csv", help="sweep CSV (default: OUT/ratio_sweep.csv)")

    return parser


def _load_config(args: argparse.Namespace, settings: RuntimeSettings) -> ExperimentConfig:
    config_path = args.config or settings.config_path
    if config_path:
        logger.info(f"Loading configuration from: {config_path}")
        config = ExperimentConfig.load_from_yaml(config_path)
    else:
        config = ExperimentConfig()
    return config.with_overrides(base_seed=args.seed)


def _run(args: argparse.Namespace, settings: RuntimeSettings) -> None:
    config = _load_config(args, settings)
    threads = args.threads or settings.threads
    out = Path(args.out)

    if args.command == "simulate":
        N = args.N or config.N[0]
        betaN = args.betaN if args.betaN is not None else config.betaN_values[0]
        rows = simulate(config, N, betaN, args.init or config.init[0], config.base_seed)
        if args.trace:
            write_csv(out / "trace.csv", rows, TraceRow, force=args.force)

    elif args.command == "ratio-sweep":
        config = config.with_overrides(
            N=FULL_N_GRID if args.full_grid else args.N,
            betaN_values=args.betaN,
            init=args.init,
            n_ensembles=args.ensembles,
        )
        records = ratio_sweep(config, threads=threads)
        emit_outputs(records, out / "ratio_sweep.csv", out / "ratio_sweep.svg" if args.svg else None,
                     force=args.force, timings=args.timings)
        invalid = sum(not r.valid for r in records)
        if invalid:
            logger.warning(f"{invalid} of {len(records)} records are flagged invalid")

    elif args.command == "scan-bound":
        results = []
        for N in args.N:
            params = LatticeParams(N=N, kappa=config.kappa, m=config.m)
            k1_values = range(1, N) if args.all_k1 else [args.k1 or N // 2]
            results.extend(scan_bound_many(N, k1_values, params, threads=threads))
        write_csv(out / "scan_bound.csv", scan_rows(results), ScanRow, force=args.force)

    elif args.command == "wick-check":
        params = LatticeParams(N=args.N, kappa=config.kappa, m=config.m)
        rows = [wick_check(params, args.k1, phi, args.eta, args.samples, config.base_seed) for phi in args.phi]
        write_csv(out / "wick_check.csv", rows, WickRow, force=args.force)

    elif args.command == "transform-check":
        seeds = range(config.base_seed, config.base_seed + args.seeds)
        rows = transform_check(args.N, args.betaN, seeds, kappa=config.kappa, m=config.m)
        write_csv(out / "transform_check.csv", rows, DeviationRow, force=args.force)

    elif args.command == "plot":
        source = Path(args.csv) if args.csv else out / "ratio_sweep.csv"
        write_svg(source.with_suffix(".svg"), read_csv(source, RunRecord), force=args.force)


def main(argv: Optional[List[str]] = None) -> int:
    settings = RuntimeSettings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    args = build_parser().parse_args(argv)
    try:
        _run(args, settings)
    except (FputError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
