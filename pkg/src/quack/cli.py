"""Command-line entry point.

Subcommands: generate, tune, predict, compare, landscape, ablate.  Exit
codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, timeseries
from .config import describe_schema, load_config
from .errors import (
    ConfigError,
    DataError,
    InputError,
    NumericalError,
    ParameterError,
    QuackError,
    ResourceError,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quack",
        description=(
            "Quantum-kernelized Gaussian process forecasting benchmark. "
            "Config keys (file or QUACK_* environment overrides):\n"
            + describe_schema()
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed-data", type=int, default=None, help="series generator seed")
    parser.add_argument("--seed-bo", type=int, default=None, help="tuner seed")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", help="write the standardized series and its stats")

    tune = sub.add_parser("tune", help="tune one kernel's hyperparameters")
    tune.add_argument("--kernel", default=None, help="iqp|rbf|matern|rq|periodic")

    predict = sub.add_parser("predict", help="fit with tuned hyperparameters and forecast")
    predict.add_argument("--kernel", default=None)
    predict.add_argument(
        "--tuned", type=Path, default=None,
        help="tuned.json from a tune run; tunes first when omitted",
    )

    compare = sub.add_parser("compare", help="benchmark all five kernels")
    compare.add_argument(
        "--matern-all", action="store_true",
        help="tune all three Matern smoothness values, report the best by test LL",
    )

    landscape = sub.add_parser("landscape", help="fidelity grid around the zero window")
    landscape.add_argument("--alpha", type=float, default=None, help="bandwidth (default from config)")

    sub.add_parser("ablate", help="sweep window lengths on the longer series")
    return parser


def _out_dir(args, cfg) -> Path:
    return args.out if args.out is not None else Path(cfg.out_dir)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed_data is not None:
            cfg.seed_data = args.seed_data
            cfg.gen.seed = args.seed_data
        if args.seed_bo is not None:
            cfg.seed_bo = args.seed_bo
        if getattr(args, "kernel", None):
            cfg.kernel = args.kernel
        if getattr(args, "matern_all", False):
            cfg.matern_all = True
        cfg.validate()
        out = _out_dir(args, cfg)
        return _dispatch(args, cfg, out)
    except (ConfigError, ParameterError, InputError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QuackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args, cfg, out: Path) -> int:
    if args.command == "generate":
        series_path, stats_path = experiments.run_generate(cfg, out)
        print(f"wrote {series_path} and {stats_path}")
        return 0

    if args.command == "tune":
        series = experiments.build_series(cfg)
        kind = cfg.kernel
        result = experiments.run_tune(cfg, kind, series, out / f"tune_{kind}")
        print(f"tuned {kind}: value {result.incumbent_value:.6f}")
        for name, value in result.theta.items():
            print(f"  {name} = {value:.6f}")
        return 0

    if args.command == "predict":
        series = experiments.build_series(cfg)
        kind = cfg.kernel
        if args.tuned is not None:
            payload = json.loads(args.tuned.read_text())
            if payload.get("kind") not in (None, kind):
                raise ConfigError(
                    f"tuned file is for kernel {payload.get('kind')!r}, expected {kind!r}"
                )
            theta = payload["theta"]
        else:
            theta = experiments.run_tune(cfg, kind, series, out / f"tune_{kind}").theta
        result = experiments.run_predict(cfg, kind, theta, series, out / f"predict_{kind}")
        ev = result.evaluation
        print(
            f"{kind}: rmse {ev.rmse:.6f}  mae {ev.mae:.6f}  mcrps {ev.mcrps:.6f}  "
            f"ll_total {ev.ll_total:.6f}"
        )
        return 0

    if args.command == "compare":
        rows = experiments.run_compare(cfg, out / "compare")
        header = ["kernel"] + list(experiments.metrics.Evaluation.METRIC_FIELDS)
        print("  ".join(f"{h:>10}" for h in header))
        for row in rows:
            if row.evaluation is None:
                print(f"{row.kind:>10}  failed: {row.error}")
                continue
            ev = row.evaluation.as_dict()
            cells = [f"{row.kind:>10}"] + [
                f"{ev[name]:10.6f}" for name in experiments.metrics.Evaluation.METRIC_FIELDS
            ]
            print("  ".join(cells))
        return 0

    if args.command == "landscape":
        alpha = args.alpha if args.alpha is not None else cfg.landscape_alpha
        experiments.run_landscape(cfg, alpha, out / "landscape")
        print(f"wrote {out / 'landscape' / 'landscape.csv'} (alpha={alpha})")
        return 0

    if args.command == "ablate":
        rows = experiments.run_ablate(cfg, out / "ablate")
        print("qubits  ll_total      mae")
        for row in rows:
            if row.error:
                print(f"{row.qubits:>6}  failed: {row.error}")
            else:
                print(f"{row.qubits:>6}  {row.ll_total:>10.4f}  {row.mae:.6f}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
