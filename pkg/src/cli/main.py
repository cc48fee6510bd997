"""
Command-line interface.

Scalars go to stdout, structures to JSON/CSV files, logs to stderr. Exit codes:
0 on success, 1 on invalid input or usage, 2 on numerical failure.
"""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from src.config.settings import QuantizeConfig, RunConfig, read_config, reload_settings
from src.models.box import Box
from src.models.errors import NumericalError, VarimatchError
from src.services.experiment_service import (
    gamma_conv,
    quant_curve,
    write_gamma_conv_csv,
    write_quant_curve_csv,
)
from src.services.mesh_service import MeshConverter
from src.services.metric_service import distance_sq, inner_product
from src.services.quantization_service import quantize
from src.services.registration_service import register
from src.services.shooting_service import transport_points
from src.utils.logging_config import get_logger, log_duration, setup_logging
from src.utils.serialization import read_varifold, write_report, write_trajectory, write_varifold
from src.utils.validation import parse_int_list

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    """Raised instead of exiting when the command line cannot be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (env VARIMATCH_THREADS)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], default=None)
    common.add_argument("--log-file", type=Path, default=None)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="varimatch", description="Discrete oriented varifold toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    dist = sub.add_parser("dist", parents=[common], help="kernel distance and inner product")
    dist.add_argument("first", type=Path)
    dist.add_argument("second", type=Path)
    dist.add_argument("--config", type=Path, default=None)

    quant = sub.add_parser("quantize", parents=[common], help="approximate by at most N Diracs")
    quant.add_argument("target", type=Path)
    quant.add_argument("-N", type=int, required=True)
    quant.add_argument("--restarts", type=int, default=5)
    quant.add_argument("--box", default=None, help="'auto' or x0,y0,...:x1,y1,...")
    quant.add_argument("--config", type=Path, default=None)
    quant.add_argument("--seed", type=int, default=None)
    quant.add_argument("-o", "--output", type=Path, required=True)
    quant.add_argument("--report", type=Path, default=None)

    reg = sub.add_parser("register", parents=[common], help="geodesic-shooting registration")
    reg.add_argument("source", type=Path)
    reg.add_argument("target", type=Path)
    reg.add_argument("--config", type=Path, default=None)
    reg.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    reg.add_argument("--source-mesh", type=Path, default=None, help="mesh whose vertices are deformed")

    conv = sub.add_parser("convert", parents=[common], help="mesh (OBJ or CSV polyline) to varifold")
    conv.add_argument("mesh", type=Path)
    conv.add_argument("-o", "--output", type=Path, required=True)

    exp = sub.add_parser("experiment", help="experiment protocols")
    exp_sub = exp.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    curve = exp_sub.add_parser("quant-curve", parents=[common])
    curve.add_argument("--target", type=Path, required=True)
    curve.add_argument("--ns", type=parse_int_list, required=True)
    curve.add_argument("--restarts", type=int, default=5)
    curve.add_argument("--config", type=Path, default=None)
    curve.add_argument("-o", "--output", type=Path, required=True)
    gconv = exp_sub.add_parser("gamma-conv", parents=[common])
    gconv.add_argument("--source", type=Path, required=True)
    gconv.add_argument("--target", type=Path, required=True)
    gconv.add_argument("--ns", type=parse_int_list, required=True)
    gconv.add_argument("--restarts", type=int, default=5)
    gconv.add_argument("--config", type=Path, default=None)
    gconv.add_argument("-o", "--output", type=Path, required=True)
    return parser


def _cmd_dist(args: argparse.Namespace, config: RunConfig) -> None:
    kernels = config.kernels()
    first, second = read_varifold(args.first), read_varifold(args.second)
    d2 = distance_sq(first, second, kernels.spatial, kernels.grassmann)
    inner = inner_product(first, second, kernels.spatial, kernels.grassmann)
    sys.stdout.write(f"distance {np.sqrt(d2):.17g}\ninner {inner:.17g}\n")


def _cmd_quantize(args: argparse.Namespace, config: RunConfig) -> None:
    target = read_varifold(args.target)
    box: Box | str | None = None
    if args.box is not None:
        box = "auto" if args.box == "auto" else Box.parse(args.box)
    cfg = QuantizeConfig(
        N=args.N,
        restarts=args.restarts,
        box=box,
        seed=config.seed if args.seed is None else args.seed,
        optimizer=config.lbfgs(),
    )
    report = quantize(target, cfg, config.kernels(), threads=args.threads)
    write_varifold(report.result, args.output)
    if args.report is not None:
        write_report(report, args.report)


def _cmd_register(args: argparse.Namespace, config: RunConfig) -> None:
    source, target = read_varifold(args.source), read_varifold(args.target)
    cfg = config.registration()
    converter = MeshConverter()
    mesh = converter.read(args.source_mesh) if args.source_mesh is not None else None

    report = register(source, target, cfg)
    out = args.output
    out.mkdir(parents=True, exist_ok=True)
    write_varifold(report.deformed, out / "deformed.json")
    write_trajectory(report.trajectory, out / "trajectory.json")
    write_report(report, out / "report.json")
    if mesh is not None:
        moved = transport_points(report.trajectory, mesh.vertices, cfg.kernels.deformation)
        converter.write(mesh.with_vertices(moved), out / f"deformed_mesh{args.source_mesh.suffix.lower()}")


def _cmd_convert(args: argparse.Namespace, config: RunConfig) -> None:
    _, mu = MeshConverter().convert(args.mesh)
    write_varifold(mu, args.output)


def _cmd_experiment(args: argparse.Namespace, config: RunConfig) -> None:
    base = QuantizeConfig(N=1, restarts=args.restarts, seed=config.seed, optimizer=config.lbfgs())
    if args.experiment == "quant-curve":
        target = read_varifold(args.target)
        result = quant_curve(target, args.ns, base, config.kernels(), threads=args.threads)
        write_quant_curve_csv(result, args.output)
    else:
        source, target = read_varifold(args.source), read_varifold(args.target)
        result = gamma_conv(source, target, args.ns, config.registration(), base, threads=args.threads)
        write_gamma_conv_csv(result, args.output)


COMMANDS = {
    "dist": _cmd_dist,
    "quantize": _cmd_quantize,
    "register": _cmd_register,
    "convert": _cmd_convert,
    "experiment": _cmd_experiment,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_INVALID

    try:
        settings = reload_settings(threads=args.threads, log_level=args.log_level, log_file=args.log_file)
        setup_logging(settings.log_level, settings.log_file)
        args.threads = settings.threads
        config = read_config(getattr(args, "config", None))
        with log_duration(logger, f"varimatch {args.command}"):
            COMMANDS[args.command](args, config)
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_NUMERICAL
    except (VarimatchError, ValueError, OSError) as e:
        logger.error(f"Invalid input: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    return EXIT_OK


def run() -> None:
    sys.exit(main())
