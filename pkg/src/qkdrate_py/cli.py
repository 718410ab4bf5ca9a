"""Command-line front end for qkdrate."""
from __future__ import annotations

from pathlib import Path
from typing import Callable, List, Optional, Sequence
import argparse
import json
import logging
import math
import sys

from . import __version__
from .attack import (
    BasisConfig,
    TwoWayAttack,
    depolarizing_attack,
    depolarizing_two_way_attack,
    drift_attack,
    identity_attack,
    random_attack,
    random_two_way_attack,
    rotation_attack,
    simulate_stats,
    simulate_stats_sampled,
    simulate_two_way_stats,
)
from .config import AppConfig, config_to_dict, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FormatError,
    IncompleteStatisticsError,
    InfeasibleConstraintsError,
    ThresholdError,
)
from .fileformat import (
    bundled_stats,
    format_number,
    read_gram,
    read_stats,
    reports_to_csv,
    serialize_gram,
    serialize_stats,
    write_csv,
)
from .protocols import (
    SQKD_SCENARIOS,
    KeyRateReport,
    OptPiParams,
    b92_keyrate,
    b92_rate_table,
    b92_symmetric,
    bb84_keyrate,
    optpi_keyrate,
    optpi_optimize,
    sqkd_keyrate,
    sqkd_symmetric,
    sqkd_threshold_table,
    threshold,
    threshold_table,
)
from .stats import INV_SQRT2, TwoWayStats
from .tomography import GramEstimates, TwoWayGram, estimate_one_way, estimate_two_way

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
INPUT_ERRORS = (DomainError, FormatError, ConfigError)
INFEASIBLE_ERRORS = (IncompleteStatisticsError, InfeasibleConstraintsError, ThresholdError, ConvergenceError)
# numeric ids first, descriptive names as aliases
TABLES = {"1": "b92-thresholds", "3": "example-rates", "5": "sqkd-thresholds"}


# -- channel specs ------------------------------------------------------------


def _numbers(spec: str, parts: Sequence[str], minimum: int, maximum: int) -> List[float]:
    if not minimum <= len(parts) <= maximum:
        raise DomainError(f"channel '{spec}' takes {minimum}-{maximum} parameters")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise DomainError(f"channel '{spec}' has a non-numeric parameter") from None


def _as_int(spec: str, value: float) -> int:
    if not float(value).is_integer():
        raise DomainError(f"channel '{spec}' expects an integer, got {value}")
    return int(value)


def parse_channel(spec: str):
    """Build a OneWayAttack or TwoWayAttack from ``name[:param...]``."""
    name, *parts = spec.split(":")
    if name == "identity":
        return identity_attack(_as_int(spec, _numbers(spec, parts, 0, 1)[0]) if parts else 1)
    if name == "depolarizing":
        return depolarizing_attack(_numbers(spec, parts, 1, 1)[0])
    if name == "rotation":
        return rotation_attack(*_numbers(spec, parts, 1, 2))
    if name in ("random", "two-way-random"):
        values = _numbers(spec, parts, 1, 2)
        seed = _as_int(spec, values[0])
        dim = _as_int(spec, values[1]) if len(values) > 1 else 4
        return random_attack(seed, dim) if name == "random" else random_two_way_attack(seed, dim)
    if name == "drift":
        values = _numbers(spec, parts, 2, 4)
        return drift_attack(_as_int(spec, values[0]), *values[1:])
    if name == "two-way-depolarizing":
        return depolarizing_two_way_attack(_numbers(spec, parts, 1, 1)[0])
    raise DomainError(f"unknown channel '{name}'")


# -- shared input handling ----------------------------------------------------


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")
        logger.info("[CLI] Wrote %s", output)


def _load_stats(args: argparse.Namespace):
    if getattr(args, "example", False):
        return bundled_stats()
    if getattr(args, "stats", None) is not None:
        return read_stats(args.stats)
    return None


def _one_way_input(args: argparse.Namespace):
    """(gram, stats) for one-way protocols from --stats, --example, --gram or --symmetric."""
    stats = _load_stats(args)
    if isinstance(stats, TwoWayStats):
        raise DomainError("one-way protocols need one-way statistics")
    if stats is not None:
        if args.psi is not None and args.psi != stats.psi:
            stats = stats.restricted(args.psi)
        return estimate_one_way(stats), stats
    if args.gram is not None:
        gram = read_gram(args.gram)
        if isinstance(gram, TwoWayGram):
            raise DomainError("one-way protocols need a one-way gram file")
        return gram, None
    if args.symmetric is not None:
        if not 0.0 <= args.symmetric < 0.5:
            raise DomainError(f"noise level Q = {args.symmetric} outside [0, 1/2)")
        return GramEstimates.symmetric(args.symmetric, args.psi or 4), None
    raise DomainError("give one of --stats, --example, --gram or --symmetric")


def _two_way_input(args: argparse.Namespace) -> TwoWayGram:
    stats = _load_stats(args)
    if stats is not None:
        if not isinstance(stats, TwoWayStats):
            raise DomainError("sqkd needs two-way statistics")
        return estimate_two_way(stats)
    if args.gram is not None:
        gram = read_gram(args.gram)
        if not isinstance(gram, TwoWayGram):
            raise DomainError("sqkd needs a two-way gram file")
        return gram
    raise DomainError("give one of --stats, --gram or --symmetric")


# -- commands -----------------------------------------------------------------


def cmd_stats(args: argparse.Namespace, config: AppConfig) -> int:
    attack = parse_channel(args.channel)
    cfg = BasisConfig(args.alpha, args.beta)
    if isinstance(attack, TwoWayAttack):
        if args.samples is not None:
            raise DomainError("sampled mode is only available for one-way channels")
        stats = simulate_two_way_stats(attack, cfg)
    elif args.samples is not None:
        stats = simulate_stats_sampled(attack, cfg, args.psi, args.samples, args.seed)
    else:
        stats = simulate_stats(attack, cfg, args.psi)
    _emit(serialize_stats(stats, config.output.significant_digits), args.output)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, config: AppConfig) -> int:
    stats = read_stats(args.stats)
    if args.two_way and not isinstance(stats, TwoWayStats):
        raise FormatError(f"{args.stats} does not hold two-way statistics")
    if isinstance(stats, TwoWayStats):
        gram = estimate_two_way(stats)
    else:
        if args.psi is not None and args.psi != stats.psi:
            stats = stats.restricted(args.psi)
        gram = estimate_one_way(stats)
    _emit(serialize_gram(gram, config.output.significant_digits), args.output)
    return EXIT_OK


def _check_sqkd_psi(args: argparse.Namespace) -> None:
    if args.psi not in (None, 3):
        raise DomainError(f"sqkd uses the three-state preparation set; --psi {args.psi} is not supported")


def _params(values: Optional[Sequence[float]]) -> OptPiParams:
    return OptPiParams.bb84() if values is None else OptPiParams(*values)


def cmd_keyrate(args: argparse.Namespace, config: AppConfig) -> int:
    settings = config.solver
    if args.protocol == "sqkd":
        _check_sqkd_psi(args)
        if args.symmetric is not None:
            report = sqkd_symmetric(args.symmetric, args.scenario, settings)
        else:
            report = sqkd_keyrate(_two_way_input(args), settings)
    elif args.protocol in ("b92", "bb84") and args.symmetric is not None:
        alpha_key = 0.0 if args.protocol == "bb84" else args.alpha_key
        report = b92_symmetric(args.symmetric, alpha_key, args.psi or 4, settings, args.pairing)
        if args.protocol == "bb84":
            report = _renamed(report, "bb84")
    else:
        gram, stats = _one_way_input(args)
        if args.protocol == "b92":
            report = b92_keyrate(gram, args.alpha_key, stats, settings, args.pairing)
        elif args.protocol == "bb84":
            report = bb84_keyrate(gram, stats, settings, args.pairing)
        else:
            report = optpi_keyrate(gram, _params(args.params), stats, settings, args.pairing)
    sys.stdout.write(reports_to_csv([report], config.output.csv_digits))
    return EXIT_OK


def _renamed(report: KeyRateReport, protocol: str) -> KeyRateReport:
    return KeyRateReport(
        protocol=protocol,
        psi=report.psi,
        entropy_bound=report.entropy_bound,
        cond_shannon=report.cond_shannon,
        alpha_key=report.alpha_key,
        minimizer=report.minimizer,
        pairing=report.pairing,
    )


def cmd_threshold(args: argparse.Namespace, config: AppConfig) -> int:
    settings = config.solver
    psi = args.psi or 4
    if args.protocol == "sqkd":
        _check_sqkd_psi(args)
        rate: Callable[[float], KeyRateReport] = lambda q: sqkd_symmetric(q, args.scenario, settings)
        label = args.scenario
    else:
        alpha_key = 0.0 if args.protocol == "bb84" else args.alpha_key
        rate = lambda q: b92_symmetric(q, alpha_key, psi, settings)
        label = format_number(alpha_key, config.output.csv_digits)
    q = threshold(rate, tol=settings.threshold_tol)
    header = ("protocol", "psi", "parameter", "threshold")
    row = (args.protocol, 3 if args.protocol == "sqkd" else psi, label, format_number(q, config.output.csv_digits))
    sys.stdout.write(write_csv(header, [row]))
    return EXIT_OK


def cmd_table(args: argparse.Namespace, config: AppConfig) -> int:
    settings = config.solver
    digits = config.output.csv_digits
    table = TABLES.get(args.table, args.table)
    if table == "b92-thresholds":
        rows = [
            (psi, format_number(alpha, digits), format_number(q, digits))
            for psi in (3, 4)
            for alpha, q in threshold_table(psi, settings=settings)
        ]
        text = write_csv(("psi", "alpha", "threshold"), rows)
    elif table == "example-rates":
        text = reports_to_csv(b92_rate_table(bundled_stats(), settings=settings), digits)
    else:
        rows = [(scenario, format_number(q, digits)) for scenario, q in sqkd_threshold_table(settings)]
        text = write_csv(("scenario", "threshold"), rows)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace, config: AppConfig) -> int:
    gram, stats = _one_way_input(args)
    _, report = optpi_optimize(gram, stats, budget=args.budget, seed=args.seed, settings=config.solver)
    sys.stdout.write(reports_to_csv([report], config.output.csv_digits))
    return EXIT_OK


def cmd_config(args: argparse.Namespace, config: AppConfig) -> int:
    sys.stdout.write(json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _probability(text: str) -> float:
    value = float(text)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _add_inputs(parser: argparse.ArgumentParser, symmetric_help: str) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--stats", type=Path, help="stats file to estimate from")
    group.add_argument("--example", action="store_true", help="use the bundled non-symmetric example statistics")
    group.add_argument("--gram", type=Path, help="previously estimated gram file")
    group.add_argument("--symmetric", type=float, metavar="Q", help=symmetric_help)
    parser.add_argument("--psi", type=int, choices=(3, 4), help="restrict to the Psi3 or Psi4 statistics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdrate", description="QKD key-rate lower bounds from channel statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="JSON file with solver/output settings")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--debug", action="store_true", help="log optimizer progress")
    verbosity.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="simulate channel statistics")
    p.add_argument("--channel", required=True, help="identity, depolarizing:Q, random:SEED[:D], rotation:THETA[:Q], "
                   "drift:SEED:ANGLE[:COUPLING[:Q]], "
                   "two-way-depolarizing:Q or two-way-random:SEED[:D]")
    p.add_argument("--psi", type=int, choices=(3, 4), default=4)
    p.add_argument("--alpha", type=_probability, default=INV_SQRT2)
    p.add_argument("--beta", type=_probability, default=INV_SQRT2)
    p.add_argument("--samples", type=int, help="rounds per (state, basis) cell; exact statistics if omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("estimate", help="estimate Eve's gram quantities from a stats file")
    p.add_argument("stats", type=Path)
    p.add_argument("--two-way", action="store_true", help="require two-way statistics")
    p.add_argument("--psi", type=int, choices=(3, 4))
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("keyrate", help="compute a key-rate lower bound")
    p.add_argument("protocol", choices=("b92", "bb84", "optpi", "sqkd"))
    _add_inputs(p, "depolarizing noise level instead of a stats file")
    p.add_argument("--alpha-key", type=float, default=0.0, help="overlap <0|a> of the B92 key states")
    p.add_argument("--params", type=float, nargs=4, metavar=("ALPHA_S", "GAMMA_S", "ALPHA_R", "GAMMA_R"))
    p.add_argument("--scenario", choices=SQKD_SCENARIOS, default="independent")
    p.add_argument("--pairing", choices=("fixed", "best"), default="fixed")
    p.set_defaults(handler=cmd_keyrate)

    p = sub.add_parser("threshold", help="noise level where the symmetric-channel rate reaches zero")
    p.add_argument("protocol", choices=("b92", "bb84", "sqkd"))
    p.add_argument("--psi", type=int, choices=(3, 4))
    p.add_argument("--alpha-key", type=float, default=0.0)
    p.add_argument("--scenario", choices=SQKD_SCENARIOS, default="independent")
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser("table", help="regenerate a results table as CSV")
    p.add_argument("table", choices=(*TABLES, *TABLES.values()))
    p.set_defaults(handler=cmd_table)

    p = sub.add_parser("optimize", help="search the Opt-Pi encoder/decoder for the best rate")
    _add_inputs(p, "depolarizing noise level instead of a stats file")
    p.add_argument("--budget", type=int, help="objective evaluations across all starts")
    p.add_argument("--seed", type=int, help="seed for the random starts")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("config", help="print the effective configuration")
    p.set_defaults(handler=cmd_config)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.debug else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s", force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args)
    try:
        config = load_config(args.config)
        return args.handler(args, config)
    except INFEASIBLE_ERRORS as exc:
        logger.error("[CLI] %s", exc)
        return EXIT_INFEASIBLE
    except INPUT_ERRORS as exc:
        logger.error("[CLI] %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
