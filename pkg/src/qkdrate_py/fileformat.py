"""Text formats: stats files, gram files and the CSV key-rate report.

Stats and gram files share a ``key=value`` grammar with ``#`` comments.
A stats file starts with ``psi``, ``alpha`` and ``beta`` and then lists
``p,<sent>,<outcome>`` lines. Two-way files add ``p,<sent>,<mid>,<outcome>``
second-hop lines, ``r,<sent>,<outcome>`` reflect-channel lines and ``qa``.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union
import csv
import io
import logging

from .errors import DomainError, FormatError
from .protocols import KeyRateReport
from .stats import AttackStats, TwoWayStats
from .tomography import GramEstimates, TwoWayGram

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
CSV_DIGITS = 6
REPORT_COLUMNS = (
    "protocol",
    "psi",
    "alpha_key",
    "rate",
    "entropy_bound",
    "cond_shannon",
    "distillable",
    "minimizer",
)

Stats = Union[AttackStats, TwoWayStats]
Gram = Union[GramEstimates, TwoWayGram]


def format_number(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    text = f"{float(value):.{digits}g}"
    return "0" if text == "-0" else text


def _key_values(text: str) -> List[Tuple[int, str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise FormatError(f"line {lineno}: expected key=value, got '{raw.strip()}'")
        pairs.append((lineno, key.strip(), value.strip()))
    return pairs


def _float(lineno: int, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"line {lineno}: value of {key} is not a number: '{value}'") from None


# -- stats files --------------------------------------------------------------


def parse_stats(text: str) -> Stats:
    header: Dict[str, float] = {}
    one_way: Dict[Tuple[str, str], float] = {}
    reflect: Dict[Tuple[str, str], float] = {}
    second: Dict[Tuple[str, str, str], float] = {}
    qa = None
    seen = set()

    for lineno, key, value in _key_values(text):
        if key in seen:
            raise FormatError(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        number = _float(lineno, key, value)
        parts = key.split(",")
        if key in ("psi", "alpha", "beta"):
            header[key] = number
        elif key == "qa":
            qa = number
        elif parts[0] == "p" and len(parts) == 3:
            one_way[(parts[1], parts[2])] = number
        elif parts[0] == "p" and len(parts) == 4:
            second[(parts[1], parts[2], parts[3])] = number
        elif parts[0] == "r" and len(parts) == 3:
            reflect[(parts[1], parts[2])] = number
        else:
            raise FormatError(f"line {lineno}: unknown key {key}")

    missing = [k for k in ("psi", "alpha", "beta") if k not in header]
    if missing:
        raise FormatError("stats header is missing " + ", ".join(missing))
    psi = header["psi"]
    if psi not in (3.0, 4.0):
        raise FormatError(f"psi must be 3 or 4, got {format_number(psi)}")

    try:
        forward = AttackStats(psi=int(psi), alpha=header["alpha"], beta=header["beta"], entries=one_way)
        if not (second or reflect or qa is not None):
            return forward
        if qa is None:
            raise FormatError("two-way stats need a qa line")
        reflect_stats = AttackStats(psi=3, alpha=header["alpha"], beta=header["beta"], entries=reflect)
        return TwoWayStats(forward=forward, second=second, reflect=reflect_stats, qa=qa)
    except DomainError as exc:
        raise FormatError(str(exc)) from exc


def serialize_stats(stats: Stats, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Canonical text: header, then every statistic under sorted keys."""
    forward = stats.forward if isinstance(stats, TwoWayStats) else stats
    lines = [
        f"psi={forward.psi}",
        f"alpha={format_number(forward.alpha, digits)}",
        f"beta={format_number(forward.beta, digits)}",
    ]
    body = [(f"p,{s},{o}", v) for (s, o), v in forward]
    if isinstance(stats, TwoWayStats):
        body += [(f"p,{s},{m},{o}", v) for (s, m, o), v in stats.second.items()]
        body += [(f"r,{s},{o}", v) for (s, o), v in stats.reflect]
        body.append(("qa", stats.qa))
    lines += [f"{key}={format_number(value, digits)}" for key, value in sorted(body)]
    return "\n".join(lines) + "\n"


def read_stats(path: Union[str, Path]) -> Stats:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read stats file {path}: {exc}") from exc
    logger.debug("[Format] Reading stats from %s", path)
    return parse_stats(text)


def bundled_stats(name: str = "example.stats") -> AttackStats:
    """Statistics shipped inside the package data directory."""
    text = resources.files("qkdrate_py").joinpath("data", name).read_text(encoding="utf-8")
    stats = parse_stats(text)
    if not isinstance(stats, AttackStats):
        raise FormatError(f"bundled file {name} is not one-way statistics")
    return stats


# -- gram files ---------------------------------------------------------------


def serialize_gram(gram: Gram, digits: int = SIGNIFICANT_DIGITS) -> str:
    values = gram.as_values()
    lines = []
    for key, value in values.items():
        text = str(int(value)) if key == "psi" else format_number(value, digits)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def parse_gram(text: str) -> Gram:
    values: Dict[str, float] = {}
    for lineno, key, value in _key_values(text):
        if key in values:
            raise FormatError(f"line {lineno}: duplicate key {key}")
        values[key] = _float(lineno, key, value)
    try:
        if "c" in values:
            return TwoWayGram.from_values(values)
        return GramEstimates.from_values(values)
    except DomainError as exc:
        raise FormatError(str(exc)) from exc


def read_gram(path: Union[str, Path]) -> Gram:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read gram file {path}: {exc}") from exc
    return parse_gram(text)


# -- CSV reports --------------------------------------------------------------


def report_row(report: KeyRateReport, digits: int = CSV_DIGITS) -> List[str]:
    minimizer = dict(report.minimizer)
    if report.params is not None:
        for name in ("alpha_s", "gamma_s", "alpha_r", "gamma_r"):
            minimizer[name] = getattr(report.params, name)
    return [
        report.protocol,
        str(report.psi),
        "" if report.alpha_key is None else format_number(report.alpha_key, digits),
        format_number(report.rate, digits),
        format_number(report.entropy_bound, digits),
        format_number(report.cond_shannon, digits),
        format_number(report.distillable, digits),
        " ".join(f"{k}={format_number(v, digits)}" for k, v in minimizer.items()),
    ]


def write_csv(header: Iterable[str], rows: Iterable[Iterable[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(list(row))
    return buffer.getvalue()


def reports_to_csv(reports: Iterable[KeyRateReport], digits: int = CSV_DIGITS) -> str:
    return write_csv(REPORT_COLUMNS, (report_row(r, digits) for r in reports))
