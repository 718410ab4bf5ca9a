"""Exception hierarchy shared by the library and the command-line front end."""
from __future__ import annotations

from typing import Tuple


class QkdRateError(Exception):
    """Base class for every error raised by qkdrate."""


class DomainError(QkdRateError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class ConvergenceError(QkdRateError):
    """An iterative numerical routine hit its iteration cap."""


class ConfigError(QkdRateError):
    """The configuration file is malformed or names unknown settings."""


class FormatError(QkdRateError):
    """A stats or gram text file cannot be parsed."""


class IncompleteStatisticsError(QkdRateError):
    """A statistic required by the requested estimate is missing."""


class InfeasibleConstraintsError(QkdRateError):
    """No adversary parameters satisfy the constraints implied by the statistics."""


class ThresholdError(QkdRateError):
    """The key rate does not change sign inside the requested bracket."""


class InvarianceError(QkdRateError):
    """Estimates differ between two choices of the (alpha, beta) basis parameters."""

    def __init__(self, message: str, pair: Tuple[float, float]) -> None:
        super().__init__(message)
        self.pair = pair
