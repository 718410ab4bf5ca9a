"""Configuration helpers for qkdrate solvers and output formatting."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict
import json
import logging

from .errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    # 1-D minimization over the free re(1,2) parameter
    grid_points_1d: int = 2001
    refine_tol_1d: float = 1e-10
    # 3-D minimization over (E_2, E_3, E_4) for the two-way protocol
    grid_points_3d: int = 41
    refine_starts_3d: int = 5
    refine_tol_3d: float = 1e-9
    # Opt-Pi encoder/decoder search
    optpi_starts: int = 64
    optpi_budget: int = 20000
    optpi_seed: int = 0
    threshold_tol: float = 1e-4


@dataclass
class OutputSettings:
    significant_digits: int = 12
    csv_digits: int = 6


@dataclass
class AppConfig:
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: OutputSettings = field(default_factory=OutputSettings)


def default_config() -> AppConfig:
    return AppConfig()


def _section(cls, payload: object, name: str):
    if payload is None:
        return cls()
    if not isinstance(payload, dict):
        raise ConfigError(f"section '{name}' must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(payload) - known)
    if unknown:
        raise ConfigError(f"unknown {name} settings: {', '.join(unknown)}")
    try:
        return cls(**payload)
    except TypeError as exc:
        raise ConfigError(f"invalid {name} settings: {exc}") from exc


def load_config(path: Path | str | None = None) -> AppConfig:
    """Read settings from a JSON file; ``None`` returns the defaults."""
    if path is None:
        return default_config()

    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    if not isinstance(payload, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(payload) - {"solver", "output"})
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(unknown)}")

    solver = _section(SolverSettings, payload.get("solver"), "solver")
    output = _section(OutputSettings, payload.get("output"), "output")
    if solver.grid_points_1d < 3 or solver.grid_points_3d < 3:
        raise ConfigError("grid sizes must be at least 3")
    logger.debug("[Config] Loaded %s", path)
    return AppConfig(solver=solver, output=output)


def config_to_dict(config: AppConfig) -> Dict[str, object]:
    return {"solver": asdict(config.solver), "output": asdict(config.output)}
