"""Grid-seeded scipy minimizers and root bracketing used by the key-rate routines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import optimize

from .config import SolverSettings
from .errors import InfeasibleConstraintsError, ThresholdError

logger = logging.getLogger(__name__)

VectorObjective = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Minimum:
    x: np.ndarray
    value: float


def minimize_interval(
    objective: VectorObjective, lo: float, hi: float, settings: Optional[SolverSettings] = None
) -> Minimum:
    """Global minimum of a 1-D objective on [lo, hi].

    ``objective`` maps an array of points to an array of values (``inf``
    marks infeasible points). A dense grid locates the basin; bounded Brent
    refines between the neighbouring grid points.
    """
    settings = settings or SolverSettings()
    if hi <= lo:
        x = np.array([lo])
        return Minimum(x=x, value=float(objective(x)[0]))

    grid = np.linspace(lo, hi, settings.grid_points_1d)
    values = np.asarray(objective(grid), dtype=float)
    if not np.any(np.isfinite(values)):
        raise InfeasibleConstraintsError(f"objective infeasible on all of [{lo:.6g}, {hi:.6g}]")
    idx = int(np.nanargmin(np.where(np.isfinite(values), values, np.inf)))
    best = Minimum(x=np.array([grid[idx]]), value=float(values[idx]))

    left = grid[max(idx - 1, 0)]
    right = grid[min(idx + 1, grid.size - 1)]
    if right > left:
        res = optimize.minimize_scalar(
            lambda t: float(objective(np.array([t]))[0]),
            bounds=(left, right),
            method="bounded",
            options={"xatol": settings.refine_tol_1d},
        )
        if np.isfinite(res.fun) and res.fun < best.value:
            best = Minimum(x=np.array([res.x]), value=float(res.fun))
    logger.debug("[Solver] 1-D minimum %.12g at %.9g", best.value, best.x[0])
    return best


def minimize_box(
    objective: VectorObjective,
    lows: Sequence[float],
    highs: Sequence[float],
    settings: Optional[SolverSettings] = None,
) -> Minimum:
    """Minimum over a small box: full grid, then Nelder-Mead from the best grid points."""
    settings = settings or SolverSettings()
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    axes = [np.unique(np.linspace(l, h, settings.grid_points_3d)) for l, h in zip(lows, highs)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    values = np.asarray(objective(mesh), dtype=float)
    finite = np.isfinite(values)
    if not np.any(finite):
        raise InfeasibleConstraintsError("no grid point satisfies the constraints")

    order = np.argsort(np.where(finite, values, np.inf), kind="stable")
    best = Minimum(x=mesh[order[0]], value=float(values[order[0]]))

    def scalar(x: np.ndarray) -> float:
        if np.any(x < lows) or np.any(x > highs):
            return np.inf
        return float(objective(x[None, :])[0])

    starts = [mesh[i] for i in order[: settings.refine_starts_3d] if finite[i]]
    for start in starts:
        res = optimize.minimize(
            scalar,
            start,
            method="Nelder-Mead",
            options={"xatol": settings.refine_tol_3d, "fatol": settings.refine_tol_3d},
        )
        if np.isfinite(res.fun) and res.fun < best.value:
            best = Minimum(x=np.asarray(res.x), value=float(res.fun))
    logger.debug("[Solver] Box minimum %.12g at %s", best.value, np.array2string(best.x, precision=6))
    return best


def multistart_maximize(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    budget: int,
    lo: float = -1.0,
    hi: float = 1.0,
) -> Tuple[np.ndarray, float]:
    """Maximize with Nelder-Mead from each start, splitting ``budget`` evaluations evenly.

    Parameters are clamped into [lo, hi] before every evaluation. The
    first start wins ties.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    per_start = max(1, budget // max(len(starts), 1))

    def negated(x: np.ndarray) -> float:
        value = objective(np.clip(x, lo, hi))
        return -value if np.isfinite(value) else np.inf

    best_x: Optional[np.ndarray] = None
    best_value = -np.inf
    for k, start in enumerate(starts):
        start = np.clip(np.asarray(start, dtype=float), lo, hi)
        if per_start == 1:
            x, value = start, objective(start)
        else:
            res = optimize.minimize(negated, start, method="Nelder-Mead", options={"maxfev": per_start})
            x = np.clip(res.x, lo, hi)
            value = objective(x)
            start_value = objective(start)
            if start_value >= value:
                x, value = start, start_value
        if np.isfinite(value) and (best_x is None or value > best_value + 1e-9):
            best_x, best_value = x, float(value)
            logger.debug("[Solver] Start %d improved the optimum to %.9g", k, best_value)
    if best_x is None:
        raise InfeasibleConstraintsError("no start produced a finite objective")
    return best_x, best_value


def bisect_root(func: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Sign change of ``func`` in [lo, hi] to within ``tol``."""
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise ThresholdError(f"no sign change on [{lo:.6g}, {hi:.6g}] ({f_lo:.6g}, {f_hi:.6g})")
    try:
        root = optimize.bisect(func, lo, hi, xtol=tol)
    except ValueError as exc:
        raise ThresholdError(str(exc)) from exc
    logger.debug("[Solver] Root at %.9g", root)
    return float(root)

