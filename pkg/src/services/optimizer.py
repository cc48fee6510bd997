"""
Limited-memory BFGS with a strong-Wolfe line search and optional box projection.
"""

import warnings
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import line_search

from src.config.settings import LbfgsConfig
from src.models.errors import NonFiniteObjectiveError, NumericalError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

Objective = Callable[[NDArray[np.float64]], tuple[float, NDArray[np.float64]]]
Projection = Callable[[NDArray[np.float64]], NDArray[np.float64]]

CURVATURE_EPS = 1e-12
MAX_PROJECTED_BACKTRACKS = 30


class OptimizerStatus(str, Enum):
    """Exit status of the optimizer."""
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass
class OptimizeResult:
    """Outcome of ``lbfgs_minimize``."""

    x: NDArray[np.float64]
    f: float
    grad: NDArray[np.float64]
    status: OptimizerStatus
    iterations: int
    evaluations: int
    grad_norm: float
    f_history: list[float] = field(default_factory=list)
    wolfe_violations: int = 0

    @property
    def converged(self) -> bool:
        return self.status == OptimizerStatus.CONVERGED


class _CachedObjective:
    """Memoizes the last few evaluations so that value and gradient share work."""

    def __init__(self, fun: Objective, size: int = 4):
        self._fun = fun
        self._cache: deque[tuple[bytes, float, NDArray[np.float64]]] = deque(maxlen=size)
        self.evaluations = 0

    def __call__(self, x: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        key = x.tobytes()
        for cached_key, f, g in self._cache:
            if cached_key == key:
                return f, g
        self.evaluations += 1
        try:
            f, g = self._fun(x)
            f = float(f)
            g = np.asarray(g, dtype=float)
        except NumericalError as e:
            logger.debug(f"Objective failed at trial point: {e}")
            f, g = np.inf, np.zeros_like(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            f, g = np.inf, np.zeros_like(x)
        self._cache.append((key, f, g))
        return f, g

    def value(self, x: NDArray[np.float64]) -> float:
        return self(x)[0]

    def gradient(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self(x)[1]


def _two_loop(
    grad: NDArray[np.float64],
    pairs: deque[tuple[NDArray[np.float64], NDArray[np.float64], float]],
) -> NDArray[np.float64]:
    """Apply the inverse-Hessian approximation to ``grad``."""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas), strict=True):
        b = rho * (y @ q)
        q += s * (a - b)
    return q


def _wolfe_search(
    objective: _CachedObjective,
    x: NDArray[np.float64],
    direction: NDArray[np.float64],
    g: NDArray[np.float64],
    f: float,
    f_prev: float,
    cfg: LbfgsConfig,
) -> float | None:
    with warnings.catch_warnings():
        # scipy reports failures through a RuntimeWarning subclass and alpha=None
        warnings.simplefilter("ignore", RuntimeWarning)
        alpha, *_ = line_search(
            objective.value,
            objective.gradient,
            x,
            direction,
            gfk=g,
            old_fval=f,
            old_old_fval=f_prev,
            c1=cfg.c1,
            c2=cfg.c2,
        )
    return alpha


def box_projection(cfg: LbfgsConfig) -> Projection | None:
    """Componentwise projection onto ``cfg.projection``, bounds matching the variables."""
    box = cfg.projection
    if box is None:
        return None
    return lambda z: np.clip(z, box.lower, box.upper)


def lbfgs_minimize(
    fun: Objective,
    x0: NDArray[np.float64],
    cfg: LbfgsConfig | None = None,
    project: Projection | None = None,
) -> OptimizeResult:
    """
    Minimize ``fun`` with L-BFGS.

    Args:
        fun: Callable returning ``(value, gradient)``
        x0: Starting point
        cfg: Optimizer settings; ``cfg.projection`` bounds every variable
        project: Projection onto the feasible set overriding ``cfg.projection``
            (used when only part of the variables is constrained)

    Returns:
        OptimizeResult with the last accepted iterate

    Raises:
        NonFiniteObjectiveError: If the objective is not finite at ``x0``
    """
    cfg = cfg or LbfgsConfig()
    project = project or box_projection(cfg)
    objective = _CachedObjective(fun)

    x = np.array(x0, dtype=float)
    if project is not None:
        x = project(x)
    f, g = objective(x)
    if not np.isfinite(f):
        raise NonFiniteObjectiveError("Objective or gradient is not finite at the starting point")

    pairs: deque[tuple[NDArray[np.float64], NDArray[np.float64], float]] = deque(
        maxlen=cfg.memory
    )
    f_history = [f]
    f_prev = f + np.linalg.norm(g) / 2  # first trial step of length ~1
    status = OptimizerStatus.MAX_ITERS
    wolfe_violations = 0
    iteration = 0

    def stationarity(point: NDArray[np.float64], grad: NDArray[np.float64]) -> float:
        if project is None:
            return float(np.linalg.norm(grad))
        return float(np.linalg.norm(point - project(point - grad)))

    for iteration in range(cfg.max_iters + 1):
        if stationarity(x, g) <= cfg.grad_tol * max(1.0, abs(f)):
            status = OptimizerStatus.CONVERGED
            break
        if iteration == cfg.max_iters:
            break

        free = np.ones_like(x, dtype=bool)
        if project is not None:
            # variables pushed against a bound by the gradient stay fixed this step
            free = (project(x - g) != x) | (g == 0)
        masked_g = np.where(free, g, 0.0)
        direction = -_two_loop(masked_g, pairs)
        direction[~free] = 0.0
        if direction @ g >= 0:
            pairs.clear()
            direction = -masked_g

        alpha = _wolfe_search(objective, x, direction, g, f, f_prev, cfg)
        if alpha is None and pairs:
            logger.debug("Line search failed, restarting from steepest descent")
            pairs.clear()
            direction = -masked_g
            alpha = _wolfe_search(objective, x, direction, g, f, f_prev, cfg)
        if alpha is None:
            status = OptimizerStatus.LINE_SEARCH_FAILED
            logger.warning(f"Line search failed at iteration {iteration} (f={f:.6e})")
            break

        if project is None:
            x_new = x + alpha * direction
            f_new, g_new = objective(x_new)
            slope = g @ direction
            if not (
                f_new <= f + cfg.c1 * alpha * slope
                and abs(g_new @ direction) <= cfg.c2 * abs(slope)
            ):
                wolfe_violations += 1
                logger.warning(f"Accepted step violates strong Wolfe conditions (alpha={alpha})")
        else:
            step = alpha
            x_new = project(x + step * direction)
            f_new, g_new = objective(x_new)
            backtracks = 0
            while f_new > f and backtracks < MAX_PROJECTED_BACKTRACKS:
                step *= 0.5
                x_new = project(x + step * direction)
                f_new, g_new = objective(x_new)
                backtracks += 1
            if f_new > f:
                status = OptimizerStatus.LINE_SEARCH_FAILED
                logger.warning(f"Projected step failed to decrease f at iteration {iteration}")
                break

        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))

        f_prev, f = f, f_new
        x, g = x_new, g_new
        f_history.append(f)
        logger.debug(f"iter {iteration}: f={f:.10e} |g|={np.linalg.norm(g):.3e} step={alpha:.3e}")

    return OptimizeResult(
        x=x,
        f=f,
        grad=g,
        status=status,
        iterations=iteration,
        evaluations=objective.evaluations,
        grad_norm=stationarity(x, g),
        f_history=f_history,
        wolfe_violations=wolfe_violations,
    )
