"""
Quantization of discrete varifolds onto at most N Diracs.

Each Dirac is carried by a point and a frame, so the projection onto the cone
of N-atom varifolds becomes a smooth problem in ``(x_i, u_i^(1..d))`` solved
with L-BFGS from several random subsets of the target.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.config.settings import QuantizeConfig, get_settings
from src.geometry.kernels import GrassmannKind, KernelConfig
from src.models.box import Box
from src.models.errors import (
    DegenerateFrameError,
    DimensionMismatchError,
    EmptyVarifoldError,
    IndefiniteKernelError,
    OutOfRangeError,
)
from src.models.reports import QuantizeReport
from src.models.varifold import DiscreteVarifold
from src.services.metric_service import distance_sq_and_grad, inner_product, norm_sq, total_mass
from src.services.optimizer import OptimizerStatus, lbfgs_minimize
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


def _unpack(q: NDArray[np.float64], target: DiscreteVarifold) -> NDArray[np.float64]:
    width = target.n * (target.d + 1)
    q = np.asarray(q, dtype=float).ravel()
    if q.size % width != 0:
        raise DimensionMismatchError(
            f"Variable vector of length {q.size} is not a multiple of n(d+1) = {width}"
        )
    return q.reshape(-1, target.d + 1, target.n)


def _pack(mu: DiscreteVarifold) -> NDArray[np.float64]:
    return np.concatenate([mu.x[:, None, :], mu.frames], axis=1)


def _as_varifold(atoms: NDArray[np.float64], target: DiscreteVarifold) -> DiscreteVarifold:
    return DiscreteVarifold(n=target.n, d=target.d, x=atoms[:, 0], frames=atoms[:, 1:])


def quantize_objective_and_grad(
    q: NDArray[np.float64],
    target: DiscreteVarifold,
    kernels: KernelConfig,
    target_norm_sq: float | None = None,
) -> tuple[float, NDArray[np.float64]]:
    """``|mu^q - target|^2`` and its gradient for the flat variable vector ``q``.

    ``q`` stacks ``(x_i, u_i^(1), ..., u_i^(d))`` atom after atom.

    Raises:
        DimensionMismatchError: If the length of ``q`` is not a multiple of ``n (d + 1)``
        EmptyVarifoldError: If the target has no atoms
    """
    if target.size == 0:
        raise EmptyVarifoldError("Quantization target has no atoms")
    atoms = _unpack(q, target)
    value, grad_x, grad_frames = distance_sq_and_grad(
        atoms[:, 0], atoms[:, 1:], target, kernels.spatial, kernels.grassmann, target_norm_sq
    )
    grad = np.concatenate([grad_x[:, None, :], grad_frames], axis=1)
    return value, grad.ravel()


def subsample_baseline(target: DiscreteVarifold, N: int, seed: int = 0) -> DiscreteVarifold:
    """Keep ``N`` uniformly drawn atoms and rescale them to the target's total mass.

    Raises:
        OutOfRangeError: Unless ``1 <= N <= target.size``
        DegenerateFrameError: If every kept atom has zero weight
    """
    if not 1 <= N <= target.size:
        raise OutOfRangeError(f"N must lie in [1, {target.size}], got {N}")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(target.size, size=N, replace=False))
    subset = target.subset(keep)
    kept = total_mass(subset)
    if kept <= 0.0:
        raise DegenerateFrameError("All subsampled atoms have zero weight")
    return subset.scale_weights(total_mass(target) / kept)


@dataclass
class _Candidate:
    index: int
    atoms: NDArray[np.float64]
    distance_sq: float
    iterations: int
    status: OptimizerStatus


TIE_TOLERANCE = 1e-12


def _select_best(candidates: list[_Candidate], target_sq: float) -> _Candidate:
    """Smallest clamped distance; a later candidate must win by more than round-off."""
    best = candidates[0]
    for candidate in candidates[1:]:
        if max(candidate.distance_sq, 0.0) < max(best.distance_sq, 0.0) - TIE_TOLERANCE * target_sq:
            best = candidate
    return best


def _resolve_box(box: Box | str | None, target: DiscreteVarifold) -> Box | None:
    if box is None:
        return None
    if isinstance(box, str):
        if box != "auto":
            raise OutOfRangeError(f"Unknown box specification: {box!r}")
        return Box.around(target.x)
    if box.dim != target.n:
        raise DimensionMismatchError(f"Box has dimension {box.dim} but the target lives in R^{target.n}")
    return box


def _initializations(
    target: DiscreteVarifold,
    cfg: QuantizeConfig,
    warm_start: DiscreteVarifold | None,
) -> list[NDArray[np.float64]]:
    """Starting atoms for every restart, drawn up front so runs are thread-count independent."""
    rng = np.random.default_rng(cfg.seed)
    count = min(cfg.N, target.size)
    packed = _pack(target)
    starts = []
    for restart in range(cfg.restarts):
        if restart == 0 and count == target.size:
            idx = np.arange(target.size)
        else:
            idx = np.sort(rng.choice(target.size, size=count, replace=False))
        atoms = packed[idx].copy()
        if restart > 0 and cfg.jitter > 0:
            scale = np.linalg.norm(atoms[:, 1:], axis=2, keepdims=True)
            atoms[:, 1:] += cfg.jitter * scale * rng.standard_normal(atoms[:, 1:].shape)
        starts.append(atoms)
    if warm_start is not None and warm_start.size > 0:
        starts.append(_grow(warm_start, target, cfg.N))
    return starts


def _grow(warm_start: DiscreteVarifold, target: DiscreteVarifold, N: int) -> NDArray[np.float64]:
    """Previous solution plus the target atoms farthest from it, up to ``N`` atoms."""
    atoms = _pack(warm_start)[:N]
    missing = min(N, target.size) - atoms.shape[0]
    if missing <= 0:
        return atoms
    gaps = np.linalg.norm(target.x[:, None, :] - warm_start.x[None, :, :], axis=2).min(axis=1)
    order = np.argsort(-gaps, kind="stable")[:missing]
    return np.concatenate([atoms, _pack(target)[order]])


def _polish(atoms: NDArray[np.float64], target: DiscreteVarifold, kernels: KernelConfig) -> NDArray[np.float64]:
    """Rescale all weights by the optimal factor ``<mu, target> / |mu|^2``.

    At that factor ``<mu - target, mu> = 0`` and ``|mu| <= |target|``.
    """
    mu = _as_varifold(atoms, target)
    own = norm_sq(mu, kernels.spatial, kernels.grassmann)
    cross = inner_product(mu, target, kernels.spatial, kernels.grassmann)
    if own <= 0.0 or cross <= 0.0:
        return atoms
    polished = atoms.copy()
    polished[:, 1:] *= (cross / own) ** (1.0 / target.d)
    return polished


def _run_restart(
    index: int,
    start: NDArray[np.float64],
    target: DiscreteVarifold,
    cfg: QuantizeConfig,
    kernels: KernelConfig,
    box: Box | None,
    target_sq: float,
) -> _Candidate:
    shape = start.shape

    def objective(q: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        return quantize_objective_and_grad(q, target, kernels, target_sq)

    def project_positions(q: NDArray[np.float64]) -> NDArray[np.float64]:
        atoms = q.reshape(shape).copy()
        atoms[:, 0] = box.project(atoms[:, 0])
        return atoms.ravel()

    result = lbfgs_minimize(
        objective,
        start.ravel(),
        cfg.optimizer,
        project=project_positions if box is not None else None,
    )
    atoms = _polish(result.x.reshape(shape), target, kernels)
    value, _ = objective(atoms.ravel())
    logger.debug(
        f"Restart {index}: distance^2={value:.6e} after {result.iterations} iterations "
        f"({result.status.value})"
    )
    return _Candidate(index, atoms, value, result.iterations, result.status)


def quantize(
    target: DiscreteVarifold,
    cfg: QuantizeConfig,
    kernels: KernelConfig,
    warm_start: DiscreteVarifold | None = None,
    threads: int | None = None,
) -> QuantizeReport:
    """Approximate ``target`` by a varifold with at most ``cfg.N`` atoms.

    Args:
        target: Varifold to quantize
        cfg: Atom budget, restarts, optional box and optimizer settings
        kernels: Kernels of the metric (non-negative Grassmann kernel required)
        warm_start: Earlier solution (e.g. at ``N - 1``); it is grown to ``N``
            atoms and optimized as an extra restart, and kept as a candidate itself
        threads: Worker threads for the restarts (defaults to runtime settings)

    Returns:
        QuantizeReport of the best restart; ties go to the lowest restart index

    Raises:
        IndefiniteKernelError: For the linear Grassmann kernel
        EmptyVarifoldError: If the target has no atoms
    """
    if kernels.grassmann.kind == GrassmannKind.LINEAR:
        raise IndefiniteKernelError(
            "Quantization requires a non-negative Grassmann kernel; 'linear' is not supported"
        )
    if target.size == 0:
        raise EmptyVarifoldError("Quantization target has no atoms")
    box = _resolve_box(cfg.box, target)
    target_sq = norm_sq(target, kernels.spatial, kernels.grassmann)
    if target_sq <= 0.0:
        raise EmptyVarifoldError("Quantization target has zero norm")
    logger.info(
        f"Quantizing {target.size} atoms to N={cfg.N} with {cfg.restarts} restarts"
        + (f" in box {box.lower.tolist()}..{box.upper.tolist()}" if box is not None else "")
    )

    starts = _initializations(target, cfg, warm_start)
    workers = threads or get_settings().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_restart, i, start, target, cfg, kernels, box, target_sq)
            for i, start in enumerate(starts)
        ]
        candidates = [f.result() for f in futures]

    if warm_start is not None and warm_start.size > 0 and warm_start.size <= cfg.N:
        kept = _polish(_pack(warm_start), target, kernels)
        if box is None or box.contains(kept[:, 0]):
            value, _ = quantize_objective_and_grad(kept.ravel(), target, kernels, target_sq)
            candidates.append(_Candidate(len(candidates), kept, value, 0, OptimizerStatus.CONVERGED))

    best = _select_best(candidates, target_sq)

    mu = _as_varifold(best.atoms, target)
    alive = mu.nondegenerate()
    dropped = int(np.count_nonzero(~alive))
    if dropped:
        logger.warning(f"Dropping {dropped} atoms whose weight collapsed during quantization")
    result = mu.subset(np.flatnonzero(alive))

    own = norm_sq(result, kernels.spatial, kernels.grassmann)
    cross = inner_product(result, target, kernels.spatial, kernels.grassmann)
    dist_sq = max(own - 2.0 * cross + target_sq, 0.0)
    report = QuantizeReport(
        result=result,
        rel_error=float(np.sqrt(dist_sq / target_sq)),
        stationarity_gap=abs(own - cross) / target_sq,
        best_restart=best.index,
        iterations=[c.iterations for c in candidates],
        status=best.status,
        dropped_atoms=dropped,
    )
    logger.info(
        f"Quantization done: {result.size} atoms, rel_error={report.rel_error:.4e}, "
        f"best restart {best.index}"
    )
    return report
