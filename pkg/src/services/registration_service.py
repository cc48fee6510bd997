"""
Geodesic-shooting registration of discrete varifolds.

The energy of an initial costate ``p0`` is

    E(p0) = H_r(q0, p0) + lambda |mu^{q(1)} - mu_tar|^2_{W*}

where ``q(1)`` is the RK4 end state. Its gradient is the exact derivative of
the discretized functional, obtained by an adjoint sweep through the recorded
RK4 stages.
"""

import numpy as np
from numpy.typing import NDArray

from src.config.settings import RegistrationConfig
from src.geometry.kernels import KernelConfig
from src.models.errors import EmptyVarifoldError
from src.models.reports import RegistrationReport
from src.models.shooting import ShootingState, Trajectory
from src.models.varifold import DiscreteVarifold, check_compatible
from src.services.metric_service import distance_sq_and_grad, norm_sq
from src.services.optimizer import lbfgs_minimize
from src.services.shooting_service import (
    gram_matrices,
    hamiltonian_gradient,
    reduced_hamiltonian,
    rk4_adjoint,
    rk4_forward,
    transport_varifold,
)
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


def fidelity(
    q_end: NDArray[np.float64],
    target: DiscreteVarifold,
    kernels: KernelConfig,
    lambda_: float = 1.0,
    target_norm_sq: float | None = None,
) -> tuple[float, NDArray[np.float64]]:
    """``g(q) = lambda |mu^q - mu_tar|^2`` and its gradient in the per-atom state layout.

    Raises:
        DimensionMismatchError: If ``q_end`` and ``target`` differ in n or d
    """
    q_end = np.asarray(q_end, dtype=float)
    mu = DiscreteVarifold(n=q_end.shape[2], d=q_end.shape[1] - 1, x=q_end[:, 0], frames=q_end[:, 1:])
    check_compatible(mu, target)
    value, grad_x, grad_frames = distance_sq_and_grad(
        mu.x, mu.frames, target, kernels.spatial, kernels.grassmann, target_norm_sq
    )
    grad = np.concatenate([grad_x[:, None, :], grad_frames], axis=1)
    return lambda_ * value, lambda_ * grad


def momentum_projectors(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """Orthogonal projectors onto ``span{u^(l)}_{l != k}^perp`` for every atom and ``k``.

    Returns an array of shape ``(N, d, n, n)``; identities when ``d = 1``.
    """
    count, d, n = frames.shape
    projectors = np.broadcast_to(np.eye(n), (count, d, n, n)).copy()
    if d == 1:
        return projectors
    for k in range(d):
        others = np.delete(frames, k, axis=1)
        # least-squares projector onto the row space of the other vectors
        pinv = np.linalg.pinv(others)
        projectors[:, k] -= np.einsum("iam,imb->iab", pinv, others)
    return projectors


class _MomentumMap:
    """Maps optimizer variables to initial costates (and gradients back)."""

    def __init__(self, frames: NDArray[np.float64], reduce: bool):
        self.shape = (frames.shape[0], frames.shape[1] + 1, frames.shape[2])
        self.projectors = momentum_projectors(frames) if reduce else None

    def costate(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        p = z.reshape(self.shape).copy()
        if self.projectors is not None:
            p[:, 1:] = np.einsum("ikab,ikb->ika", self.projectors, p[:, 1:])
        return p

    def pullback(self, grad_p: NDArray[np.float64]) -> NDArray[np.float64]:
        # projectors are symmetric, so the pullback reuses ``costate``
        return self.costate(grad_p.ravel()).ravel()


def energy_and_grad(
    p0: NDArray[np.float64],
    q0: NDArray[np.float64],
    target: DiscreteVarifold,
    cfg: RegistrationConfig,
    target_norm_sq: float | None = None,
) -> tuple[float, NDArray[np.float64]]:
    """Registration energy of ``p0`` and its exact gradient.

    Args:
        p0: Initial costate, same per-atom layout as ``q0``
        q0: Initial state of shape ``(N, d + 1, n)``
        target: Target varifold
        cfg: Registration settings
        target_norm_sq: Cached ``|mu_tar|^2``

    Returns:
        ``(E, dE/dp0)`` with the gradient shaped like ``p0``

    Raises:
        NonFiniteStateError: If the shooting blows up
    """
    reg, fid, grad, _ = _energy(ShootingState(q=q0, p=p0), target, cfg, target_norm_sq)
    return reg + fid, grad


def reduced_energy_and_grad(
    z: NDArray[np.float64],
    q0: NDArray[np.float64],
    target: DiscreteVarifold,
    cfg: RegistrationConfig,
    target_norm_sq: float | None = None,
) -> tuple[float, NDArray[np.float64]]:
    """Energy and gradient in the flat optimizer variables used by ``register``.

    With ``cfg.reduce_momentum`` the frame part of ``z`` is projected before
    shooting and the gradient is projected back; otherwise ``z`` is the
    flattened costate.
    """
    q0 = np.asarray(q0, dtype=float)
    momentum = _MomentumMap(q0[:, 1:], cfg.reduce_momentum)
    return _reduced_energy(z, q0, target, cfg, target_norm_sq, momentum)


def _reduced_energy(
    z: NDArray[np.float64],
    q0: NDArray[np.float64],
    target: DiscreteVarifold,
    cfg: RegistrationConfig,
    target_norm_sq: float | None,
    momentum: _MomentumMap,
) -> tuple[float, NDArray[np.float64]]:
    state = ShootingState(q=q0, p=momentum.costate(z))
    reg, fid, grad_p, _ = _energy(state, target, cfg, target_norm_sq)
    return reg + fid, momentum.pullback(grad_p)


def _energy(
    state: ShootingState,
    target: DiscreteVarifold,
    cfg: RegistrationConfig,
    target_norm_sq: float | None,
) -> tuple[float, float, NDArray[np.float64], Trajectory]:
    kv = cfg.kernels.deformation
    trajectory = rk4_forward(state, cfg.steps, kv)
    reg = reduced_hamiltonian(state, kv)
    fid, fid_grad = fidelity(trajectory.final.q, target, cfg.kernels, cfg.lambda_, target_norm_sq)
    _, adj_p = rk4_adjoint(trajectory, fid_grad, np.zeros_like(fid_grad), kv)
    _, reg_grad_p = hamiltonian_gradient(state, kv)
    return reg, fid, reg_grad_p + adj_p, trajectory


def _scalar_defect(state: ShootingState) -> float:
    grams = gram_matrices(state)
    if grams.shape[0] == 0 or grams.shape[1] == 1:
        return 0.0
    d = grams.shape[1]
    off = np.abs(grams * (1.0 - np.eye(d))).max(axis=(1, 2))
    return float(np.max(off / (1.0 + np.linalg.norm(grams, axis=(1, 2)))))


def register(
    source: DiscreteVarifold,
    target: DiscreteVarifold,
    cfg: RegistrationConfig | None = None,
) -> RegistrationReport:
    """Estimate the initial costate moving ``source`` onto ``target``.

    L-BFGS from ``p0 = 0``. With ``cfg.reduce_momentum`` every ``p^{u_k}(0)``
    is restricted to the orthogonal complement of the other frame vectors.
    Non-convergence is reported through the status, not raised.

    Raises:
        DimensionMismatchError: If the varifolds differ in n or d
        EmptyVarifoldError: If the source has no atoms
        NonFiniteStateError: If the final state cannot be integrated
    """
    cfg = cfg or RegistrationConfig()
    check_compatible(source, target)
    if source.size == 0:
        raise EmptyVarifoldError("Cannot register an empty source varifold")

    q0 = ShootingState.from_varifold(source).q
    target_sq = norm_sq(target, cfg.kernels.spatial, cfg.kernels.grassmann)
    momentum = _MomentumMap(source.frames, cfg.reduce_momentum)
    logger.info(
        f"Registering {source.size} atoms onto {target.size} (n={source.n}, d={source.d}, "
        f"lambda={cfg.lambda_}, steps={cfg.steps}, reduced={cfg.reduce_momentum})"
    )

    def objective(z: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        return _reduced_energy(z, q0, target, cfg, target_sq, momentum)

    result = lbfgs_minimize(objective, np.zeros(q0.size), cfg.optimizer)
    p0 = momentum.costate(result.x)
    initial = ShootingState(q=q0, p=p0)
    reg, fid, _, trajectory = _energy(initial, target, cfg, target_sq)
    fid = max(fid, 0.0)
    energy = reg + fid
    deformed = trajectory.final.varifold()

    if not result.converged:
        logger.warning(
            f"Registration stopped with status {result.status.value} after "
            f"{result.iterations} iterations (|g|={result.grad_norm:.3e})"
        )
    logger.info(
        f"Registration energy {energy:.6e} (reg={reg:.6e}, fid={fid:.6e}), "
        f"H drift {trajectory.hamiltonian_drift():.2e}"
    )
    return RegistrationReport(
        p0=p0,
        energy=energy,
        reg_term=reg,
        fid_term=fid,
        trajectory=trajectory,
        deformed=deformed,
        grad_norm=result.grad_norm,
        iterations=result.iterations,
        evaluations=result.evaluations,
        status=result.status,
        energy_history=result.f_history,
        scalar_defect=_scalar_defect(trajectory.final),
    )


def evaluate_energy(
    report: RegistrationReport,
    source: DiscreteVarifold,
    target: DiscreteVarifold,
    cfg: RegistrationConfig,
) -> float:
    """Energy of the field estimated in ``report`` acting on another source.

    The regularization is the conserved ``H_r`` of the report's trajectory; the
    fidelity transports ``source`` through that trajectory.
    """
    kernels = cfg.kernels
    moved = transport_varifold(report.trajectory, source, kernels.deformation)
    fid, _ = fidelity(ShootingState.from_varifold(moved).q, target, kernels, cfg.lambda_)
    return report.reg_term + max(fid, 0.0)
