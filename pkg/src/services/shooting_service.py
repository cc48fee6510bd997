"""
Reduced Hamiltonian dynamics for frame states.

The optimal field generated by a state is

    v(y) = sum_j f(s_j) p_j^x + 2 f'(s_j) M_j z_j,   z_j = x_j - y,  s_j = |z_j|^2,

with ``f`` the deformation kernel profile and ``M_j = sum_k p_j^{u_k} (u_j^(k))^T``.
The reduced Hamiltonian ``H_r = 1/2 |v|_V^2`` therefore only depends on the
positions, the position costates and the matrices ``M_j``. All pair sums are
evaluated in ``_PairTerms``, which also provides the gradient of ``H_r`` and its
directional derivative (a Hessian-vector product). The RK4 adjoint sweep in
``rhs_vjp`` is built from those two.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.geometry.kernels import DeformationKernel
from src.models.errors import DimensionMismatchError, NonFiniteStateError
from src.models.shooting import ShootingState, Trajectory
from src.models.varifold import DiscreteVarifold
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


def _profile_stack(s: NDArray[np.float64], kernel: DeformationKernel, orders: int) -> list[NDArray[np.float64]]:
    base = kernel.profile(s, 0)
    scale = -1.0 / kernel.sigma_v**2
    return [scale**k * base for k in range(orders + 1)]


def moment_matrices(frames: NDArray[np.float64], pframes: NDArray[np.float64]) -> NDArray[np.float64]:
    """``M_i = sum_k p_i^{u_k} (u_i^(k))^T``, shape ``(N, n, n)``."""
    return np.einsum("ika,ikb->iab", pframes, frames)


@dataclass
class HamiltonianGradient:
    """Partial derivatives of ``H_r`` in ``(x, p^x, M)``."""

    x: NDArray[np.float64]
    px: NDArray[np.float64]
    m: NDArray[np.float64]


class _PairTerms:
    """Pairwise quantities of ``H_r`` for one state.

    ``z[i, j] = x_j - x_i`` and ``H_r = 1/2 sum_ij E_ij`` with

        E_ij = f p_i.p_j + 2 f' (p_i.M_j z - p_j.M_i z) - 4 f'' (M_j z).(M_i z) - 2 f' <M_i, M_j>
    """

    def __init__(
        self,
        x: NDArray[np.float64],
        px: NDArray[np.float64],
        m: NDArray[np.float64],
        kernel: DeformationKernel,
    ):
        self.x, self.px, self.m = x, px, m
        self.z = x[None, :, :] - x[:, None, :]
        self.s = np.einsum("ija,ija->ij", self.z, self.z)
        self.f = _profile_stack(self.s, kernel, 4)

        self.a = px @ px.T
        self.q1 = np.einsum("jab,ijb->ija", m, self.z)
        self.q2 = np.einsum("iab,ijb->ija", m, self.z)
        self.b = np.einsum("ia,ija->ij", px, self.q1)
        self.bt = np.einsum("ja,ija->ij", px, self.q2)
        self.c = np.einsum("ija,ija->ij", self.q1, self.q2)
        self.e = np.einsum("iab,jab->ij", m, m)

        f0, f1, f2, f3, _ = self.f
        self.alpha_b = f1
        self.alpha_c = -2.0 * f2
        self.alpha_e = -f1
        self.alpha_s = 0.5 * (f1 * self.a + 2.0 * f2 * (self.b - self.bt) - 4.0 * f3 * self.c - 2.0 * f2 * self.e)

    def value(self) -> float:
        f0, f1, f2, _, _ = self.f
        total = f0 * self.a + 2.0 * f1 * (self.b - self.bt) - 4.0 * f2 * self.c - 2.0 * f1 * self.e
        return 0.5 * float(total.sum())

    def _cotangents(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        g_q1 = self.alpha_b[..., None] * self.px[:, None, :] + self.alpha_c[..., None] * self.q2
        g_q2 = -self.alpha_b[..., None] * self.px[None, :, :] + self.alpha_c[..., None] * self.q1
        return g_q1, g_q2

    def gradient(self) -> HamiltonianGradient:
        m, z = self.m, self.z
        g_q1, g_q2 = self._cotangents()

        g_px = self.f[0] @ self.px
        g_px += np.einsum("ij,ija->ia", self.alpha_b, self.q1)
        g_px -= np.einsum("ij,ija->ja", self.alpha_b, self.q2)

        g_m = np.einsum("ija,ijb->jab", g_q1, z) + np.einsum("ija,ijb->iab", g_q2, z)
        g_m += 2.0 * np.einsum("ij,jab->iab", self.alpha_e, m)

        g_z = 2.0 * self.alpha_s[..., None] * z
        g_z += np.einsum("jab,ija->ijb", m, g_q1) + np.einsum("iab,ija->ijb", m, g_q2)
        g_x = g_z.sum(axis=0) - g_z.sum(axis=1)
        return HamiltonianGradient(x=g_x, px=g_px, m=g_m)

    def hessian_vector(
        self,
        dx: NDArray[np.float64],
        dpx: NDArray[np.float64],
        dm: NDArray[np.float64],
    ) -> HamiltonianGradient:
        """Directional derivative of ``gradient()`` along ``(dx, dpx, dm)``."""
        px, m, z = self.px, self.m, self.z
        f0, f1, f2, f3, f4 = self.f
        g_q1, g_q2 = self._cotangents()

        dz = dx[None, :, :] - dx[:, None, :]
        ds = 2.0 * np.einsum("ija,ija->ij", z, dz)
        da = dpx @ px.T + px @ dpx.T
        dq1 = np.einsum("jab,ijb->ija", dm, z) + np.einsum("jab,ijb->ija", m, dz)
        dq2 = np.einsum("iab,ijb->ija", dm, z) + np.einsum("iab,ijb->ija", m, dz)
        db = np.einsum("ia,ija->ij", dpx, self.q1) + np.einsum("ia,ija->ij", px, dq1)
        dbt = np.einsum("ja,ija->ij", dpx, self.q2) + np.einsum("ja,ija->ij", px, dq2)
        dc = np.einsum("ija,ija->ij", dq1, self.q2) + np.einsum("ija,ija->ij", self.q1, dq2)
        de = np.einsum("iab,jab->ij", dm, m) + np.einsum("iab,jab->ij", m, dm)

        d_alpha_b = f2 * ds
        d_alpha_c = -2.0 * f3 * ds
        d_alpha_e = -f2 * ds
        d_alpha_s = 0.5 * (
            f2 * ds * self.a
            + f1 * da
            + 2.0 * f3 * ds * (self.b - self.bt)
            + 2.0 * f2 * (db - dbt)
            - 4.0 * f4 * ds * self.c
            - 4.0 * f3 * dc
            - 2.0 * f3 * ds * self.e
            - 2.0 * f2 * de
        )

        dg_q1 = (
            d_alpha_b[..., None] * px[:, None, :]
            + self.alpha_b[..., None] * dpx[:, None, :]
            + d_alpha_c[..., None] * self.q2
            + self.alpha_c[..., None] * dq2
        )
        dg_q2 = (
            -d_alpha_b[..., None] * px[None, :, :]
            - self.alpha_b[..., None] * dpx[None, :, :]
            + d_alpha_c[..., None] * self.q1
            + self.alpha_c[..., None] * dq1
        )

        h_px = (f1 * ds) @ px + f0 @ dpx
        h_px += np.einsum("ij,ija->ia", d_alpha_b, self.q1) + np.einsum("ij,ija->ia", self.alpha_b, dq1)
        h_px -= np.einsum("ij,ija->ja", d_alpha_b, self.q2) + np.einsum("ij,ija->ja", self.alpha_b, dq2)

        h_m = np.einsum("ija,ijb->jab", dg_q1, z) + np.einsum("ija,ijb->jab", g_q1, dz)
        h_m += np.einsum("ija,ijb->iab", dg_q2, z) + np.einsum("ija,ijb->iab", g_q2, dz)
        h_m += 2.0 * (np.einsum("ij,jab->iab", d_alpha_e, m) + np.einsum("ij,jab->iab", self.alpha_e, dm))

        h_z = 2.0 * d_alpha_s[..., None] * z + 2.0 * self.alpha_s[..., None] * dz
        h_z += np.einsum("jab,ija->ijb", dm, g_q1) + np.einsum("jab,ija->ijb", m, dg_q1)
        h_z += np.einsum("iab,ija->ijb", dm, g_q2) + np.einsum("iab,ija->ijb", m, dg_q2)
        h_x = h_z.sum(axis=0) - h_z.sum(axis=1)
        return HamiltonianGradient(x=h_x, px=h_px, m=h_m)


def _split(q: NDArray[np.float64], p: NDArray[np.float64]) -> tuple[NDArray[np.float64], ...]:
    return q[:, 0], q[:, 1:], p[:, 0], p[:, 1:]


def _terms(q: NDArray[np.float64], p: NDArray[np.float64], kernel: DeformationKernel) -> _PairTerms:
    x, frames, px, pframes = _split(q, p)
    return _PairTerms(x, px, moment_matrices(frames, pframes), kernel)


def reduced_hamiltonian(state: ShootingState, kernel: DeformationKernel) -> float:
    """``H_r = 1/2 sum_i [p_i^x . v(x_i) + sum_k p_i^{u_k} . dv(x_i) u_i^(k)] = 1/2 |v|_V^2``."""
    if state.atom_count == 0:
        return 0.0
    return _terms(state.q, state.p, kernel).value()


def hamiltonian_gradient(
    state: ShootingState, kernel: DeformationKernel
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``(dH_r/dq, dH_r/dp)`` in the per-atom state layout."""
    dq, dp = _rhs_parts(state.q, state.p, kernel)
    return -dp, dq


def _rhs_parts(
    q: NDArray[np.float64], p: NDArray[np.float64], kernel: DeformationKernel
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    if q.shape[0] == 0:
        return np.zeros_like(q), np.zeros_like(p)
    x, frames, px, pframes = _split(q, p)
    grad = _terms(q, p, kernel).gradient()
    dq = np.empty_like(q)
    dp = np.empty_like(p)
    dq[:, 0] = grad.px
    dq[:, 1:] = np.einsum("ikb,iab->ika", frames, grad.m)
    dp[:, 0] = -grad.x
    dp[:, 1:] = -np.einsum("ika,iab->ikb", pframes, grad.m)
    return dq, dp


def hamiltonian_rhs(state: ShootingState, kernel: DeformationKernel) -> ShootingState:
    """Time derivative ``(dH_r/dp, -dH_r/dq)`` of a state.

    Equals ``x' = v(x)``, ``u' = dv(x) u``, ``p^{u_k}' = -dv^T p^{u_k}`` and
    ``p^x' = -dv^T p^x - sum_k d2v(., u^(k))^T p^{u_k}``.
    """
    dq, dp = _rhs_parts(state.q, state.p, kernel)
    return ShootingState(q=dq, p=dp)


def rhs_vjp(
    q: NDArray[np.float64],
    p: NDArray[np.float64],
    cot_q: NDArray[np.float64],
    cot_p: NDArray[np.float64],
    kernel: DeformationKernel,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vector-Jacobian product of the right-hand side at ``(q, p)``.

    Returns ``J^T (cot_q, cot_p)`` where ``J`` is the Jacobian of ``(q', p')``.
    """
    if q.shape[0] == 0:
        return np.zeros_like(q), np.zeros_like(p)
    x, frames, px, pframes = _split(q, p)
    lam_x, lam_u, lam_px, lam_pu = _split(cot_q, cot_p)
    terms = _terms(q, p, kernel)
    g_m = terms.gradient().m

    w_m = np.einsum("ika,ikb->iab", lam_u, frames) - np.einsum("ika,ikb->iab", pframes, lam_pu)
    h = terms.hessian_vector(-lam_px, lam_x, w_m)

    out_q = np.empty_like(q)
    out_p = np.empty_like(p)
    out_q[:, 0] = h.x
    out_q[:, 1:] = np.einsum("ika,iab->ikb", lam_u, g_m) + np.einsum("ika,iab->ikb", pframes, h.m)
    out_p[:, 0] = h.px
    out_p[:, 1:] = -np.einsum("ikb,iab->ika", lam_pu, g_m) + np.einsum("ikb,iab->ika", frames, h.m)
    return out_q, out_p


def gram_matrices(state: ShootingState) -> NDArray[np.float64]:
    """Per-atom ``D^i_{kl} = <u_i^(k), p_i^{u_l}>``, shape ``(N, d, d)``."""
    return np.einsum("ikn,iln->ikl", state.frames, state.pframes)


def velocity_and_jacobian(
    state: ShootingState,
    kernel: DeformationKernel,
    y: ArrayLike,
    order: int = 1,
) -> tuple[NDArray[np.float64], ...]:
    """Field ``v`` generated by ``state`` and its spatial derivatives at points ``y``.

    Args:
        state: Generating state
        kernel: Deformation kernel
        y: One point of shape ``(n,)`` or a batch of shape ``(P, n)``
        order: Highest derivative returned (0, 1 or 2)

    Returns:
        ``(v,)``, ``(v, dv)`` or ``(v, dv, d2v)`` with ``dv[a, b] = dv_a/dy_b``
        and ``d2v[a, b, c] = d2 v_a / dy_b dy_c``; a leading batch axis is kept
        when ``y`` is a batch
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    points = np.asarray(y, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != state.n:
        raise DimensionMismatchError(f"Points must have {state.n} components, got {points.shape[1]}")
    result = _field(state.x, state.px, moment_matrices(state.frames, state.pframes), kernel, points, order)
    if single:
        return tuple(r[0] for r in result)
    return result


def _field(
    x: NDArray[np.float64],
    px: NDArray[np.float64],
    m: NDArray[np.float64],
    kernel: DeformationKernel,
    points: NDArray[np.float64],
    order: int,
) -> tuple[NDArray[np.float64], ...]:
    n = points.shape[1]
    z = x[None, :, :] - points[:, None, :]
    s = np.einsum("pja,pja->pj", z, z)
    f = _profile_stack(s, kernel, order + 1)
    mz = np.einsum("jab,pjb->pja", m, z)

    v = np.einsum("pj,ja->pa", f[0], px) + 2.0 * np.einsum("pj,pja->pa", f[1], mz)
    out: list[NDArray[np.float64]] = [v]
    if order >= 1:
        dv = -2.0 * np.einsum("pj,ja,pjb->pab", f[1], px, z)
        dv -= 4.0 * np.einsum("pj,pja,pjb->pab", f[2], mz, z)
        dv -= 2.0 * np.einsum("pj,jab->pab", f[1], m)
        out.append(dv)
    if order >= 2:
        eye = np.eye(n)
        d2v = 4.0 * np.einsum("pj,ja,pjb,pjc->pabc", f[2], px, z, z)
        d2v += 2.0 * np.einsum("pj,ja,bc->pabc", f[1], px, eye)
        d2v += 8.0 * np.einsum("pj,pja,pjb,pjc->pabc", f[3], mz, z, z)
        d2v += 4.0 * np.einsum("pj,jac,pjb->pabc", f[2], m, z)
        d2v += 4.0 * np.einsum("pj,jab,pjc->pabc", f[2], m, z)
        d2v += 4.0 * np.einsum("pj,pja,bc->pabc", f[2], mz, eye)
        out.append(d2v)
    return tuple(out)


def _check_finite(flat: NDArray[np.float64], step: int) -> None:
    if not np.all(np.isfinite(flat)):
        raise NonFiniteStateError(
            f"Shooting state became non-finite at step {step}; "
            "reduce the initial momentum or increase sigma_v"
        )


def rk4_forward(
    initial: ShootingState,
    steps: int,
    kernel: DeformationKernel,
    reverse: bool = False,
) -> Trajectory:
    """Integrate the Hamiltonian system over ``[0, 1]`` with classical RK4.

    Args:
        initial: State at ``t = 0``
        steps: Number of uniform steps
        kernel: Deformation kernel
        reverse: Integrate the negated right-hand side (runs the flow backward)

    Raises:
        NonFiniteStateError: If any state component becomes non-finite
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    shape = initial.shape
    size = initial.q.size
    h = (-1.0 if reverse else 1.0) / steps

    def rhs(flat: NDArray[np.float64]) -> NDArray[np.float64]:
        dq, dp = _rhs_parts(flat[:size].reshape(shape), flat[size:].reshape(shape), kernel)
        return np.concatenate([dq.ravel(), dp.ravel()])

    flat_states = np.empty((steps + 1, 2 * size))
    stages = np.empty((steps, 4, 2 * size))
    flat_states[0] = initial.flat()
    _check_finite(flat_states[0], 0)

    y = flat_states[0]
    for k in range(steps):
        y1 = y
        k1 = rhs(y1)
        y2 = y + 0.5 * h * k1
        k2 = rhs(y2)
        y3 = y + 0.5 * h * k2
        k3 = rhs(y3)
        y4 = y + h * k3
        k4 = rhs(y4)
        stages[k] = (y1, y2, y3, y4)
        y = y + h * (k1 / 6.0 + k2 / 3.0 + k3 / 3.0 + k4 / 6.0)
        _check_finite(y, k + 1)
        flat_states[k + 1] = y

    hamiltonians = np.empty(steps + 1)
    grams = np.empty((steps + 1, shape[0], shape[1] - 1, shape[1] - 1))
    for k in range(steps + 1):
        state = ShootingState.from_flat(flat_states[k], shape)
        hamiltonians[k] = reduced_hamiltonian(state, kernel)
        grams[k] = gram_matrices(state)

    trajectory = Trajectory(
        steps=steps,
        reverse=reverse,
        shape=shape,
        flat_states=flat_states,
        stages=stages,
        hamiltonian_series=hamiltonians,
        gram_series=grams,
    )
    logger.debug(
        f"RK4 with {steps} steps: H0={hamiltonians[0]:.6e} "
        f"drift={trajectory.hamiltonian_drift():.2e} gram drift={trajectory.gram_drift():.2e}"
    )
    return trajectory


def rk4_adjoint(
    trajectory: Trajectory,
    cot_q: NDArray[np.float64],
    cot_p: NDArray[np.float64],
    kernel: DeformationKernel,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Pull a cotangent on the final state back to the initial state.

    Exact reverse sweep through the recorded RK4 stages, so the result is the
    gradient of the discretized flow map.
    """
    shape = trajectory.shape
    size = int(np.prod(shape))
    h = trajectory.step

    def vjp(flat: NDArray[np.float64], cot: NDArray[np.float64]) -> NDArray[np.float64]:
        out_q, out_p = rhs_vjp(
            flat[:size].reshape(shape),
            flat[size:].reshape(shape),
            cot[:size].reshape(shape),
            cot[size:].reshape(shape),
            kernel,
        )
        return np.concatenate([out_q.ravel(), out_p.ravel()])

    lam = np.concatenate([np.ravel(cot_q), np.ravel(cot_p)])
    for k in reversed(range(trajectory.steps)):
        y1, y2, y3, y4 = trajectory.stages[k]
        g4 = vjp(y4, h * RK4_WEIGHTS[3] * lam)
        g3 = vjp(y3, h * RK4_WEIGHTS[2] * lam + h * g4)
        g2 = vjp(y2, h * RK4_WEIGHTS[1] * lam + 0.5 * h * g3)
        g1 = vjp(y1, h * RK4_WEIGHTS[0] * lam + 0.5 * h * g2)
        lam = lam + g1 + g2 + g3 + g4
    return lam[:size].reshape(shape), lam[size:].reshape(shape)


def _transport_rhs(
    stage: NDArray[np.float64],
    shape: tuple[int, int, int],
    kernel: DeformationKernel,
    points: NDArray[np.float64],
    frames: NDArray[np.float64] | None,
) -> tuple[NDArray[np.float64], NDArray[np.float64] | None]:
    size = int(np.prod(shape))
    q = stage[:size].reshape(shape)
    p = stage[size:].reshape(shape)
    x, gen_frames, px, pframes = _split(q, p)
    m = moment_matrices(gen_frames, pframes)
    if frames is None:
        (v,) = _field(x, px, m, kernel, points, 0)
        return v, None
    v, dv = _field(x, px, m, kernel, points, 1)
    return v, np.einsum("pab,pkb->pka", dv, frames)


def _transport(
    trajectory: Trajectory,
    kernel: DeformationKernel,
    points: NDArray[np.float64],
    frames: NDArray[np.float64] | None,
) -> tuple[NDArray[np.float64], NDArray[np.float64] | None]:
    h = trajectory.step
    shape = trajectory.shape
    y, w = points.copy(), None if frames is None else frames.copy()
    for k in range(trajectory.steps):
        stages = trajectory.stages[k]
        inc_y = np.zeros_like(y)
        inc_w = None if w is None else np.zeros_like(w)
        trial_y, trial_w = y, w
        for i, weight in enumerate(RK4_WEIGHTS):
            ky, kw = _transport_rhs(stages[i], shape, kernel, trial_y, trial_w)
            inc_y += weight * ky
            if inc_w is not None:
                inc_w += weight * kw
            if i < 3:
                frac = 0.5 if i < 2 else 1.0
                trial_y = y + frac * h * ky
                trial_w = None if w is None else w + frac * h * kw
        y = y + h * inc_y
        if w is not None:
            w = w + h * inc_w
        if not np.all(np.isfinite(y)) or (w is not None and not np.all(np.isfinite(w))):
            raise NonFiniteStateError(f"Transported atoms became non-finite at step {k + 1}")
    return y, w


def transport_varifold(
    trajectory: Trajectory, mu: DiscreteVarifold, kernel: DeformationKernel
) -> DiscreteVarifold:
    """Push ``mu`` through the flow of ``trajectory``: ``(phi(x), dphi(x) u^(1..d))``.

    The field at RK4 stage times is re-evaluated from the stored stage states,
    so the trajectory's own atoms are reproduced exactly.

    Raises:
        DimensionMismatchError: If ``mu`` differs from the trajectory in n or d
        NonFiniteStateError: If a transported atom becomes non-finite
    """
    count, width, n = trajectory.shape
    if mu.n != n or mu.d != width - 1:
        raise DimensionMismatchError(
            f"Varifold has (n, d) = ({mu.n}, {mu.d}) but the flow acts on ({n}, {width - 1})"
        )
    if mu.size == 0:
        return mu
    x, frames = _transport(trajectory, kernel, mu.x, mu.frames)
    return DiscreteVarifold(n=mu.n, d=mu.d, x=x, frames=frames)


def transport_points(
    trajectory: Trajectory, points: ArrayLike, kernel: DeformationKernel
) -> NDArray[np.float64]:
    """Push bare points (e.g. mesh vertices) through the flow of ``trajectory``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return pts.reshape(0, trajectory.shape[2])
    if pts.shape[1] != trajectory.shape[2]:
        raise DimensionMismatchError(
            f"Points must have {trajectory.shape[2]} components, got {pts.shape[1]}"
        )
    moved, _ = _transport(trajectory, kernel, pts, None)
    return moved
