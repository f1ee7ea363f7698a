"""Static equilibrium: actuation torques, force-balance residual, solver.

The balance equation is ``K (theta - theta_bar) + tau_int(theta) =
tau_ext(theta, u)`` with diagonal joint stiffness K.  ``tau_int`` is zero
by default and pluggable; ``tau_ext`` implements idealized tendon, uniform
magnetic field, and direct torque commands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _backend
from .model import ActuatorElement, Configuration, RobotModel

DEFAULT_TOL = 1e-9           # infinity-norm residual tolerance, N*m
DEFAULT_MAX_ITERATIONS = 200
DEFAULT_FD_STEP = 1e-6       # rad, central differences
CHART_MARGIN = 1e-4          # keep iterates this far inside the pi bound

TauIntHook = Callable[[RobotModel, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ActuationCommand:
    """Tagged actuation input.

    ``direct``: raw joint torques (3N,).  ``tendon``: one non-negative
    tension per tendon actuator.  ``magnet``: uniform field vector (3,).
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.kind not in ("direct", "tendon", "magnet"):
            raise ValueError(f"command kind: unknown kind {self.kind!r}")
        if self.kind == "magnet" and arr.shape != (3,):
            raise ValueError("field: expected 3 components")
        if self.kind == "tendon" and np.any(arr < 0):
            raise ValueError("tensions: must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def direct(cls, torques):
        return cls(kind="direct", values=torques)

    @classmethod
    def tendon(cls, tensions):
        return cls(kind="tendon", values=tensions)

    @classmethod
    def magnet(cls, field):
        return cls(kind="magnet", values=field)

    @classmethod
    def from_dict(cls, doc: dict) -> "ActuationCommand":
        keys = [k for k in ("torques", "tensions", "field") if k in doc]
        if len(keys) != 1:
            raise ValueError(
                "command: exactly one of 'torques', 'tensions', 'field' required"
            )
        key = keys[0]
        kind = {"torques": "direct", "tensions": "tendon", "field": "magnet"}[key]
        return cls(kind=kind, values=doc[key])

    def to_dict(self) -> dict:
        key = {"direct": "torques", "tendon": "tensions", "magnet": "field"}[self.kind]
        return {key: self.values.tolist()}


@dataclass(frozen=True)
class EquilibriumReport:
    """Outcome of an equilibrium solve; ``theta`` is the last iterate."""

    converged: bool
    residual_norm: float
    iterations: int
    theta: Configuration


def check_command(model: RobotModel, u: ActuationCommand) -> None:
    """Validate that a command matches the model's actuators."""
    if u.kind == "direct":
        if u.values.shape != (3 * model.n_joints,):
            raise ValueError(
                f"torques: expected {3 * model.n_joints} entries, got {u.values.size}"
            )
        return
    matching = model.actuators_of(u.kind)
    if not matching:
        raise ValueError(f"command kind {u.kind!r}: model has no such actuator")
    if u.kind == "tendon" and u.values.size != len(matching):
        raise ValueError(
            f"tensions: expected {len(matching)} entries, got {u.values.size}"
        )


def _tendon_basis(model: RobotModel, tendons: tuple[ActuatorElement, ...]) -> np.ndarray:
    """Per-tendon joint moment directions scaled by the moment arm.

    Entry [j, i] is ``d_j * (-sin(beta_j) u_i + cos(beta_j) v_i)`` for
    joints up to and including the termination, zero beyond.  Rotating the
    cross-section axis into the world frame and projecting back onto the
    joint's own axes cancels, so the result is configuration-independent.
    """
    n = model.n_joints
    basis = np.zeros((len(tendons), n, 3))
    for j, tendon in enumerate(tendons):
        axis = (-np.sin(tendon.beta) * model.ref_normals
                + np.cos(tendon.beta) * model.ref_binormals)
        basis[j, : tendon.termination + 1] = (
            tendon.moment_arm * axis[: tendon.termination + 1]
        )
    return basis


def _external_torque_batch(
    model: RobotModel, thetas: np.ndarray, u: ActuationCommand
) -> np.ndarray:
    """External torques for a (B, N, 3) batch of configurations -> (B, N, 3)."""
    b, n = thetas.shape[0], model.n_joints
    if u.kind == "direct":
        return np.broadcast_to(u.values.reshape(n, 3), (b, n, 3))
    if u.kind == "tendon":
        basis = _tendon_basis(model, model.actuators_of("tendon"))
        tau = np.einsum("j,jnk->nk", u.values, basis)
        return np.broadcast_to(tau, (b, n, 3))
    # Uniform-field magnets: each dipole contributes (R_0^k m_k) x B at
    # every joint at or proximal to its attachment.
    chains = _backend.rotation_chains(thetas)
    tau = np.zeros((b, n, 3))
    field = u.values
    for magnet in model.actuators_of("magnet"):
        world_moment = chains[:, magnet.joint] @ magnet.moment
        torque = np.cross(world_moment, field)
        tau[:, : magnet.joint + 1] += torque[:, None, :]
    return tau


def external_torque(model: RobotModel, theta: Configuration, u: ActuationCommand) -> np.ndarray:
    """Generalized external torque vector (3N,) at ``theta`` under ``u``."""
    check_command(model, u)
    return _external_torque_batch(model, theta.joints[None], u)[0].reshape(-1)


def _nonaffine_batch(
    model: RobotModel,
    thetas: np.ndarray,
    u: ActuationCommand,
    tau_int: Optional[TauIntHook],
) -> np.ndarray:
    """tau_int(theta) - tau_ext(theta, u) for a (B, N, 3) batch -> (B, 3N)."""
    b = thetas.shape[0]
    out = -_external_torque_batch(model, thetas, u).reshape(b, -1)
    if tau_int is not None:
        for k in range(b):
            out[k] += np.asarray(
                tau_int(model, thetas[k].reshape(-1)), dtype=np.float64
            ).reshape(-1)
    return out


def _residual_flat(
    model: RobotModel,
    theta_flat: np.ndarray,
    u: ActuationCommand,
    tau_int: Optional[TauIntHook],
) -> np.ndarray:
    elastic = model.stiffness_flat * (theta_flat - model.theta_bar.flat)
    n = model.n_joints
    return elastic + _nonaffine_batch(model, theta_flat.reshape(1, n, 3), u, tau_int)[0]


def residual(
    model: RobotModel,
    theta: Configuration,
    u: ActuationCommand,
    tau_int: Optional[TauIntHook] = None,
) -> np.ndarray:
    """Force-balance residual K(theta - theta_bar) + tau_int - tau_ext."""
    check_command(model, u)
    if theta.n_joints != model.n_joints:
        raise ValueError(
            f"theta: {theta.n_joints} joints, model has {model.n_joints}"
        )
    return _residual_flat(model, theta.flat, u, tau_int)


def _is_affine(u: ActuationCommand, tau_int: Optional[TauIntHook]) -> bool:
    return tau_int is None and u.kind in ("direct", "tendon")


def _jacobian_flat(
    model: RobotModel,
    theta_flat: np.ndarray,
    u: ActuationCommand,
    tau_int: Optional[TauIntHook],
    step: float,
) -> np.ndarray:
    dim = theta_flat.size
    jac = np.diag(model.stiffness_flat)
    if _is_affine(u, tau_int):
        # Torque independent of theta: the elastic diagonal is the exact
        # Jacobian, no differencing needed.
        return jac
    n = model.n_joints
    probes = np.repeat(theta_flat[None], 2 * dim, axis=0)
    idx = np.arange(dim)
    probes[2 * idx, idx] += step
    probes[2 * idx + 1, idx] -= step
    g = _nonaffine_batch(model, probes.reshape(-1, n, 3), u, tau_int)
    jac += ((g[0::2] - g[1::2]) / (2.0 * step)).T
    return jac


def residual_jacobian(
    model: RobotModel,
    theta: Configuration,
    u: ActuationCommand,
    tau_int: Optional[TauIntHook] = None,
    step: float = DEFAULT_FD_STEP,
) -> np.ndarray:
    """Jacobian of the residual w.r.t. theta.

    The elastic part is assembled analytically; the configuration-dependent
    torque part is central-differenced with the given step, so commands
    with configuration-independent torques recover the stiffness diagonal
    exactly.
    """
    check_command(model, u)
    return _jacobian_flat(model, theta.flat, u, tau_int, step)


def _clip_to_chart(theta_flat: np.ndarray) -> np.ndarray:
    """Scale any joint rotation back inside the chart bound minus margin."""
    joints = theta_flat.reshape(-1, 3)
    norms = np.linalg.norm(joints, axis=1)
    limit = np.pi - CHART_MARGIN
    over = norms > limit
    if np.any(over):
        joints = joints.copy()
        joints[over] *= (limit / norms[over])[:, None]
        return joints.reshape(-1)
    return theta_flat


def solve_equilibrium(
    model: RobotModel,
    u: ActuationCommand,
    theta_init: Optional[Configuration] = None,
    tol: float = DEFAULT_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    fd_step: float = DEFAULT_FD_STEP,
    tau_int: Optional[TauIntHook] = None,
) -> EquilibriumReport:
    """Damped Newton solve of the force balance.

    Backtracking line search on the squared residual norm keeps accepted
    iterates non-increasing; steps are scaled back rather than rejected
    when they would leave the rotation chart.  Success means the residual
    infinity norm is at or below ``tol``; non-convergence is reported, not
    raised.
    """
    check_command(model, u)
    if theta_init is None:
        theta_init = model.theta_bar
    if theta_init.n_joints != model.n_joints:
        raise ValueError(
            f"theta_init: {theta_init.n_joints} joints, model has {model.n_joints}"
        )

    theta = theta_init.flat.copy()
    res = _residual_flat(model, theta, u, tau_int)
    merit = float(res @ res)
    iterations = 0
    converged = float(np.max(np.abs(res))) <= tol

    while not converged and iterations < max_iterations:
        jac = _jacobian_flat(model, theta, u, tau_int, fd_step)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            reg = 1e-8 * float(np.max(np.abs(np.diag(jac)))) + 1e-30
            delta = np.linalg.solve(jac + reg * np.eye(jac.shape[0]), -res)
        if not np.all(np.isfinite(delta)):
            break

        alpha = 1.0
        accepted = False
        while alpha >= 1e-14:
            trial = _clip_to_chart(theta + alpha * delta)
            trial_res = _residual_flat(model, trial, u, tau_int)
            trial_merit = float(trial_res @ trial_res)
            if trial_merit <= merit * (1.0 - 1e-4 * alpha) or (
                trial_merit <= merit and float(np.max(np.abs(trial_res))) <= tol
            ):
                theta, res, merit = trial, trial_res, trial_merit
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        iterations += 1
        converged = float(np.max(np.abs(res))) <= tol

    return EquilibriumReport(
        converged=bool(converged),
        residual_norm=float(np.max(np.abs(res))),
        iterations=iterations,
        theta=Configuration(theta),
    )
