"""Discrete-link kinematic model of a slender elastic robot.

A robot is a chain of N rigid links joined by elastic rotational joints.
Each joint carries an axis-angle rotation vector; link tangents follow from
the cumulative rotation products applied to the straight reference frames,
and positions from summing the link vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _backend

TRIAD_TOL = 1e-12
POSE_TOL = 1e-10


class ChartBoundError(ValueError):
    """Axis-angle magnitude at or beyond pi, outside the rotation chart."""


def _frozen_array(values, shape=None) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    if shape is not None:
        out = out.reshape(shape)
    out.flags.writeable = False
    return out


def skew(w) -> np.ndarray:
    """Cross-product matrix: skew(w) @ x == cross(w, x)."""
    x, y, z = np.asarray(w, dtype=np.float64)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_so3(w) -> np.ndarray:
    """Rotation matrix for an axis-angle vector with magnitude below pi.

    Uses the closed Rodrigues form with a series fallback for magnitudes
    under 1e-6.  Raises ChartBoundError when ``|w| >= pi``.
    """
    w = np.asarray(w, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(w))
    if n >= np.pi:
        raise ChartBoundError(
            f"rotation magnitude {n:.6g} is outside the chart bound pi"
        )
    return _backend.rodrigues(w)


@dataclass(frozen=True)
class Configuration:
    """Joint rotation vectors, one axis-angle 3-vector per joint.

    Accepts an (N, 3) array or a flat (3N,) vector.  Every joint rotation
    must stay strictly inside the chart bound ``|theta_i| < pi``.
    """

    joints: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.joints, dtype=np.float64)
        if arr.ndim == 1:
            if arr.size % 3:
                raise ValueError(f"theta: length {arr.size} is not a multiple of 3")
            arr = arr.reshape(-1, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"theta: expected (N, 3) or (3N,), got {arr.shape}")
        norms = np.linalg.norm(arr, axis=1)
        bad = np.nonzero(norms >= np.pi)[0]
        if bad.size:
            i = int(bad[0])
            raise ChartBoundError(
                f"theta[{i}]: rotation magnitude {norms[i]:.6g} is outside the "
                "chart bound pi"
            )
        object.__setattr__(self, "joints", _frozen_array(arr))

    @property
    def n_joints(self) -> int:
        return self.joints.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.joints.reshape(-1)


@dataclass(frozen=True)
class ActuatorElement:
    """One actuation element embedded in the robot.

    ``tendon``: terminates at a joint, routed at angle ``beta`` in the
    cross-section plane spanned by the reference normal/binormal, acting on
    a moment arm.  ``magnet``: a body-frame dipole attached at a joint,
    loaded by a uniform external field.  ``direct``: marker admitting raw
    joint-torque commands.
    """

    kind: str
    termination: int | None = None
    beta: float | None = None
    moment_arm: float | None = None
    joint: int | None = None
    moment: np.ndarray | None = None

    @classmethod
    def tendon(cls, termination: int, beta: float, moment_arm: float):
        return cls(kind="tendon", termination=int(termination), beta=float(beta),
                   moment_arm=float(moment_arm))

    @classmethod
    def magnet(cls, joint: int, moment):
        return cls(kind="magnet", joint=int(joint),
                   moment=_frozen_array(moment, (3,)))

    @classmethod
    def direct(cls):
        return cls(kind="direct")


@dataclass(frozen=True)
class RobotModel:
    """Immutable robot description: geometry, frames, stiffness, actuators.

    Build instances through :func:`make_model` (or :func:`load_model` /
    :func:`model_from_dict` for the JSON form), which validate every
    invariant; the raw constructor performs no checks.
    """

    link_lengths: np.ndarray      # (N,) link lengths, m
    ref_tangents: np.ndarray      # (N, 3) reference tangent per joint
    ref_normals: np.ndarray       # (N, 3) reference cross-section normal
    ref_binormals: np.ndarray     # (N, 3) tangent x normal
    stiffness: np.ndarray         # (N, 3) rotational stiffness, N*m/rad
    theta_bar: Configuration      # reference joint values
    actuators: tuple[ActuatorElement, ...]
    ref_distal_pose: np.ndarray   # (4, 4) distal frame in the world frame

    @property
    def n_joints(self) -> int:
        return self.link_lengths.shape[0]

    @property
    def total_length(self) -> float:
        return float(self.link_lengths.sum())

    @property
    def stiffness_flat(self) -> np.ndarray:
        """Diagonal of the (3N, 3N) stiffness matrix."""
        return self.stiffness.reshape(-1)

    def actuators_of(self, kind: str) -> tuple[ActuatorElement, ...]:
        return tuple(a for a in self.actuators if a.kind == kind)


@dataclass(frozen=True)
class Shape:
    """Polyline realization of a configuration: points, tangents, curvatures.

    ``points[0]`` sits at the world origin; ``curvatures[i-1]`` holds the
    finite difference (t_i - t_{i-1}) / l_i at interior joint i.
    """

    points: np.ndarray       # (N+1, 3)
    tangents: np.ndarray     # (N, 3) unit link directions
    curvatures: np.ndarray   # (N-1, 3)

    @property
    def n_links(self) -> int:
        return self.tangents.shape[0]

    @property
    def total_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def compose_chain(theta) -> np.ndarray:
    """Cumulative joint rotations R_0 R_1 ... R_i for i = 0..N-1.

    Accepts a Configuration or an (N, 3) / (3N,) array; reports the first
    joint whose rotation magnitude breaks the chart bound.
    """
    joints = theta.joints if isinstance(theta, Configuration) else Configuration(theta).joints
    return _backend.rotation_chains(joints)


def forward_kinematics(model: RobotModel, theta: Configuration) -> Shape:
    """Shape of the robot at configuration ``theta``.

    Tangents are the chain rotations applied to the reference tangents;
    points accumulate link vectors from the origin; curvatures are exact
    finite differences of consecutive tangents.
    """
    if theta.n_joints != model.n_joints:
        raise ValueError(
            f"theta: {theta.n_joints} joints, model has {model.n_joints}"
        )
    chains = _backend.rotation_chains(theta.joints)
    tangents = np.einsum("nij,nj->ni", chains, model.ref_tangents)
    points = np.zeros((model.n_joints + 1, 3))
    np.cumsum(model.link_lengths[:, None] * tangents, axis=0, out=points[1:])
    curvatures = np.diff(tangents, axis=0) / model.link_lengths[1:, None]
    return Shape(
        points=_frozen_array(points),
        tangents=_frozen_array(tangents),
        curvatures=_frozen_array(curvatures),
    )


def linearized_curvature(theta_i, tbar_i, l_i: float) -> np.ndarray:
    """First-order curvature estimate cross(theta_i, tbar_i) / l_i.

    Small-angle approximation of the exact finite-difference curvature;
    ``tbar_i`` must be a unit vector.
    """
    theta_i = np.asarray(theta_i, dtype=np.float64)
    tbar_i = np.asarray(tbar_i, dtype=np.float64)
    return np.cross(theta_i, tbar_i) / float(l_i)


def distal_pose(model: RobotModel, theta: Configuration) -> np.ndarray:
    """Homogeneous pose of the distal frame: last chain rotation applied to
    the last reference triad, located at the final point."""
    shape = forward_kinematics(model, theta)
    chains = _backend.rotation_chains(theta.joints)
    triad = np.column_stack(
        (model.ref_tangents[-1], model.ref_normals[-1], model.ref_binormals[-1])
    )
    pose = np.eye(4)
    pose[:3, :3] = chains[-1] @ triad
    pose[:3, 3] = shape.points[-1]
    return pose


def orthogonal_completion(t) -> np.ndarray:
    """Deterministic unit vector orthogonal to unit vector ``t``."""
    t = np.asarray(t, dtype=np.float64)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(t)))] = 1.0
    u = e - (e @ t) * t
    return u / np.linalg.norm(u)


def make_model(
    link_lengths,
    ref_tangents,
    ref_normals,
    stiffness,
    theta_bar=None,
    actuators=(),
    ref_distal_pose=None,
) -> RobotModel:
    """Validate and assemble a RobotModel.

    Binormals are computed as tangent x normal.  When ``ref_distal_pose``
    is given it is checked against forward kinematics at ``theta_bar`` to
    1e-10; otherwise it is computed.  Raises ValueError naming the first
    violated invariant.
    """
    lengths = np.asarray(link_lengths, dtype=np.float64).reshape(-1)
    n = lengths.shape[0]
    if n < 1:
        raise ValueError("link_lengths: at least one link required")
    bad = np.nonzero(~(lengths > 0))[0]
    if bad.size:
        raise ValueError(f"link_lengths[{bad[0]}]: must be > 0")

    tangents = np.asarray(ref_tangents, dtype=np.float64)
    normals = np.asarray(ref_normals, dtype=np.float64)
    if tangents.shape != (n, 3):
        raise ValueError(f"ref_frames: expected {n} tangent rows, got {tangents.shape}")
    if normals.shape != (n, 3):
        raise ValueError(f"ref_frames: expected {n} normal rows, got {normals.shape}")
    for i in range(n):
        if abs(np.linalg.norm(tangents[i]) - 1.0) > TRIAD_TOL:
            raise ValueError(f"ref_frames[{i}].t: not unit length")
        if abs(np.linalg.norm(normals[i]) - 1.0) > TRIAD_TOL:
            raise ValueError(f"ref_frames[{i}].u: not unit length")
        if abs(float(tangents[i] @ normals[i])) > TRIAD_TOL:
            raise ValueError(f"ref_frames[{i}]: t and u not orthogonal")
    binormals = np.cross(tangents, normals)

    stiff = np.asarray(stiffness, dtype=np.float64)
    if stiff.shape != (n, 3):
        raise ValueError(f"stiffness: expected shape ({n}, 3), got {stiff.shape}")
    bad = np.argwhere(~(stiff > 0))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"stiffness[{i}][{j}]: must be > 0")

    if theta_bar is None:
        theta_bar = Configuration(np.zeros((n, 3)))
    elif not isinstance(theta_bar, Configuration):
        theta_bar = Configuration(theta_bar)
    if theta_bar.n_joints != n:
        raise ValueError(
            f"theta_bar: {theta_bar.n_joints} joints, expected {n}"
        )

    acts = []
    for idx, act in enumerate(actuators):
        if act.kind == "tendon":
            if not 0 <= act.termination < n:
                raise ValueError(f"actuators[{idx}].termination: out of range [0, {n})")
            if not act.moment_arm > 0:
                raise ValueError(f"actuators[{idx}].moment_arm: must be > 0")
        elif act.kind == "magnet":
            if not 0 <= act.joint < n:
                raise ValueError(f"actuators[{idx}].joint: out of range [0, {n})")
            if not np.linalg.norm(act.moment) > 0:
                raise ValueError(f"actuators[{idx}].moment: must be nonzero")
        elif act.kind != "direct":
            raise ValueError(f"actuators[{idx}].kind: unknown kind {act.kind!r}")
        acts.append(act)

    model = RobotModel(
        link_lengths=_frozen_array(lengths),
        ref_tangents=_frozen_array(tangents),
        ref_normals=_frozen_array(normals),
        ref_binormals=_frozen_array(binormals),
        stiffness=_frozen_array(stiff),
        theta_bar=theta_bar,
        actuators=tuple(acts),
        ref_distal_pose=np.eye(4),
    )
    computed = distal_pose(model, theta_bar)
    if ref_distal_pose is not None:
        given = np.asarray(ref_distal_pose, dtype=np.float64)
        if given.shape != (4, 4):
            raise ValueError(f"ref_distal_pose: expected (4, 4), got {given.shape}")
        if np.max(np.abs(given - computed)) > POSE_TOL:
            raise ValueError(
                "ref_distal_pose: inconsistent with forward kinematics at "
                "theta_bar (exceeds 1e-10)"
            )
        computed = given
    object.__setattr__(model, "ref_distal_pose", _frozen_array(computed))
    return model


def straight_model(
    n_joints: int,
    total_length: float = 1.0,
    axis=(0.0, 0.0, 1.0),
    stiffness=1.0,
    actuators=(),
    theta_bar=None,
) -> RobotModel:
    """Uniform straight robot: equal links along ``axis``, identical frames.

    ``stiffness`` may be a scalar, a per-axis 3-vector, or an (N, 3) array.
    """
    if n_joints < 1:
        raise ValueError("n_joints: must be >= 1")
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    normal = orthogonal_completion(axis)
    lengths = np.full(n_joints, total_length / n_joints)
    stiff = np.asarray(stiffness, dtype=np.float64)
    if stiff.ndim == 0:
        stiff = np.full((n_joints, 3), float(stiff))
    elif stiff.shape == (3,):
        stiff = np.tile(stiff, (n_joints, 1))
    return make_model(
        link_lengths=lengths,
        ref_tangents=np.tile(axis, (n_joints, 1)),
        ref_normals=np.tile(normal, (n_joints, 1)),
        stiffness=stiff,
        theta_bar=theta_bar,
        actuators=actuators,
    )


def _actuator_from_dict(idx: int, entry: dict) -> ActuatorElement:
    kind = entry.get("kind")
    if kind == "tendon":
        for key in ("termination", "beta", "moment_arm"):
            if key not in entry:
                raise ValueError(f"actuators[{idx}].{key}: missing")
        return ActuatorElement.tendon(entry["termination"], entry["beta"],
                                      entry["moment_arm"])
    if kind == "magnet":
        for key in ("joint", "moment"):
            if key not in entry:
                raise ValueError(f"actuators[{idx}].{key}: missing")
        return ActuatorElement.magnet(entry["joint"], entry["moment"])
    if kind == "direct":
        return ActuatorElement.direct()
    raise ValueError(f"actuators[{idx}].kind: unknown kind {kind!r}")


def model_from_dict(doc: dict) -> RobotModel:
    """Build a RobotModel from the JSON document structure."""
    for key in ("n_joints", "link_lengths", "stiffness", "ref_frames"):
        if key not in doc:
            raise ValueError(f"{key}: missing")
    n = doc["n_joints"]
    if not isinstance(n, int) or n < 1:
        raise ValueError("n_joints: must be a positive integer")
    lengths = doc["link_lengths"]
    if len(lengths) != n:
        raise ValueError(f"link_lengths: expected {n} entries, got {len(lengths)}")
    frames = doc["ref_frames"]
    if len(frames) != n:
        raise ValueError(f"ref_frames: expected {n} entries, got {len(frames)}")
    tangents, normals = [], []
    for i, fr in enumerate(frames):
        if "t" not in fr or "u" not in fr:
            raise ValueError(f"ref_frames[{i}]: needs keys 't' and 'u'")
        tangents.append(fr["t"])
        normals.append(fr["u"])
    actuators = [
        _actuator_from_dict(i, entry)
        for i, entry in enumerate(doc.get("actuators", []))
    ]
    pose = None
    if "ref_distal_pose" in doc:
        entry = doc["ref_distal_pose"]
        pose = np.eye(4)
        pose[:3, :3] = np.asarray(entry["rotation"], dtype=np.float64)
        pose[:3, 3] = np.asarray(entry["translation"], dtype=np.float64)
    return make_model(
        link_lengths=lengths,
        ref_tangents=tangents,
        ref_normals=normals,
        stiffness=doc["stiffness"],
        theta_bar=doc.get("theta_bar"),
        actuators=actuators,
        ref_distal_pose=pose,
    )


def model_to_dict(model: RobotModel) -> dict:
    """JSON document structure for a RobotModel (inverse of model_from_dict)."""
    actuators = []
    for act in model.actuators:
        if act.kind == "tendon":
            actuators.append({"kind": "tendon", "termination": act.termination,
                              "beta": act.beta, "moment_arm": act.moment_arm})
        elif act.kind == "magnet":
            actuators.append({"kind": "magnet", "joint": act.joint,
                              "moment": act.moment.tolist()})
        else:
            actuators.append({"kind": "direct"})
    return {
        "n_joints": model.n_joints,
        "link_lengths": model.link_lengths.tolist(),
        "stiffness": model.stiffness.tolist(),
        "ref_frames": [
            {"t": model.ref_tangents[i].tolist(), "u": model.ref_normals[i].tolist()}
            for i in range(model.n_joints)
        ],
        "theta_bar": model.theta_bar.flat.tolist(),
        "actuators": actuators,
    }


def load_model(path) -> RobotModel:
    """Load and validate a robot model JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc)
