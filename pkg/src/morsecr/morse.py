"""Morse-number shape descriptor over directional projections.

The descriptor counts non-degenerate critical points of the height function
``s -> v . p(s)`` along a unit direction ``v``: on the discrete shape, a
critical point is a strict sign change of consecutive tangent projections,
and it is non-degenerate when the curvature projection at the attributed
joint is resolvably nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import RobotModel, Shape, orthogonal_completion

DEFAULT_EPS_TAN = 1e-10   # |v.t| at or below this counts as an exact zero
DEFAULT_EPS_DEG = 1e-8    # degeneracy bound on the dimensionless |v.k| * L
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
# Radius of the refinement cap; chosen so a same-size lattice on the cap has
# one tenth the angular pitch of the hemisphere lattice, independent of n.
REFINE_CAP_RADIUS = math.sqrt(2.0) / 10.0


@dataclass(frozen=True)
class Direction:
    """Unit projection direction on the sphere."""

    v: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.v, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(arr) - 1.0) > 1e-12:
            raise ValueError("direction: not unit length")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "v", arr)

    @classmethod
    def of(cls, x: float, y: float, z: float) -> "Direction":
        """Normalize and wrap an arbitrary nonzero vector."""
        arr = np.array([x, y, z], dtype=np.float64)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("direction: zero vector")
        return cls(arr / norm)


@dataclass(frozen=True)
class MorseResult:
    """Descriptor outcome for one shape and direction.

    ``critical_joints`` lists every attributed crossing, degenerate ones
    included; ``count`` is the number of non-degenerate crossings.
    ``generic`` is false when any tangent projection is an exact zero.
    """

    direction: Direction
    count: int
    critical_joints: tuple[int, ...]
    degenerate_flags: tuple[bool, ...]
    generic: bool


def _sign_crossings(f: np.ndarray, eps_tan: float) -> tuple[list[int], bool]:
    """Attributed crossing joints of the projection sequence ``f``.

    A crossing occurs between consecutive entries of opposite strict sign
    and is attributed to the joint between them.  Runs of exact zeros
    (|f| <= eps_tan) are collapsed: they yield one crossing, attributed to
    the joint entering the run, only when the flanking signs differ; any
    exact zero marks the direction non-generic.
    """
    zero = np.abs(f) <= eps_tan
    generic = not bool(zero.any())
    nonzero = np.nonzero(~zero)[0]
    joints: list[int] = []
    for left, right in zip(nonzero[:-1], nonzero[1:]):
        if f[left] * f[right] < 0.0:
            joints.append(int(left) + 1)
    return joints, generic


def morse_number(
    shape: Shape,
    direction: Direction,
    eps_tan: float = DEFAULT_EPS_TAN,
    eps_deg: float = DEFAULT_EPS_DEG,
) -> MorseResult:
    """Count non-degenerate critical points of the directional projection.

    Degeneracy is tested on the scale-free quantity ``|v . k_i| * L`` with
    the exact finite-difference curvature, so uniformly rescaling the robot
    leaves the outcome unchanged.  Non-generic directions are reported via
    the ``generic`` flag, never raised.
    """
    if shape.n_links < 2:
        raise ValueError("shape: need at least two tangents")
    v = direction.v
    f = shape.tangents @ v
    joints, generic = _sign_crossings(f, eps_tan)
    total = shape.total_length
    flags = [
        bool(abs(float(shape.curvatures[j - 1] @ v)) * total <= eps_deg)
        for j in joints
    ]
    count = sum(1 for flag in flags if not flag)
    return MorseResult(
        direction=direction,
        count=count,
        critical_joints=tuple(joints),
        degenerate_flags=tuple(flags),
        generic=generic,
    )


def classify(result: MorseResult) -> str:
    """Label a descriptor outcome: 0 -> J, 1 -> C, 2 -> S, k -> M<k>.

    Non-generic results carry a trailing ``?``.
    """
    label = {0: "J", 1: "C", 2: "S"}.get(result.count, f"M{result.count}")
    return label + ("" if result.generic else "?")


def direction_initial(model: RobotModel) -> Direction:
    """Projection along the reference tangent of the first joint."""
    return Direction(model.ref_tangents[0])


def direction_distal_orthogonal(shape: Shape, base_tangent=None) -> Direction:
    """Unit direction orthogonal to the distal tangent.

    The result lies in the plane spanned by ``base_tangent`` (the reference
    initial tangent when available; the shape's first tangent otherwise)
    and the distal tangent, oriented to a non-negative dot product with the
    base; a fixed orthogonal completion is the fallback when the two are
    parallel.
    """
    distal = shape.tangents[-1]
    base = shape.tangents[0] if base_tangent is None else np.asarray(
        base_tangent, dtype=np.float64
    )
    in_plane = base - (base @ distal) * distal
    norm = float(np.linalg.norm(in_plane))
    if norm <= 1e-9:
        return Direction(orthogonal_completion(distal))
    return Direction(in_plane / norm)


def hemisphere_lattice(n: int) -> np.ndarray:
    """Fibonacci lattice of ``n`` points on the open upper hemisphere."""
    i = np.arange(n)
    z = (i + 0.5) / n
    radius = np.sqrt(1.0 - z * z)
    azimuth = GOLDEN_ANGLE * i
    return np.column_stack((radius * np.cos(azimuth), radius * np.sin(azimuth), z))


def _cap_lattice(center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Fibonacci lattice on a spherical cap of angular ``radius`` at ``center``."""
    i = np.arange(n)
    z = 1.0 - (i + 0.5) / n * (1.0 - math.cos(radius))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    azimuth = GOLDEN_ANGLE * i
    local = np.column_stack((r * np.cos(azimuth), r * np.sin(azimuth), z))
    pole = np.array([0.0, 0.0, 1.0])
    axis = np.cross(pole, center)
    sin_a = float(np.linalg.norm(axis))
    cos_a = float(center[2])
    if sin_a < 1e-15:
        return local if cos_a > 0 else -local
    axis = axis / sin_a
    angle = math.atan2(sin_a, cos_a)
    kmat = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    rot = np.eye(3) + math.sin(angle) * kmat + (1 - math.cos(angle)) * (kmat @ kmat)
    return local @ rot.T


def canonical_hemisphere(v: np.ndarray) -> np.ndarray:
    """Map a unit vector to the closed upper hemisphere representative."""
    if v[2] < 0 or (v[2] == 0 and (v[1] < 0 or (v[1] == 0 and v[0] < 0))):
        return -v
    return v


def _order_key(v: np.ndarray) -> tuple[float, float]:
    """Tie-break key: smaller polar angle first, then smaller azimuth."""
    azimuth = math.atan2(v[1], v[0]) % (2.0 * math.pi)
    return (-v[2], azimuth)


def _bulk_counts(
    shape: Shape, dirs: np.ndarray, eps_tan: float, eps_deg: float
) -> tuple[np.ndarray, np.ndarray]:
    """Descriptor counts and generic flags for many directions at once."""
    f = shape.tangents @ dirs.T                     # (N, M)
    zero = np.abs(f) <= eps_tan
    generic = ~zero.any(axis=0)
    crossing = f[:-1] * f[1:] < 0.0                 # (N-1, M)
    total = shape.total_length
    degenerate = np.abs(shape.curvatures @ dirs.T) * total <= eps_deg
    counts = (crossing & ~degenerate).sum(axis=0)
    slow = np.nonzero(~generic)[0]
    for m in slow:
        joints, _ = _sign_crossings(f[:, m], eps_tan)
        counts[m] = sum(
            1 for j in joints
            if abs(float(shape.curvatures[j - 1] @ dirs[m])) * total > eps_deg
        )
    return counts.astype(int), generic


def direction_max_search(
    shape: Shape,
    n_samples: int = 256,
    eps_tan: float = DEFAULT_EPS_TAN,
    eps_deg: float = DEFAULT_EPS_DEG,
    extra_candidates: tuple[Direction, ...] = (),
) -> tuple[Direction, MorseResult]:
    """Search the hemisphere for a direction maximizing the Morse number.

    Evaluates a Fibonacci lattice of ``n_samples`` directions (opposite
    directions are equivalent, so a hemisphere suffices), then refines once
    with an equal-size lattice on a cap around the best at a tenth of the
    angular pitch.  ``extra_candidates`` join the pool, which makes the
    result dominate any strategy whose direction is passed in.  Ties break
    toward the smallest polar angle, then the smallest azimuth.
    """
    if n_samples < 32:
        raise ValueError("n_samples: must be >= 32")
    stacked = [hemisphere_lattice(n_samples)]
    if extra_candidates:
        stacked.append(
            np.array([canonical_hemisphere(d.v) for d in extra_candidates])
        )
    candidates = np.vstack(stacked)

    def best_of(cands: np.ndarray, incumbent=None):
        counts, _ = _bulk_counts(shape, cands, eps_tan, eps_deg)
        best = incumbent
        for idx in range(cands.shape[0]):
            entry = (int(counts[idx]), cands[idx])
            if best is None:
                best = entry
                continue
            if entry[0] > best[0] or (
                entry[0] == best[0] and _order_key(entry[1]) < _order_key(best[1])
            ):
                best = entry
        return best

    best = best_of(candidates)
    local = np.array(
        [canonical_hemisphere(v) for v in
         _cap_lattice(best[1], REFINE_CAP_RADIUS, n_samples)]
    )
    best = best_of(local, incumbent=best)
    winner = Direction(best[1] / np.linalg.norm(best[1]))
    return winner, morse_number(shape, winner, eps_tan, eps_deg)
