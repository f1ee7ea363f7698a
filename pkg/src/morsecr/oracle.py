"""Analytic centerline generators and a dense-sampling critical-point count.

These curves have closed-form positions and derivatives, so they provide
ground truth for the discrete descriptor through an independent path:
sample the height-function derivative densely, bracket its sign changes,
and refine each by bisection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .model import (
    Configuration,
    RobotModel,
    make_model,
    orthogonal_completion,
)
from .morse import Direction

MIN_DENSE = 10_000
BISECTION_TOL = 1e-12   # arc-length tolerance of refined crossings
DEGENERACY_TOL = 1e-9   # |v . p''| at a crossing must exceed this


class DegenerateCrossingWarning(UserWarning):
    """A refined crossing failed the second-derivative test."""


@dataclass(frozen=True)
class AnalyticCurve:
    """Arc-length parameterized curve with closed-form derivatives.

    Subclasses implement ``point``, ``tangent`` and ``second_derivative``
    for scalar or vectorized arc length ``s`` in [0, length]; tangents are
    unit vectors by construction.
    """

    length: float

    kind = "abstract"

    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def second_derivative(self, s):
        raise NotImplementedError


@dataclass(frozen=True)
class StraightLine(AnalyticCurve):
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)

    kind = "straight"

    def _dir(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=np.float64)
        return d / np.linalg.norm(d)

    def point(self, s):
        s = np.asarray(s, dtype=np.float64)
        return s[..., None] * self._dir()

    def tangent(self, s):
        s = np.asarray(s, dtype=np.float64)
        return np.broadcast_to(self._dir(), s.shape + (3,)).copy()

    def second_derivative(self, s):
        s = np.asarray(s, dtype=np.float64)
        return np.zeros(s.shape + (3,))


@dataclass(frozen=True)
class CircularArc(AnalyticCurve):
    """Planar arc in the x-z plane, starting along +z, turning toward +x."""

    turning: float = 1.0

    kind = "arc"

    def __post_init__(self):
        if self.turning == 0:
            raise ValueError("turning: must be nonzero (use StraightLine)")

    def _angle(self, s):
        return self.turning * np.asarray(s, dtype=np.float64) / self.length

    def point(self, s):
        phi = self._angle(s)
        radius = self.length / self.turning
        return np.stack(
            [radius * (1.0 - np.cos(phi)), np.zeros_like(phi),
             radius * np.sin(phi)], axis=-1
        )

    def tangent(self, s):
        phi = self._angle(s)
        return np.stack([np.sin(phi), np.zeros_like(phi), np.cos(phi)], axis=-1)

    def second_derivative(self, s):
        phi = self._angle(s)
        rate = self.turning / self.length
        return rate * np.stack(
            [np.cos(phi), np.zeros_like(phi), -np.sin(phi)], axis=-1
        )


@dataclass(frozen=True)
class Biarc(AnalyticCurve):
    """Two arcs of equal length in the x-z plane with independent turnings."""

    turning_first: float = 2.0
    turning_second: float = -2.0

    kind = "biarc"

    def _angle(self, s):
        s = np.asarray(s, dtype=np.float64)
        half = self.length / 2.0
        k1 = self.turning_first / half
        k2 = self.turning_second / half
        return np.where(
            s < half, k1 * s, self.turning_first + k2 * (s - half)
        )

    def _rate(self, s):
        s = np.asarray(s, dtype=np.float64)
        half = self.length / 2.0
        return np.where(s < half, self.turning_first / half,
                        self.turning_second / half)

    def point(self, s):
        s = np.asarray(s, dtype=np.float64)
        half = self.length / 2.0
        k1 = self.turning_first / half
        k2 = self.turning_second / half
        phi1 = np.minimum(s, half) * k1
        x1 = (1.0 - np.cos(phi1)) / k1
        z1 = np.sin(phi1) / k1
        s2 = np.maximum(s - half, 0.0)
        phi_mid = self.turning_first
        phi2 = phi_mid + k2 * s2
        x2 = (np.cos(phi_mid) - np.cos(phi2)) / k2
        z2 = (np.sin(phi2) - np.sin(phi_mid)) / k2
        return np.stack(
            [x1 + x2, np.zeros_like(x1), z1 + z2], axis=-1
        )

    def tangent(self, s):
        phi = self._angle(s)
        return np.stack([np.sin(phi), np.zeros_like(phi), np.cos(phi)], axis=-1)

    def second_derivative(self, s):
        phi = self._angle(s)
        rate = self._rate(s)
        return rate[..., None] * np.stack(
            [np.cos(phi), np.zeros_like(phi), -np.sin(phi)], axis=-1
        )


@dataclass(frozen=True)
class Helix(AnalyticCurve):
    """Circular helix around the z axis with unit-speed parameterization."""

    turns: float = 2.5
    radius: float = 0.05

    kind = "helix"

    def __post_init__(self):
        if self.radius * self._omega() >= 1.0:
            raise ValueError(
                "radius: incompatible with unit speed (radius * rate >= 1)"
            )

    def _omega(self) -> float:
        return 2.0 * np.pi * self.turns / self.length

    def _climb(self) -> float:
        w = self.radius * self._omega()
        return float(np.sqrt(1.0 - w * w))

    def point(self, s):
        s = np.asarray(s, dtype=np.float64)
        w = self._omega()
        return np.stack(
            [self.radius * (np.cos(w * s) - 1.0), self.radius * np.sin(w * s),
             self._climb() * s], axis=-1
        )

    def tangent(self, s):
        s = np.asarray(s, dtype=np.float64)
        w = self._omega()
        rw = self.radius * w
        return np.stack(
            [-rw * np.sin(w * s), rw * np.cos(w * s),
             np.full_like(s, self._climb())], axis=-1
        )

    def second_derivative(self, s):
        s = np.asarray(s, dtype=np.float64)
        w = self._omega()
        rww = self.radius * w * w
        return np.stack(
            [-rww * np.cos(w * s), -rww * np.sin(w * s), np.zeros_like(s)],
            axis=-1
        )


def continuous_critical_points(
    curve: AnalyticCurve, direction: Direction, n_dense: int = MIN_DENSE
) -> tuple[np.ndarray, np.ndarray]:
    """Refined crossings of the projected tangent on the open curve interior.

    Returns (crossing arc lengths, second-derivative projections there).
    """
    if n_dense < MIN_DENSE:
        raise ValueError(f"n_dense: must be >= {MIN_DENSE}")
    v = direction.v
    s = (np.arange(n_dense) + 0.5) * (curve.length / n_dense)
    g = curve.tangent(s) @ v
    bracket = np.nonzero(g[:-1] * g[1:] < 0.0)[0]
    roots = []
    for idx in bracket:
        lo, hi = s[idx], s[idx + 1]
        g_lo = g[idx]
        while hi - lo > BISECTION_TOL:
            mid = 0.5 * (lo + hi)
            g_mid = float(curve.tangent(mid) @ v)
            if g_lo * g_mid <= 0.0:
                hi = mid
            else:
                lo, g_lo = mid, g_mid
        roots.append(0.5 * (lo + hi))
    roots_arr = np.array(roots)
    second = (
        curve.second_derivative(roots_arr) @ v if roots else np.empty(0)
    )
    return roots_arr, second


def continuous_morse_count(
    curve: AnalyticCurve, direction: Direction, n_dense: int = MIN_DENSE
) -> int:
    """Non-degenerate critical-point count by dense sampling and bisection.

    Degenerate crossings (second-derivative projection at or below 1e-9 in
    magnitude) are excluded from the count and reported via a warning.
    """
    roots, second = continuous_critical_points(curve, direction, n_dense)
    degenerate = np.abs(second) <= DEGENERACY_TOL
    if np.any(degenerate):
        warnings.warn(
            f"{int(degenerate.sum())} degenerate crossing(s) skipped",
            DegenerateCrossingWarning,
            stacklevel=2,
        )
    return int(np.count_nonzero(~degenerate))


def resolvable_at(
    crossings: np.ndarray, length: float, n_joints: int
) -> bool:
    """Whether a discretization with ``n_joints`` links can see every crossing.

    The discrete descriptor compares consecutive link tangents, so it has no
    data within the first and last link and cannot separate crossings closer
    than two links; directions violating either margin are excluded from
    discrete-continuous comparisons the same way non-generic ones are.
    """
    if crossings.size == 0:
        return True
    h = length / n_joints
    if float(np.min(crossings)) < h or float(np.max(crossings)) > length - h:
        return False
    if crossings.size > 1 and float(np.min(np.diff(crossings))) < 2.0 * h:
        return False
    return True


def _minimal_rotation_vector(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Axis-angle of the smallest rotation taking unit vector a to b."""
    axis = np.cross(a, b)
    sin_a = float(np.linalg.norm(axis))
    cos_a = float(a @ b)
    angle = np.arctan2(sin_a, cos_a)
    if angle >= np.pi - 1e-9:
        raise ValueError("consecutive tangents nearly opposite: exceeds chart bound")
    if sin_a < 1e-300:
        return np.zeros(3)
    return axis * (angle / sin_a)


def sample_to_model(
    curve: AnalyticCurve, n_joints: int
) -> tuple[RobotModel, Configuration]:
    """Discretize a curve at uniform arc-length nodes into a robot model.

    The model has a straight reference along the first chord; joint angles
    are recovered from consecutive chord directions so forward kinematics
    reproduces the chord polyline (up to the translation placing the first
    node at the origin).  Fails when a chord-to-chord rotation reaches the
    chart bound.
    """
    if n_joints < 2:
        raise ValueError("n_joints: must be >= 2")
    nodes = np.linspace(0.0, curve.length, n_joints + 1)
    points = curve.point(nodes)
    chords = np.diff(points, axis=0)
    lengths = np.linalg.norm(chords, axis=1)
    units = chords / lengths[:, None]

    theta = np.zeros((n_joints, 3))
    chain = np.eye(3)
    for i in range(1, n_joints):
        try:
            world = _minimal_rotation_vector(units[i - 1], units[i])
        except ValueError as err:
            raise ValueError(f"joint {i}: {err}") from None
        theta[i] = chain.T @ world
        # chain <- A_i chain keeps chain == R_0^i (world-frame composition).
        chain = _backend.rodrigues(world) @ chain

    base = units[0]
    model = make_model(
        link_lengths=lengths,
        ref_tangents=np.tile(base, (n_joints, 1)),
        ref_normals=np.tile(orthogonal_completion(base), (n_joints, 1)),
        stiffness=np.ones((n_joints, 3)),
    )
    return model, Configuration(theta)
