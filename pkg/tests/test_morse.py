import numpy as np
import pytest

import morsecr as mc
from morsecr.morse import _bulk_counts, canonical_hemisphere
from tests.conftest import random_shape, random_unit


def rotation(rng):
    return mc.exp_so3(random_unit(rng) * rng.uniform(0.1, 3.0))


def rotated_shape(shape, rot):
    return mc.Shape(
        points=shape.points @ rot.T,
        tangents=shape.tangents @ rot.T,
        curvatures=shape.curvatures @ rot.T,
    )


def scaled_shape(shape, factor):
    return mc.Shape(
        points=shape.points * factor,
        tangents=shape.tangents,
        curvatures=shape.curvatures / factor,
    )


def shape_from_tangents(tangents, link=0.25):
    tangents = np.asarray(tangents, dtype=float)
    points = np.vstack([np.zeros(3), np.cumsum(link * tangents, axis=0)])
    curvatures = np.diff(tangents, axis=0) / link
    return mc.Shape(points=points, tangents=tangents, curvatures=curvatures)


# --- counting ----------------------------------------------------------------

def test_straight_shape_count_zero_generic():
    model = mc.straight_model(10)
    shape = mc.forward_kinematics(model, model.theta_bar)
    result = mc.morse_number(shape, mc.direction_initial(model))
    assert result.count == 0
    assert result.generic
    assert result.critical_joints == ()
    assert mc.classify(result) == "J"


def test_arc_count_one_against_oracle():
    arc = mc.CircularArc(length=1.0, turning=2.0)
    v = mc.Direction.of(0, 0, 1)
    assert mc.continuous_morse_count(arc, v) == 1
    robot, theta = mc.sample_to_model(arc, 120)
    shape = mc.forward_kinematics(robot, theta)
    result = mc.morse_number(shape, v)
    assert result.count == 1
    # the crossing sits where cumulative turning passes pi/2
    expected_joint = round(np.pi / 2 / 2.0 * 120)
    assert abs(result.critical_joints[0] - expected_joint) <= 1


def test_biarc_count_two_against_oracle():
    biarc = mc.Biarc(length=1.0, turning_first=2.0, turning_second=-2.0)
    v = mc.Direction.of(0, 0, 1)
    assert mc.continuous_morse_count(biarc, v) == 2
    robot, theta = mc.sample_to_model(biarc, 120)
    shape = mc.forward_kinematics(robot, theta)
    result = mc.morse_number(shape, v)
    assert result.count == 2
    assert mc.classify(result) == "S"


def test_count_bound(rng):
    for _ in range(30):
        shape = random_shape(rng)
        v = mc.Direction(random_unit(rng))
        assert mc.morse_number(shape, v).count <= shape.n_links - 1


def test_requires_two_tangents():
    shape = shape_from_tangents([[0, 0, 1.0]])
    with pytest.raises(ValueError, match="two tangents"):
        mc.morse_number(shape, mc.Direction.of(0, 0, 1))


# --- exact zeros -------------------------------------------------------------

def test_zero_run_collapses_to_single_crossing():
    # middle link exactly orthogonal to v: one crossing, flagged non-generic
    tangents = [[0, 0, 1.0], [1.0, 0, 0], [0, 0, -1.0]]
    shape = shape_from_tangents(tangents)
    result = mc.morse_number(shape, mc.Direction.of(0, 0, 1))
    assert not result.generic
    assert result.critical_joints == (1,)
    assert result.count == 1
    assert mc.classify(result) == "C?"


def test_zero_run_without_sign_change_not_counted():
    tangents = [[0, 0, 1.0], [1.0, 0, 0], [0, 0, 1.0]]
    shape = shape_from_tangents(tangents)
    result = mc.morse_number(shape, mc.Direction.of(0, 0, 1))
    assert not result.generic
    assert result.critical_joints == ()
    assert result.count == 0


def test_boundary_zero_run_not_counted():
    tangents = [[1.0, 0, 0], [0, 0, 1.0], [0, 0, 1.0]]
    shape = shape_from_tangents(tangents)
    result = mc.morse_number(shape, mc.Direction.of(0, 0, 1))
    assert not result.generic
    assert result.count == 0


def test_degenerate_crossing_flagged_and_excluded():
    # opposite tiny projections with near-zero curvature projection
    eps = 1e-12
    t0 = np.array([np.sqrt(1 - eps**2), 0, eps])
    t1 = np.array([np.sqrt(1 - eps**2), 0, -eps])
    shape = shape_from_tangents([t0, t1, t1])
    result = mc.morse_number(shape, mc.Direction.of(0, 0, 1), eps_tan=1e-15)
    assert result.critical_joints == (1,)
    assert result.degenerate_flags == (True,)
    assert result.count == 0


# --- symmetry properties -----------------------------------------------------

def test_sign_symmetry(rng):
    for _ in range(50):
        shape = random_shape(rng)
        v = random_unit(rng)
        a = mc.morse_number(shape, mc.Direction(v))
        b = mc.morse_number(shape, mc.Direction(-v))
        assert a.count == b.count
        assert a.critical_joints == b.critical_joints


def test_rigid_equivariance(rng):
    for _ in range(50):
        shape = random_shape(rng)
        v = random_unit(rng)
        rot = rotation(rng)
        a = mc.morse_number(shape, mc.Direction(v))
        b = mc.morse_number(rotated_shape(shape, rot), mc.Direction(rot @ v))
        assert a.count == b.count
        assert a.critical_joints == b.critical_joints


def test_scale_invariance(rng):
    for _ in range(50):
        shape = random_shape(rng)
        v = mc.Direction(random_unit(rng))
        factor = rng.uniform(0.05, 20.0)
        a = mc.morse_number(shape, v)
        b = mc.morse_number(scaled_shape(shape, factor), v)
        assert a.count == b.count
        assert a.critical_joints == b.critical_joints
        assert a.degenerate_flags == b.degenerate_flags


# --- classification ----------------------------------------------------------

def test_classify_labels():
    def result(count, generic=True):
        return mc.MorseResult(
            direction=mc.Direction.of(0, 0, 1), count=count,
            critical_joints=tuple(range(1, count + 1)),
            degenerate_flags=(False,) * count, generic=generic,
        )

    assert mc.classify(result(0)) == "J"
    assert mc.classify(result(1)) == "C"
    assert mc.classify(result(2)) == "S"
    assert mc.classify(result(3)) == "M3"
    assert mc.classify(result(5)) == "M5"
    assert mc.classify(result(0, generic=False)) == "J?"


# --- direction strategies ----------------------------------------------------

def test_direction_initial_straight_and_rotated(rng):
    model = mc.straight_model(5)
    assert np.array_equal(mc.direction_initial(model).v, [0, 0, 1])
    rot = rotation(rng)
    rotated = mc.make_model(
        link_lengths=model.link_lengths,
        ref_tangents=model.ref_tangents @ rot.T,
        ref_normals=model.ref_normals @ rot.T,
        stiffness=model.stiffness,
    )
    assert np.allclose(mc.direction_initial(rotated).v, rot @ [0, 0, 1], atol=1e-15)
    assert np.linalg.norm(mc.direction_initial(rotated).v) == pytest.approx(1.0)


def test_distal_orthogonal_straight_falls_back():
    model = mc.straight_model(6)
    shape = mc.forward_kinematics(model, model.theta_bar)
    v = mc.direction_distal_orthogonal(shape, base_tangent=model.ref_tangents[0])
    assert abs(v.v @ shape.tangents[-1]) <= 1e-12
    assert np.array_equal(v.v, [1, 0, 0])


def test_distal_orthogonal_quarter_arc_returns_initial_tangent():
    arc = mc.CircularArc(length=1.0, turning=np.pi / 2)
    robot, theta = mc.sample_to_model(arc, 200)
    shape = mc.forward_kinematics(robot, theta)
    v = mc.direction_distal_orthogonal(shape, base_tangent=[0.0, 0.0, 1.0])
    assert abs(v.v @ shape.tangents[-1]) <= 1e-12
    # for a 90-degree arc the in-plane orthogonal of the distal tangent is
    # the initial tangent itself (up to discretization of the half-chord)
    assert v.v @ np.array([0, 0, 1.0]) > 0.999
    assert v.v[1] == pytest.approx(0.0, abs=1e-12)


def test_distal_orthogonal_is_orthogonal(rng):
    for _ in range(20):
        shape = random_shape(rng)
        v = mc.direction_distal_orthogonal(shape)
        assert abs(v.v @ shape.tangents[-1]) <= 1e-12


# --- max search --------------------------------------------------------------

def test_max_search_straight_returns_tiebreak_direction():
    model = mc.straight_model(8)
    shape = mc.forward_kinematics(model, model.theta_bar)
    direction, result = mc.direction_max_search(shape, n_samples=64)
    assert result.count == 0
    # all candidates tie at zero: the winner has the smallest polar angle,
    # so it can only sit closer to the pole than the best lattice point,
    # and repeated runs return it bit-identically
    lattice = mc.hemisphere_lattice(64)
    assert direction.v[2] >= lattice[:, 2].max()
    again, _ = mc.direction_max_search(shape, n_samples=64)
    assert np.array_equal(direction.v, again.v)


def test_max_search_dominates_sampled_directions():
    biarc = mc.Biarc(length=1.0, turning_first=2.0, turning_second=-2.0)
    robot, theta = mc.sample_to_model(biarc, 100)
    shape = mc.forward_kinematics(robot, theta)
    direction, result = mc.direction_max_search(shape, n_samples=64)
    assert result.count == 2
    counts, _ = _bulk_counts(shape, mc.hemisphere_lattice(64), 1e-10, 1e-8)
    assert result.count >= counts.max()


def test_max_search_matches_dense_oracle_maximum():
    helix = mc.Helix(length=1.0, turns=2.5, radius=0.05)
    robot, theta = mc.sample_to_model(helix, 200)
    shape = mc.forward_kinematics(robot, theta)
    _, result = mc.direction_max_search(shape, n_samples=62)
    oracle_max = max(
        mc.continuous_morse_count(helix, mc.Direction(canonical_hemisphere(p)))
        for p in mc.hemisphere_lattice(62)
    )
    assert result.count == oracle_max


def test_max_search_dominates_named_strategies(rng):
    for _ in range(10):
        shape = random_shape(rng, n_joints=16)
        initial = mc.Direction.of(0, 0, 1)
        distal = mc.direction_distal_orthogonal(shape, base_tangent=[0, 0, 1.0])
        _, result = mc.direction_max_search(
            shape, n_samples=64, extra_candidates=(initial, distal)
        )
        assert result.count >= mc.morse_number(shape, initial).count
        assert result.count >= mc.morse_number(shape, distal).count


def test_max_search_rejects_small_lattice():
    model = mc.straight_model(4)
    shape = mc.forward_kinematics(model, model.theta_bar)
    with pytest.raises(ValueError, match="n_samples"):
        mc.direction_max_search(shape, n_samples=16)


def test_direction_validation():
    with pytest.raises(ValueError, match="unit"):
        mc.Direction([1.0, 1.0, 0.0])
    v = mc.Direction.of(2.0, 0.0, 0.0)
    assert np.array_equal(v.v, [1, 0, 0])
