import numpy as np
import pytest

import morsecr as mc


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_configuration(rng, n_joints, max_norm=1.2):
    """Random joint vector with per-joint magnitude at most ``max_norm``."""
    joints = rng.standard_normal((n_joints, 3))
    norms = np.linalg.norm(joints, axis=1, keepdims=True)
    scales = rng.uniform(0.05 * max_norm, max_norm, (n_joints, 1))
    return mc.Configuration(joints / norms * scales)


def random_shape(rng, n_joints=None):
    """Shape of a straight robot at a random configuration."""
    if n_joints is None:
        n_joints = int(rng.integers(8, 25))
    model = mc.straight_model(n_joints)
    return mc.forward_kinematics(model, random_configuration(rng, n_joints))


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)
