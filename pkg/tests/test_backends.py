import numpy as np
import pytest

from morsecr import _purepy

try:
    from morsecr import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled kernel unavailable")


@needs_core
def test_rodrigues_batch_agreement(rng):
    w = rng.standard_normal((200, 3))
    w[:50] *= 1e-8 / np.linalg.norm(w[:50], axis=1, keepdims=True)
    a = _purepy.rodrigues_batch(w)
    b = _core.rodrigues_batch(w)
    assert np.max(np.abs(a - b)) <= 1e-14


@needs_core
def test_rotation_chains_agreement(rng):
    thetas = 0.4 * rng.standard_normal((16, 30, 3))
    a = _purepy.rotation_chains(thetas)
    b = _core.rotation_chains(thetas)
    assert np.max(np.abs(a - b)) <= 1e-13
    single = _core.rotation_chains(thetas[0])
    assert np.array_equal(single, b[0])


@needs_core
def test_chains_are_proper_rotations(rng):
    thetas = 0.7 * rng.standard_normal((4, 25, 3))
    for impl in (_purepy, _core):
        chains = impl.rotation_chains(thetas)
        prods = chains @ np.swapaxes(chains, -1, -2)
        assert np.max(np.abs(prods - np.eye(3))) <= 1e-12


def test_purepy_accepts_readonly_and_flat_inputs():
    theta = np.zeros((5, 3))
    theta.flags.writeable = False
    chains = _purepy.rotation_chains(theta)
    assert chains.shape == (5, 3, 3)


@needs_core
def test_core_accepts_readonly_inputs():
    theta = np.zeros((5, 3))
    theta.flags.writeable = False
    assert _core.rotation_chains(theta).shape == (5, 3, 3)


def test_backend_selection_reports_name():
    import os

    import morsecr

    assert morsecr.BACKEND in ("compiled", "python")
    forced = os.environ.get("MORSECR_BACKEND", "").strip().lower()
    if forced:
        assert morsecr.BACKEND == forced
    elif _core is not None:
        assert morsecr.BACKEND == "compiled"
