"""Pure-numpy fallback for the rotation kernels in ``morsecr._core``.

Both implementations expose the same functions and must stay numerically
interchangeable; ``tests/test_backends.py`` checks them against each other.
"""

import numpy as np

# Below this angle the Rodrigues coefficients switch to their Taylor series.
SMALL_ANGLE = 1e-6


def rodrigues(w):
    """Rotation matrix for a single axis-angle vector ``w`` (radians)."""
    return rodrigues_batch(np.asarray(w, dtype=np.float64).reshape(1, 3))[0]


def rodrigues_batch(w):
    """Rotation matrices for axis-angle rows.

    Args:
        w: (M, 3) array of axis-angle vectors.

    Returns:
        (M, 3, 3) array of rotation matrices, R = I + a[w]x + b[w]x^2 with
        a = sin(n)/n and b = (1-cos(n))/n^2 evaluated stably near n = 0.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    m = w.shape[0]
    n2 = np.einsum("ij,ij->i", w, w)
    n = np.sqrt(n2)
    small = n < SMALL_ANGLE
    # Avoid 0/0; the small-angle rows are overwritten by the series below.
    safe = np.where(small, 1.0, n)
    a = np.sin(safe) / safe
    b = (1.0 - np.cos(safe)) / (safe * safe)
    a[small] = 1.0 - n2[small] / 6.0
    b[small] = 0.5 - n2[small] / 24.0

    wx, wy, wz = w[:, 0], w[:, 1], w[:, 2]
    k = np.zeros((m, 3, 3))
    k[:, 0, 1] = -wz
    k[:, 0, 2] = wy
    k[:, 1, 0] = wz
    k[:, 1, 2] = -wx
    k[:, 2, 0] = -wy
    k[:, 2, 1] = wx

    out = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
    out += a[:, None, None] * k
    out += b[:, None, None] * (k @ k)
    return out


def rotation_chains(thetas):
    """Cumulative rotation products along a joint chain.

    Args:
        thetas: (N, 3) axis-angle rows for one configuration, or (B, N, 3)
            for a batch of configurations.

    Returns:
        Matching (N, 3, 3) or (B, N, 3, 3) array where entry ``i`` holds the
        product R_0 R_1 ... R_i of the per-joint rotations.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    single = thetas.ndim == 2
    t = thetas[None] if single else thetas
    b, n, _ = t.shape
    rots = rodrigues_batch(t.reshape(b * n, 3)).reshape(b, n, 3, 3)
    out = np.empty_like(rots)
    acc = rots[:, 0]
    out[:, 0] = acc
    for i in range(1, n):
        acc = acc @ rots[:, i]
        out[:, i] = acc
    return out[0] if single else out
