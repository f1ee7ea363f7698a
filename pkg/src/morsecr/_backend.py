"""Select the rotation-kernel backend at import time.

The compiled ``morsecr._core`` extension is preferred; the pure-numpy
``morsecr._purepy`` module is the fallback.  Set ``MORSECR_BACKEND`` to
``compiled`` or ``python`` to force one (``compiled`` raises if the
extension is missing).
"""

import os

_requested = os.environ.get("MORSECR_BACKEND", "").strip().lower()
if _requested not in ("", "compiled", "python"):
    raise RuntimeError(
        f"MORSECR_BACKEND={_requested!r}: expected 'compiled' or 'python'"
    )

if _requested == "python":
    from . import _purepy as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _purepy as _impl  # type: ignore[no-redef]

        BACKEND = "python"

rodrigues = _impl.rodrigues
rodrigues_batch = _impl.rodrigues_batch
rotation_chains = _impl.rotation_chains
