"""Select the LIF kernel implementation at import time.

The compiled Cython module is preferred. Set ``LIFMAP_BACKEND=python`` to
force the numpy fallback (the benchmark and the cross-backend tests do this
explicitly through :func:`get_kernel`).
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None


def available():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_kernel(name):
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled extension lifmap._kernels is not built")
        return _compiled.lif_run
    if name == "python":
        return _kernels_py.lif_run
    raise ValueError(f"unknown backend {name!r}")


_requested = os.environ.get("LIFMAP_BACKEND", "").strip().lower()
if _requested == "python" or _compiled is None:
    if _requested not in ("", "python"):
        log.warning("LIFMAP_BACKEND=%s unavailable, using python", _requested)
    name = "python"
else:
    name = "cython"

lif_run = get_kernel(name)
