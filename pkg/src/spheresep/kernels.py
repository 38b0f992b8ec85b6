"""Backend selection for the hot kernels.

The compiled Cython extension is used when it was built; otherwise the
numpy fallback is imported. Set ``SPHERESEP_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _pykernels

BOUNDARY = _pykernels.BOUNDARY
EXTERIOR = _pykernels.EXTERIOR
INTERIOR = _pykernels.INTERIOR

_impl = _pykernels
BACKEND = "python"
if not os.environ.get("SPHERESEP_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass

halfspace_counts = _impl.halfspace_counts
classify_spheres = _impl.classify_spheres
coverage_counts = _impl.coverage_counts

__all__ = [
    "BACKEND",
    "BOUNDARY",
    "EXTERIOR",
    "INTERIOR",
    "classify_spheres",
    "coverage_counts",
    "halfspace_counts",
]
