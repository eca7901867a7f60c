"""Hot pixel kernels with backend selection at import.

The compiled extension is used when available; otherwise the numpy
fallback kicks in transparently. Set ``DEPTHSAMPLE_PURE_PYTHON=1`` to
force the fallback (useful for benchmarking and cross-checking).
"""

import os

from . import _pyfallback

if os.environ.get("DEPTHSAMPLE_PURE_PYTHON"):
    _impl = _pyfallback
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _pyfallback

BACKEND = _impl.BACKEND
slic_iterate = _impl.slic_iterate
bilateral = _impl.bilateral


def available_backends():
    """Importable kernel backends by name (for tests and benchmarks)."""
    backends = {"python": _pyfallback}
    try:
        from . import _native
        backends["native"] = _native
    except ImportError:
        pass
    return backends
