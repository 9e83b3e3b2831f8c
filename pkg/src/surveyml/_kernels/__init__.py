"""Kernel backend selection.

Imports the compiled Cython kernels when the extension was built, otherwise
falls back to the pure NumPy reference implementations. Set SURVEYML_PURE=1
to force the fallback (used by the parity tests and the benchmark).
"""

import os

from . import _ref

if os.environ.get("SURVEYML_PURE") == "1":
    _impl = _ref
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _ref

ht_concordance = _impl.ht_concordance
tie_group_sums = _impl.tie_group_sums
best_split = _impl.best_split


def backend() -> str:
    """Name of the active kernel backend: "compiled" or "python"."""
    return _impl.BACKEND
