"""Kernel selection: compiled extension if importable, NumPy fallback otherwise.

Set SPECDET_PURE=1 to force the NumPy reference implementation.
"""

import os

from . import _pyref

if os.environ.get("SPECDET_PURE") == "1":
    _impl = _pyref
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pyref

IMPL = _impl.IMPL
logsum_shifted = _impl.logsum_shifted
argsum_shifted = _impl.argsum_shifted
invert_ladder = _impl.invert_ladder

__all__ = ["IMPL", "logsum_shifted", "argsum_shifted", "invert_ladder"]
