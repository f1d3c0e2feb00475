"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled Cython extension is preferred when importable. Set
PLAYSTYLES_KERNELS=python to force the fallback, or =cython to require the
extension (ImportError if it is missing).
"""

from __future__ import annotations

import os

_choice = os.environ.get("PLAYSTYLES_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "", "cython", "c", "python", "py"):
    raise ImportError(
        f"PLAYSTYLES_KERNELS must be 'cython', 'python', or 'auto'; got {_choice!r}"
    )

if _choice in ("python", "py"):
    from . import _pykern as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _choice in ("cython", "c"):
            raise
        from . import _pykern as _impl  # type: ignore[no-redef]

        BACKEND = "python"

assign = _impl.assign
silhouette_samples = _impl.silhouette_samples

__all__ = ["BACKEND", "assign", "silhouette_samples"]
