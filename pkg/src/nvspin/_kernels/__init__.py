"""Numerical kernel backend selection.

The compiled Cython extension is preferred; the pure-numpy fallback is used
when the extension is missing (source checkout without a build) or when the
environment variable ``NVSPIN_PURE=1`` forces it.  Both expose the same
functions: ``jacobi_eigh``, ``expm_factored``, ``propagate_drive_lab`` and a
``BACKEND`` name string.
"""

import os

if os.environ.get("NVSPIN_PURE", "") == "1":
    from . import pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
jacobi_eigh = _impl.jacobi_eigh
expm_factored = _impl.expm_factored
propagate_drive_lab = _impl.propagate_drive_lab

__all__ = ["BACKEND", "jacobi_eigh", "expm_factored", "propagate_drive_lab"]
