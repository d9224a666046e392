"""Hot-kernel backend selection.

The compiled extension (Cython) is preferred; a pure-numpy fallback keeps
the package fully functional without a C toolchain.  Set ITVOLT_KERNELS to
"numpy" or "ext" to force a backend (the benchmark uses this).
"""

import os

_forced = os.environ.get("ITVOLT_KERNELS", "").strip().lower()

if _forced == "numpy":
    from itvolt._kernels import _numpy as _impl

    BACKEND = "numpy"
elif _forced == "ext":
    from itvolt._kernels import _ext as _impl

    BACKEND = "ext"
else:
    try:
        from itvolt._kernels import _ext as _impl

        BACKEND = "ext"
    except ImportError:
        from itvolt._kernels import _numpy as _impl

        BACKEND = "numpy"

sb_matvec = _impl.sb_matvec
cheb_apply = _impl.cheb_apply
bessel_j_table = _impl.bessel_j_table

__all__ = ["BACKEND", "sb_matvec", "cheb_apply", "bessel_j_table"]
