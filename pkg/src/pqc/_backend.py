"""Selects the bit-kernel implementation at import time.

The compiled extension is preferred when present.  Set ``PQC_BACKEND=py``
to force the pure-Python kernels, or ``PQC_BACKEND=c`` to require the
compiled ones (raising if the extension was not built).
"""

import os

_choice = os.environ.get("PQC_BACKEND", "auto")

if _choice == "py":
    from . import _bits_py as impl
elif _choice == "c":
    from . import _bits_c as impl  # type: ignore[attr-defined]
elif _choice == "auto":
    try:
        from . import _bits_c as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _bits_py as impl
else:
    raise ValueError(f"PQC_BACKEND must be 'auto', 'c', or 'py', not {_choice!r}")

BACKEND = impl.BACKEND
