"""Select the kernel backend.

Set PERCWALK_BACKEND=numpy to force the pure-NumPy/Python fallbacks, or
PERCWALK_BACKEND=numba to require the jitted kernels.  Unset (or "auto"),
numba is used when importable.  Both backends implement the contract in
_kernel_api.py and produce bit-identical results; the fallback is slower.
"""

import os

_requested = os.environ.get("PERCWALK_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        import numba  # noqa: F401

        BACKEND = "numba"
    except ImportError:
        BACKEND = "numpy"
elif _requested == "numba":
    import numba  # noqa: F401

    BACKEND = "numba"
elif _requested == "numpy":
    BACKEND = "numpy"
else:
    raise RuntimeError(
        f"PERCWALK_BACKEND={_requested!r} not understood; use 'numba', 'numpy' or 'auto'"
    )

if BACKEND == "numba":
    from . import _kernels as kernels
else:
    from . import _fallback as kernels

__all__ = ["BACKEND", "kernels"]
