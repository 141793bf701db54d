"""Backend selection for the hot integration kernels.

The adaptive Runge-Kutta core and the built-in vector fields are written in
nopython-compatible style and compiled with numba when available.  Setting
the environment variable ``CHAOSCERT_BACKEND=numpy`` before import forces the
pure-numpy fallback (the same source functions, uncompiled), which is also
used automatically when numba cannot be imported.  Custom systems defined by
plain Python callables always run on the fallback path regardless of the
backend flag.
"""

import os
import warnings

ENV_VAR = "CHAOSCERT_BACKEND"


def _detect() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("numpy", "python"):
        return "numpy"
    if choice not in ("auto", "numba"):
        warnings.warn(f"unknown {ENV_VAR}={choice!r}; using auto detection")
        choice = "auto"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            warnings.warn("numba requested but not importable; using numpy backend")
        return "numpy"
    return "numba"


BACKEND = _detect()
NUMBA_ENABLED = BACKEND == "numba"

if NUMBA_ENABLED:
    from numba import njit as _njit

    def kernel(func):
        """Compile a self-contained hot kernel (disk-cacheable)."""
        return _njit(cache=True)(func)

    def kernel_dyn(func):
        """Compile a kernel that closes over other kernels (not cacheable)."""
        return _njit(cache=False)(func)

else:

    def kernel(func):
        return func

    def kernel_dyn(func):
        return func


def is_compiled(func) -> bool:
    """True when ``func`` is a numba dispatcher rather than a plain function."""
    return NUMBA_ENABLED and hasattr(func, "py_func")
