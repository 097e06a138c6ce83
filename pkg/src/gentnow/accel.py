"""Optional numba acceleration for the hot numeric kernels.

Every kernel in this package is a plain float64/int loop that numba can
compile but that also runs unmodified under CPython. When numba imports
cleanly and the environment variable ``GENTNOW_DISABLE_NUMBA`` is unset (or
"0"), kernels are compiled with ``numba.njit``; otherwise the undecorated
function runs as a pure numpy/Python fallback. Both paths execute the same
source in the same floating-point order, so results are bit-identical
(checked in tests/test_accel.py and timed in benchmarks/bench_kernels.py).
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - mirror always ships numba
    numba = None
    HAS_NUMBA = False

ENV_FLAG = "GENTNOW_DISABLE_NUMBA"

JIT_ENABLED = HAS_NUMBA and os.environ.get(ENV_FLAG, "0") in ("", "0")

if JIT_ENABLED:
    from numba import prange
else:
    prange = range


def maybe_jit(func=None, **jit_kwargs):
    """Compile ``func`` with ``numba.njit`` when acceleration is on.

    Usable bare (``@maybe_jit``) or with numba keyword arguments
    (``@maybe_jit(parallel=True)``). With acceleration off the function is
    returned unchanged, which is the pure-numpy fallback path.
    """

    def wrap(f):
        if JIT_ENABLED:
            return numba.njit(f, cache=jit_kwargs.pop("cache", True), **jit_kwargs)
        return f

    if func is None:
        return wrap
    return wrap(func)
