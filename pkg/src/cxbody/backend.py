"""Kernel backend selection: numba-compiled loops or pure numpy.

The hot inner kernels (pairwise zonal kernels, phase-averaged Gram
matrices, deterministic reductions) exist in two implementations.  The
environment variable ``CXBODY_BACKEND`` selects one:

* ``numba`` (default when numba imports): ``@njit(parallel=True)`` loops;
* ``numpy``: vectorized fallback, no compilation.

Thread count only affects the numba backend and never changes results:
all reductions run over fixed chunk boundaries, so partial sums are
bit-identical for 1, 4 or 8 threads.  ``benchmarks/bench_backends.py``
compares the two paths.
"""

from __future__ import annotations

import os

_choice = os.environ.get("CXBODY_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"CXBODY_BACKEND must be auto|numba|numpy, got {_choice!r}")

USE_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        USE_NUMBA = False


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_threads(k: int) -> None:
    """Pin the numba thread count (no-op on the numpy backend)."""
    if k < 1:
        raise ValueError("thread count must be >= 1")
    if USE_NUMBA:
        import numba

        numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def get_threads() -> int:
    if USE_NUMBA:
        import numba

        return numba.get_num_threads()
    return 1
