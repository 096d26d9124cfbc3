"""Backend selection for the only-increase scan kernel.

The scan is a data-dependent sequential loop (commit or discard one batch
at a time), which numpy cannot vectorise, so it ships as a compiled
extension with a numpy fallback selected here at import time. Set
``NNCOV_PURE_PYTHON=1`` to force the fallback; ``nncov._kernels.BACKEND``
reports which implementation is active. ``benchmarks/bench_scan.py``
compares the two.

Batch statistics elsewhere in the package stay on numpy/BLAS on purpose:
hand-written loops cannot beat BLAS for dense covariance updates.
"""

import os

from . import _pure

BACKEND = "python"
incremental_scan = _pure.incremental_scan

if not os.environ.get("NNCOV_PURE_PYTHON"):
    try:
        from . import _native

        incremental_scan = _native.incremental_scan
        BACKEND = "native"
    except ImportError:
        pass
