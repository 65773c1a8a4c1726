"""Batch kernel backend, chosen at import time.

The compiled extension ``blochsep._kernels`` is used when it is importable;
otherwise, or when the environment variable ``BLOCHSEP_PURE_PYTHON`` is set
to a non-empty value, the numpy implementation in ``_kernels_py`` is used.
Both expose the same functions.
"""

import os

from blochsep import _kernels_py

if os.environ.get("BLOCHSEP_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from blochsep import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

NBINS = _kernels_py.NBINS
MOMENT_BITS = _kernels_py.MOMENT_BITS
MAX_BATCH = _kernels_py.MAX_BATCH
ENT, SEP_PT_DOM, SEP_RHO_DOM = _kernels_py.ENT, _kernels_py.SEP_PT_DOM, _kernels_py.SEP_RHO_DOM

gram_density = _impl.gram_density
haar_unitary = _impl.haar_unitary
bures_density = _impl.bures_density
analyze = _impl.analyze
classify_codes = _impl.classify_codes
radius_bins = _impl.radius_bins
accumulate = _impl.accumulate


def available_backends():
    """Mapping of backend name to module for every importable implementation."""
    out = {"python": _kernels_py}
    try:
        from blochsep import _kernels
    except ImportError:
        pass
    else:
        out["compiled"] = _kernels
    return out
