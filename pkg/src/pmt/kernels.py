"""Backend selection for the hot kernels.

The compiled extension ``pmt._kernels`` is used when it imports; otherwise
(or when ``PMT_PURE_PYTHON=1``) the reference ``pmt._pykernels`` is used.
"""
import os

from . import _pykernels

if os.environ.get("PMT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
hom_search = _impl.hom_search
canonical_codes = _impl.canonical_codes

__all__ = ["BACKEND", "hom_search", "canonical_codes"]
