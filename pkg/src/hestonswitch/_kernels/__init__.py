"""Backend selection for the hot numerical kernels.

The compiled extension is preferred when present; otherwise the pure
NumPy twin in ``_ref`` is used. Set ``HESTONSWITCH_KERNELS=python`` (or
``cython``) to force a backend, e.g. for benchmarking.
"""

import os

from . import _ref

_requested = os.environ.get("HESTONSWITCH_KERNELS", "").lower()

if _requested == "python":
    _impl = _ref
elif _requested == "cython":
    from . import _core as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND
ParticleDegeneracyError = _impl.ParticleDegeneracyError
simulate_path = _impl.simulate_path
pf_step = _impl.pf_step
d_terms = _impl.d_terms
