"""Select the integration backend at import time.

The compiled extension ``_kernels`` is used when it was built; setting the
environment variable ``OPTOMOD_PURE_PYTHON=1`` forces the pure-Python
fallback (useful for debugging and for the benchmark).
"""
import os

from . import _pykernels as python_backend

try:
    if os.environ.get("OPTOMOD_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as compiled_backend
except ImportError:
    compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "compiled" if compiled_backend is not None else "python"

mean_segment = backend.mean_segment
cov_segment = backend.cov_segment
joint_segment = backend.joint_segment
mean_rhs = backend.mean_rhs
cov_rhs = backend.cov_rhs
