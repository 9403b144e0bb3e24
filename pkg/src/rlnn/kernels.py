"""Kernel backend selection.

The compiled extension is used when it imports; set ``RLNN_PURE_PYTHON=1`` to
force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("RLNN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
philox4x32 = _impl.philox4x32
uniforms = _impl.uniforms
normals = _impl.normals
forward = _impl.forward
mse_grad = _impl.mse_grad
relu_expectation_sum = _impl.relu_expectation_sum
