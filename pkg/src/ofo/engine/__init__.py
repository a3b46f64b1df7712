"""Closed-loop stepping kernels with import-time fallback selection.

The compiled Cython kernel is used when its extension module was built;
otherwise the pure-Python reference kernel takes over with identical
semantics (and bit-identical output).  Setting OFO_PURE_PYTHON=1 forces the
pure kernel, which is how the benchmark compares the two.
"""

from __future__ import annotations

import os

from . import pure
from .params import (
    COST_QUADRATIC,
    COST_SQRTPLUS,
    CTRL_GRADIENT,
    CTRL_PROJECTED,
    PLANT_LINEAR,
    PLANT_SINE,
    SegmentResult,
    SegmentSpec,
)

try:
    from . import _speedup
    HAVE_COMPILED = True
except ImportError:
    _speedup = None
    HAVE_COMPILED = False

__all__ = [
    "COST_QUADRATIC", "COST_SQRTPLUS", "CTRL_GRADIENT", "CTRL_PROJECTED",
    "PLANT_LINEAR", "PLANT_SINE", "SegmentResult", "SegmentSpec",
    "HAVE_COMPILED", "active_kernel", "kernel_name", "run_segment",
]


def _force_pure() -> bool:
    return os.environ.get("OFO_PURE_PYTHON", "") not in ("", "0")


def active_kernel():
    """The module whose run_segment will be used for the next call."""
    if _speedup is None or _force_pure():
        return pure
    return _speedup


def kernel_name() -> str:
    return "pure-python" if active_kernel() is pure else "compiled"


def run_segment(spec: SegmentSpec) -> SegmentResult:
    return active_kernel().run_segment(spec)
