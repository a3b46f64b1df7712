"""Flat parameter and result records exchanged with the stepping kernels.

Everything is plain floats, ints, and lists so the compiled and pure kernels
can consume the same object.  Matrices are row-major flat lists; the
disturbance enters only through the precomputed drift vector B_w w, which is
constant within a segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

PLANT_LINEAR = 0
PLANT_SINE = 1
COST_QUADRATIC = 0
COST_SQRTPLUS = 1
CTRL_GRADIENT = 0
CTRL_PROJECTED = 1


@dataclass
class SegmentSpec:
    """One constant-disturbance integration segment."""

    n: int
    m: int
    p: int
    plant_kind: int
    a: list[float]          # n*n
    b: list[float]          # n*m
    drift: list[float]      # n, equals B_w w
    c: list[float]          # p*n
    sens0: list[float]      # p*m, sensitivity before any input-dependent scaling
    cost_kind: int
    cq1: float              # q_u (quadratic) or a (sqrt-plus)
    cq2: float              # q_y (quadratic; unused otherwise)
    mu4: float              # extra input curvature from regularization
    ctrl_kind: int
    alpha: float
    beta: float
    lo: list[float]         # m, -inf allowed
    hi: list[float]         # m, +inf allowed
    x0: list[float]
    u0: list[float]
    t0: float
    t_end: float
    dt: float
    n_full: int
    last_dt: float
    record_stride: int
    include_final: bool


@dataclass
class SegmentResult:
    """Strided samples plus exact final state of one segment."""

    times: list[float] = field(default_factory=list)
    xs: list[float] = field(default_factory=list)   # flat, n per record
    us: list[float] = field(default_factory=list)   # flat, m per record
    ys: list[float] = field(default_factory=list)   # flat, p per record
    final_x: list[float] = field(default_factory=list)
    final_u: list[float] = field(default_factory=list)
    max_violation: float = 0.0
    blowup_time: float | None = None
