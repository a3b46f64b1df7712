"""Plant models with globally stable dynamics and closed-form steady-state maps.

Two concrete families are provided: a linear time-invariant plant and its
variant with a scalar sine input nonlinearity.  Both expose the same surface
(dynamics, output, steady state, steady output, sensitivity) so controllers
and the certificate engine never special-case the plant kind.  The disturbance
is a field of the plant; switching it means cloning the plant, which keeps
each instance immutable during an integration segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Protocol, runtime_checkable

from .errors import InputError
from .linalg import Matrix, Vector, as_vector, inverse, solve_lyapunov, vec_add


@runtime_checkable
class Plant(Protocol):
    """What a plant must provide: dimensions plus five maps.

    User-defined plants only need to satisfy this protocol; the bundled
    implementations below cover every configuration the toolkit ships with.
    """

    @property
    def n(self) -> int: ...

    @property
    def m(self) -> int: ...

    @property
    def p(self) -> int: ...

    def dynamics(self, x: Vector, u: Vector) -> Vector: ...

    def output(self, x: Vector) -> Vector: ...

    def steady_state(self, u: Vector) -> Vector: ...

    def steady_output(self, u: Vector) -> Vector: ...

    def sensitivity(self, u: Vector) -> Matrix: ...


def _check_lti_shapes(a: Matrix, b: Matrix, bw: Matrix, c: Matrix, w: Vector) -> None:
    if not a.is_square():
        raise InputError("state matrix must be square")
    n = a.rows
    if b.rows != n:
        raise InputError("input matrix row count must match the state dimension")
    if bw.rows != n:
        raise InputError("disturbance matrix row count must match the state dimension")
    if c.cols != n:
        raise InputError("output matrix column count must match the state dimension")
    if len(w) != bw.cols:
        raise InputError("disturbance vector length must match the disturbance matrix")


@dataclass(frozen=True)
class LinearPlant:
    """dx/dt = A x + B u + B_w w,  y = C x, with A Hurwitz."""

    a: Matrix
    b: Matrix
    bw: Matrix
    c: Matrix
    w: Vector

    def __post_init__(self):
        object.__setattr__(self, "w", as_vector(self.w, "disturbance"))
        _check_lti_shapes(self.a, self.b, self.bw, self.c, self.w)
        # Hurwitz gate: the Lyapunov solve succeeds with a positive-definite
        # solution exactly when A is Hurwitz.
        solve_lyapunov(self.a, Matrix.identity(self.a.rows))

    @property
    def n(self) -> int:
        return self.a.rows

    @property
    def m(self) -> int:
        return self.b.cols

    @property
    def p(self) -> int:
        return self.c.rows

    @cached_property
    def a_inverse(self) -> Matrix:
        return inverse(self.a)

    @cached_property
    def base_sensitivity(self) -> Matrix:
        """-C A^-1 B; the input-to-steady-output gain."""
        return self.c.matmul(self.a_inverse).matmul(self.b).neg()

    @cached_property
    def _drift(self) -> Vector:
        return self.bw.matvec(self.w)

    def with_disturbance(self, w) -> "LinearPlant":
        return replace(self, w=as_vector(w, "disturbance"))

    def _check_xu(self, x: Vector, u: Vector) -> None:
        if len(x) != self.n:
            raise InputError(f"state has length {len(x)}, expected {self.n}")
        if len(u) != self.m:
            raise InputError(f"input has length {len(u)}, expected {self.m}")

    def input_effect(self, u: Vector) -> Vector:
        """The term the input contributes to dx/dt (before adding A x and drift)."""
        return self.b.matvec(u)

    def dynamics(self, x: Vector, u: Vector) -> Vector:
        self._check_xu(x, u)
        return vec_add(vec_add(self.a.matvec(x), self.input_effect(u)), self._drift)

    def output(self, x: Vector) -> Vector:
        if len(x) != self.n:
            raise InputError(f"state has length {len(x)}, expected {self.n}")
        return self.c.matvec(x)

    def steady_state(self, u: Vector) -> Vector:
        if len(u) != self.m:
            raise InputError(f"input has length {len(u)}, expected {self.m}")
        forced = vec_add(self.input_effect(u), self._drift)
        return tuple(-v for v in self.a_inverse.matvec(forced))

    def steady_output(self, u: Vector) -> Vector:
        return self.c.matvec(self.steady_state(u))

    def sensitivity(self, u: Vector) -> Matrix:
        if len(u) != self.m:
            raise InputError(f"input has length {len(u)}, expected {self.m}")
        return self.base_sensitivity

    # Descriptors used when deriving certificate constants.
    kind = "linear"
    input_lipschitz_factor = 1.0     # max |d/du (u)| = 1
    sensitivity_bound_factor = 1.0   # sup_u of the sensitivity scaling
    sensitivity_lipschitz_factor = 0.0


@dataclass(frozen=True)
class SinePlant(LinearPlant):
    """dx/dt = A x + B (u + sin u) + B_w w with scalar input, y = C x."""

    def __post_init__(self):
        super().__post_init__()
        if self.b.cols != 1:
            raise InputError("sine-input plant requires a scalar input")

    def input_effect(self, u: Vector) -> Vector:
        return self.b.matvec((u[0] + math.sin(u[0]),))

    def sensitivity(self, u: Vector) -> Matrix:
        if len(u) != self.m:
            raise InputError(f"input has length {len(u)}, expected {self.m}")
        return self.base_sensitivity.scale(1.0 + math.cos(u[0]))

    def with_disturbance(self, w) -> "SinePlant":
        return replace(self, w=as_vector(w, "disturbance"))

    kind = "sine"
    input_lipschitz_factor = 2.0     # max |d/du (u + sin u)| = 2
    sensitivity_bound_factor = 2.0   # max (1 + cos u) = 2
    sensitivity_lipschitz_factor = 1.0  # |d/du (1 + cos u)| <= 1
