"""Fixed-step classical Runge-Kutta integration for generic vector fields.

A single deterministic integrator is used everywhere; accuracy is checked by
step-halving rather than adaptive stepping, so identical inputs always produce
bit-identical output.  The closed-loop simulator has its own specialized
stepping kernel (ofo.engine) that is cross-checked against this one in tests.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import DivergenceError, InputError

VectorField = Callable[[tuple[float, ...]], Sequence[float]]


def plan_steps(t0: float, t1: float, dt: float) -> tuple[int, float]:
    """Split [t0, t1] into full dt steps plus one shortened final step.

    Returns (n_full, last_dt); last_dt == 0.0 when dt divides the span.  A dt
    longer than the span degenerates to a single shortened step.
    """
    if dt <= 0.0:
        raise InputError("dt must be positive")
    span = t1 - t0
    if span <= 0.0:
        raise InputError("time span must have t1 > t0")
    n_full = int(math.floor(span / dt + 1e-12))
    rem = span - n_full * dt
    if rem <= 1e-12 * dt:
        rem = 0.0
    return n_full, rem


def rk4_step(field: VectorField, x: tuple[float, ...], h: float) -> tuple[float, ...]:
    """One classical 4th-order Runge-Kutta step of size h."""
    h2 = 0.5 * h
    h6 = h / 6.0
    k1 = field(x)
    k2 = field(tuple(x[i] + h2 * k1[i] for i in range(len(x))))
    k3 = field(tuple(x[i] + h2 * k2[i] for i in range(len(x))))
    k4 = field(tuple(x[i] + h * k3[i] for i in range(len(x))))
    return tuple(x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(len(x)))


def integrate(
    field: VectorField,
    x0: Sequence[float],
    t_span: tuple[float, float],
    dt: float,
) -> tuple[list[float], list[tuple[float, ...]]]:
    """Integrate an autonomous field, sampling every step.

    Samples are taken at t0, t0+dt, ... with the final partial step shortened
    to land exactly on t1.  A non-finite state raises DivergenceError carrying
    the blow-up time.
    """
    t0, t1 = t_span
    n_full, last_dt = plan_steps(t0, t1, dt)
    x = tuple(float(v) for v in x0)
    times = [t0]
    states = [x]
    n_tot = n_full + (1 if last_dt > 0.0 else 0)
    for i in range(n_tot):
        h = dt if i < n_full else last_dt
        x = rk4_step(field, x, h)
        t = t1 if i + 1 == n_tot else t0 + (i + 1) * dt
        for v in x:
            if not math.isfinite(v):
                raise DivergenceError(f"divergence detected at t = {t:.6g}", time=t)
        times.append(t)
        states.append(x)
    return times, states


def dini_upper_estimate(times: Sequence[float], values: Sequence[float], index: int) -> float:
    """Forward-difference surrogate for the upper right Dini derivative."""
    if index < 0 or index >= len(values) - 1:
        raise InputError("index must not point at the last sample")
    return (values[index + 1] - values[index]) / (times[index + 1] - times[index])
