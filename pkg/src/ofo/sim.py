"""Closed-loop simulation under piecewise-constant disturbance schedules.

simulate() stitches together one stepping-kernel call per constant-disturbance
segment, recording strided samples, per-segment reference optima, and (for the
projected law) the worst box violation seen at any integration step.  The
module also houses the brute-force steady-state optimizer used as the
reference for every convergence claim, Lyapunov traces with their exponential
envelope check, and deterministic gain sweeps.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Sequence, TextIO

from . import engine
from .controllers import BoxSet, Controller, GradientOfoController, ProjectedOfoController
from .costs import CostModel, QuadraticCost, RegularizedCost, reduced_gradient
from .errors import DivergenceError, InputError, OfoError
from .linalg import Matrix, Vector, as_vector, quad_form, spectral_norm, vec_norm, vec_sub
from .ode import plan_steps
from .plants import LinearPlant, SinePlant

DEFAULT_MAX_RECORDS = 20000
_GOLDEN_BRACKET = 1e6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def fmt12(x: float) -> str:
    """Format a float with 12 significant digits in plain decimal notation."""
    x = float(x)
    if not math.isfinite(x):
        raise InputError("cannot format a non-finite value")
    if x == 0.0:
        return "0"
    s = f"{x:.12g}"
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


@dataclass(frozen=True)
class DisturbanceSchedule:
    """Ordered (t_start, w) segments; the first segment must start at 0."""

    segments: tuple[tuple[float, Vector], ...]

    def __post_init__(self):
        if not self.segments:
            raise InputError("schedule must contain at least one segment")
        cleaned = []
        for idx, (t_start, w) in enumerate(self.segments):
            cleaned.append((float(t_start), as_vector(w, f"schedule segment {idx + 1} disturbance")))
        object.__setattr__(self, "segments", tuple(cleaned))
        if self.segments[0][0] != 0.0:
            raise InputError("the first schedule segment must start at t = 0")
        for (t_prev, _), (t_next, _) in zip(self.segments, self.segments[1:]):
            if not t_next > t_prev:
                raise InputError("schedule start times must be strictly increasing")
        widths = {len(w) for _, w in self.segments}
        if len(widths) != 1:
            raise InputError("all schedule disturbances must have the same dimension")

    @property
    def q(self) -> int:
        return len(self.segments[0][1])


@dataclass(frozen=True)
class LyapunovSpec:
    """Composite-function weights: V = max(xi * (x-x*)^T P (x-x*), ||u-u*||^2 / 2)."""

    xi: float
    p: Matrix

    def __post_init__(self):
        if self.xi <= 0.0:
            raise InputError("xi must be positive")


@dataclass
class Trajectory:
    """Strided closed-loop samples plus per-segment metadata."""

    t: list[float]
    x: list[Vector]
    u: list[Vector]
    y: list[Vector]
    w: list[Vector]
    seg_of: list[int]
    v: list[float] | None
    segment_marks: list[int]
    segment_starts: list[float]
    segment_ends: list[float]
    ustar: list[Vector]
    xstar: list[Vector]
    seg_final_x: list[Vector]
    seg_final_u: list[Vector]
    max_box_violation: float
    dt: float
    warnings: list[str] = field(default_factory=list)

    def segment_indices(self, k: int) -> range:
        lo = self.segment_marks[k]
        hi = self.segment_marks[k + 1] if k + 1 < len(self.segment_marks) else len(self.t)
        return range(lo, hi)


@dataclass(frozen=True)
class RunSummary:
    final_error: float
    settling_time: float
    overshoot: float
    max_violation: float


def default_dt(plant: LinearPlant, cost: CostModel, alpha: float) -> float:
    """Step size that keeps explicit stepping stable across the gain sweep.

    Scales 0.1 by the fastest of: unit rate, the plant's spectral norm, and an
    estimate alpha * (L + ell_phi_y * ell_g * ell_h) of the controller field's
    stiffness; clamped to [1e-6, 2.5e-3].  The upper clamp keeps the
    step-halving end-state agreement below 1e-6 even for lightly damped loops.
    """
    gain = spectral_norm(plant.c.matmul(plant.a_inverse).matmul(plant.b))
    ell_h = plant.sensitivity_bound_factor * gain
    ell_grad_h = plant.sensitivity_lipschitz_factor * gain
    desc = cost.descriptor(ell_h, ell_grad_h)
    stiffness = desc.lip_grad_u + desc.ell_phi_y * spectral_norm(plant.c) * ell_h
    dt = 0.1 / max(1.0, spectral_norm(plant.a), alpha * stiffness)
    return min(2.5e-3, max(1e-6, dt))


def _golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _quadratic_closed_form(plant: LinearPlant, cost: CostModel, box: BoxSet | None) -> float | None:
    """Exact optimum for an affine steady map with quadratic cost (scalar input)."""
    if isinstance(plant, SinePlant):
        return None
    mu4 = 0.0
    base = cost
    if isinstance(base, RegularizedCost):
        mu4 = base.mu4
        base = base.base
    if not isinstance(base, QuadraticCost):
        return None
    h_gain = plant.base_sensitivity.entry(0, 0)
    h_off = plant.steady_output((0.0,))[0]
    u = -(2.0 * base.q_y * h_gain * h_off) / (2.0 * base.q_u + mu4 + 2.0 * base.q_y * h_gain * h_gain)
    if box is not None:
        u = min(max(u, box.lo[0]), box.hi[0])
    return u


def _polish_stationary_point(grad: Callable[[float], float], u: float,
                             lo: float, hi: float) -> float:
    """Sharpen a minimizer by bisecting the (monotone) reduced gradient.

    Function-value search saturates at the objective's roundoff plateau; the
    gradient does not.  When no sign change exists inside [lo, hi] the minimum
    sits on a bound and u is returned unchanged.
    """
    radius = max(1e-6, 1e-6 * abs(u))
    for _ in range(60):
        a = max(lo, u - radius)
        b = min(hi, u + radius)
        ga, gb = grad(a), grad(b)
        if ga <= 0.0 <= gb:
            break
        if a == lo and b == hi:
            return u
        radius *= 4.0
    else:
        return u
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        gm = grad(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def optimal_input(
    plant: LinearPlant,
    cost: CostModel,
    w,
    box: BoxSet | None = None,
    tol: float = 1e-10,
) -> Vector:
    """Brute-force reference optimum of the steady-state problem.

    Golden-section search over the box (or a wide refined bracket when
    unconstrained), followed by a bisection polish of the reduced gradient;
    for affine-plus-quadratic configurations the result is cross-checked
    against the closed form.
    """
    if plant.m != 1:
        raise InputError("the bundled optimizer handles scalar inputs only; "
                         "supply a reference optimum for multi-input plants")
    pw = plant.with_disturbance(w)

    def objective(u: float) -> float:
        return cost.phi((u,), pw.steady_output((u,)))

    if box is not None:
        if box.dim != 1:
            raise InputError("box dimension must match the scalar input")
        lo = box.lo[0] if math.isfinite(box.lo[0]) else -_GOLDEN_BRACKET
        hi = box.hi[0] if math.isfinite(box.hi[0]) else _GOLDEN_BRACKET
    else:
        lo, hi = -_GOLDEN_BRACKET, _GOLDEN_BRACKET
    if not lo < hi:
        return (lo,)

    # Coarse scan to bracket the minimum, then golden-section refinement.
    scan_points = 4097
    step = (hi - lo) / (scan_points - 1)
    best_i = 0
    best_v = math.inf
    for i in range(scan_points):
        v = objective(lo + i * step)
        if v < best_v:
            best_v = v
            best_i = i
    a = lo + max(0, best_i - 1) * step
    b = lo + min(scan_points - 1, best_i + 1) * step
    u = _golden_section(objective, a, b, tol)

    def steady_grad(uu: float) -> float:
        return reduced_gradient(cost, pw.sensitivity((uu,)), (uu,), pw.steady_output((uu,)))[0]

    u = _polish_stationary_point(steady_grad, u, lo, hi)
    if box is not None:
        u = min(max(u, box.lo[0]), box.hi[0])
        # an active bound is the exact optimum; prefer it over the interior
        # point the bracketing stopped at
        for corner in (box.lo[0], box.hi[0]):
            if math.isfinite(corner) and objective(corner) < objective(u):
                u = corner

    exact = _quadratic_closed_form(plant.with_disturbance(w), cost, box)
    if exact is not None:
        if abs(u - exact) > 1e-6 * (1.0 + abs(exact)):
            raise OfoError(
                f"optimizer self-check failed: search found {u!r}, closed form gives {exact!r}")
        # the closed form is exact while the search saturates at the roundoff
        # plateau of the objective; return the sharper value
        return (exact,)
    return (u,)


def _controller_parts(controller: Controller) -> tuple[int, float, float, list[float], list[float]]:
    if isinstance(controller, ProjectedOfoController):
        return (engine.CTRL_PROJECTED, controller.alpha, controller.beta,
                list(controller.box.lo), list(controller.box.hi))
    return engine.CTRL_GRADIENT, controller.alpha, 0.0, [], []


def _cost_parts(cost: CostModel) -> tuple[int, float, float, float]:
    mu4 = 0.0
    base = cost
    if isinstance(base, RegularizedCost):
        mu4 = base.mu4
        base = base.base
    if isinstance(base, QuadraticCost):
        return engine.COST_QUADRATIC, base.q_u, base.q_y, mu4
    return engine.COST_SQRTPLUS, base.a, 0.0, mu4


def simulate(
    plant: LinearPlant,
    controller: Controller,
    schedule: DisturbanceSchedule,
    x0,
    u0,
    t_end: float,
    dt: float | None = None,
    max_records: int = DEFAULT_MAX_RECORDS,
    lyapunov: LyapunovSpec | None = None,
    ustar_solver: Callable[[Vector], Vector] | None = None,
) -> Trajectory:
    """Integrate the plant-controller loop across all schedule segments.

    The disturbance is held constant within each segment and switched exactly
    at segment boundaries (the integration lands on every boundary).  Records
    are strided to stay near max_records in total; final states are exact.
    """
    x0 = as_vector(x0, "x0")
    u0 = as_vector(u0, "u0")
    if len(x0) != plant.n:
        raise InputError(f"x0 has length {len(x0)}, expected {plant.n}")
    if len(u0) != plant.m:
        raise InputError(f"u0 has length {len(u0)}, expected {plant.m}")
    if t_end <= 0.0:
        raise InputError("t_end must be positive")
    if schedule.q != plant.bw.cols:
        raise InputError("schedule disturbance dimension does not match the plant")
    if schedule.segments[-1][0] >= t_end:
        raise InputError("schedule extends beyond t_end")
    if dt is None:
        dt = default_dt(plant, controller.cost, controller.alpha)
    if dt <= 0.0:
        raise InputError("dt must be positive")

    warnings: list[str] = []
    projected = isinstance(controller, ProjectedOfoController)
    if projected:
        if controller.box.dim != plant.m:
            raise InputError("box dimension does not match the plant input")
        if not controller.box.contains(u0):
            warnings.append("u0 lies outside the input box; forward invariance is not guaranteed")

    ctrl_kind, alpha, beta, lo, hi = _controller_parts(controller)
    if not projected:
        lo = [-math.inf] * plant.m
        hi = [math.inf] * plant.m
    cost_kind, cq1, cq2, mu4 = _cost_parts(controller.cost)
    plant_kind = engine.PLANT_SINE if isinstance(plant, SinePlant) else engine.PLANT_LINEAR

    boundaries = [t for t, _ in schedule.segments] + [t_end]
    n_segments = len(schedule.segments)
    per_seg_records = max(2, max_records // n_segments)

    traj = Trajectory(
        t=[], x=[], u=[], y=[], w=[], seg_of=[], v=None,
        segment_marks=[], segment_starts=[], segment_ends=[],
        ustar=[], xstar=[], seg_final_x=[], seg_final_u=[],
        max_box_violation=0.0, dt=dt, warnings=warnings,
    )

    ustar_cache: dict[Vector, Vector] = {}
    x = list(x0)
    u = list(u0)
    for k, (t_start, w) in enumerate(schedule.segments):
        t_stop = boundaries[k + 1]
        pw = plant.with_disturbance(w)
        if w not in ustar_cache:
            if ustar_solver is not None:
                ustar_cache[w] = as_vector(ustar_solver(w), "reference optimum")
            else:
                ustar_cache[w] = optimal_input(
                    plant, controller.cost, w,
                    box=controller.box if projected else None)
        ustar = ustar_cache[w]
        xstar = pw.steady_state(ustar)

        n_full, last_dt = plan_steps(t_start, t_stop, dt)
        n_tot = n_full + (1 if last_dt > 0.0 else 0)
        stride = max(1, -(-n_tot // per_seg_records))
        spec = engine.SegmentSpec(
            n=plant.n, m=plant.m, p=plant.p,
            plant_kind=plant_kind,
            a=list(plant.a.data), b=list(plant.b.data),
            drift=list(pw.bw.matvec(w)),
            c=list(plant.c.data),
            sens0=list(plant.base_sensitivity.data),
            cost_kind=cost_kind, cq1=cq1, cq2=cq2, mu4=mu4,
            ctrl_kind=ctrl_kind, alpha=alpha, beta=beta, lo=lo, hi=hi,
            x0=x, u0=u, t0=t_start, t_end=t_stop, dt=dt,
            n_full=n_full, last_dt=last_dt, record_stride=stride,
            include_final=(k == n_segments - 1),
        )
        res = engine.run_segment(spec)
        if res.blowup_time is not None:
            raise DivergenceError(
                f"divergence detected at t = {res.blowup_time:.6g} in segment {k + 1}",
                time=res.blowup_time, segment=k + 1)

        traj.segment_marks.append(len(traj.t))
        traj.segment_starts.append(t_start)
        traj.segment_ends.append(t_stop)
        traj.ustar.append(ustar)
        traj.xstar.append(xstar)
        n_rec = len(res.times)
        n_dim, m_dim, p_dim = plant.n, plant.m, plant.p
        for r in range(n_rec):
            traj.t.append(res.times[r])
            traj.x.append(tuple(res.xs[r * n_dim:(r + 1) * n_dim]))
            traj.u.append(tuple(res.us[r * m_dim:(r + 1) * m_dim]))
            traj.y.append(tuple(res.ys[r * p_dim:(r + 1) * p_dim]))
            traj.w.append(w)
            traj.seg_of.append(k)
        traj.seg_final_x.append(tuple(res.final_x))
        traj.seg_final_u.append(tuple(res.final_u))
        traj.max_box_violation = max(traj.max_box_violation, res.max_violation)
        x = res.final_x
        u = res.final_u

    if lyapunov is not None:
        traj.v = lyapunov_trace(traj, lyapunov)
    return traj


def lyapunov_trace(traj: Trajectory, spec: LyapunovSpec) -> list[float]:
    """Composite-function samples along a trajectory, re-anchored per segment."""
    out = []
    for i in range(len(traj.t)):
        k = traj.seg_of[i]
        dx = vec_sub(traj.x[i], traj.xstar[k])
        du = vec_sub(traj.u[i], traj.ustar[k])
        vx = quad_form(spec.p, dx)
        vu = 0.5 * sum(v * v for v in du)
        out.append(max(spec.xi * vx, vu))
    return out


def envelope_check(
    v: Sequence[float],
    times: Sequence[float],
    tau: float,
    rel_slack: float = 1e-6,
) -> tuple[bool, float]:
    """Check V(t) <= V(0) exp(-tau (t - t0)) (1 + rel_slack) at every sample.

    Returns (ok, worst ratio of sample to envelope).
    """
    if tau < 0.0:
        raise InputError("tau must be nonnegative")
    if len(v) != len(times) or not v:
        raise InputError("series and times must have equal nonzero length")
    v0 = v[0]
    worst = 0.0
    ok = True
    for t, val in zip(times, v):
        bound = v0 * math.exp(-tau * (t - times[0]))
        if bound > 0.0:
            worst = max(worst, val / bound)
        elif val > 0.0:
            worst = math.inf
        if val > bound * (1.0 + rel_slack):
            ok = False
    return ok, worst


def summarize(traj: Trajectory) -> RunSummary:
    """Per-run metrics: final error, settling into the 1% band, overshoot."""
    settling = 0.0
    overshoot = 0.0
    n_seg = len(traj.segment_starts)
    for k in range(n_seg):
        idx = list(traj.segment_indices(k))
        ustar = traj.ustar[k]
        band = 0.01 * (1.0 + vec_norm(ustar))
        seg_len = traj.segment_ends[k] - traj.segment_starts[k]
        # earliest sample index from which the input stays inside the band
        settled_at = None
        for i in reversed(idx):
            if vec_norm(vec_sub(traj.u[i], ustar)) <= band:
                settled_at = i
            else:
                break
        # the exact segment end state is not among the strided samples
        final_in = vec_norm(vec_sub(traj.seg_final_u[k], ustar)) <= band
        if settled_at is not None and final_in:
            seg_settling = traj.t[settled_at] - traj.segment_starts[k]
        else:
            seg_settling = seg_len
        settling = max(settling, seg_settling)

        u_first = traj.u[idx[0]] if idx else traj.seg_final_u[k]
        for j in range(len(ustar)):
            direction = 1.0 if ustar[j] >= u_first[j] else -1.0
            for i in idx:
                excess = direction * (traj.u[i][j] - ustar[j])
                if excess > overshoot:
                    overshoot = excess
    final_error = vec_norm(vec_sub(traj.seg_final_u[-1], traj.ustar[-1]))
    return RunSummary(
        final_error=final_error,
        settling_time=settling,
        overshoot=overshoot,
        max_violation=traj.max_box_violation,
    )


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to run one scenario at a chosen gain."""

    plant: LinearPlant
    cost: CostModel
    controller_kind: str              # "gradient" or "projected"
    schedule: DisturbanceSchedule
    x0: Vector
    u0: Vector
    t_end: float
    beta: float | None = None
    box: BoxSet | None = None
    dt: float | None = None
    max_records: int = DEFAULT_MAX_RECORDS
    lyapunov: LyapunovSpec | None = None

    def build_controller(self, alpha: float) -> Controller:
        if self.controller_kind == "gradient":
            return GradientOfoController(alpha=alpha, cost=self.cost,
                                         sensitivity=self.plant.sensitivity)
        if self.controller_kind == "projected":
            if self.box is None:
                raise InputError("projected controller requires a box")
            beta = self.beta if self.beta is not None else ProjectedOfoController.default_beta(self.cost)
            return ProjectedOfoController(alpha=alpha, beta=beta, box=self.box,
                                          cost=self.cost, sensitivity=self.plant.sensitivity)
        raise InputError(f"unknown controller kind: {self.controller_kind}")

    def run(self, alpha: float) -> tuple[Trajectory, RunSummary]:
        controller = self.build_controller(alpha)
        traj = simulate(self.plant, controller, self.schedule, self.x0, self.u0,
                        self.t_end, dt=self.dt, max_records=self.max_records,
                        lyapunov=self.lyapunov)
        return traj, summarize(traj)


@dataclass
class SweepRow:
    alpha: float
    trajectory: Trajectory | None
    summary: RunSummary | None
    error: str | None = None


def thread_budget(n_tasks: int) -> int:
    """Worker count for sweeps: capped by OFO_THREADS when set."""
    cap = os.environ.get("OFO_THREADS", "")
    try:
        limit = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        raise InputError(f"OFO_THREADS must be an integer, got {cap!r}")
    return max(1, min(limit, n_tasks))


def sweep_alpha(config: RunConfig, alphas: Sequence[float]) -> list[SweepRow]:
    """Run the scenario once per gain; rows keep the input order regardless of
    completion order, and per-run failures are recorded without aborting."""
    if not alphas:
        raise InputError("sweep requires at least one alpha")
    for a in alphas:
        if a <= 0.0:
            raise InputError(f"sweep alphas must be positive, got {a}")

    def one(alpha: float) -> SweepRow:
        try:
            traj, summary = config.run(alpha)
            return SweepRow(alpha=alpha, trajectory=traj, summary=summary)
        except DivergenceError as exc:
            return SweepRow(alpha=alpha, trajectory=None, summary=None, error=str(exc))

    workers = thread_budget(len(alphas))
    if workers == 1:
        return [one(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, alphas))


CSV_ENCODING = "utf-8"


def csv_header(n: int, m: int, p: int, q: int) -> str:
    cols = (["t"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"u{j + 1}" for j in range(m)]
            + [f"y{i + 1}" for i in range(p)]
            + [f"w{i + 1}" for i in range(q)]
            + ["V"]
            + [f"ustar{j + 1}" for j in range(m)])
    return ",".join(cols)


def write_csv(traj: Trajectory, stream: TextIO) -> None:
    """Trajectory CSV: fixed column schema, 12 significant digits, LF endings."""
    if traj.v is None:
        raise InputError("trajectory has no Lyapunov samples; simulate with a LyapunovSpec")
    n = len(traj.x[0])
    m = len(traj.u[0])
    p = len(traj.y[0])
    q = len(traj.w[0])
    stream.write(csv_header(n, m, p, q) + "\n")
    for i in range(len(traj.t)):
        k = traj.seg_of[i]
        fields = [fmt12(traj.t[i])]
        fields += [fmt12(v) for v in traj.x[i]]
        fields += [fmt12(v) for v in traj.u[i]]
        fields += [fmt12(v) for v in traj.y[i]]
        fields += [fmt12(v) for v in traj.w[i]]
        fields.append(fmt12(traj.v[i]))
        fields += [fmt12(v) for v in traj.ustar[k]]
        stream.write(",".join(fields) + "\n")
