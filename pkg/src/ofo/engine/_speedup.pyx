# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop stepping kernel.

Mirrors ofo.engine.pure expression by expression; compiled with
-ffp-contract=off so results are bit-identical to the pure kernel.
"""

from libc.math cimport cos, isfinite, sin, sqrt
from libc.stdlib cimport free, malloc

from .params import COST_SQRTPLUS, CTRL_PROJECTED, PLANT_SINE, SegmentResult


cdef inline void _eval_field(
    int n, int m, int p,
    bint sine, bint sqrtplus, bint projected,
    const double* a, const double* b, const double* drift,
    const double* c, const double* s0,
    double cq1, double cq2, double mu4,
    double alpha, double beta,
    const double* lo, const double* hi,
    const double* xs, const double* us,
    double* kx, double* ku,
    double* y, double* gu, double* gy, double* pu,
) noexcept nogil:
    cdef int i, j, base
    cdef double acc, fac, v, lj, hj
    for i in range(p):
        acc = 0.0
        base = i * n
        for j in range(n):
            acc += c[base + j] * xs[j]
        y[i] = acc
    if sine:
        pu[0] = us[0] + sin(us[0])
        fac = 1.0 + cos(us[0])
    else:
        for j in range(m):
            pu[j] = us[j]
        fac = 1.0
    for i in range(n):
        acc = 0.0
        base = i * n
        for j in range(n):
            acc += a[base + j] * xs[j]
        base = i * m
        for j in range(m):
            acc += b[base + j] * pu[j]
        kx[i] = acc + drift[i]
    if sqrtplus:
        gu[0] = 2.0 * cq1 * us[0] + mu4 * us[0]
        gy[0] = y[0] / sqrt(y[0] * y[0] + 1.0)
    else:
        for j in range(m):
            gu[j] = 2.0 * cq1 * us[j] + mu4 * us[j]
        for i in range(p):
            gy[i] = 2.0 * cq2 * y[i]
    for j in range(m):
        acc = gu[j]
        for i in range(p):
            acc += (s0[i * m + j] * fac) * gy[i]
        if projected:
            v = us[j] - beta * acc
            lj = lo[j]
            hj = hi[j]
            if v < lj:
                v = lj
            elif v > hj:
                v = hj
            ku[j] = alpha * (v - us[j])
        else:
            ku[j] = -alpha * acc


cdef double* _alloc(int count) except NULL:
    cdef double* ptr = <double*> malloc(count * sizeof(double))
    if ptr == NULL:
        raise MemoryError()
    return ptr


cdef void _fill(double* dst, object values):
    cdef int i = 0
    for v in values:
        dst[i] = v
        i += 1


def run_segment(spec):
    cdef int n = spec.n
    cdef int m = spec.m
    cdef int p = spec.p
    cdef bint sine = spec.plant_kind == PLANT_SINE
    cdef bint sqrtplus = spec.cost_kind == COST_SQRTPLUS
    cdef bint projected = spec.ctrl_kind == CTRL_PROJECTED
    cdef double cq1 = spec.cq1
    cdef double cq2 = spec.cq2
    cdef double mu4 = spec.mu4
    cdef double alpha = spec.alpha
    cdef double beta = spec.beta
    cdef double dt = spec.dt
    cdef long n_full = spec.n_full
    cdef double last_dt = spec.last_dt
    cdef long stride = spec.record_stride
    cdef bint include_final = spec.include_final
    cdef double t0 = spec.t0
    cdef double t_end = spec.t_end

    cdef double* a = _alloc(n * n)
    cdef double* b = _alloc(n * m)
    cdef double* drift = _alloc(n)
    cdef double* c = _alloc(p * n)
    cdef double* s0 = _alloc(p * m)
    cdef double* lo = _alloc(m)
    cdef double* hi = _alloc(m)
    cdef double* x = _alloc(n)
    cdef double* u = _alloc(m)
    cdef double* xt = _alloc(n)
    cdef double* ut = _alloc(m)
    cdef double* kx1 = _alloc(n)
    cdef double* kx2 = _alloc(n)
    cdef double* kx3 = _alloc(n)
    cdef double* kx4 = _alloc(n)
    cdef double* ku1 = _alloc(m)
    cdef double* ku2 = _alloc(m)
    cdef double* ku3 = _alloc(m)
    cdef double* ku4 = _alloc(m)
    cdef double* y = _alloc(p)
    cdef double* gu = _alloc(m)
    cdef double* gy = _alloc(p)
    cdef double* pu = _alloc(m)

    res = SegmentResult()
    rec_t = res.times
    rec_x = res.xs
    rec_u = res.us
    rec_y = res.ys

    cdef long n_tot = n_full + (1 if last_dt > 0.0 else 0)
    cdef double h2_main = 0.5 * dt
    cdef double h6_main = dt / 6.0
    cdef double max_violation = 0.0
    cdef double h, h2, h6, acc, d
    cdef long i, step
    cdef int j, base, ri, rj
    cdef bint ok
    blowup = None

    try:
        _fill(a, spec.a)
        _fill(b, spec.b)
        _fill(drift, spec.drift)
        _fill(c, spec.c)
        _fill(s0, spec.sens0)
        _fill(lo, spec.lo)
        _fill(hi, spec.hi)
        _fill(x, spec.x0)
        _fill(u, spec.u0)

        # step-0 record
        rec_t.append(t0 + 0 * dt)
        for rj in range(n):
            rec_x.append(x[rj])
        for rj in range(m):
            rec_u.append(u[rj])
        for ri in range(p):
            acc = 0.0
            base = ri * n
            for rj in range(n):
                acc += c[base + rj] * x[rj]
            rec_y.append(acc)

        for i in range(n_tot):
            if i < n_full:
                h = dt
                h2 = h2_main
                h6 = h6_main
            else:
                h = last_dt
                h2 = 0.5 * h
                h6 = h / 6.0
            _eval_field(n, m, p, sine, sqrtplus, projected, a, b, drift, c, s0,
                        cq1, cq2, mu4, alpha, beta, lo, hi, x, u, kx1, ku1, y, gu, gy, pu)
            for j in range(n):
                xt[j] = x[j] + h2 * kx1[j]
            for j in range(m):
                ut[j] = u[j] + h2 * ku1[j]
            _eval_field(n, m, p, sine, sqrtplus, projected, a, b, drift, c, s0,
                        cq1, cq2, mu4, alpha, beta, lo, hi, xt, ut, kx2, ku2, y, gu, gy, pu)
            for j in range(n):
                xt[j] = x[j] + h2 * kx2[j]
            for j in range(m):
                ut[j] = u[j] + h2 * ku2[j]
            _eval_field(n, m, p, sine, sqrtplus, projected, a, b, drift, c, s0,
                        cq1, cq2, mu4, alpha, beta, lo, hi, xt, ut, kx3, ku3, y, gu, gy, pu)
            for j in range(n):
                xt[j] = x[j] + h * kx3[j]
            for j in range(m):
                ut[j] = u[j] + h * ku3[j]
            _eval_field(n, m, p, sine, sqrtplus, projected, a, b, drift, c, s0,
                        cq1, cq2, mu4, alpha, beta, lo, hi, xt, ut, kx4, ku4, y, gu, gy, pu)
            for j in range(n):
                x[j] = x[j] + h6 * (kx1[j] + 2.0 * kx2[j] + 2.0 * kx3[j] + kx4[j])
            for j in range(m):
                u[j] = u[j] + h6 * (ku1[j] + 2.0 * ku2[j] + 2.0 * ku3[j] + ku4[j])
            step = i + 1
            ok = True
            for j in range(n):
                if not isfinite(x[j]):
                    ok = False
            for j in range(m):
                if not isfinite(u[j]):
                    ok = False
            if not ok:
                blowup = t_end if step == n_tot else t0 + step * dt
                break
            if projected:
                for j in range(m):
                    d = u[j] - hi[j]
                    if d > max_violation:
                        max_violation = d
                    d = lo[j] - u[j]
                    if d > max_violation:
                        max_violation = d
            if (step % stride == 0 and step < n_tot) or (step == n_tot and include_final):
                rec_t.append(t_end if step == n_tot else t0 + step * dt)
                for rj in range(n):
                    rec_x.append(x[rj])
                for rj in range(m):
                    rec_u.append(u[rj])
                for ri in range(p):
                    acc = 0.0
                    base = ri * n
                    for rj in range(n):
                        acc += c[base + rj] * x[rj]
                    rec_y.append(acc)

        res.final_x = [x[j] for j in range(n)]
        res.final_u = [u[j] for j in range(m)]
        res.max_violation = max_violation
        res.blowup_time = blowup
    finally:
        free(a); free(b); free(drift); free(c); free(s0); free(lo); free(hi)
        free(x); free(u); free(xt); free(ut)
        free(kx1); free(kx2); free(kx3); free(kx4)
        free(ku1); free(ku2); free(ku3); free(ku4)
        free(y); free(gu); free(gy); free(pu)
    return res
