# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Runge-Kutta-Fehlberg 4(5) kernel; same algorithm as ``_rk_py``.

Registry coefficient programs are evaluated without the GIL.  Arbitrary
Python coefficients and sources go through callbacks with the GIL held.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, exp
cdef extern from "complex.h" nogil:
    double cabs(double complex)
from libc.stdlib cimport malloc, free

from ..errors import StepUnderflow

cnp.import_array()

cdef double CC[6]
CC[:] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5]
cdef double AA[6][5]
AA[0][:] = [0.0, 0.0, 0.0, 0.0, 0.0]
AA[1][:] = [0.25, 0.0, 0.0, 0.0, 0.0]
AA[2][:] = [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0]
AA[3][:] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0]
AA[4][:] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0]
AA[5][:] = [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0]
cdef double B4[6]
B4[:] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0]
cdef double EE[6]
EE[:] = [1.0 / 360.0, 0.0, -128.0 / 4275.0, -2197.0 / 75240.0, 1.0 / 50.0, 2.0 / 55.0]
cdef double OMEGA_CAP = 5.0
cdef double STEP_FLOOR = 1e-4
DEF MAXM = 12


cdef inline double step_profile(double x) noexcept nogil:
    cdef double f, g
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    f = exp(-1.0 / x)
    g = exp(-1.0 / (1.0 - x))
    return f / (f + g)


cdef struct Program:
    int n_atoms
    int n_mono
    int maxf
    long *code
    double *power
    double *center
    double *width
    long *col
    double *weight
    long *factors
    double *vals


cdef void eval_row(Program *p, double t, int m, double *row) noexcept nogil:
    cdef int a, i, f
    cdef long idx
    cdef double v
    for a in range(p.n_atoms):
        if p.code[a] == 0:
            p.vals[a] = pow(fabs(t), p.power[a])
        elif p.code[a] == 1:
            p.vals[a] = pow(fabs(t - p.center[a]), p.power[a])
        else:
            p.vals[a] = step_profile((t - p.center[a]) / p.width[a])
    for i in range(m):
        row[i] = 0.0
    for i in range(p.n_mono):
        v = p.weight[i]
        for f in range(p.maxf):
            idx = p.factors[i * p.maxf + f]
            if idx < 0:
                break
            v = v * p.vals[idx]
        row[p.col[i]] += v


cdef struct Callbacks:
    void *row_fn
    void *src_fn
    void *errors
    int has_src


cdef int py_row(Callbacks *cb, double t, int m, double *row) noexcept with gil:
    try:
        rv = (<object> cb.row_fn)(t)
        for j in range(m):
            row[j] = float(rv[j])
        return 0
    except BaseException as exc:
        (<object> cb.errors).append(exc)
        return -1


cdef int py_src(Callbacks *cb, double t, double complex *out) noexcept with gil:
    try:
        out[0] = complex((<object> cb.src_fn)(t))
        return 0
    except BaseException as exc:
        (<object> cb.errors).append(exc)
        return -1


cdef struct Result:
    long steps
    long rejected
    double max_err
    double max_hw
    double t_fail
    double h_fail
    int status  # 0 ok, 1 underflow, 2 budget, 3 callback error


cdef Result core(int m, double lam, double complex *y, double *tout, Py_ssize_t n_out,
                 double complex *out, double tol, double h0, double h_max, double h_min,
                 double span, int native, Program *prog, Callbacks *cb, long max_steps) noexcept nogil:
    cdef double complex ys[MAXM]
    cdef double complex y4[MAXM]
    cdef double complex K[6][MAXM]
    cdef double row[MAXM]
    cdef double lampow[MAXM]
    cdef double invdeg[MAXM]
    cdef double complex ilam = 1j * lam
    cdef double complex acc, s4, se, src
    cdef double t, h, target, h_try, omega, w, v, err, scale, a0, a1, allowed, fac, h_new, ts, e
    cdef int i, j, s, q, clamped
    cdef Py_ssize_t k
    cdef Result res
    res.steps = 0
    res.rejected = 0
    res.max_err = 0.0
    res.max_hw = 0.0
    res.status = 0
    res.t_fail = 0.0
    res.h_fail = 0.0
    for i in range(m):
        lampow[i] = pow(lam, m - 1 - i)
        invdeg[i] = 1.0 / (m - i)
        out[i] = y[i]
    t = tout[0]
    h = h0
    k = 1
    while k < n_out:
        target = tout[k]
        if target - t <= 0.0:
            for i in range(m):
                out[k * m + i] = y[i]
            k += 1
            continue
        h_try = h if h < h_max else h_max
        clamped = 0
        if t + h_try >= target - 1e-14 * (fabs(target) if fabs(target) > 1.0 else 1.0):
            h_try = target - t
            clamped = 1
        omega = 0.0
        for s in range(6):
            for i in range(m):
                ys[i] = y[i]
            for q in range(s):
                if AA[s][q] != 0.0:
                    for i in range(m):
                        ys[i] = ys[i] + (h_try * AA[s][q]) * K[q][i]
            ts = t + CC[s] * h_try
            if native:
                eval_row(prog, ts, m, row)
            elif py_row(cb, ts, m, row) != 0:
                res.status = 3
                return res
            w = 0.0
            for j in range(m):
                v = fabs(row[j] * lampow[j])
                if v > 0.0:
                    v = pow(v, invdeg[j])
                    if v > w:
                        w = v
            if 2.0 * w > omega:
                omega = 2.0 * w
            acc = 0.0
            for j in range(m):
                acc = acc + row[j] * ys[j]
            if cb.has_src:
                if py_src(cb, ts, &src) != 0:
                    res.status = 3
                    return res
                acc = acc + src
            for i in range(m - 1):
                K[s][i] = ilam * ys[i + 1]
            K[s][m - 1] = 1j * acc
        if omega > 0.0 and h_try * omega > OMEGA_CAP:
            res.rejected += 1
            h = 0.9 * OMEGA_CAP / omega
            if h < h_min:
                res.status = 1
                res.t_fail = t
                res.h_fail = h
                return res
            continue
        err = 0.0
        scale = 0.0
        for i in range(m):
            s4 = 0.0
            se = 0.0
            for q in range(6):
                s4 = s4 + B4[q] * K[q][i]
                se = se + EE[q] * K[q][i]
            y4[i] = y[i] + h_try * s4
            e = cabs(se) * h_try
            if e > err:
                err = e
            a0 = cabs(y[i])
            a1 = cabs(y4[i])
            if a0 > scale:
                scale = a0
            if a1 > scale:
                scale = a1
        err = err / (scale if scale > 1e-300 else 1e-300)
        allowed = tol * h_try / span
        if allowed < tol * STEP_FLOOR:
            allowed = tol * STEP_FLOOR
        if err <= allowed:
            for i in range(m):
                y[i] = y4[i]
            t = target if clamped else t + h_try
            res.steps += 1
            if err > res.max_err:
                res.max_err = err
            if h_try * omega > res.max_hw:
                res.max_hw = h_try * omega
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(allowed / err, 0.25)
                fac = 5.0 if fac > 5.0 else (0.2 if fac < 0.2 else fac)
            h_new = h_try * fac
            if clamped:
                h = h_new if h_new > h else h
                for i in range(m):
                    out[k * m + i] = y[i]
                k += 1
            else:
                h = h_new
            if res.steps > max_steps:
                res.status = 2
                res.t_fail = t
                return res
        else:
            res.rejected += 1
            fac = 0.9 * pow(allowed / err, 0.25)
            h = h_try * (fac if fac > 0.2 else 0.2)
            if h < h_min:
                res.status = 1
                res.t_fail = t
                res.h_fail = h
                return res
    return res


def integrate(int m, double lam, v0, t_out, double tol, double h0, double h_max, double h_min,
              double span, program=None, row_fn=None, src_fn=None, long max_steps=50_000_000):
    """Integrate and return (V at t_out, steps, rejected, max local error, max h*omega)."""
    if m > MAXM:
        raise ValueError("order exceeds the compiled kernel limit")
    cdef double[::1] tout = np.ascontiguousarray(t_out, dtype=np.float64)
    cdef Py_ssize_t n_out = tout.shape[0]
    out_arr = np.zeros((n_out, m), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex y[MAXM]
    cdef Program prog
    cdef Callbacks cb
    cdef Result res
    cdef int native = program is not None
    cdef long[::1] code_v, col_v, fac_v
    cdef double[::1] pw_v, ce_v, wi_v, wt_v
    errors = []
    v0c = np.asarray(v0, dtype=np.complex128)
    for i in range(m):
        y[i] = v0c[i]
    cb.row_fn = <void *> row_fn
    cb.src_fn = <void *> src_fn
    cb.errors = <void *> errors
    cb.has_src = src_fn is not None
    prog.vals = NULL
    if native:
        code_v = np.ascontiguousarray(program.atom_code, dtype=np.int_)
        pw_v = np.ascontiguousarray(program.atom_power, dtype=np.float64)
        ce_v = np.ascontiguousarray(program.atom_center, dtype=np.float64)
        wi_v = np.ascontiguousarray(program.atom_width, dtype=np.float64)
        col_v = np.ascontiguousarray(program.mono_col, dtype=np.int_)
        wt_v = np.ascontiguousarray(program.mono_weight, dtype=np.float64)
        fac_v = np.ascontiguousarray(np.asarray(program.mono_factors).reshape(-1), dtype=np.int_)
        prog.n_atoms = code_v.shape[0]
        prog.n_mono = col_v.shape[0]
        prog.maxf = program.mono_factors.shape[1] if prog.n_mono > 0 else 1
        prog.code = &code_v[0] if prog.n_atoms > 0 else NULL
        prog.power = &pw_v[0] if prog.n_atoms > 0 else NULL
        prog.center = &ce_v[0] if prog.n_atoms > 0 else NULL
        prog.width = &wi_v[0] if prog.n_atoms > 0 else NULL
        prog.col = &col_v[0] if prog.n_mono > 0 else NULL
        prog.weight = &wt_v[0] if prog.n_mono > 0 else NULL
        prog.factors = &fac_v[0] if prog.n_mono > 0 else NULL
        prog.vals = <double *> malloc((prog.n_atoms + 1) * sizeof(double))
    try:
        with nogil:
            res = core(m, lam, y, &tout[0], n_out, &out[0, 0], tol, h0, h_max, h_min, span,
                       native, &prog, &cb, max_steps)
    finally:
        if prog.vals != NULL:
            free(prog.vals)
    if res.status == 3:
        raise errors[0]
    if res.status == 1:
        raise StepUnderflow(f"step {res.h_fail!r} below {h_min!r} at t={res.t_fail!r}")
    if res.status == 2:
        raise StepUnderflow(f"step budget {max_steps} exhausted at t={res.t_fail!r}")
    return out_arr, res.steps, res.rejected, res.max_err, res.max_hw
