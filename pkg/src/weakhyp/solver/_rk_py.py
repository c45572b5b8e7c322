"""Pure-Python Runge-Kutta-Fehlberg 4(5) kernel for D_t V = (A + B) V + F.

A is in companion form with <xi> on the superdiagonal, so the right-hand
side only needs the last row of A + B.  Mirrors ``_rk_ext.pyx`` operation
for operation.
"""
import math

import numpy as np

from ..errors import StepUnderflow

C = (0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5)
A = (
    (),
    (0.25,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0)
E = (1.0 / 360.0, 0.0, -128.0 / 4275.0, -2197.0 / 75240.0, 1.0 / 50.0, 2.0 / 55.0)
OMEGA_CAP = 5.0
# error is controlled per unit step, but never tighter than tol * STEP_FLOOR per
# step; keeps steps finite across square-root kinks in the coefficients
STEP_FLOOR = 1e-4


def _step_profile(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    f = math.exp(-1.0 / x)
    g = math.exp(-1.0 / (1.0 - x))
    return f / (f + g)


def _make_row(m, program, row_fn):
    if program is None:
        def row(t):
            return [float(v) for v in row_fn(t)]
        return row
    atoms = list(zip(program.atom_code.tolist(), program.atom_power.tolist(),
                     program.atom_center.tolist(), program.atom_width.tolist()))
    monos = []
    for col, w, fac in zip(program.mono_col.tolist(), program.mono_weight.tolist(),
                           program.mono_factors.tolist()):
        monos.append((col, w, tuple(f for f in fac if f >= 0)))

    def row(t):
        vals = []
        for code, p, c, w in atoms:
            if code == 0:
                vals.append(abs(t) ** p)
            elif code == 1:
                vals.append(abs(t - c) ** p)
            else:
                vals.append(_step_profile((t - c) / w))
        out = [0.0] * m
        for col, w, fac in monos:
            v = w
            for f in fac:
                v *= vals[f]
            out[col] += v
        return out
    return row


def integrate(m, lam, v0, t_out, tol, h0, h_max, h_min, span, program=None, row_fn=None,
              src_fn=None, max_steps=50_000_000):
    """Integrate and return (V at t_out, steps, rejected, max local error, max h*omega)."""
    row = _make_row(m, program, row_fn)
    lampow = [lam ** (m - 1 - j) for j in range(m)]
    invdeg = [1.0 / (m - j) for j in range(m)]
    n_out = len(t_out)
    out = np.zeros((n_out, m), dtype=complex)
    y = [complex(v) for v in v0]
    out[0] = y
    t = float(t_out[0])
    h = h0
    k = 1
    steps = rejected = 0
    max_err = 0.0
    max_hw = 0.0
    ilam = 1j * lam
    K = [None] * 6
    while k < n_out:
        target = float(t_out[k])
        if target - t <= 0.0:
            out[k] = y
            k += 1
            continue
        h_try = min(h, h_max)
        clamped = False
        if t + h_try >= target - 1e-14 * max(1.0, abs(target)):
            h_try = target - t
            clamped = True
        omega = 0.0
        for s in range(6):
            ys = list(y)
            for q, a in enumerate(A[s]):
                if a != 0.0:
                    kq = K[q]
                    ha = h_try * a
                    for i in range(m):
                        ys[i] += ha * kq[i]
            ts = t + C[s] * h_try
            r = row(ts)
            w = 0.0
            for j in range(m):
                v = abs(r[j] * lampow[j])
                if v > 0.0:
                    v = v ** invdeg[j]
                    if v > w:
                        w = v
            if 2.0 * w > omega:
                omega = 2.0 * w
            acc = 0j
            for j in range(m):
                acc += r[j] * ys[j]
            if src_fn is not None:
                acc += complex(src_fn(ts))
            ks = [ilam * ys[i + 1] for i in range(m - 1)]
            ks.append(1j * acc)
            K[s] = ks
        if omega > 0.0 and h_try * omega > OMEGA_CAP:
            rejected += 1
            h = 0.9 * OMEGA_CAP / omega
            if h < h_min:
                raise StepUnderflow(f"step {h!r} below {h_min!r} at t={t!r}")
            continue
        y4 = list(y)
        err = 0.0
        scale = 0.0
        for i in range(m):
            s4 = 0j
            se = 0j
            for q in range(6):
                s4 += B4[q] * K[q][i]
                se += E[q] * K[q][i]
            y4[i] = y[i] + h_try * s4
            e = abs(se) * h_try
            if e > err:
                err = e
            a0 = abs(y[i])
            a1 = abs(y4[i])
            if a0 > scale:
                scale = a0
            if a1 > scale:
                scale = a1
        err = err / max(scale, 1e-300)
        allowed = tol * max(h_try / span, STEP_FLOOR)
        if err <= allowed:
            y = y4
            t = target if clamped else t + h_try
            steps += 1
            if err > max_err:
                max_err = err
            if h_try * omega > max_hw:
                max_hw = h_try * omega
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (allowed / err) ** 0.25))
            h_new = h_try * fac
            h = max(h_new, h) if clamped else h_new
            if clamped:
                out[k] = y
                k += 1
            if steps > max_steps:
                raise StepUnderflow(f"step budget {max_steps} exhausted at t={t!r}")
        else:
            rejected += 1
            h = h_try * max(0.2, 0.9 * (allowed / err) ** 0.25)
            if h < h_min:
                raise StepUnderflow(f"step {h!r} below {h_min!r} at t={t!r}")
    return out, steps, rejected, max_err, max_hw
