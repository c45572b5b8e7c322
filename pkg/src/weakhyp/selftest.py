"""Property suites run by ``weakhyp selftest`` and reused by the runner.

Every suite returns a SuiteResult with the measured quantities next to the
gates they were compared against, so a red line says by how much.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from types import SimpleNamespace

import numpy as np

from . import energy, gevrey, solver
from .mollify import MollifierSpec, bump, bump_derivative, regularize_case1, regularize_case2, verify_regularization
from .problem import (abs_kink, constant, example1_spec, example2_spec, linear_factor_spec, t_power,
                      wave_spec)
from .reduction import build_system
from .roots import CASE1, CASE2, CASE3, RootField, classify
from .symmetrizer import (build_bundle, conjugate_A_closed, conjugate_B_closed, conjugate_dH_closed,
                          conjugate_oracle, companion_from_roots, dH_matrix, lower_matrix, lu_det)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{tag} {self.name} ({self.seconds:.2f}s): {parts}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- symmetrizer ------------------------------------------------------------

def random_nodes(rng, m: int, count: int, min_gap: float = 1e-3):
    """Sorted nodes mu in [-1, 1] with pairwise gaps >= min_gap (rejection)."""
    out = np.empty((0, m))
    while len(out) < count:
        mu = np.sort(rng.uniform(-1.0, 1.0, size=(2 * count, m)), axis=-1)
        ok = np.min(np.diff(mu, axis=-1), axis=-1) >= min_gap
        out = np.concatenate([out, mu[ok]])
    return out[:count]


def _rel_max(a, b):
    err = np.max(np.abs(a - b), axis=(-2, -1))
    ref = np.max(np.abs(b), axis=(-2, -1))
    return err / np.where(ref > 0, ref, 1.0)


@_timed
def symmetrizer_suite(n_per_m: int = 1000, orders=range(2, 7), seed: int = 0) -> SuiteResult:
    """Closed-form det, inverse and conjugations against direct computation."""
    rng = np.random.default_rng(seed)
    worst = {"det": 0.0, "inverse": 0.0, "dH_offdiag": 0.0, "B": 0.0, "A_offdiag": 0.0}
    for m in orders:
        mu = random_nodes(rng, m, n_per_m)
        lam_b = 10.0 ** rng.uniform(0.0, 6.0, size=n_per_m)
        b = build_bundle(mu * lam_b[:, None], lam_b)
        det_lu = lu_det(b.H).astype(float)
        worst["det"] = max(worst["det"], float(np.max(np.abs(b.detH - det_lu) / np.abs(det_lu))))
        resid = np.max(np.sum(np.abs(b.Hinv @ b.H - np.eye(m)), axis=-1), axis=-1)
        worst["inverse"] = max(worst["inverse"], float(np.max(resid / b.cond_proxy)))
        off = ~np.eye(m, dtype=bool)
        dlam = rng.normal(size=(n_per_m, m)) * lam_b[:, None]
        C = conjugate_dH_closed(b, dlam)
        O = b.Hinv @ dH_matrix(b, dlam)
        worst["dH_offdiag"] = max(worst["dH_offdiag"], float(np.max(_rel_max(C * off, O * off))))
        # lower coefficients of size <xi>^(l - j) with l <= m - 1
        l = rng.integers(0, m, size=(n_per_m, 1))
        gc = rng.normal(size=(n_per_m, m)) * lam_b[:, None] ** (l - np.arange(m))
        Bm = lower_matrix(gc, lam_b)
        lam_v = mu * lam_b[:, None]
        g = np.sum(gc[:, None, :] * lam_v[:, :, None] ** np.arange(m), axis=-1)
        worst["B"] = max(worst["B"], float(np.max(_rel_max(conjugate_B_closed(b, g),
                                                              conjugate_oracle(b, Bm)))))
        tau = (mu + 0.1 * rng.normal(size=mu.shape)) * lam_b[:, None]
        tau = np.sort(tau, axis=-1)
        A = companion_from_roots(tau, lam_b)
        worst["A_offdiag"] = max(worst["A_offdiag"], float(np.max(
            _rel_max(conjugate_A_closed(b, tau, A) * off, conjugate_oracle(b, A) * off))))
    gates = {"det": 1e-10, "inverse": 1e-8, "dH_offdiag": 1e-6, "B": 1e-6, "A_offdiag": 1e-6}
    passed = all(worst[k] <= gates[k] for k in gates)
    return SuiteResult("symmetrizer closed forms", passed, dict(worst, instances=n_per_m * len(orders)))


# -- eigenvalue keystone ----------------------------------------------------

def _example_root_oracles():
    a = t_power(2.0)
    b = abs_kink(0.5, 0.5, offset=4.0)
    e1 = example1_spec(a)
    e2 = example2_spec(a, b)

    def r1(t, x):
        s = np.sqrt(a(t)) * x
        return np.stack([-s, 0 * s, s], axis=-1)

    def r2(t, x):
        p, q = np.sqrt(a(t)) * x, np.sqrt(b(t)) * x
        return np.stack([-q, -p, p, q], axis=-1)

    return [("example1", e1, r1), ("example2", e2, r2)]


def random_factor_specs(rng, count: int = 20, max_order: int = 5):
    """Specs whose roots are known linear forms in xi with t-dependent slopes."""
    out = []
    for _ in range(count):
        m = int(rng.integers(2, max_order + 1))
        slopes = np.sort(rng.uniform(-2.0, 2.0, size=m))
        rates = rng.uniform(-0.5, 0.5, size=m)
        forms = [[t_power(1.0, float(rates[k]), float(slopes[k]))] for k in range(m)]

        def oracle(t, x, s=slopes, r=rates):
            t = np.asarray(t, dtype=float)
            return np.sort((s + r * t[..., None]) * np.asarray(x)[..., None], axis=-1)

        out.append((f"random m={m}", linear_factor_spec(forms), oracle))
    return out


@_timed
def eigenvalue_suite(n_grid: int = 50, n_random: int = 20, seed: int = 1, gate: float = 1e-7) -> SuiteResult:
    """Eigenvalues of A(t, xi) against independently known roots, in units of <xi>."""
    rng = np.random.default_rng(seed)
    cases = _example_root_oracles() + random_factor_specs(rng, n_random)
    worst = 0.0
    for _, spec, oracle in cases:
        sysm = build_system(spec)
        ts = np.linspace(0.0, spec.T, n_grid)
        for x in np.geomspace(1.0, 1e4, n_grid):
            xi = np.array([x])
            lam = math.sqrt(1.0 + x * x)
            ev = np.linalg.eigvals(sysm.A(ts, xi))
            ev = ev[np.arange(len(ts))[:, None], np.argsort(ev.real, axis=-1)]
            ref = np.sort(oracle(ts, x), axis=-1)
            worst = max(worst, float(np.max(np.abs(ev - ref)) / lam))
    return SuiteResult("eigenvalue keystone", worst <= gate,
                       {"max_error_over_bracket": worst, "gate": gate, "specs": len(cases)})


# -- mollifier ----------------------------------------------------------------

@_timed
def mollifier_suite(eps_powers=(4, 5, 6, 7, 8), spread: float = 0.2) -> SuiteResult:
    """Case 1 separation and constant stability; Case 2 gaps above the threshold."""
    phi = MollifierSpec(bump, bump_derivative)
    spec = example1_spec(t_power(2.0))
    f = RootField(spec)
    xis = [np.array([x]) for x in (10.0, 100.0, 1000.0)]
    consts = {"i": [], "ii": []}
    worst_sep = 0.0
    for k in eps_powers:
        mr = regularize_case1(f, phi, 2.0 ** -k, 1.0)
        rep = verify_regularization(mr, (None, xis))
        sep = rep.get("(iii) separation eps^alpha <xi>")
        worst_sep = max(worst_sep, float(sep.detail.split()[2]))
        consts["i"].append(rep.get("(i) derivative bound, coinciding block").constant)
        consts["ii"].append(rep.get("(ii) accuracy bound, coinciding block").constant)
    stable = {}
    for key, vals in consts.items():
        v = np.array(vals)
        med = float(np.median(v))
        stable[key] = float(np.max(np.abs(v / med - 1.0)))

    spec2 = example2_spec(t_power(2.0), abs_kink(0.5, 0.5, offset=4.0))
    f2 = RootField(spec2)
    cls = classify(f2, spec2)
    gamma, _ = energy.select_gamma_s(cls, spec2.m, spec2.l)
    g = float(gamma)
    mr2 = regularize_case2(f2, phi, lambda lam: lam ** -g, lambda lam: 1.0 / lam, cls.alpha, cls.beta,
                           cls.r, order=cls.order)
    probe = [np.array([2.0 ** k]) for k in range(4, 21, 2)]
    rep2 = verify_regularization(mr2, (None, probe), c_comp=cls.c_comp, c_gap=cls.c_gap,
                                 holder_constant=cls.holder_constant, gamma=g)
    case2 = {r.name: r.passed for r in rep2.results}
    above = sum(1 for x in probe if abs(x[0]) >= (rep2.threshold or math.inf))
    passed = (worst_sep <= 1e-12 and all(v <= spread for v in stable.values())
              and rep2.passed and above > 0)
    return SuiteResult("mollifier properties", passed, {
        "separation_violation": worst_sep, "spread_i": stable["i"], "spread_ii": stable["ii"],
        "case2_threshold": rep2.threshold, "case2_probes_above": above,
        "case2_all": all(case2.values())})


# -- integrator -------------------------------------------------------------

def _wave_closed_form(sysm, xi, V0, t):
    # d/dt V = i A V with A^2 = w^2 I
    A = sysm.A(0.0, xi)
    w = math.sqrt(float((A @ A)[0, 0]))
    return math.cos(w * t) * V0 + 1j * math.sin(w * t) / w * (A @ V0)


@_timed
def integrator_suite(backend: str | None = None, tol: float = 1e-10) -> SuiteResult:
    """Fixed-step order by Richardson, adaptive accuracy, linearity and zero data."""
    sysm = build_system(wave_spec(constant(4.0), T=1.0))
    xi = np.array([3.0])
    V0 = np.array([1.0, 0.5j])
    ref = _wave_closed_form(sysm, xi, V0, 1.0)
    errs = []
    for h in (0.05, 0.025, 0.0125):
        tr = solver.integrate_mode(sysm, V0, xi, tol=math.inf, h_max=h, n_out=2, backend=backend,
                                   normalize=False)
        errs.append(float(np.linalg.norm(tr.V_unit[-1] - ref)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    adaptive = solver.integrate_mode(sysm, V0, xi, tol=tol, n_out=2, backend=backend, normalize=False)
    adapt_err = float(np.linalg.norm(adaptive.V_unit[-1] - ref))

    # linearity on a variable-coefficient problem
    sys1 = build_system(example1_spec(t_power(2.0), lower={(0, (0,)): constant(1.0)}))
    xi1 = np.array([20.0])
    u, v = np.array([1.0, 0.0, 0.0], complex), np.array([0.0, 1.0, 1j])
    a, b = 0.7 - 0.2j, -1.3
    run = lambda w: solver.integrate_mode(sys1, w, xi1, tol=tol, backend=backend,  # noqa: E731
                                          normalize=False).V_unit
    lin = float(np.max(np.abs(run(a * u + b * v) - (a * run(u) + b * run(v)))))
    lin_scale = float(np.max(np.abs(run(a * u + b * v))))
    zero = float(np.max(np.abs(run(np.zeros(3, complex)))))
    ok_order = all(abs(o - 4.0) <= 0.3 for o in orders)
    passed = (ok_order and adapt_err <= 100 * tol and lin <= 5 * tol * max(lin_scale, 1.0)
              and zero <= 5 * tol)
    return SuiteResult("integrator", passed, {
        "order_1": orders[0], "order_2": orders[1], "adaptive_error": adapt_err,
        "linearity_error": lin, "zero_data": zero, "backend": backend or solver.BACKEND})


# -- index formulas -----------------------------------------------------------

def _case(case_id, alpha, beta=None, r=None):
    return SimpleNamespace(case_id=case_id, alpha=alpha, beta=alpha if beta is None else beta, r=r)


def index_table():
    """(label, computed (gamma, s_sup), expected (gamma, s_sup)) rows with exact inputs."""
    F = Fraction
    rows = []
    for m, l, a in ((3, 1, F(1, 2)), (4, 2, F(2, 3)), (5, 3, F(1)), (3, 2, F(1))):
        exp_g = min(1 / (1 + a), F(m - l) / (a * m))
        exp_s = 1 + min(a, F(m - l, l))
        rows.append((f"case1 m={m} l={l} alpha={a}", energy.select_gamma_s(_case(CASE1, a), m, l),
                     (exp_g, exp_s)))
    for a in (F(1), F(1, 3)):
        rows.append((f"case1 l=0 alpha={a}", energy.select_gamma_s(_case(CASE1, a), 3, 0),
                     (min(1 / (1 + a), F(3) / (3 * a)), 1 + a)))
    for l in (1, 2):
        a = F(1)
        rows.append((f"example1 l={l}", energy.select_gamma_s(_case(CASE1, a), 3, l)[1:],
                     (1 + min(a, F(3 - l, l)),)))
    for a, b in ((F(1), F(1, 2)), (F(1, 2), F(1, 3))):
        g, s = energy.select_gamma_s(_case(CASE2, a, b, 2), 4, 0)
        rows.append((f"example2 alpha={a} beta={b}", (s,), (1 + min(a, b / (2 - b)),)))
    for b in (F(1, 2), F(1, 3)):
        g, s = energy.select_gamma_s(_case(CASE3, b, b, 1), 2, 0)
        rows.append((f"case3 beta={b}", (g, s), (F(1), 1 + b / (1 - b))))
    return rows


@_timed
def index_suite() -> SuiteResult:
    rows = index_table()
    bad = [label for label, got, want in rows
           if tuple(got) != tuple(want) or not all(isinstance(x, Fraction) or x == math.inf for x in got)]
    return SuiteResult("index formulas", not bad, {"rows": len(rows), "mismatches": bad})


# -- gevrey fits --------------------------------------------------------------

def round_trip_grid(s: float, delta: float):
    """Sample range where exp(-delta <xi>^(1/s)) falls over many e-folds."""
    hi = (60.0 / delta) ** s
    return np.geomspace(max(hi / 2.0 ** 8, 2.0), hi, 64)


@_timed
def gevrey_suite(tol: float = 0.02) -> SuiteResult:
    worst = 0.0
    for s in (1.0, 1.5, 2.0, 3.0):
        for delta in (0.1, 1.0):
            lams = round_trip_grid(s, delta)
            datum = gevrey.synthesize(s, delta)
            y = np.array([datum.log_parts(np.array([math.sqrt(L * L - 1)]))[0] for L in lams])
            fit = gevrey.fit_decay_log(lams, y)
            worst = max(worst, abs(fit.s / s - 1), abs(fit.delta / delta - 1))
    poly = 0.0
    lams = 2.0 ** np.linspace(20, 60, 64)
    for s in (1.0, 1.5, 2.0, 3.0):
        for p in (0, 5, 10):
            y = p * np.log(lams) - lams ** (1.0 / s)
            poly = max(poly, abs(gevrey.fit_decay_log(lams, y).s / s - 1))
    flagged = True
    for lo, hi in ((4, 10), (2, 20)):
        lp = 2.0 ** np.linspace(lo, hi, 64)
        flagged = flagged and gevrey.fit_decay_log(lp, -3 * np.log(lp)).non_exponential
    passed = worst <= tol and poly <= tol and flagged
    return SuiteResult("gevrey fits", passed, {"round_trip": worst, "poly_factor": poly,
                                               "polynomial_flagged": flagged})


SUITES = {
    "symmetrizer": symmetrizer_suite,
    "eigenvalues": eigenvalue_suite,
    "mollifier": mollifier_suite,
    "integrator": integrator_suite,
    "indices": index_suite,
    "gevrey": gevrey_suite,
}


def run_all(names=None) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    return [SUITES[n]() for n in names]
