"""Proof parameters, the four term estimates, and energy monotonicity for W.

W = e^(rho(t) <xi>^(1/s)) det H H^-1 V satisfies

    d/dt |W|^2 <= (2 rho' <xi>^(1/s) + 2 t1 + 2 t2 + t3 + t4) |W|^2 + source

with t1 = |(det H)'/det H|, t2 = ||H^-1 H'||, t3 and t4 the skew parts of
the conjugated A and B.  Everything here measures those quantities on
grids; constants are sups of measured / theoretical rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoThreshold
from .problem import lower_symbol
from .roots import CASE1, CASE2, CASE3
from .symmetrizer import (COND_GATE, build_bundle, conjugate_A_closed, conjugate_B_closed,
                          conjugate_dH_closed, log_abs_det)

INF = math.inf


# -- parameters -----------------------------------------------------------

def _inv(x):
    """1/x with 1/0 = +inf."""
    if x == 0:
        return INF
    return Fraction(1) / x if isinstance(x, (int, Fraction)) else 1.0 / x


def _exact(x):
    """Keep ints and Fractions exact, everything else float."""
    return x if isinstance(x, (int, Fraction)) else float(x)


def select_gamma_s(case, m: int, l: int):
    """(gamma, s_sup) for a classified problem.

    ``case`` needs ``case_id``, ``alpha``, ``beta`` and ``r``.  Rational inputs
    (int or Fraction) give exact Fraction results; s_sup may be +inf.
    """
    a, b, r = _exact(case.alpha), _exact(case.beta), case.r
    if case.case_id == CASE1:
        gamma = min(_inv(1 + a), (m - l) * _inv(a * m))
        s_sup = 1 + min(a, (m - l) * _inv(l) if l else INF)
    elif case.case_id == CASE2:
        gamma = min(_inv(1 + a), b * _inv(a * r), (m - l) * _inv(a * r))
        s_sup = 1 + min(a, b * _inv(r - b))
    elif case.case_id == CASE3:
        gamma = b * _inv(a)
        s_sup = 1 + (b * _inv(1 - b) if b != 1 else INF)
    else:
        raise ValueError(f"unknown case {case.case_id!r}")
    return gamma, s_sup


def default_s_test(s_sup, s_cap=2):
    """Midpoint of [1, s_sup); an unbounded range uses ``s_cap``."""
    if s_sup == INF:
        return s_cap
    return 1 + (s_sup - 1) / 2


def loss_exponent(case_id: str, gamma, alpha, m: int, r: int) -> float:
    """Exponent of the polynomial loss factor in the final bound (m in Case 1, r otherwise)."""
    k = m if case_id == CASE1 else r
    return float(gamma) * float(alpha) * k * (k - 1) / 2


@dataclass(frozen=True)
class EnergyParams:
    case_id: str
    gamma: float
    s: float
    rho0: float
    kappa: float
    delta1: float = INF

    def rho(self, t):
        return self.rho0 - self.kappa * np.asarray(t, dtype=float)

    def rho_prime(self, t):
        return np.full(np.shape(t), -self.kappa, dtype=float)

    def eps_rule(self, lam):
        return lam ** (-float(self.gamma))

    def delta_rule(self, lam):
        return 1.0 / lam

    def violations(self, horizon: float) -> list[str]:
        out = []
        if not self.rho0 < self.delta1:
            out.append(f"rho0 = {self.rho0!r} must be below the source decay rate {self.delta1!r}")
        if not self.rho(horizon) > 0:
            out.append(f"rho(T') = {float(self.rho(horizon))!r} must stay positive")
        if self.kappa < 0:
            out.append("kappa must be nonnegative")
        return out


# -- term estimates -------------------------------------------------------

@dataclass
class TermEstimates:
    """Measured terms over a time grid at one frequency, with their rates.

    ``source_log`` is log(2 |det H| |H^-1 F|); the source term of the
    bracket is exp(rho(t) <xi>^(1/s) + source_log), -inf when F = 0.
    """

    lam: float
    times: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    t4: np.ndarray
    source_log: np.ndarray
    rates: tuple
    t1_pairwise: np.ndarray
    cond_proxy: np.ndarray

    @property
    def terms(self) -> np.ndarray:
        return np.stack([self.t1, self.t2, self.t3, self.t4])

    @property
    def cond_ok(self) -> np.ndarray:
        return self.cond_proxy <= COND_GATE

    def sups(self) -> np.ndarray:
        """sup over well-conditioned times, per term."""
        return np.max(np.where(self.cond_ok, self.terms, 0.0), axis=-1)

    def constants(self) -> np.ndarray:
        """sup over the grid of measured / theoretical rate, per term."""
        return self.sups() / np.asarray(self.rates)

    def source(self, params: EnergyParams) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(params.rho(self.times) * self.lam ** (1.0 / params.s) + self.source_log)

    def bracket(self, params: EnergyParams) -> np.ndarray:
        """Coefficient of |W|^2 in the differential inequality (for |W| >= 1)."""
        damp = 2.0 * params.rho_prime(self.times) * self.lam ** (1.0 / params.s)
        return damp + 2 * self.t1 + 2 * self.t2 + self.t3 + self.t4 + self.source(params)

    def max_bracket(self, params: EnergyParams) -> float:
        ok = self.cond_ok
        return float(np.max(self.bracket(params)[ok])) if np.any(ok) else INF


def theoretical_rates(case_id: str, lam: float, eps: float, delta: float, alpha: float,
                      beta: float, r: int, m: int, l: int) -> tuple:
    """Ceilings for t1..t4 without their constants."""
    if case_id == CASE1:
        return (1 / eps, 1 / eps, eps ** alpha * lam, eps ** (alpha * (1 - m)) * lam ** (l - m + 1))
    if case_id == CASE3:
        # no coinciding block: all roots are separated and Hoelder-beta
        return (eps ** (beta - 1), eps ** (beta - 1), eps ** beta * lam, lam ** (l - m + 1))
    low = eps ** (alpha * (1 - r))
    return (max(1 / eps, delta ** (beta - 1)),
            max(1 / eps, delta ** (beta - 1) * low),
            max(eps ** alpha, delta ** beta * low) * lam,
            low * lam ** (l - m + 1))


def _skew_norm(M) -> np.ndarray:
    S = M - np.swapaxes(M, -1, -2)
    return np.linalg.norm(S, ord=2, axis=(-2, -1))


def term_estimates(system, mr, t, xi, parts=None) -> TermEstimates:
    """The four terms at (t, xi) from the closed-form conjugations (2-norm).

    ``parts`` reuses ``mr.parts(t, xi)`` when the caller already has it.
    """
    spec = system.spec
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam = math.sqrt(1.0 + float(xi @ xi))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    conv, shift, dl = mr.parts(t, xi) if parts is None else parts
    lv = conv + shift
    bundle = build_bundle(lv, np.full(len(t), lam))
    m = spec.m
    iu, ju = np.triu_indices(m, 1)
    num = dl[..., ju] - dl[..., iu]
    den = lv[..., ju] - lv[..., iu]
    t1 = np.abs(np.sum(num / den, axis=-1))
    t1_pair = np.sum(np.abs(num) / np.abs(den), axis=-1)
    t2 = np.linalg.norm(conjugate_dH_closed(bundle, dl), ord=2, axis=(-2, -1))
    tau = mr.tau(t, xi)
    t3 = _skew_norm(conjugate_A_closed(bundle, tau))
    g = lower_symbol(spec, t[:, None], xi, lv)
    t4 = _skew_norm(conjugate_B_closed(bundle, g))
    source_log = np.full(t.shape, -INF)
    if system.has_source:
        F = system.Fhat(t, xi)
        logdet, _ = log_abs_det(bundle)
        y = np.linalg.norm(np.einsum("tpq,tq->tp", bundle.Hinv, F), axis=-1)
        with np.errstate(divide="ignore"):
            source_log = math.log(2.0) + logdet + np.log(y)
    e, d = mr.eps_at(lam), mr.delta_at(lam)
    rates = theoretical_rates(mr.case_id, lam, e, d, mr.alpha, mr.beta, mr.r, m, spec.l)
    return TermEstimates(lam, t, t1, t2, t3, t4, source_log, rates, t1_pair, bundle.cond_proxy)


def energy_derivative(W, dW):
    """2 Re <dW, W> along the last axis."""
    W = np.asarray(W)
    dW = np.asarray(dW)
    return 2.0 * np.real(np.sum(dW * np.conj(W), axis=-1))


def fit_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def expected_slopes(case_id, gamma, alpha, m, l) -> tuple:
    """Log-log slopes of t1..t4 against <xi> when eps = <xi>^-gamma (Case 1)."""
    g, a = float(gamma), float(alpha)
    return (g, g, 1 - g * a, g * a * (m - 1) + l - m + 1)


@dataclass
class RateFit:
    """Log-log slope of one term.

    ``kind`` is "match" when the rate is attained (the slope must equal the
    expected one) and "bound" when the rate is only a ceiling (the slope may
    not exceed it).  A term that vanishes on the whole grid has slope None
    and passes trivially.
    """

    term: str
    slope: float | None
    expected: float
    tolerance: float = 0.15
    kind: str = "match"

    @property
    def passed(self) -> bool:
        if self.slope is None:
            return True
        if self.kind == "bound":
            return self.slope <= self.expected + self.tolerance
        return abs(self.slope - self.expected) <= self.tolerance


def rate_fits_from(estimates, expected=None) -> list[RateFit]:
    """Slopes of sup_t of each term against <xi>.

    With ``expected`` the slopes must match it; otherwise they must stay
    under the slopes of the theoretical rates over the same grid.
    """
    lams = np.array([e.lam for e in estimates])
    sups = np.array([e.sups() for e in estimates])
    rates = np.array([e.rates for e in estimates])
    out = []
    for k in range(4):
        live = sups[:, k] > 0
        slope = fit_slope(lams[live], sups[live, k]) if np.sum(live) >= 2 else None
        if expected is not None:
            out.append(RateFit(f"t{k + 1}", slope, float(expected[k])))
        else:
            out.append(RateFit(f"t{k + 1}", slope, fit_slope(lams, rates[:, k]), kind="bound"))
    return out


def rate_fits(system, mr, lams, n_times: int = 256, direction=None, expected=None) -> list[RateFit]:
    """Rate fits over a sweep of <xi> values on uniform grids of [0, T']."""
    spec = system.spec
    direction = np.eye(spec.n)[0] if direction is None else np.asarray(direction, float)
    ests = []
    for lam in lams:
        xi = direction / np.linalg.norm(direction) * math.sqrt(lam * lam - 1)
        ests.append(term_estimates(system, mr, np.linspace(0.0, mr.horizon(lam), n_times), xi))
    return rate_fits_from(ests, expected)


# -- monotonicity -------------------------------------------------------

def threshold(lams, max_brackets) -> float:
    """Smallest grid <xi> from which every larger grid mode has a nonpositive bracket."""
    lams = np.asarray(lams, dtype=float)
    br = np.asarray(max_brackets, dtype=float)
    order = np.argsort(lams, kind="stable")
    lams, br = lams[order], br[order]
    good = br <= 0
    if len(good) == 0 or not good[-1]:
        raise NoThreshold("bracket stays positive at the top of the grid", brackets=br)
    k = len(good)
    while k > 0 and good[k - 1]:
        k -= 1
    return float(lams[k])


def monotone_excursion(logW) -> float:
    """max over t of |W(t)|^2 minus its running minimum, relative to |W(0)|^2."""
    logW = np.asarray(logW, dtype=float)
    if logW.size == 0 or not np.isfinite(logW[0]):
        return 0.0
    r = np.exp(2.0 * (logW - logW[0]))
    run = np.minimum.accumulate(r)
    return float(np.max(r - run))


@dataclass
class ModeSummary:
    """What the verdicts need from one integrated mode; independent of kappa."""

    lam: float
    times: np.ndarray
    logW: np.ndarray
    logV: np.ndarray
    log_scale: float
    rho0: float
    kappa: float
    s: float
    estimates: TermEstimates | None

    def logW_for(self, params: EnergyParams) -> np.ndarray:
        """log|W| under other transform parameters (same s): only rho changes."""
        w = self.lam ** (1.0 / self.s)
        base = self.rho0 - self.kappa * self.times
        return self.logW + (params.rho(self.times) - base) * w


def summarize_mode(traj, system, mr, params: EnergyParams, estimates: bool = True) -> ModeSummary:
    with np.errstate(divide="ignore"):
        logV = np.log(np.linalg.norm(traj.V_unit, axis=-1))
    est = (term_estimates(system, mr, traj.times, traj.xi, traj.extras.get("mollified"))
           if estimates else None)
    return ModeSummary(traj.lam, traj.times, np.asarray(traj.logW), logV, traj.log_scale,
                       params.rho0, params.kappa, params.s, est)


@dataclass
class ModeVerdict:
    lam: float
    above_threshold: bool
    W_ge_1: bool
    monotone: bool | None
    excursion: float
    log_c: float
    regimes: tuple


def final_bound_log_ratio(ms: ModeSummary, params: EnergyParams, loss: float):
    """log(|V(t)| / bound(t)) with the |W| >= 1 and |W| < 1 forms of the bound.

    Returns (log ratios, mask of times in the |W| >= 1 regime).  The bound's
    constant c is the exponential of the largest ratio.
    """
    w = ms.lam ** (1.0 / params.s)
    big = ms.logW_for(params) >= 0
    poly = loss * math.log(ms.lam)
    rho = params.rho(ms.times)
    hi = ms.logV - ms.logV[0] - (params.rho0 - rho) * w - poly
    lo = ms.logV + ms.log_scale + rho * w - poly
    return np.where(big, hi, lo), big


def mode_verdict(ms: ModeSummary, params: EnergyParams, loss: float, xi0: float | None,
                 excursion_tol: float = 1e-10) -> ModeVerdict:
    above = xi0 is not None and ms.lam >= xi0
    if ms.log_scale == -INF:
        return ModeVerdict(ms.lam, above, False, True if above else None, 0.0, -INF, ())
    ratios, big = final_bound_log_ratio(ms, params, loss)
    W_ge_1 = bool(np.all(big))
    exc = monotone_excursion(ms.logW_for(params)[big]) if np.any(big) else 0.0
    mono = (exc <= excursion_tol) if (above and W_ge_1) else None
    regimes = tuple(sorted({"W>=1" if b else "W<1" for b in big}))
    return ModeVerdict(ms.lam, above, W_ge_1, mono, exc, float(np.max(ratios)), regimes)


@dataclass
class MonotonicityReport:
    kappa: float
    xi0: float | None
    max_brackets: np.ndarray
    verdicts: list = field(default_factory=list)

    @property
    def no_threshold(self) -> bool:
        return self.xi0 is None

    @property
    def checked(self) -> list:
        return [v for v in self.verdicts if v.monotone is not None]

    @property
    def monotone(self) -> bool:
        return bool(self.checked) and all(v.monotone for v in self.checked)

    @property
    def max_excursion(self) -> float:
        vals = [v.excursion for v in self.checked]
        return max(vals) if vals else 0.0


def certify_summaries(summaries, params: EnergyParams, loss: float,
                      excursion_tol: float = 1e-10) -> MonotonicityReport:
    """Threshold and per-mode verdicts; a missing threshold is recorded, not raised."""
    lams = [ms.lam for ms in summaries]
    mb = np.array([ms.estimates.max_bracket(params) for ms in summaries])
    try:
        xi0 = threshold(lams, mb)
    except NoThreshold:
        xi0 = None
    verdicts = [mode_verdict(ms, params, loss, xi0, excursion_tol) for ms in summaries]
    return MonotonicityReport(params.kappa, xi0, mb, verdicts)


def certify_monotonicity(system, mr, params: EnergyParams, sweep_report, loss: float,
                         excursion_tol: float = 1e-10) -> MonotonicityReport:
    """Certification from a sweep whose modes carry trajectories with W.

    Raises NoThreshold when the bracket never turns nonpositive on the grid.
    """
    summaries = [summarize_mode(m.trajectory, system, mr, params) for m in sweep_report.ok]
    rep = certify_summaries(summaries, params, loss, excursion_tol)
    if rep.no_threshold:
        raise NoThreshold("no frequency threshold on the grid", brackets=rep.max_brackets)
    return rep


@dataclass
class FinalBound:
    c: float
    log_c: float
    slope: float
    passed: bool
    n_modes: int
    worst_lam: float


def final_bound_check(verdicts, slope_tol: float = 0.05) -> FinalBound:
    """One constant for all modes above the threshold; it must not grow with <xi>."""
    vs = [v for v in verdicts if v.above_threshold and np.isfinite(v.log_c)]
    if not vs:
        return FinalBound(0.0, -INF, 0.0, True, 0, math.nan)
    logs = np.array([v.log_c for v in vs])
    lams = np.array([v.lam for v in vs])
    k = int(np.argmax(logs))
    slope = float(np.polyfit(np.log(lams), logs, 1)[0]) if len(vs) > 1 else 0.0
    return FinalBound(math.exp(logs[k]), float(logs[k]), slope, bool(slope <= slope_tol),
                      len(vs), float(lams[k]))
