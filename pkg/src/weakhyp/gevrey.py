"""Gevrey data synthesis and exponential decay / growth fits in frequency.

Samples are handled as log-magnitudes throughout: Gevrey data at the
frequencies of interest sit far below the double range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FitDegenerate

DECAY = "decay"
GROWTH = "growth"
S_RANGE = (1.0, 10.0)
MIN_SAMPLES = 8
MIN_SPAN = 4.0  # two doublings of <xi>
ORDER_TOL = 0.05
RESIDUAL_GATE = 0.2
NON_EXPONENTIAL = 0.5

GEVREY_PRESERVED = "GEVREY_PRESERVED"
GEVREY_LOST = "GEVREY_LOST"
GROWTH_BOUNDED = "GROWTH_BOUNDED"
GROWTH_UNBOUNDED = "GROWTH_UNBOUNDED"
VACUOUS = "VACUOUS"
UNCERTIFIED = "UNCERTIFIED"


def _bracket(xi) -> float:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return math.sqrt(1.0 + float(xi @ xi))


@dataclass(frozen=True)
class GevreyDatum:
    """xi -> C exp(-+delta <xi>^(1/s)) exp(i theta(xi))."""

    s: float
    delta: float
    C: float = 1.0
    growth: bool = False
    phase: Callable | None = None

    def log_parts(self, xi):
        sign = 1.0 if self.growth else -1.0
        la = math.log(self.C) + sign * self.delta * _bracket(xi) ** (1.0 / self.s)
        ph = float(self.phase(xi)) if self.phase is not None else 0.0
        return la, ph

    def __call__(self, xi):
        la, ph = self.log_parts(xi)
        return math.exp(la) * complex(math.cos(ph), math.sin(ph))


def synthesize(s: float, delta: float, profile: Callable | None = None, C: float = 1.0,
               growth: bool = False) -> GevreyDatum:
    if s < 1:
        raise ValueError("Gevrey order must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return GevreyDatum(float(s), float(delta), float(C), growth, profile)


@dataclass
class DecayFit:
    model: str
    log_C: float
    delta: float
    s: float
    residual: float
    sample_range: tuple
    n_samples: int
    notes: list = field(default_factory=list)

    @property
    def C(self) -> float:
        try:
            return math.exp(self.log_C)
        except OverflowError:
            return math.inf

    @property
    def pinned_at_top(self) -> bool:
        """Order stuck at the top of the search range: slower than any tested Gevrey law."""
        return self.s >= S_RANGE[1] * (1 - 1e-9)

    @property
    def non_exponential(self) -> bool:
        return self.residual > NON_EXPONENTIAL or self.delta <= 0 or self.pinned_at_top


def relative_log_residual(y, yhat) -> float:
    """max_i |log y_i - log yhat_i| / max(|log y_i|, 1)."""
    y = np.asarray(y, dtype=float)
    return float(np.max(np.abs(y - yhat) / np.maximum(np.abs(y), 1.0)))


def _linear_subfit(x, y):
    scale = float(np.max(np.abs(x))) or 1.0
    X = np.stack([np.ones_like(x), x / scale], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, b = float(coef[0]), float(coef[1]) / scale
    r = y - (a + b * x)
    return a, b, float(r @ r)


def _golden_min(f, lo, hi, iters=80):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _prepare(lams, log_mags, notes):
    lams = np.asarray(lams, dtype=float)
    y = np.asarray(log_mags, dtype=float)
    if lams.shape != y.shape:
        raise ValueError("samples must pair <xi> values with magnitudes")
    finite = np.isfinite(y)
    if not np.all(finite):
        if not np.any(finite):
            raise FitDegenerate("all magnitudes are zero")
        notes.append(f"dropped {int(np.sum(~finite))} zero magnitudes")
    lams, y = lams[finite], y[finite]
    if len(lams) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} nonzero samples, got {len(lams)}")
    if np.max(lams) < MIN_SPAN * np.min(lams):
        raise ValueError("samples must span at least two doublings of <xi>")
    if np.ptp(y) <= 1e-14 * max(1.0, float(np.max(np.abs(y)))):
        raise FitDegenerate("magnitudes are flat")
    return lams, y


def fit_decay_log(lams, log_mags, model: str = DECAY, s_fixed: float | None = None,
                  s_range=S_RANGE) -> DecayFit:
    """Fit log|u| = log C -+ delta <xi>^(1/s) to log-magnitude samples.

    Golden-section search over s (after a coarse scan in 1/s, which guards
    against local minima) with the linear subfit for (log C, delta) at each
    trial s.  ``s_fixed`` skips the search.
    """
    if model not in (DECAY, GROWTH):
        raise ValueError(f"unknown model {model!r}")
    notes: list = []
    lams, y = _prepare(lams, log_mags, notes)
    sign = -1.0 if model == DECAY else 1.0

    def sse(inv_s):
        return _linear_subfit(lams ** inv_s, y)[2]

    if s_fixed is not None:
        inv = 1.0 / float(s_fixed)
    else:
        lo, hi = 1.0 / s_range[1], 1.0 / s_range[0]
        grid = np.linspace(lo, hi, 91)
        vals = [sse(v) for v in grid]
        k = int(np.argmin(vals))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        inv, _ = _golden_min(sse, a, b)
        if sse(grid[k]) < sse(inv):
            inv = grid[k]
        if inv <= lo + 1e-9 or inv >= hi - 1e-9:
            notes.append("order at the edge of the search range")
    x = lams ** inv
    a, b, _ = _linear_subfit(x, y)
    delta = sign * b
    if delta <= 0:
        notes.append("rate has the wrong sign for the model")
    resid = relative_log_residual(y, a + b * x)
    return DecayFit(model, a, delta, 1.0 / inv, resid, (float(lams.min()), float(lams.max())),
                    len(lams), notes)


def fit_decay(samples, model: str = DECAY, s_fixed: float | None = None) -> DecayFit:
    """``samples`` is a sequence of (<xi>, magnitude) pairs."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (<xi>, magnitude) pairs")
    if np.any(arr[:, 1] < 0):
        raise ValueError("magnitudes must be nonnegative")
    with np.errstate(divide="ignore"):
        return fit_decay_log(arr[:, 0], np.log(arr[:, 1]), model, s_fixed)


def envelope_log_C(lams, log_mags, delta: float, s: float, model: str = GROWTH) -> float:
    """Smallest log C with every sample under C exp(-+delta <xi>^(1/s))."""
    sign = 1.0 if model == GROWTH else -1.0
    lams = np.asarray(lams, dtype=float)
    y = np.asarray(log_mags, dtype=float)
    ok = np.isfinite(y)
    return float(np.max(y[ok] - sign * delta * lams[ok] ** (1.0 / s)))


@dataclass
class Verdict:
    verdict: str
    passed: bool | None
    s_test: float
    fit: DecayFit | None
    initial_fit: DecayFit | None
    quantifier: str
    flags: list = field(default_factory=list)
    envelope_log_C: float | None = None


def wellposedness_verdict(initial_fit: DecayFit | None, lams, log_mags, s_test: float,
                          s_sup: float | None = None, model: str = DECAY) -> Verdict:
    """Decay verdict (Roumieu) or growth verdict (Beurling) for solution samples at T.

    Decay: one (C, delta) pair must serve the whole sample range, and the fitted
    order may exceed s_test by at most 5%.  Growth: the order is fixed at s_test
    first, the rate delta' is fitted for this run, then the envelope constant.
    """
    y = np.asarray(log_mags, dtype=float)
    if model == DECAY:
        quant = "roumieu: single (C, delta) over the sample range"
    else:
        quant = "beurling: order fixed, delta' fitted per run, then C_delta'"
    if not np.any(np.isfinite(y)):
        return Verdict(VACUOUS, True, s_test, None, initial_fit, quant, ["zero data"])
    flags = []
    certified = s_sup is None or s_test < s_sup or (model == GROWTH and s_test <= s_sup)
    if not certified:
        flags.append("s_test outside the admissible range; verdict carries no certification")
    if model == DECAY:
        fit = fit_decay_log(lams, y, DECAY)
        ok = bool(fit.s <= s_test * (1 + ORDER_TOL) and fit.residual <= RESIDUAL_GATE and fit.delta > 0)
        name = GEVREY_PRESERVED if ok else GEVREY_LOST
        env = None
    else:
        fit = fit_decay_log(lams, y, GROWTH, s_fixed=s_test)
        ok = bool(fit.residual <= RESIDUAL_GATE)
        name = GROWTH_BOUNDED if ok else GROWTH_UNBOUNDED
        env = envelope_log_C(lams, y, max(fit.delta, 0.0), s_test, GROWTH)
    return Verdict(name, ok if certified else None, s_test, fit, initial_fit, quant, flags, env)
