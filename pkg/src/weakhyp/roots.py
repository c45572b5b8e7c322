"""Characteristic roots, Hoelder exponents, and case classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassificationAmbiguous, HyperbolicityViolation
from .problem import ProblemSpec, bracket, principal_coefficients

CASE1, CASE2, CASE3 = "Case1", "Case2", "Case3"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def companion_roots(coeffs: np.ndarray, lam: float, tol: float) -> np.ndarray:
    """Sorted real roots of tau^m - sum_j coeffs[..., j] tau^j.

    The polynomial is rescaled by ``lam`` (tau = lam * sigma) before the
    eigensolve so the companion entries are O(1).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    m = coeffs.shape[-1]
    batch = coeffs.shape[:-1]
    scaled = coeffs * lam ** (np.arange(m) - m)
    C = np.zeros(batch + (m, m))
    idx = np.arange(m - 1)
    C[..., idx, idx + 1] = 1.0
    C[..., m - 1, :] = scaled
    ev = np.linalg.eigvals(C) if m > 1 else C[..., 0]
    worst = np.max(np.abs(ev.imag)) if ev.size else 0.0
    if worst > tol:
        raise HyperbolicityViolation(
            f"imaginary part {worst * lam:.3e} exceeds {tol:.1e} * <xi> = {tol * lam:.3e}")
    return np.sort(ev.real, axis=-1) * lam


@dataclass(frozen=True)
class RootField:
    """Sorted characteristic roots tau_1 <= ... <= tau_m as a function of (t, xi)."""

    spec: ProblemSpec
    hyperbolicity_tolerance: float = 1e-8

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def T(self) -> float:
        return self.spec.T

    def sample(self, t, xi) -> np.ndarray:
        """Roots at times ``t`` (any shape); result has a trailing axis of length m."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        t = np.asarray(t, dtype=float)
        if not np.any(xi):
            return np.zeros(t.shape + (self.m,))
        c = principal_coefficients(self.spec, t, xi)
        return companion_roots(c, bracket(xi), self.hyperbolicity_tolerance)

    def extended(self, t, xi) -> np.ndarray:
        """Roots with constant extension outside [0, T]."""
        return self.sample(np.clip(t, 0.0, self.T), xi)

    __call__ = sample


def characteristic_roots(spec: ProblemSpec, t, xi, tol: float = 1e-8) -> np.ndarray:
    return RootField(spec, tol).sample(t, xi)


# -- Hoelder estimation ---------------------------------------------------

@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    constant: float
    degenerate: bool = False
    h: tuple = ()
    sup: tuple = ()


def _pair_sup(field_, xi, idx, t, h):
    r0 = field_.sample(t, xi)[..., idx]
    r1 = field_.sample(t + h, xi)[..., idx]
    return np.max(np.abs(r1 - r0), axis=-1)


def estimate_holder(field_: RootField, k_range, xi_probe, t_grid=None, h_range=(1e-6, 1e-1),
                    n_global: int = 257, n_local: int = 33, n_centers: int = 4) -> HolderEstimate:
    """Fit sup_k |tau_k(t) - tau_k(s)| ~ c |xi| |t - s|^alpha on dyadic pair scales.

    With ``t_grid`` given as an (N, 2) array of pairs it is used as is.
    Otherwise pairs are generated on dyadic levels h in ``h_range`` * T,
    with anchors on a global grid plus local windows that zoom in on the
    largest differences of the previous level.
    """
    xi = np.atleast_1d(np.asarray(xi_probe, dtype=float))
    idx = np.asarray(sorted(k_range), dtype=int)
    norm = math.sqrt(float(xi @ xi))
    lam = bracket(xi)
    T = field_.T
    hs, sups = [], []
    if t_grid is not None:
        pairs = np.asarray(t_grid, dtype=float)
        h_all = np.abs(pairs[:, 1] - pairs[:, 0])
        d = np.max(np.abs(field_.sample(pairs[:, 1], xi)[:, idx] - field_.sample(pairs[:, 0], xi)[:, idx]), axis=-1)
        level = np.round(np.log2(h_all)).astype(int)
        for lv in np.unique(level):
            sel = level == lv
            k = np.argmax(d[sel])
            hs.append(float(h_all[sel][k]))
            sups.append(float(d[sel][k]))
    else:
        h_min, h_max = h_range[0] * T, h_range[1] * T
        n_levels = int(math.floor(math.log2(h_max / h_min))) + 1
        centers = np.empty(0)
        for lv in range(n_levels):
            h = h_max * 2.0 ** (-lv)
            anchors = [np.linspace(0.0, T - h, n_global)]
            for c in centers:
                anchors.append(np.clip(c + h * np.linspace(-4.0, 4.0, n_local), 0.0, T - h))
            anchors = np.unique(np.concatenate(anchors))
            d = _pair_sup(field_, xi, idx, anchors, h)
            order = np.argsort(-d, kind="stable")
            centers = anchors[order[:n_centers]]
            hs.append(h)
            sups.append(float(d[order[0]]))
    hs = np.asarray(hs)
    sups = np.asarray(sups)
    live = sups > 1e-14 * lam
    if not np.any(live):
        return HolderEstimate(1.0, 0.0, True, tuple(hs), tuple(sups / norm))
    if np.count_nonzero(live) < 2:
        slope = 1.0
    else:
        slope = float(np.polyfit(np.log(hs[live]), np.log(sups[live]), 1)[0])
    alpha = min(max(slope, 1e-6), 1.0)
    const = float(np.max(sups[live] / norm / hs[live] ** alpha))
    return HolderEstimate(alpha, const, False, tuple(hs), tuple(sups / norm))


# -- classification -------------------------------------------------------

@dataclass(frozen=True)
class CaseClassification:
    case_id: str
    r: int
    alpha: float
    beta: float
    c_gap: float
    c_comp: float
    holder_constant: float
    block: tuple = ()
    order: tuple = ()
    c_comp_location: tuple = ()
    touch_times: tuple = ()
    alpha_estimate: HolderEstimate | None = field(default=None, compare=False)
    beta_estimate: HolderEstimate | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.case_id == CASE2 and not (2 <= self.r <= len(self.order) - 1):
            raise ValueError("Case2 requires 2 <= r <= m-1")
        if self.case_id == CASE3 and (self.r != 1 or self.alpha != self.beta):
            raise ValueError("Case3 requires r = 1 and alpha = beta")


def default_probe_grid(spec: ProblemSpec, n_times: int = 129, magnitudes=(1.0, 10.0, 100.0)):
    times = np.linspace(0.0, spec.T, n_times)
    dirs = [np.eye(spec.n)[0]]
    if spec.n > 1:
        dirs.append(np.ones(spec.n) / math.sqrt(spec.n))
    xis = [mag * d for d in dirs for mag in magnitudes]
    return times, xis


def _refine_gap_min(field_, xi, k, lo, hi, iters=90):
    # golden-section search for the smallest gap tau_{k+1} - tau_k on [lo, hi]
    def gap(t):
        r = field_.sample(t, xi)
        return r[k + 1] - r[k]

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = gap(c), gap(d)
    best_t, best = (lo, gap(lo)) if gap(lo) < gap(hi) else (hi, gap(hi))
    for _ in range(iters):
        if b - a <= 1e-16 * max(abs(a), abs(b), 1e-300):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = gap(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = gap(d)
    for tt, v in ((c, fc), (d, fd)):
        if v < best:
            best_t, best = tt, v
    return best_t, best


def classify(field_: RootField, spec: ProblemSpec, probe_grid=None, touch_tol: float = 1e-7,
             denom_floor: float = 1e-12) -> CaseClassification:
    """Detect which roots may coincide and assign Case 1, 2 or 3.

    Adjacent (value sorted) root pairs whose refined minimum gap falls below
    ``touch_tol * |xi|`` are merged into a coinciding block.  The returned
    ``order`` relabels the roots with the block first (sorted within the
    block), then the remaining roots by value.
    """
    times, xis = probe_grid if probe_grid is not None else default_probe_grid(spec)
    times = np.asarray(times, dtype=float)
    m = spec.m
    T = spec.T
    if times.size == 0 or len(xis) == 0:
        raise ValueError("probe grid must be nonempty")
    touching = np.zeros(m - 1, dtype=bool)
    min_gap = np.full(m - 1, np.inf)
    touch_at: list[list[float]] = [[] for _ in range(m - 1)]
    for xi in xis:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        norm = math.sqrt(float(xi @ xi))
        if norm < 1.0:
            raise ValueError("xi probes must satisfy |xi| >= 1")
        R = field_.sample(times, xi)
        G = np.diff(R, axis=-1) / norm
        for k in range(m - 1):
            i = int(np.argmin(G[:, k]))
            lo = times[max(i - 1, 0)]
            hi = times[min(i + 1, times.size - 1)]
            t_star, g_star = _refine_gap_min(field_, xi, k, lo, hi)
            g = min(float(G[i, k]), g_star / norm)
            min_gap[k] = min(min_gap[k], g)
            if g <= touch_tol:
                touching[k] = True
                touch_at[k].append(float(times[i]) if G[i, k] <= touch_tol else float(t_star))

    # blocks of consecutive touching pairs
    blocks = []
    k = 0
    while k < m - 1:
        if touching[k]:
            start = k
            while k < m - 1 and touching[k]:
                k += 1
            blocks.append(tuple(range(start, k + 1)))
        else:
            k += 1
    if len(blocks) > 1:
        raise ClassificationAmbiguous(f"more than one coinciding root block: {blocks}")
    block = blocks[0] if blocks else ()

    # the block must coincide as a whole wherever any of its pairs touch
    if len(block) > 2:
        for k in block[:-1]:
            for t_star in touch_at[k]:
                for xi in xis:
                    xi = np.atleast_1d(np.asarray(xi, dtype=float))
                    norm = math.sqrt(float(xi @ xi))
                    r = field_.sample(t_star, xi)[list(block)]
                    if np.max(np.diff(r)) / norm > 1e3 * touch_tol:
                        raise ClassificationAmbiguous(
                            f"roots {block} coincide only partially near t={t_star!r}")

    rest = tuple(i for i in range(m) if i not in block)
    order = tuple(block) + rest
    strict = [k for k in range(m - 1) if not touching[k]]
    c_gap = float(min(min_gap[k] for k in strict)) if strict else math.inf
    if strict and c_gap <= touch_tol:
        raise ClassificationAmbiguous("strict gap constant is not positive on the grid")

    # comparability constant inside the block
    c_comp, c_loc = 0.0, ()
    if len(block) >= 2:
        bl = list(block)
        for xi in xis:
            xi = np.atleast_1d(np.asarray(xi, dtype=float))
            lam = bracket(xi)
            R = field_.sample(times, xi)[:, bl]
            gaps = np.diff(R, axis=-1)
            spread = R[:, -1] - R[:, 0]
            gaps = np.where(gaps > denom_floor * lam, gaps, np.inf)
            den = np.min(gaps, axis=-1)
            ok = np.isfinite(den)
            if np.any(ok):
                ratio = np.where(ok, spread / np.where(ok, den, 1.0), 0.0)
                i = int(np.argmax(ratio))
                if ratio[i] > c_comp:
                    c_comp, c_loc = float(ratio[i]), (float(times[i]), float(math.sqrt(xi @ xi)))

    xi_h = np.atleast_1d(np.asarray(xis[len(xis) // 2] if len(xis) > 1 else xis[0], dtype=float))
    r = len(block)
    if r == m:
        case_id = CASE1
        est_a = estimate_holder(field_, range(m), xi_h)
        est_b = est_a
    elif r >= 2:
        case_id = CASE2
        est_a = estimate_holder(field_, block, xi_h)
        est_b = estimate_holder(field_, rest, xi_h)
    else:
        case_id = CASE3
        r = 1
        est_a = estimate_holder(field_, range(m), xi_h)
        est_b = est_a
    return CaseClassification(
        case_id=case_id, r=r, alpha=est_a.exponent, beta=est_b.exponent, c_gap=c_gap,
        c_comp=c_comp, holder_constant=max(est_a.constant, est_b.constant), block=tuple(block),
        order=order, c_comp_location=c_loc,
        touch_times=tuple(sorted({t for k in block[:-1] for t in touch_at[k]})) if block else (),
        alpha_estimate=est_a, beta_estimate=est_b)
