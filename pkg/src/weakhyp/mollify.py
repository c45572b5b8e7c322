"""Mollified, strictly separated roots and checks of their properties."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HorizonTooShort
from .roots import CASE1, CASE2, CASE3, CaseClassification, RootField


def bump(x):
    """Unnormalized bump exp(-1/(1-x^2)) on (-1, 1)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def bump_derivative(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe) * (-2.0 * x) / safe ** 2, 0.0)


@dataclass(frozen=True)
class MollifierSpec:
    """Normalized mollifier with a Gauss-Legendre rule on its support [-1, 1]."""

    profile: Callable = bump
    profile_derivative: Callable = bump_derivative
    quadrature_nodes: int = 64
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    phi: np.ndarray = field(init=False, repr=False, compare=False)
    dphi: np.ndarray = field(init=False, repr=False, compare=False)
    mass: float = field(init=False)
    norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x, w = np.polynomial.legendre.leggauss(self.quadrature_nodes)
        raw = float(w @ self.profile(x))
        x4, w4 = np.polynomial.legendre.leggauss(4 * self.quadrature_nodes)
        fine = float(w4 @ self.profile(x4))
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)
        # normalize with the fine rule, then report the coarse-rule mass
        object.__setattr__(self, "phi", np.asarray(self.profile(x)) / fine)
        object.__setattr__(self, "dphi", np.asarray(self.profile_derivative(x)) / fine)
        object.__setattr__(self, "mass", raw / fine)
        object.__setattr__(self, "norm", fine)

    def check(self) -> list[str]:
        out = []
        if abs(self.mass - 1.0) > 1e-10:
            out.append(f"mollifier mass {self.mass!r} differs from 1 by more than 1e-10")
        probe = np.linspace(-1.5, 1.5, 301)
        vals = np.asarray(self.profile(probe))
        if np.any(vals < 0):
            out.append("mollifier profile takes negative values")
        if np.any(vals[np.abs(probe) >= 1.0] != 0):
            out.append("mollifier profile is not supported in [-1, 1]")
        return out

    def _rule(self, t, scale, breaks):
        """Sample points s = t - scale x and weights, split at ``breaks``.

        A kink of f inside the support spoils the Gauss rule; splitting the
        support there restores full order on each piece.
        """
        if not breaks:
            s = t[..., None] - scale * self.nodes
            return s, self.weights * self.phi, self.weights * self.dphi
        cuts = np.clip((t[..., None] - np.asarray(breaks, dtype=float)) / scale, -1.0, 1.0)
        edge = np.ones(t.shape + (1,))
        cuts = np.sort(np.concatenate([-edge, cuts, edge], axis=-1), axis=-1)
        lo, hi = cuts[..., :-1, None], cuts[..., 1:, None]
        x = lo + (hi - lo) * (self.nodes + 1.0) / 2.0
        w = self.weights * (hi - lo) / 2.0
        shape = t.shape + (-1,)
        x, w = x.reshape(shape), w.reshape(shape)
        s = t[..., None] - scale * x
        return s, w * self.profile(x) / self.norm, w * self.profile_derivative(x) / self.norm

    def convolve(self, f: Callable, t, scale: float, breaks=()):
        """(f * phi_scale)(t) for f returning a trailing axis."""
        return self.convolve_both(f, t, scale, breaks)[0]

    def convolve_derivative(self, f: Callable, t, scale: float, breaks=()):
        return self.convolve_both(f, t, scale, breaks)[1]

    def convolve_both(self, f: Callable, t, scale: float, breaks=()):
        """(f * phi_scale, f * phi'_scale / scale) from one set of samples.

        Only times whose support contains a break use the split rule.
        """
        t = np.asarray(t, dtype=float)
        b = np.asarray(breaks, dtype=float)
        near = np.abs(t[..., None] - b) < scale if b.size else np.zeros(t.shape + (0,), dtype=bool)
        split = np.any(near, axis=-1)
        if not np.any(split):
            return self._convolve(f, t, scale, ())
        live = tuple(b[np.any(near[split], axis=0)])
        c_split, d_split = self._convolve(f, t[split], scale, live)
        conv = np.empty(t.shape + c_split.shape[-1:])
        dconv = np.empty_like(conv)
        conv[split], dconv[split] = c_split, d_split
        if not np.all(split):
            conv[~split], dconv[~split] = self._convolve(f, t[~split], scale, ())
        return conv, dconv

    def _convolve(self, f, t, scale, breaks):
        s, wphi, wdphi = self._rule(t, scale, breaks)
        vals = f(s)
        return (np.einsum("...km,...k->...m", vals, np.broadcast_to(wphi, s.shape)),
                np.einsum("...km,...k->...m", vals, np.broadcast_to(wdphi, s.shape)) / scale)


def _as_rule(v):
    return v if callable(v) else (lambda lam, _v=float(v): _v)


@dataclass(frozen=True)
class MollifiedRoots:
    """Regularized roots lambda_j(t, xi).

    ``eps`` and ``delta`` are numbers or rules ``<xi> -> scale``.  Roots are
    relabeled by ``order`` (the coinciding block first); the first ``r``
    labels are mollified at scale eps and shifted by j eps^alpha <xi>, the
    others are mollified at scale delta without shift.
    """

    field_: RootField
    mollifier: MollifierSpec
    eps: object
    delta: object
    alpha: float
    beta: float
    r: int
    case_id: str
    order: tuple

    @property
    def m(self) -> int:
        return self.field_.m

    def eps_at(self, lam: float) -> float:
        return _as_rule(self.eps)(lam)

    def delta_at(self, lam: float) -> float:
        return _as_rule(self.delta)(lam)

    def horizon(self, lam: float) -> float:
        """Effective horizon T' = T - max(eps, delta)."""
        e = self.eps_at(lam)
        d = self.delta_at(lam) if self.r < self.m else 0.0
        return self.field_.T - max(e, d)

    def check_scales(self, lam):
        e = self.eps_at(lam)
        d = self.delta_at(lam) if self.r < self.m else e
        if not (0 < e < 1 and 0 < d < 1):
            raise ValueError(f"scales must lie in (0, 1): eps={e!r}, delta={d!r}")
        if self.field_.T <= max(e, d):
            raise HorizonTooShort(f"horizon {self.field_.T!r} <= mollifier radius {max(e, d)!r}")
        return e, d

    def tau(self, t, xi) -> np.ndarray:
        """Roots in the relabeled order."""
        return self.field_.extended(t, xi)[..., list(self.order)]

    def _fields(self, xi):
        perm = list(self.order)
        return lambda s: self.field_.extended(s, xi)[..., perm]

    def parts(self, t, xi):
        """(convolved roots, shift, derivative) in the relabeled order."""
        lam = _bracket(xi)
        e, d = self.check_scales(lam)
        f = self._fields(xi)
        r, m = self.r, self.m
        breaks = (0.0, self.field_.T) + self.field_.spec.principal_kinks()
        conv, dconv = self.mollifier.convolve_both(f, t, e, breaks)
        if r < m:
            conv_u, dconv_u = self.mollifier.convolve_both(f, t, d, breaks)
            conv[..., r:] = conv_u[..., r:]
            dconv[..., r:] = dconv_u[..., r:]
        shift = np.zeros(m)
        shift[:r] = np.arange(1, r + 1) * e ** self.alpha * lam
        return conv, shift, dconv

    def values(self, t, xi) -> np.ndarray:
        conv, shift, _ = self.parts(t, xi)
        return conv + shift

    def derivatives(self, t, xi) -> np.ndarray:
        """d/dt lambda_j by convolution with phi'/eps."""
        return self.parts(t, xi)[2]

    def derivatives_fd(self, t, xi, h=None) -> np.ndarray:
        """Central difference of the quadrature values (cross-check only)."""
        lam = _bracket(xi)
        h = h if h is not None else 1e-4 * self.eps_at(lam)
        t = np.asarray(t, dtype=float)
        return (self.values(t + h, xi) - self.values(t - h, xi)) / (2 * h)


def _bracket(xi) -> float:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return math.sqrt(1.0 + float(xi @ xi))


def regularize_case1(field_: RootField, phi: MollifierSpec, eps, alpha: float, order=None) -> MollifiedRoots:
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    if not callable(eps):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if field_.T <= eps:
            raise HorizonTooShort(f"horizon {field_.T!r} <= eps {eps!r}")
    m = field_.m
    return MollifiedRoots(field_, phi, eps, eps, alpha, alpha, m, CASE1,
                          tuple(order) if order is not None else tuple(range(m)))


def regularize_case2(field_: RootField, phi: MollifierSpec, eps, delta, alpha: float, beta: float,
                     r: int, order=None, case_id: str = CASE2) -> MollifiedRoots:
    m = field_.m
    if not (1 <= r <= m - 1):
        raise ValueError("r must satisfy 1 <= r <= m-1")
    for v in (eps, delta):
        if not callable(v):
            if not 0 < v < 1:
                raise ValueError("scales must lie in (0, 1)")
            if field_.T <= v:
                raise HorizonTooShort(f"horizon {field_.T!r} <= scale {v!r}")
    return MollifiedRoots(field_, phi, eps, delta, alpha, beta, r, case_id,
                          tuple(order) if order is not None else tuple(range(m)))


def regularize(field_: RootField, phi: MollifierSpec, cls: CaseClassification, gamma: float) -> MollifiedRoots:
    """Mollified roots with eps = <xi>^-gamma and delta = <xi>^-1 for a classified problem."""
    eps = lambda lam, g=gamma: lam ** (-g)  # noqa: E731
    delta = lambda lam: 1.0 / lam  # noqa: E731
    if cls.case_id == CASE1:
        return regularize_case1(field_, phi, eps, cls.alpha, order=cls.order)
    if cls.case_id == CASE3:
        # r = 1 with alpha = beta and the same scale for both blocks
        return regularize_case2(field_, phi, eps, eps, cls.alpha, cls.beta, 1, order=cls.order, case_id=CASE3)
    return regularize_case2(field_, phi, eps, delta, cls.alpha, cls.beta, cls.r, order=cls.order)


# -- verification ---------------------------------------------------------

@dataclass
class PropertyResult:
    name: str
    constant: float
    passed: bool
    detail: str = ""


@dataclass
class RegularizationReport:
    results: list = field(default_factory=list)
    threshold: float | None = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def get(self, name: str) -> PropertyResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def gap_threshold(c0: float, c_holder: float, alpha: float, beta: float, gamma: float, r: int,
                  lam_max: float = 1e15) -> float:
    """Smallest <xi> beyond which both radius conditions hold.

    Conditions: <xi>^-gamma (1 - <xi>^(gamma-1)) <= (c0/(4c))^(1/beta) and
    <xi>^-gamma <= (c0/(4 sqrt(2) r))^(1/alpha), with |xi| >= 1.
    """
    rhs1 = (c0 / (4.0 * c_holder)) ** (1.0 / beta) if c_holder > 0 else math.inf
    rhs2 = (c0 / (4.0 * math.sqrt(2.0) * r)) ** (1.0 / alpha)

    def ok(lam):
        return lam ** (-gamma) * (1.0 - lam ** (gamma - 1.0)) <= rhs1 and lam ** (-gamma) <= rhs2

    grid = np.geomspace(math.sqrt(2.0), lam_max, 2000)
    flags = np.array([ok(v) for v in grid])
    if not flags[-1]:
        return math.inf
    bad = np.nonzero(~flags)[0]
    if bad.size == 0:
        return float(grid[0])
    lo, hi = float(grid[bad[-1]]), float(grid[bad[-1] + 1])
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        lo, hi = (mid, hi) if not ok(mid) else (lo, mid)
    return hi


def _max_ratio(num, den):
    return float(np.max(num / den)) if num.size else 0.0


def verify_regularization(mr: MollifiedRoots, probe_grid, c_comp: float | None = None,
                          c_gap: float | None = None, holder_constant: float | None = None,
                          gamma: float | None = None, n_times: int = 129) -> RegularizationReport:
    """Measure the constants of all regularization properties on a probe grid.

    ``probe_grid`` is (times, xis); ``times`` may be None, in which case a
    uniform grid on [0, T'] is used per frequency.  Times beyond T' are
    dropped.  The cross-block gap properties need ``c_gap``,
    ``holder_constant`` and ``gamma`` to compute the frequency threshold.
    """
    times, xis = probe_grid
    r, m = mr.r, mr.m
    rep = RegularizationReport()
    acc: dict = {k: [] for k in ("i", "ii", "iii", "iv", "v", "comp", "vi", "vii")}
    thr = None
    if r < m and c_gap is not None and holder_constant is not None and gamma is not None:
        thr = gap_threshold(c_gap, holder_constant, mr.alpha, mr.beta, gamma, r)
        rep.threshold = thr
    for xi in xis:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        lam = _bracket(xi)
        e = mr.eps_at(lam)
        d = mr.delta_at(lam)
        Tp = mr.horizon(lam)
        t = np.linspace(0.0, Tp, n_times) if times is None else np.asarray(times, dtype=float)
        t = t[(t >= 0) & (t <= Tp)]
        if t.size == 0:
            continue
        conv, shift, dlam = mr.parts(t, xi)
        lam_v = conv + shift
        tau = mr.tau(t, xi)
        sa = e ** mr.alpha * lam
        acc["i"].append(_max_ratio(np.abs(dlam[:, :r]), e ** (mr.alpha - 1.0) * lam))
        acc["ii"].append(_max_ratio(np.abs(conv[:, :r] - tau[:, :r]), sa))
        if r >= 2:
            gaps = np.diff(lam_v[:, :r], axis=-1)
            acc["iii"].append((float(np.min(gaps / sa)), float(np.max(sa - gaps) / lam)))
            spread = np.max(lam_v[:, :r], axis=-1) - np.min(lam_v[:, :r], axis=-1)
            acc["comp"].append(float(np.max(spread / np.min(np.abs(gaps), axis=-1))))
        if r < m:
            acc["iv"].append(_max_ratio(np.abs(dlam[:, r:]), d ** (mr.beta - 1.0) * lam))
            acc["v"].append(_max_ratio(np.abs(conv[:, r:] - tau[:, r:]), d ** mr.beta * lam))
            if thr is not None and lam >= thr:
                up = np.sort(lam_v[:, r:], axis=-1)
                g_up = float(np.min(np.diff(up, axis=-1)) / lam) if m - r >= 2 else math.inf
                cross = np.abs(lam_v[:, r:, None] - lam_v[:, None, :r])
                acc["vi"].append(g_up)
                acc["vii"].append(float(np.min(cross) / lam))

    def finite(name, label):
        vals = acc[name]
        if vals:
            c = float(max(vals))
            rep.results.append(PropertyResult(label, c, math.isfinite(c)))

    finite("i", "(i) derivative bound, coinciding block")
    finite("ii", "(ii) accuracy bound, coinciding block")
    if acc["iii"]:
        worst_ratio = min(v[0] for v in acc["iii"])
        worst_violation = max(v[1] for v in acc["iii"])
        rep.results.append(PropertyResult("(iii) separation eps^alpha <xi>", worst_ratio,
                                          worst_violation <= 1e-12,
                                          f"max violation {worst_violation!r} * <xi>"))
    if acc["comp"]:
        c = float(max(acc["comp"]))
        if c_comp is not None:
            bound = 1.1 * (c_comp + 2 * r)
            rep.results.append(PropertyResult("comparability transfer", c, math.isfinite(c) and c <= bound,
                                              f"bound {bound!r}"))
        else:
            rep.results.append(PropertyResult("comparability transfer", c, math.isfinite(c)))
    if r < m:
        finite("iv", "(iv) derivative bound, distinct block")
        finite("v", "(v) accuracy bound, distinct block")
        if thr is not None:
            c0p = c_gap / (2.0 * math.sqrt(2.0))
            for key, label in (("vi", "(vi) gaps within distinct block"), ("vii", "(vii) gaps across blocks")):
                vals = acc[key]
                if vals:
                    c = float(min(vals))
                    rep.results.append(PropertyResult(label, c, c >= c0p,
                                                      f"required {c0p!r} above <xi> = {thr!r}"))
                else:
                    rep.results.append(PropertyResult(label, math.nan, True,
                                                      f"no probe above threshold <xi> = {thr!r}"))
    return rep
