"""Cauchy problem data: coefficients, orders, source, and the symbols.

The equation is D_t^m u = sum_j A_{m-j}(t, D_x) D_t^j u + f with
A_{m-j}(t, xi) = sum_gamma a_{m-j,gamma}(t) xi^gamma.  Principal keys have
|gamma| = m - j, lower keys have |gamma| + j <= l.

Coefficients built from the named registry (``constant``, ``t_power``,
``abs_kink``, ``smooth_step``) keep a symbolic form: a real polynomial in
a few base functions of t.  Sums and products of registry coefficients stay
in that form, which lets the compiled integrator evaluate them natively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import SpecError

ATOM_KINDS = ("t_power", "abs_kink", "smooth_step")
ATOM_CODES = {k: i for i, k in enumerate(ATOM_KINDS)}


def _step_profile(x):
    # C-infinity transition from 0 (x <= 0) to 1 (x >= 1)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        y = 1.0 - x
        g = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
        out = f / (f + g)
    return np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, out))


@dataclass(frozen=True, order=True)
class Atom:
    """Base function of t without scale or offset."""

    kind: str
    power: float = 1.0
    center: float = 0.0
    width: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "t_power":
            return np.abs(t) ** self.power
        if self.kind == "abs_kink":
            return np.abs(t - self.center) ** self.power
        if self.kind == "smooth_step":
            return _step_profile((t - self.center) / self.width)
        raise SpecError(f"unknown atom kind {self.kind!r}")

    def holder(self) -> float:
        if self.kind == "smooth_step":
            return 1.0
        return min(self.power, 1.0) if self.power > 0 else 1.0


Term = tuple  # (weight, tuple[Atom, ...])


def _merge(terms) -> tuple:
    acc: dict = {}
    for w, atoms in terms:
        key = tuple(sorted(atoms))
        acc[key] = acc.get(key, 0.0) + w
    return tuple((w, k) for k, w in sorted(acc.items()) if w != 0.0)


class CoefficientFunction:
    """Real coefficient a(t) on [0, T].

    ``terms`` is set for registry-backed coefficients and is a tuple of
    ``(weight, atoms)`` pairs meaning sum(weight * prod(atom(t))).
    """

    __slots__ = ("evaluator", "declared_holder_exponent", "label", "terms")

    def __init__(self, evaluator: Callable | None = None, declared_holder_exponent=None,
                 label: str = "", terms=None):
        if evaluator is None and terms is None:
            raise SpecError("coefficient needs an evaluator or registry terms")
        self.terms = None if terms is None else _merge(terms)
        self.evaluator = evaluator
        self.declared_holder_exponent = declared_holder_exponent
        self.label = label

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.terms is None:
            return np.broadcast_to(np.asarray(self.evaluator(t), dtype=float), t.shape).copy()
        out = np.zeros(t.shape)
        for w, atoms in self.terms:
            v = np.full(t.shape, w)
            for a in atoms:
                v = v * a(t)
            out = out + v
        return out

    @property
    def is_registry(self) -> bool:
        return self.terms is not None

    def _combine_holder(self, other):
        a = self.declared_holder_exponent
        b = getattr(other, "declared_holder_exponent", 1.0)
        if a is None or b is None:
            return None
        return min(a, b)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = constant(float(other))
        if self.is_registry and other.is_registry:
            return CoefficientFunction(terms=self.terms + other.terms, label=f"({self.label}+{other.label})",
                                       declared_holder_exponent=self._combine_holder(other))
        return CoefficientFunction(lambda t, a=self, b=other: a(t) + b(t),
                                   self._combine_holder(other), f"({self.label}+{other.label})")

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            w = float(other)
            if self.is_registry:
                return CoefficientFunction(terms=tuple((w * c, a) for c, a in self.terms),
                                           label=f"{w!r}*{self.label}",
                                           declared_holder_exponent=self.declared_holder_exponent)
            return CoefficientFunction(lambda t, a=self: w * a(t), self.declared_holder_exponent,
                                       f"{w!r}*{self.label}")
        if self.is_registry and other.is_registry:
            terms = [(w1 * w2, a1 + a2) for w1, a1 in self.terms for w2, a2 in other.terms]
            return CoefficientFunction(terms=terms, label=f"{self.label}*{other.label}",
                                       declared_holder_exponent=self._combine_holder(other))
        return CoefficientFunction(lambda t, a=self, b=other: a(t) * b(t),
                                   self._combine_holder(other), f"{self.label}*{other.label}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, CoefficientFunction) else -float(other))

    def __repr__(self):
        return f"CoefficientFunction({self.label!r})"


# -- registry -------------------------------------------------------------

def constant(value: float) -> CoefficientFunction:
    return CoefficientFunction(terms=((float(value), ()),), label=f"{float(value)!r}",
                               declared_holder_exponent=1.0)


def t_power(power: float, scale: float = 1.0, offset: float = 0.0) -> CoefficientFunction:
    atom = Atom("t_power", power=float(power))
    return CoefficientFunction(terms=((float(offset), ()), (float(scale), (atom,))),
                               label=f"t_power({power!r})", declared_holder_exponent=atom.holder())


def abs_kink(center: float, power: float = 1.0, scale: float = 1.0, offset: float = 0.0) -> CoefficientFunction:
    atom = Atom("abs_kink", power=float(power), center=float(center))
    return CoefficientFunction(terms=((float(offset), ()), (float(scale), (atom,))),
                               label=f"abs_kink({center!r},{power!r})", declared_holder_exponent=atom.holder())


def smooth_step(center: float, width: float, scale: float = 1.0, offset: float = 0.0) -> CoefficientFunction:
    if width <= 0:
        raise SpecError("smooth_step width must be positive")
    atom = Atom("smooth_step", center=float(center), width=float(width))
    return CoefficientFunction(terms=((float(offset), ()), (float(scale), (atom,))),
                               label=f"smooth_step({center!r},{width!r})", declared_holder_exponent=1.0)


REGISTRY: dict[str, Callable[..., CoefficientFunction]] = {
    "constant": constant,
    "t_power": t_power,
    "abs_kink": abs_kink,
    "smooth_step": smooth_step,
}


# -- problem --------------------------------------------------------------

def bracket(xi) -> float:
    """Japanese bracket (1 + |xi|^2)^(1/2)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return math.sqrt(1.0 + float(xi @ xi))


def monomial(xi, gamma) -> float:
    v = 1.0
    for x, g in zip(xi, gamma):
        for _ in range(g):
            v *= x
    return v


def multi_indices(n: int, degree: int) -> list[tuple[int, ...]]:
    """All multi-indices of length n and given degree, graded-lex descending."""
    out = []
    for combo in combinations_with_replacement(range(n), degree):
        g = [0] * n
        for i in combo:
            g[i] += 1
        out.append(tuple(g))
    return sorted(set(out), reverse=True)


@dataclass(frozen=True)
class SourceDecay:
    C: float
    delta1: float
    s_f: float


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    l: int
    n: int
    T: float
    principal: Mapping = field(default_factory=dict)
    lower: Mapping = field(default_factory=dict)
    source: Callable | None = None
    source_decay: SourceDecay | None = None
    label: str = ""

    def principal_items(self):
        return sorted(self.principal.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    def lower_items(self):
        return sorted(self.lower.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    @property
    def is_registry(self) -> bool:
        return all(c.is_registry for c in self.principal.values()) and all(
            c.is_registry for c in self.lower.values())

    def principal_kinks(self) -> tuple:
        """Times in (0, T) where a registry principal coefficient may fail to be smooth."""
        out = set()
        for c in self.principal.values():
            for _, atoms in (c.terms or ()):
                for a in atoms:
                    if a.kind == "abs_kink" and 0.0 < a.center < self.T and a.power != int(a.power):
                        out.add(float(a.center))
        return tuple(sorted(out))


def _coefficient_rows(items, m, t, xi):
    t = np.asarray(t, dtype=float)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros(t.shape + (m,))
    for (j, gamma), coef in items:
        out[..., j] += coef(t) * monomial(xi, gamma)
    return out


def principal_coefficients(spec: ProblemSpec, t, xi) -> np.ndarray:
    """Values A_(m-j)(t, xi) for j = 0..m-1 (last axis)."""
    return _coefficient_rows(spec.principal_items(), spec.m, t, xi)


def lower_coefficients(spec: ProblemSpec, t, xi) -> np.ndarray:
    """Values (A_{m-j} - A_(m-j))(t, xi) for j = 0..m-1 (last axis)."""
    return _coefficient_rows(spec.lower_items(), spec.m, t, xi)


def _horner(coeffs, tau):
    # sum_j coeffs[..., j] tau^j
    acc = np.zeros(np.broadcast(coeffs[..., 0], tau).shape, dtype=np.result_type(coeffs, tau))
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        acc = acc * tau + coeffs[..., j]
    return acc


def principal_symbol(spec: ProblemSpec, t, xi, tau):
    """tau^m - sum_j A_(m-j)(t, xi) tau^j."""
    c = principal_coefficients(spec, t, xi)
    tau = np.asarray(tau)
    return tau ** spec.m - _horner(c, tau)


def lower_symbol(spec: ProblemSpec, t, xi, tau):
    """g(tau) = sum_j (A_{m-j} - A_(m-j))(t, xi) tau^j."""
    c = lower_coefficients(spec, t, xi)
    return _horner(c, np.asarray(tau))


def validate_spec(spec: ProblemSpec, n_samples: int = 65) -> list[str]:
    """Return a list of violations; empty iff the spec is admissible."""
    out = []
    if not isinstance(spec.m, int) or spec.m < 2:
        out.append("operator order must satisfy m >= 2")
    if spec.m > 12:
        out.append("operator order must satisfy m <= 12")
    if not (0 <= spec.l <= spec.m - 1):
        out.append("lower order degree must satisfy l <= m-1")
    if spec.n < 1:
        out.append("space dimension must satisfy n >= 1")
    if not (spec.T > 0 and math.isfinite(spec.T)):
        out.append("horizon must be positive and finite")
    if out:
        return out
    t = np.linspace(0.0, spec.T, n_samples)
    for what, items in (("principal", spec.principal_items()), ("lower", spec.lower_items())):
        for (j, gamma), coef in items:
            name = f"{what} coefficient (j={j}, gamma={gamma}) {coef.label}"
            if not (0 <= j <= spec.m - 1) or len(gamma) != spec.n or min(gamma, default=0) < 0:
                out.append(f"{name}: key out of range")
                continue
            if what == "principal" and sum(gamma) != spec.m - j:
                out.append(f"{name}: homogeneity requires |gamma| = m - j")
            if what == "lower" and sum(gamma) + j > spec.l:
                out.append(f"{name}: lower term requires |gamma| + j <= l")
            try:
                v = np.asarray(coef(t))
            except Exception as exc:  # evaluator failure is a report entry
                out.append(f"{name}: evaluation failed ({exc})")
                continue
            if np.iscomplexobj(v) and np.any(np.imag(v) != 0):
                out.append(f"{name}: non-real values")
            elif not np.all(np.isfinite(np.real(v))):
                out.append(f"{name}: non-finite values on [0, T]")
    return out


# -- spec builders for the worked instances --------------------------------

def radial_power(n: int, k: int) -> dict:
    """|xi|^(2k) as {gamma: integer coefficient} (multinomial expansion)."""
    out: dict = {}
    for combo in combinations_with_replacement(range(n), k):
        counts = [combo.count(i) for i in range(n)]
        mult = math.factorial(k)
        for c in counts:
            mult //= math.factorial(c)
        gamma = tuple(2 * c for c in counts)
        out[gamma] = out.get(gamma, 0) + mult
    return out


def _radial_terms(n, k, j, coef):
    return {(j, gamma): coef * float(c) if c != 1 else coef for gamma, c in radial_power(n, k).items()}


def example1_spec(a: CoefficientFunction, T: float = 1.0, n: int = 1,
                  lower: Mapping | None = None, l: int = 0, label="example1") -> ProblemSpec:
    """Third order operator with symbol tau^3 - a(t)|xi|^2 tau."""
    return ProblemSpec(m=3, l=l, n=n, T=T, principal=_radial_terms(n, 1, 1, a),
                       lower=dict(lower or {}), label=label)


def example2_spec(a: CoefficientFunction, b: CoefficientFunction, T: float = 1.0, n: int = 1,
                  lower: Mapping | None = None, l: int = 0, label="example2") -> ProblemSpec:
    """Fourth order operator with symbol (tau^2 - a|xi|^2)(tau^2 - b|xi|^2)."""
    principal = dict(_radial_terms(n, 1, 2, a + b))
    principal.update(_radial_terms(n, 2, 0, -(a * b)))
    return ProblemSpec(m=4, l=l, n=n, T=T, principal=principal, lower=dict(lower or {}), label=label)


def wave_spec(a: CoefficientFunction, T: float = 1.0, n: int = 1, lower=None, l: int = 0,
              label="wave") -> ProblemSpec:
    """Second order operator tau^2 - a(t)|xi|^2."""
    return ProblemSpec(m=2, l=l, n=n, T=T, principal=_radial_terms(n, 1, 0, a),
                       lower=dict(lower or {}), label=label)


def linear_factor_spec(forms: Sequence[Sequence[CoefficientFunction]], T: float = 1.0,
                       lower=None, l: int = 0, label="factored") -> ProblemSpec:
    """Spec whose symbol is prod_k (tau - sum_i c_{k,i}(t) xi_i).

    Every such operator is hyperbolic; its roots are the linear forms.
    """
    m = len(forms)
    n = len(forms[0])
    poly = {(0, (0,) * n): constant(1.0)}  # (tau power, gamma) -> coefficient
    for form in forms:
        nxt: dict = {}
        for (p, gamma), c in poly.items():
            key = (p + 1, gamma)
            nxt[key] = nxt[key] + c if key in nxt else c
            for i, ci in enumerate(form):
                g = list(gamma)
                g[i] += 1
                key = (p, tuple(g))
                term = -(c * ci)
                nxt[key] = nxt[key] + term if key in nxt else term
        poly = nxt
    principal = {}
    for (p, gamma), c in poly.items():
        if p == m:
            continue
        principal[(p, gamma)] = -c
    return ProblemSpec(m=m, l=l, n=n, T=T, principal=principal, lower=dict(lower or {}), label=label)
