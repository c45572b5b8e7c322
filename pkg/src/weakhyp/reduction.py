"""First-order reduction: system matrices, source vector, initial vector.

With u_k = D_t^(k-1) <D_x>^(m-k) u the Cauchy problem becomes
D_t V = (A + B) V + F with A in companion form (<xi> on the superdiagonal).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .problem import ATOM_CODES, ProblemSpec, bracket, lower_coefficients, monomial, principal_coefficients


@dataclass(frozen=True)
class KernelProgram:
    """Registry coefficients of the last row of A + B, flattened for the integrator.

    row_j(t) = sum over monomials i with col[i] == j of
    weight[i] * prod_f atom[factors[i, f]](t).
    """

    atom_code: np.ndarray
    atom_power: np.ndarray
    atom_center: np.ndarray
    atom_width: np.ndarray
    mono_col: np.ndarray
    mono_weight: np.ndarray
    mono_factors: np.ndarray

    def evaluate(self, t: float, m: int) -> np.ndarray:
        from .problem import Atom, ATOM_KINDS
        vals = [Atom(ATOM_KINDS[c], p, ce, w)(t) for c, p, ce, w in
                zip(self.atom_code, self.atom_power, self.atom_center, self.atom_width)]
        row = np.zeros(m)
        for col, w, fac in zip(self.mono_col, self.mono_weight, self.mono_factors):
            v = w
            for f in fac:
                if f < 0:
                    break
                v *= vals[f]
            row[col] += v
        return row


@dataclass(frozen=True)
class FirstOrderSystem:
    spec: ProblemSpec

    @property
    def m(self) -> int:
        return self.spec.m

    def principal_row(self, t, xi) -> np.ndarray:
        """b_(j) = A_(m-j+1) <xi>^(j-m) (1-based j), as a trailing axis of length m."""
        lam = bracket(xi)
        c = principal_coefficients(self.spec, t, xi)
        return c * lam ** (np.arange(self.m) + 1.0 - self.m)

    def lower_row(self, t, xi) -> np.ndarray:
        lam = bracket(xi)
        c = lower_coefficients(self.spec, t, xi)
        return c * lam ** (np.arange(self.m) + 1.0 - self.m)

    def row(self, t, xi) -> np.ndarray:
        """Last row of A + B."""
        return self.principal_row(t, xi) + self.lower_row(t, xi)

    def A(self, t, xi) -> np.ndarray:
        m = self.m
        lam = bracket(xi)
        r = self.principal_row(t, xi)
        M = np.zeros(r.shape[:-1] + (m, m))
        idx = np.arange(m - 1)
        M[..., idx, idx + 1] = lam
        M[..., m - 1, :] = r
        return M

    def B(self, t, xi) -> np.ndarray:
        m = self.m
        r = self.lower_row(t, xi)
        M = np.zeros(r.shape[:-1] + (m, m))
        M[..., m - 1, :] = r
        return M

    def Fhat(self, t, xi) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.m,), dtype=complex)
        if self.spec.source is not None:
            out[..., -1] = np.vectorize(lambda s: complex(self.spec.source(s, xi)))(t)
        return out

    @property
    def has_source(self) -> bool:
        return self.spec.source is not None

    def program(self, xi) -> KernelProgram | None:
        """Native description of row(t, xi), or None for non-registry coefficients."""
        if not self.spec.is_registry:
            return None
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        lam = bracket(xi)
        m = self.m
        atoms: dict = {}
        monos = []
        for (j, gamma), coef in list(self.spec.principal_items()) + list(self.spec.lower_items()):
            scale = monomial(xi, gamma) * lam ** (j + 1.0 - m)
            for w, atom_tuple in coef.terms:
                idx = []
                for a in atom_tuple:
                    if a not in atoms:
                        atoms[a] = len(atoms)
                    idx.append(atoms[a])
                monos.append((j, w * scale, idx))
        maxf = max([len(f) for _, _, f in monos] + [1])
        fac = np.full((len(monos), maxf), -1, dtype=np.intp)
        for i, (_, _, f) in enumerate(monos):
            fac[i, :len(f)] = f
        alist = sorted(atoms, key=atoms.get)
        return KernelProgram(
            atom_code=np.array([ATOM_CODES[a.kind] for a in alist], dtype=np.intp),
            atom_power=np.array([a.power for a in alist], dtype=float),
            atom_center=np.array([a.center for a in alist], dtype=float),
            atom_width=np.array([a.width for a in alist], dtype=float),
            mono_col=np.array([c for c, _, _ in monos], dtype=np.intp),
            mono_weight=np.array([w for _, w, _ in monos], dtype=float),
            mono_factors=fac,
        )


def build_system(spec: ProblemSpec) -> FirstOrderSystem:
    return FirstOrderSystem(spec)


def spectral_bound(row, lam: float) -> np.ndarray:
    """Fujiwara bound on the spectral radius of A + B from its last row.

    The characteristic polynomial is tau^m - sum_j row_j <xi>^(m-1-j) tau^j.
    """
    row = np.asarray(row, dtype=float)
    m = row.shape[-1]
    j = np.arange(m)
    return 2.0 * np.max(np.abs(row * lam ** (m - 1.0 - j)) ** (1.0 / (m - j)), axis=-1)


# -- initial data ---------------------------------------------------------

def log_parts(f, xi) -> tuple[float, float]:
    """(log |f(xi)|, arg f(xi)); uses ``f.log_parts`` when available."""
    if hasattr(f, "log_parts"):
        return f.log_parts(xi)
    v = complex(f(xi))
    if v == 0:
        return -math.inf, 0.0
    return math.log(abs(v)), cmath.phase(v)


@dataclass(frozen=True)
class ZeroDatum:
    def __call__(self, xi):
        return 0j

    def log_parts(self, xi):
        return -math.inf, 0.0


@dataclass(frozen=True)
class ScaledDatum:
    """xi -> tau(xi)^power * base(xi), with tau a real function of xi."""

    base: object
    tau: Callable
    power: int

    def __call__(self, xi):
        return complex(self.tau(xi)) ** self.power * complex(self.base(xi))

    def log_parts(self, xi):
        la, ph = log_parts(self.base, xi)
        if self.power == 0:
            return la, ph
        v = float(self.tau(xi))
        if v == 0:
            return -math.inf, 0.0
        ph2 = ph + (math.pi * self.power if v < 0 else 0.0)
        return la + self.power * math.log(abs(v)), math.remainder(ph2, 2 * math.pi)


@dataclass(frozen=True)
class InitialData:
    """Transforms of the Cauchy data g_k = D_t^(k-1) u(0)."""

    ghat: Sequence
    declared_gevrey: tuple | None = None  # ("decay" | "growth", s, delta)

    @property
    def m(self) -> int:
        return len(self.ghat)

    @classmethod
    def first_only(cls, datum, m: int, declared=None):
        return cls(tuple([datum] + [ZeroDatum()] * (m - 1)), declared)

    @classmethod
    def polarized(cls, datum, tau: Callable, m: int, declared=None):
        """g_k = tau^(k-1) g: data along the eigenvector of the root tau at t = 0."""
        return cls(tuple(ScaledDatum(datum, tau, k) for k in range(m)), declared)

    @classmethod
    def zero(cls, m: int):
        return cls(tuple([ZeroDatum()] * m))


def initial_vector(data: InitialData, xi) -> np.ndarray:
    """V0 with entries <xi>^(m-k) ghat_k(xi)."""
    lam = bracket(xi)
    m = data.m
    return np.array([lam ** (m - 1 - k) * complex(g(xi)) for k, g in enumerate(data.ghat)], dtype=complex)


def initial_vector_log(data: InitialData, xi) -> tuple[np.ndarray, float]:
    """(unit vector, log scale) with V0 = exp(log scale) * unit vector.

    Returns (zeros, -inf) for zero data.
    """
    lam = bracket(xi)
    m = data.m
    parts = [log_parts(g, xi) for g in data.ghat]
    logs = np.array([(m - 1 - k) * math.log(lam) + la for k, (la, _) in enumerate(parts)])
    if np.all(np.isneginf(logs)):
        return np.zeros(m, dtype=complex), -math.inf
    top = float(np.max(logs))
    mag = np.exp(logs - top)
    u = mag * np.exp(1j * np.array([ph for _, ph in parts]))
    nrm = float(np.linalg.norm(u))
    return u / nrm, top + math.log(nrm)


def reconstruct_uhat(V, xi, m: int | None = None):
    """uhat = V_1 <xi>^(1-m) along a trajectory (last axis indexes components)."""
    V = np.asarray(V)
    m = V.shape[-1] if m is None else m
    return V[..., 0] * bracket(xi) ** (1.0 - m)
