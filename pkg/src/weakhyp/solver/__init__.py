"""Per-mode integration of the reduced system and parallel frequency sweeps.

The RK kernel comes from the compiled extension when it is importable and
from the pure-Python module otherwise.  Set WEAKHYP_PURE_PYTHON=1 to force
the fallback.  WEAKHYP_WORKERS sets the sweep's thread count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import WeakHypError
from ..problem import bracket
from ..reduction import FirstOrderSystem, InitialData, initial_vector_log
from . import _rk_py

try:
    if os.environ.get("WEAKHYP_PURE_PYTHON") == "1":
        raise ImportError("fallback forced")
    from . import _rk_ext
except ImportError:
    _rk_ext = None

BACKENDS = {"python": _rk_py}
if _rk_ext is not None:
    BACKENDS["compiled"] = _rk_ext
BACKEND = "compiled" if _rk_ext is not None else "python"

N_OUT = 256


def kernel(backend: str | None = None):
    name = backend or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def default_workers() -> int:
    env = os.environ.get("WEAKHYP_WORKERS")
    if env:
        return max(1, int(env))
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class StepStats:
    steps: int
    rejected: int
    max_err: float
    max_hw: float


@dataclass
class ModeTrajectory:
    """V = exp(log_scale) * V_unit at ``times``; W kept as (direction, log norm)."""

    xi: np.ndarray
    lam: float
    times: np.ndarray
    V_unit: np.ndarray
    log_scale: float
    step_stats: StepStats
    tol: float
    backend: str
    W_unit: np.ndarray | None = None
    logW: np.ndarray | None = None
    dW_unit: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def V(self) -> np.ndarray:
        if self.log_scale == -math.inf:
            return np.zeros_like(self.V_unit)
        return self.V_unit * math.exp(self.log_scale)

    @property
    def W(self) -> np.ndarray | None:
        if self.logW is None:
            return None
        with np.errstate(over="ignore", under="ignore"):
            return self.W_unit * np.exp(self.logW)[:, None]

    def log_norm_V(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.linalg.norm(self.V_unit, axis=-1)) + self.log_scale


def _callbacks(system: FirstOrderSystem, xi, scale: float):
    program = system.program(xi)
    row_fn = None if program is not None else (lambda t: system.row(t, xi))
    src_fn = None
    if system.has_source:
        src = system.spec.source
        src_fn = lambda t: complex(src(t, xi)) / scale  # noqa: E731
    return program, row_fn, src_fn


def integrate_mode(system: FirstOrderSystem, V0, xi, t_span=None, tol: float = 1e-8,
                   n_out: int = N_OUT, h_max: float = math.inf, backend: str | None = None,
                   log_scale: float = 0.0, normalize: bool = True) -> ModeTrajectory:
    """Integrate d/dt V = i((A + B) V + F) on a uniform grid of ``n_out`` times.

    Without a source the flow is linear, so V0 is normalized first and the
    scale is carried separately (data far below double range stay exact).
    ``tol = inf`` with a finite ``h_max`` gives fixed steps.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam = bracket(xi)
    T = system.spec.T
    t0, t1 = (0.0, T) if t_span is None else (float(t_span[0]), float(t_span[1]))
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not (0.0 <= t0 < t1 <= T * (1 + 1e-12)):
        raise ValueError(f"t_span {t0, t1} must lie in [0, {T}]")
    V0 = np.asarray(V0, dtype=complex)
    times = np.linspace(t0, t1, n_out)
    peak = float(np.max(np.abs(V0))) if V0.size else 0.0
    # scale before squaring so tiny data do not underflow to zero norm
    nrm = peak * float(np.linalg.norm(V0 / peak)) if peak > 0 else 0.0
    if normalize and not system.has_source:
        if nrm == 0.0:
            V_unit = np.zeros((n_out, system.m), dtype=complex)
            return ModeTrajectory(xi, lam, times, V_unit, -math.inf, StepStats(0, 0, 0.0, 0.0),
                                  tol, backend or BACKEND)
        v0 = V0 / nrm
        log_scale = log_scale + math.log(nrm)
    else:
        v0 = V0
    scale = math.exp(log_scale) if system.has_source else 1.0
    program, row_fn, src_fn = _callbacks(system, xi, scale)
    h0 = min(0.01, 0.5 / lam)
    out, steps, rej, max_err, max_hw = kernel(backend).integrate(
        system.m, lam, v0, times, tol, h0, h_max, 1e-12 * T, t1 - t0,
        program=program, row_fn=row_fn, src_fn=src_fn)
    return ModeTrajectory(xi, lam, times, out, log_scale, StepStats(steps, rej, max_err, max_hw),
                          tol, backend or BACKEND)


def transform_W(traj: ModeTrajectory, system: FirstOrderSystem, params, mr):
    """W = e^(rho(t) <xi>^(1/s)) det H H^-1 V and its independently assembled derivative.

    Returns (W_unit, logW, dW_unit): W = exp(logW) W_unit with |W_unit| = 1 and
    dW = exp(logW) dW_unit.
    """
    from ..symmetrizer import build_bundle, dH_matrix, log_abs_det

    t = traj.times
    xi, lam = traj.xi, traj.lam
    conv, shift, dlam = mr.parts(t, xi)
    traj.extras["mollified"] = (conv, shift, dlam)
    lam_vals = conv + shift
    bundle = build_bundle(lam_vals, np.full(len(t), lam))
    logdet, sign = log_abs_det(bundle)
    Y = np.einsum("tpq,tq->tp", bundle.Hinv, traj.V_unit)
    ny = np.linalg.norm(Y, axis=-1)
    with np.errstate(divide="ignore"):
        logW = params.rho(t) * lam ** (1.0 / params.s) + logdet + np.log(ny) + traj.log_scale
    safe = np.where(ny > 0, ny, 1.0)
    W_unit = sign[:, None] * Y / safe[:, None]
    # d/dt W = [rho' <xi>^(1/s) + (det H)'/det H - H^-1 H' + i H^-1 (A + B) H] W
    M = np.einsum("tpk,tkl,tlq->tpq", bundle.Hinv, system.A(t, xi) + system.B(t, xi), bundle.H)
    K = np.einsum("tpk,tkq->tpq", bundle.Hinv, dH_matrix(bundle, dlam))
    ratio = _det_log_derivative(bundle.lam, dlam)
    drive = (params.rho_prime(t) * lam ** (1.0 / params.s) + ratio)[:, None, None] * np.eye(system.m)
    dW_unit = np.einsum("tpq,tq->tp", drive - K + 1j * M, W_unit)
    if system.has_source:
        F = system.Fhat(t, xi)
        with np.errstate(over="ignore", under="ignore"):
            amp = np.exp(params.rho(t) * lam ** (1.0 / params.s) + logdet - logW)
        dW_unit = dW_unit + 1j * (sign * amp)[:, None] * np.einsum("tpq,tq->tp", bundle.Hinv, F)
    return W_unit, logW, dW_unit


def _det_log_derivative(lam_vals, dlam):
    """(det H)'/det H = sum_{j<i} (lambda_i' - lambda_j')/(lambda_i - lambda_j)."""
    m = lam_vals.shape[-1]
    iu, ju = np.triu_indices(m, 1)
    return np.sum((dlam[..., ju] - dlam[..., iu]) / (lam_vals[..., ju] - lam_vals[..., iu]), axis=-1)


def integrate_with_transform(system: FirstOrderSystem, V0, xi, params, mr, t_span=None,
                             tol: float = 1e-8, n_out: int = N_OUT, backend: str | None = None,
                             log_scale: float = 0.0) -> ModeTrajectory:
    """Integrate V on [0, T'] and attach W and dW at every output time."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam = bracket(xi)
    if t_span is None:
        mr.check_scales(lam)  # HorizonTooShort when the mollifier does not fit
        t_span = (0.0, mr.horizon(lam))
    traj = integrate_mode(system, V0, xi, t_span, tol, n_out, backend=backend, log_scale=log_scale)
    if traj.log_scale == -math.inf:
        traj.W_unit = np.zeros_like(traj.V_unit)
        traj.logW = np.full(len(traj.times), -math.inf)
        traj.dW_unit = np.zeros_like(traj.V_unit)
        return traj
    traj.W_unit, traj.logW, traj.dW_unit = transform_W(traj, system, params, mr)
    return traj


# -- sweeps ---------------------------------------------------------------

def xi_from_bracket(lam: float, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return d * math.sqrt(max(lam * lam - 1.0, 0.0))


def dyadic_brackets(k_min: float, k_max: float, count: int) -> np.ndarray:
    """``count`` log-spaced values of <xi> from 2^k_min to 2^k_max."""
    return 2.0 ** np.linspace(k_min, k_max, count)


@dataclass
class ModeResult:
    index: int
    lam: float
    direction: tuple
    trajectory: ModeTrajectory | None
    analysis: object = None
    error: str | None = None


@dataclass
class SweepReport:
    modes: list
    workers: int
    backend: str

    @property
    def failures(self) -> list:
        return [m for m in self.modes if m.error is not None]

    @property
    def ok(self) -> list:
        return [m for m in self.modes if m.error is None]


def sweep(system: FirstOrderSystem, data: InitialData, params, mr, brackets, directions=None,
          tol: float = 1e-8, n_out: int = N_OUT, workers: int | None = None,
          backend: str | None = None, analyze=None, keep_trajectories: bool = True) -> SweepReport:
    """Integrate every (bracket, direction) mode in parallel threads.

    ``analyze(trajectory)`` runs inside the worker; its result is stored on the
    mode.  Per-mode failures are recorded, not raised.  Results come back in
    grid order whatever the scheduling.
    """
    n = system.spec.n
    directions = [tuple(np.eye(n)[0])] if directions is None else [tuple(d) for d in directions]
    tasks = [(i, float(lam), d) for i, (d, lam) in
             enumerate((d, lam) for d in directions for lam in brackets)]
    workers = default_workers() if workers is None else max(1, int(workers))

    def one(task):
        i, lam, d = task
        xi = xi_from_bracket(lam, d)
        try:
            unit, ls = initial_vector_log(data, xi)
            traj = integrate_with_transform(system, unit, xi, params, mr, tol=tol, n_out=n_out,
                                            backend=backend, log_scale=ls)
            res = analyze(traj) if analyze is not None else None
        except (WeakHypError, ValueError, FloatingPointError) as exc:
            return ModeResult(i, lam, d, None, None, f"{type(exc).__name__}: {exc}")
        return ModeResult(i, lam, d, traj if keep_trajectories else None, res)

    if workers == 1 or len(tasks) <= 1:
        modes = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            modes = list(pool.map(one, tasks))
    return SweepReport(modes, workers, backend or BACKEND)
