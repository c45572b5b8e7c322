"""End-to-end run of one configuration.

classify -> index selection -> regularize and verify -> symmetrizer check
-> sweep -> energy certifications over the kappa ladder -> Gevrey verdict.
The result is a plain dict tree (plus tables) for ``report.emit_report``.
Nothing host- or time-dependent goes into it.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction

import numpy as np

from . import energy, gevrey, selftest, solver
from .config import RunConfig, build_spec
from .errors import ConfigError, WeakHypError
from .mollify import MollifierSpec, bump, bump_derivative, regularize, verify_regularization
from .problem import validate_spec
from .reduction import InitialData, build_system, initial_vector_log
from .roots import CASE1, CASE2, CASE3, RootField, classify

log = logging.getLogger(__name__)

INDEX_FORMULAS = {
    CASE1: "1 + min(alpha, (m - l)/l)",
    CASE2: "1 + min(alpha, beta/(r - beta))",
    CASE3: "1 + beta/(1 - beta)",
}

MODE_HEADER = ("index", "bracket", "log2_bracket", "direction", "above_threshold", "W_ge_1",
               "monotone", "excursion", "max_bracket", "log_c", "bound_margin", "t_end", "log_u_T",
               "steps", "rejected", "error")
RATE_HEADER = ("term", "kind", "slope", "expected", "tolerance", "passed")
FIT_HEADER = ("series", "model", "log_C", "delta", "s", "residual", "bracket_min", "bracket_max",
              "n_samples", "notes")
LADDER_HEADER = ("kappa", "rho0", "threshold", "checked", "monotone", "max_excursion", "log_c",
                 "slope", "final_bound_passed")


class RunFailure(Exception):
    """Stops the pipeline; ``stage`` and ``details`` go into the failure section."""

    def __init__(self, stage, message, details=None):
        super().__init__(message)
        self.stage = stage
        self.details = details or []


def _exact_text(x):
    return str(x) if isinstance(x, Fraction) else repr(float(x))


def _s_test(rule: str, s_sup, s_cap: float):
    if rule == "midpoint":
        return float(energy.default_s_test(s_sup, s_cap))
    if rule == "endpoint":
        if s_sup == math.inf:
            return float(s_cap)
        return float(s_sup)
    try:
        return float(rule)
    except ValueError:
        raise ConfigError(f"energy.s_test = {rule!r}: use midpoint, endpoint or a number") from None


def _directions(cfg: RunConfig, n: int):
    text = cfg.get("sweep", "directions")
    if not text:
        return [tuple(np.eye(n)[0])]
    out = []
    for part in text.split(";"):
        try:
            d = np.array([float(x) for x in part.split(",")])
        except ValueError:
            raise ConfigError(f"sweep.directions entry {part!r} is not a vector") from None
        if d.shape != (n,) or not np.any(d):
            raise ConfigError(f"sweep.directions entry {part!r} must be a nonzero {n}-vector")
        out.append(tuple(d / np.linalg.norm(d)))
    return out


def _data(cfg: RunConfig, m: int, s_test: float):
    kind = cfg.get("data", "kind", "decay")
    if kind == "zero":
        return InitialData.zero(m), None
    if kind not in (gevrey.DECAY, gevrey.GROWTH):
        raise ConfigError(f"data.kind = {kind!r}: use decay, growth or zero")
    delta = cfg.number("data", "delta", 1.0)
    s_data = cfg.get("data", "s", "auto")
    s = s_test if s_data == "auto" else float(s_data)
    datum = gevrey.synthesize(s, delta, growth=kind == gevrey.GROWTH)
    comps = cfg.get("data", "components", "first")
    declared = (kind, s, delta)
    if comps == "first":
        return InitialData.first_only(datum, m, declared), datum
    if comps == "all":
        # g_k = <xi>^(k-1) g excites every component at the same scale
        brk = lambda xi: math.sqrt(1.0 + float(np.dot(xi, xi)))  # noqa: E731
        return InitialData.polarized(datum, brk, m, declared), datum
    raise ConfigError(f"data.components = {comps!r}: use first or all")


def _rho0(cfg: RunConfig, kappa: float, delta: float, T: float) -> float:
    rule = cfg.get("energy", "rho0", "auto")
    if rule == "auto":
        return delta + 1.5 * kappa * T
    try:
        return float(rule)
    except ValueError:
        raise ConfigError(f"energy.rho0 = {rule!r}: use auto or a number") from None


def _fit_row(series, fit):
    if fit is None:
        return None
    return (series, fit.model, fit.log_C, fit.delta, fit.s, fit.residual, fit.sample_range[0],
            fit.sample_range[1], fit.n_samples, "; ".join(fit.notes))


def _fit_dict(fit):
    if fit is None:
        return None
    return {"model": fit.model, "log_C": fit.log_C, "delta": fit.delta, "s": fit.s,
            "residual": fit.residual, "sample_range": list(fit.sample_range),
            "n_samples": fit.n_samples, "non_exponential": fit.non_exponential, "notes": fit.notes}


def execute(cfg: RunConfig, workers: int | None = None, backend: str | None = None) -> dict:
    """Run everything the config enables; never raises for certification failures."""
    results: dict = {"scenario": cfg.get("run", "scenario", "custom"), "warnings": [],
                     "certifications": {}, "tables": {}}
    try:
        _pipeline(cfg, results, workers, backend)
    except RunFailure as exc:
        results["failure"] = {"stage": exc.stage, "message": str(exc), "details": exc.details}
    except ConfigError as exc:
        results["failure"] = {"stage": "config", "message": str(exc), "details": []}
    except WeakHypError as exc:
        results["failure"] = {"stage": "pipeline", "message": f"{type(exc).__name__}: {exc}",
                              "details": []}
    certs = results["certifications"]
    results["status"] = "fail" if "failure" in results or not all(certs.values()) else "pass"
    return results


def _pipeline(cfg: RunConfig, results: dict, workers, backend):
    spec = build_spec(cfg)
    problems = validate_spec(spec)
    results["problem"] = {"m": spec.m, "l": spec.l, "n": spec.n, "T": spec.T}
    if problems:
        raise RunFailure("validate", "problem specification is not admissible", problems)
    tol = cfg.number("run", "tol", 1e-8)
    backend = backend or cfg.get("run", "backend") or None
    if backend == "auto":
        backend = None

    field_ = RootField(spec)
    cls = classify(field_, spec)
    results["classification"] = {
        "case": cls.case_id, "r": cls.r, "alpha": cls.alpha, "beta": cls.beta, "c_gap": cls.c_gap,
        "c_comp": cls.c_comp, "c_comp_location": list(cls.c_comp_location),
        "holder_constant": cls.holder_constant, "order": list(cls.order),
        "block": list(cls.block), "touch_times": list(cls.touch_times)}

    gamma, s_sup = energy.select_gamma_s(cls, spec.m, spec.l)
    s_cap = cfg.number("energy", "s_cap", 2.0)
    s_test = _s_test(cfg.get("energy", "s_test", "midpoint"), s_sup, s_cap)
    loss = energy.loss_exponent(cls.case_id, gamma, cls.alpha, spec.m, cls.r)
    results["indices"] = {"gamma": float(gamma), "s_sup": float(s_sup), "s_test": s_test,
                          "gamma_exact": _exact_text(gamma), "s_sup_exact": _exact_text(s_sup),
                          "s_sup_formula": INDEX_FORMULAS[cls.case_id], "loss_exponent": loss,
                          "s_test_inside": s_test < s_sup}

    phi = MollifierSpec(bump, bump_derivative)
    mr = regularize(field_, phi, cls, float(gamma))
    k_min = cfg.number("sweep", "k_min")
    k_max = cfg.number("sweep", "k_max")
    count = cfg.integer("sweep", "count")
    if count < 0 or k_max < k_min:
        raise ConfigError("sweep range is empty")
    lams = solver.dyadic_brackets(k_min, k_max, count) if count else np.zeros(0)
    directions = _directions(cfg, spec.n)

    # regularization properties on a few grid frequencies (and one above the gap threshold)
    probe_lams = list(lams[:: max(1, len(lams) // 6)]) if count else []
    thr = None
    if cls.r < spec.m:
        from .mollify import gap_threshold
        thr = gap_threshold(cls.c_gap, cls.holder_constant, cls.alpha, cls.beta, float(gamma), cls.r)
        if math.isfinite(thr):
            probe_lams.append(2.0 * thr)
    probes = [solver.xi_from_bracket(L, directions[0]) for L in probe_lams
              if L > 1 and mr.horizon(L) > 0 and max(mr.eps_at(L), mr.delta_at(L)) < spec.T]
    rep = verify_regularization(mr, (None, probes), c_comp=cls.c_comp or None, c_gap=cls.c_gap,
                                holder_constant=cls.holder_constant, gamma=float(gamma))
    results["regularization"] = {"threshold": rep.threshold, "probes": len(probes), "properties": [
        {"name": r.name, "constant": r.constant, "passed": r.passed, "detail": r.detail}
        for r in rep.results]}
    results["certifications"]["regularization"] = rep.passed

    sym = selftest.symmetrizer_suite(n_per_m=cfg.integer("energy", "symmetrizer_instances", 200),
                                     orders=[spec.m])
    results["symmetrizer"] = {k: v for k, v in sym.metrics.items()}
    results["certifications"]["symmetrizer"] = sym.passed

    data, datum = _data(cfg, spec.m, s_test)
    kind = cfg.get("data", "kind", "decay")
    delta = cfg.number("data", "delta", 1.0)
    ladder = sorted(set(cfg.numbers("energy", "kappa_ladder", ())))
    pick_from_ladder = cfg.get("energy", "kappa") == "ladder"
    if pick_from_ladder:
        if not ladder:
            raise ConfigError("energy.kappa = ladder needs energy.kappa_ladder")
        kappa = ladder[-1]  # provisional; replaced by the smallest passing value
    else:
        kappa = cfg.number("energy", "kappa", 1.0)
    params = energy.EnergyParams(cls.case_id, float(gamma), s_test, _rho0(cfg, kappa, delta, spec.T), kappa)
    viol = params.violations(spec.T)
    if viol:
        raise RunFailure("energy", "transform parameters are not admissible", viol)
    results["energy_params"] = {"kappa": kappa, "rho0": params.rho0, "s": params.s,
                                "gamma": params.gamma}

    if count == 0:
        results["warnings"].append("empty sweep: no modes integrated")
        results["sweep"] = {"modes": 0, "failures": 0}
        return

    sysm = build_system(spec)
    m = spec.m

    def analyze(traj):
        summ = energy.summarize_mode(traj, sysm, mr, params)
        with np.errstate(divide="ignore"):
            logu = math.log(abs(traj.V_unit[-1, 0])) + traj.log_scale + (1 - m) * math.log(traj.lam)
        return summ, logu, traj.step_stats, float(traj.times[-1])

    sw = solver.sweep(sysm, data, params, mr, lams, directions, tol=tol,
                      n_out=cfg.integer("sweep", "n_out", solver.N_OUT), workers=workers,
                      backend=backend, analyze=analyze, keep_trajectories=False)
    ok = sw.ok
    results["sweep"] = {"modes": len(sw.modes), "failures": len(sw.failures), "backend": sw.backend,
                        "directions": [list(d) for d in directions], "tol": tol,
                        "failed_modes": [{"index": f.index, "bracket": f.lam, "error": f.error}
                                         for f in sw.failures]}
    results["certifications"]["sweep"] = not sw.failures
    summaries = [md.analysis[0] for md in ok]

    # rate fits come from the term estimates already measured on every mode
    if cfg.flag("energy", "rate_fits", False) and summaries:
        expected = (energy.expected_slopes(cls.case_id, gamma, cls.alpha, m, spec.l)
                    if cls.case_id == CASE1 else None)
        fits = energy.rate_fits_from([s.estimates for s in summaries], expected)
        results["tables"]["rate_fits"] = (RATE_HEADER, [
            (f.term, f.kind, f.slope, f.expected, f.tolerance, f.passed) for f in fits])
        results["rate_fits"] = {f.term: {"kind": f.kind, "slope": f.slope, "expected": f.expected,
                                         "passed": f.passed} for f in fits}
        results["certifications"]["rate_fits"] = all(f.passed for f in fits)

    main = None
    if cfg.flag("energy", "monotonicity", True) and summaries:
        ladder = sorted(set(ladder) | {kappa})
        rows, entries, reports = [], [], {}
        for k in ladder:
            pk = energy.EnergyParams(cls.case_id, float(gamma), s_test, _rho0(cfg, k, delta, spec.T), k)
            mono = energy.certify_summaries(summaries, pk, loss)
            fb = energy.final_bound_check(mono.verdicts)
            entry = {"kappa": k, "rho0": pk.rho0, "threshold": mono.xi0, "checked": len(mono.checked),
                     "monotone": mono.monotone, "max_excursion": mono.max_excursion,
                     "log_c": fb.log_c, "slope": fb.slope, "final_bound_passed": fb.passed,
                     "admissible": not pk.violations(spec.T)}
            entries.append(entry)
            rows.append((k, pk.rho0, mono.xi0, len(mono.checked), mono.monotone, mono.max_excursion,
                         fb.log_c, fb.slope, fb.passed))
            reports[k] = (mono, fb)
        results["tables"]["kappa_ladder"] = (LADDER_HEADER, rows)
        passing = [e["kappa"] for e in entries
                   if e["threshold"] is not None and e["monotone"] and e["admissible"]]
        if pick_from_ladder and passing:
            kappa = min(passing)
            results["energy_params"]["kappa"] = kappa
            results["energy_params"]["rho0"] = _rho0(cfg, kappa, delta, spec.T)
        main = reports[kappa]
        mono, fb = main
        results["monotonicity"] = {
            "kappa": kappa, "threshold": mono.xi0,
            "log2_threshold": math.log2(mono.xi0) if mono.xi0 else None,
            "checked": len(mono.checked), "monotone": mono.monotone,
            "max_excursion": mono.max_excursion, "ladder": entries,
            "smallest_passing_kappa": min(passing) if passing else None,
            "no_threshold_kappas": [e["kappa"] for e in entries if e["threshold"] is None]}
        results["final_bound"] = {"c": fb.c, "log_c": fb.log_c, "slope": fb.slope, "passed": fb.passed,
                                  "modes": fb.n_modes, "worst_bracket": fb.worst_lam,
                                  "loss_exponent": loss}
        results["certifications"]["monotonicity"] = mono.xi0 is not None and mono.monotone
        results["certifications"]["final_bound"] = mono.xi0 is not None and fb.passed

    # per-mode table
    vmap = {}
    if main is not None:
        for k, (md, v) in enumerate(zip(ok, main[0].verdicts)):
            vmap[md.index] = (v, main[0].max_brackets[k])
    rows = []
    log_c_all = main[1].log_c if main is not None else None
    for md in sw.modes:
        if md.error is not None:
            rows.append((md.index, md.lam, math.log2(md.lam), _dir_text(md.direction), None, None, None,
                         None, None, None, None, None, None, None, None, md.error))
            continue
        _, logu, st, t_end = md.analysis
        v, mb = vmap.get(md.index, (None, None))
        margin = (v.log_c - log_c_all) if (v is not None and v.above_threshold) else None
        rows.append((md.index, md.lam, math.log2(md.lam), _dir_text(md.direction),
                     v.above_threshold if v else None, v.W_ge_1 if v else None,
                     v.monotone if v else None, v.excursion if v else None, mb,
                     v.log_c if v else None, margin, t_end, logu, st.steps, st.rejected, ""))
    results["tables"]["modes"] = (MODE_HEADER, rows)

    # Gevrey verdict, per direction; the worst one is reported
    if kind == "zero" or datum is None:
        v = gevrey.wellposedness_verdict(None, lams, np.full(len(lams), -math.inf), s_test, float(s_sup))
        results["gevrey"] = {"verdict": v.verdict, "passed": v.passed, "flags": v.flags}
        return
    model = gevrey.GROWTH if kind == gevrey.GROWTH else gevrey.DECAY
    verdicts, fit_rows = [], []
    for d in directions:
        mds = [md for md in ok if md.direction == d]
        lam_d = np.array([md.lam for md in mds])
        logu = np.array([md.analysis[1] for md in mds])
        init = np.array([initial_vector_log(InitialData.first_only(datum, 1), solver.xi_from_bracket(L, d))[1]
                         for L in lam_d])
        try:
            init_fit = gevrey.fit_decay_log(lam_d, init, model)
            verdict = gevrey.wellposedness_verdict(init_fit, lam_d, logu, s_test, float(s_sup), model)
        except (ValueError, WeakHypError) as exc:
            raise RunFailure("gevrey", f"fit failed: {exc}") from None
        verdicts.append((d, verdict))
        fit_rows.append(_fit_row(f"initial {_dir_text(d)}", init_fit))
        fit_rows.append(_fit_row(f"solution {_dir_text(d)}", verdict.fit))
    results["tables"]["decay_fits"] = (FIT_HEADER, [r for r in fit_rows if r is not None])
    order = {True: 2, None: 1, False: 0}
    d, worst = min(verdicts, key=lambda dv: order[dv[1].passed])
    results["gevrey"] = {
        "verdict": worst.verdict, "passed": worst.passed, "s_test": worst.s_test,
        "s_sup": float(s_sup), "quantifier": worst.quantifier, "flags": worst.flags,
        "direction": list(d), "fit": _fit_dict(worst.fit), "initial_fit": _fit_dict(worst.initial_fit),
        "envelope_log_C": worst.envelope_log_C,
        "per_direction": [{"direction": list(dd), "verdict": vv.verdict, "passed": vv.passed}
                          for dd, vv in verdicts]}
    if worst.passed is None:
        results["warnings"].append("s_test outside the admissible range; Gevrey verdict not certified")
    else:
        results["certifications"]["gevrey"] = bool(worst.passed)


def _dir_text(d) -> str:
    return ",".join(repr(float(x)) for x in d)
