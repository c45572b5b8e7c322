"""Command line: ``run <config>``, ``scenario <name>``, ``selftest``.

Exit status is 0 iff every enabled certification passes, 1 if one fails,
2 for an invalid configuration or problem.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import config, report, runner, scenarios, selftest, solver
from .errors import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _finish(results: dict, out_dir: str, quiet: bool) -> int:
    paths = report.emit_report(results, out_dir)
    if not quiet:
        for w in results.get("warnings", []):
            print(f"warning: {w}", file=sys.stderr)
        for name, ok in sorted(results.get("certifications", {}).items()):
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        if "failure" in results:
            f = results["failure"]
            print(f"FAILED at {f['stage']}: {f['message']}", file=sys.stderr)
            for d in f.get("details", []):
                print(f"  {d}", file=sys.stderr)
        print(f"status: {results['status']}; wrote {len(paths)} files to {out_dir}")
    if "failure" in results:
        stage = results["failure"]["stage"]
        return EXIT_INVALID if stage in ("config", "validate") else EXIT_FAIL
    return EXIT_OK if results["status"] == "pass" else EXIT_FAIL


def _run_config(cfg, args) -> int:
    out = args.out or cfg.get("output", "dir") or "report"
    results = runner.execute(cfg, workers=args.workers, backend=args.backend)
    return _finish(results, out, args.quiet)


def cmd_run(args) -> int:
    try:
        cfg = config.load(args.config).with_overrides(args.override)
    except ConfigError as exc:
        return _config_failure(exc, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return _run_config(cfg, args)


def cmd_scenario(args) -> int:
    if args.show:
        print(scenarios.scenario_text(args.name), end="")
        return EXIT_OK
    try:
        cfg = scenarios.scenario_config(args.name, args.override)
    except ConfigError as exc:
        return _config_failure(exc, args)
    return _run_config(cfg, args)


def _config_failure(exc, args) -> int:
    results = {"status": "fail", "certifications": {}, "warnings": [],
               "failure": {"stage": "config", "message": str(exc), "details": []}}
    if args.out:
        report.emit_report(results, args.out)
    print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


def cmd_selftest(args) -> int:
    names = args.suite or list(selftest.SUITES)
    unknown = [n for n in names if n not in selftest.SUITES]
    if unknown:
        print(f"error: unknown suites {unknown}; have {sorted(selftest.SUITES)}", file=sys.stderr)
        return EXIT_INVALID
    ok = True
    for name in names:
        res = selftest.SUITES[name]()
        print(res.line())
        ok = ok and res.passed
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakhyp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="replace one config value (repeatable)")
        sp.add_argument("--out", help="report directory (default: output.dir)")
        sp.add_argument("--workers", type=int, default=None,
                        help="sweep threads (default: WEAKHYP_WORKERS or available CPUs)")
        sp.add_argument("--backend", choices=sorted(solver.BACKENDS), default=None)
        sp.add_argument("-q", "--quiet", action="store_true")

    r = sub.add_parser("run", help="run a config file")
    r.add_argument("config")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scenario", help="run a built-in scenario")
    s.add_argument("name", choices=sorted(scenarios.SCENARIOS))
    s.add_argument("--show", action="store_true", help="print the scenario config and exit")
    common(s)
    s.set_defaults(func=cmd_scenario)

    t = sub.add_parser("selftest", help="run the property suites")
    t.add_argument("suite", nargs="*", help=f"subset of {sorted(selftest.SUITES)}")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
