"""Run configuration: INI text with named sections, no programmable expressions.

Coefficients are built from the registry by name with keyword parameters::

    [coefficients]
    a = t_power(power=2)
    b = abs_kink(center=0.5, power=0.5, offset=4)
    ab = product(a, b)

Principal and lower terms map ``j:gamma`` keys to coefficient names.  gamma
is a comma separated multi-index, or ``|k|`` for the radial power |xi|^k.
An optional numeric factor may precede the name (``-1 * ab``).
"""
from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass

from .errors import ConfigError
from .problem import REGISTRY, ProblemSpec, radial_power

SECTIONS = ("run", "problem", "coefficients", "principal", "lower", "data", "sweep", "energy", "output")

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$")
_TERM = re.compile(r"^\s*(?:([-+]?[0-9.eE+-]+)\s*\*\s*)?([A-Za-z_]\w*)\s*$")


@dataclass(frozen=True)
class RunConfig:
    """Normalized section -> key -> value text."""

    sections: tuple

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(tuple((s, tuple(sorted((k, str(v).strip()) for k, v in d[s].items())))
                         for s in SECTIONS if s in d))

    def as_dict(self) -> dict:
        return {s: dict(kv) for s, kv in self.sections}

    def get(self, section: str, key: str, default=None):
        return self.as_dict().get(section, {}).get(key, default)

    def section(self, section: str) -> dict:
        return self.as_dict().get(section, {})

    def with_overrides(self, overrides) -> "RunConfig":
        """Apply ``section.key=value`` strings."""
        d = self.as_dict()
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            lhs, value = item.split("=", 1)
            sec, key = lhs.strip().split(".", 1)
            if sec not in SECTIONS:
                raise ConfigError(f"unknown section {sec!r}")
            d.setdefault(sec, {})[key.strip()] = value.strip()
        return RunConfig.from_dict(d)

    # typed access
    def number(self, section, key, default=None) -> float:
        v = self.get(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing {section}.{key}")
            return default
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{section}.{key} = {v!r} is not a number") from None

    def integer(self, section, key, default=None) -> int:
        v = self.number(section, key, default)
        if v != int(v):
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(v)

    def flag(self, section, key, default=False) -> bool:
        v = self.get(section, key)
        if v is None:
            return default
        low = v.lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ConfigError(f"{section}.{key} = {v!r} is not a yes/no flag")

    def numbers(self, section, key, default=()) -> tuple:
        v = self.get(section, key)
        if v is None:
            return tuple(default)
        try:
            return tuple(float(x) for x in v.split(",") if x.strip())
        except ValueError:
            raise ConfigError(f"{section}.{key} = {v!r} is not a number list") from None


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, delimiters=("=",), inline_comment_prefixes=("#",))
    p.optionxform = str  # keys are case sensitive
    return p


def parse(text: str) -> RunConfig:
    p = _parser()
    try:
        p.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    unknown = [s for s in p.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown sections {unknown}")
    return RunConfig.from_dict({s: dict(p[s]) for s in p.sections()})


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def emit(cfg: RunConfig) -> str:
    out = io.StringIO()
    for sec, kv in cfg.sections:
        out.write(f"[{sec}]\n")
        for k, v in kv:
            out.write(f"{k} = {v}\n")
        out.write("\n")
    return out.getvalue()


# -- spec construction ----------------------------------------------------

def _split_args(text: str) -> list[str]:
    return [a.strip() for a in text.split(",") if a.strip()]


def build_coefficients(section: dict) -> dict:
    """Resolve registry calls and sum/product combinations, in any order."""
    defs = dict(section)
    out: dict = {}

    def resolve(name, stack=()):
        if name in out:
            return out[name]
        if name not in defs:
            raise ConfigError(f"coefficient {name!r} is not defined")
        if name in stack:
            raise ConfigError(f"coefficient {name!r} is defined in terms of itself")
        m = _CALL.match(defs[name])
        if not m:
            raise ConfigError(f"coefficient {name} = {defs[name]!r} is not a registry call")
        fn, args = m.group(1), _split_args(m.group(2))
        if fn in ("sum", "product"):
            if not args:
                raise ConfigError(f"{fn} needs at least one argument")
            parts = [resolve(a, stack + (name,)) for a in args]
            acc = parts[0]
            for p in parts[1:]:
                acc = acc + p if fn == "sum" else acc * p
            out[name] = acc
            return acc
        if fn not in REGISTRY:
            raise ConfigError(f"unknown registry function {fn!r}; have {sorted(REGISTRY)}")
        kwargs = {}
        for a in args:
            if "=" not in a:
                raise ConfigError(f"registry arguments must be key=value, got {a!r}")
            k, v = a.split("=", 1)
            try:
                kwargs[k.strip()] = float(v)
            except ValueError:
                raise ConfigError(f"argument {a!r} is not numeric") from None
        try:
            out[name] = REGISTRY[fn](**kwargs)
        except TypeError as exc:
            raise ConfigError(f"{fn}: {exc}") from None
        return out[name]

    for n in defs:
        resolve(n)
    return out


def _parse_terms(section: dict, coeffs: dict, n: int) -> dict:
    terms: dict = {}
    for key, value in section.items():
        if ":" not in key:
            raise ConfigError(f"term key {key!r} must look like j:gamma")
        j_text, g_text = key.split(":", 1)
        try:
            j = int(j_text)
        except ValueError:
            raise ConfigError(f"term key {key!r}: j must be an integer") from None
        m = _TERM.match(value)
        if not m:
            raise ConfigError(f"term {key} = {value!r} must be [factor *] name")
        factor = float(m.group(1)) if m.group(1) else 1.0
        name = m.group(2)
        if name not in coeffs:
            raise ConfigError(f"coefficient {name!r} is not defined")
        coef = coeffs[name] if factor == 1.0 else coeffs[name] * factor
        g_text = g_text.strip()
        if g_text.startswith("|") and g_text.endswith("|"):
            k = int(g_text[1:-1])
            if k % 2:
                raise ConfigError("radial powers |xi|^k need even k")
            expanded = {gamma: coef * float(c) if c != 1 else coef
                        for gamma, c in radial_power(n, k // 2).items()}
        else:
            try:
                gamma = tuple(int(x) for x in g_text.split(","))
            except ValueError:
                raise ConfigError(f"multi-index {g_text!r} is not a list of integers") from None
            if len(gamma) != n:
                raise ConfigError(f"multi-index {gamma} does not have n = {n} entries")
            expanded = {gamma: coef}
        for gamma, c in expanded.items():
            k2 = (j, gamma)
            terms[k2] = terms[k2] + c if k2 in terms else c
    return terms


def build_spec(cfg: RunConfig) -> ProblemSpec:
    m = cfg.integer("problem", "m")
    l = cfg.integer("problem", "l", 0)
    n = cfg.integer("problem", "n", 1)
    T = cfg.number("problem", "T", 1.0)
    if not (math.isfinite(T) and T > 0):
        raise ConfigError("problem.T must be positive")
    coeffs = build_coefficients(cfg.section("coefficients"))
    principal = _parse_terms(cfg.section("principal"), coeffs, n)
    lower = _parse_terms(cfg.section("lower"), coeffs, n)
    return ProblemSpec(m=m, l=l, n=n, T=T, principal=principal, lower=lower,
                       label=cfg.get("run", "scenario", "custom"))
