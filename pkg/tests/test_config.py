import numpy as np
import pytest

from weakhyp import config, scenarios
from weakhyp.errors import ConfigError
from weakhyp.problem import principal_symbol


@pytest.mark.parametrize("name", sorted(scenarios.SCENARIOS))
def test_round_trip(name):
    cfg = config.parse(scenarios.scenario_text(name))
    assert config.parse(config.emit(cfg)) == cfg


def test_overrides():
    cfg = scenarios.scenario_config("example1", ["sweep.count=8", "energy.kappa = 4"])
    assert cfg.integer("sweep", "count") == 8
    assert cfg.number("energy", "kappa") == 4.0
    for bad in (["count=8"], ["nosuch.key=1"], ["sweep.count"]):
        with pytest.raises(ConfigError):
            scenarios.scenario_config("example1", bad)


def test_unknown_scenario_and_section():
    with pytest.raises(ConfigError):
        scenarios.scenario_text("example9")
    with pytest.raises(ConfigError):
        config.parse("[bogus]\nx = 1\n")


def test_typed_access_errors():
    cfg = config.parse("[run]\ntol = abc\nflag = maybe\n[sweep]\ncount = 2.5\n")
    with pytest.raises(ConfigError):
        cfg.number("run", "tol")
    with pytest.raises(ConfigError):
        cfg.flag("run", "flag")
    with pytest.raises(ConfigError):
        cfg.integer("sweep", "count")
    with pytest.raises(ConfigError):
        cfg.number("run", "missing")
    assert cfg.numbers("run", "absent", (1, 2)) == (1, 2)


def test_example2_spec_from_config():
    spec = config.build_spec(scenarios.scenario_config("example2"))
    xi = np.array([2.0])
    t = 0.3
    a, b = t * t, 4 + abs(t - 0.5) ** 0.5
    for tau in (0.5, 1.7, -3.0):
        want = (tau ** 2 - a * 4) * (tau ** 2 - b * 4)
        assert principal_symbol(spec, t, xi, tau) == pytest.approx(want, rel=1e-12)


def test_multi_index_keys():
    text = scenarios.scenario_text("custom").replace("0:|2| = c", "0:2,0 = c\n0:0,2 = c")
    cfg = config.parse(text).with_overrides(["problem.n=2"])
    spec = config.build_spec(cfg)
    assert set(spec.principal) == {(0, (2, 0)), (0, (0, 2))}


@pytest.mark.parametrize("coeffs, err", [
    ("a = t_power(power=2)\nb = sum(a, zz)", "not defined"),
    ("a = sum(a)", "itself"),
    ("a = sqrt(power=2)", "unknown registry"),
    ("a = t_power(2)", "key=value"),
    ("a = t_power(power=x)", "not numeric"),
    ("a = t_power(size=2)", "t_power"),
    ("a = 3", "registry call"),
])
def test_coefficient_errors(coeffs, err):
    with pytest.raises(ConfigError, match=err):
        config.build_coefficients(dict(line.split(" = ", 1) for line in coeffs.splitlines()))


def test_term_errors():
    coeffs = {"c": config.build_coefficients({"c": "constant(value=1)"})["c"]}
    for section in ({"x": "c"}, {"0:|3|": "c"}, {"0:|2|": "d"}, {"0:1,1": "c"}, {"0:|2|": "2 ** c"}):
        with pytest.raises(ConfigError):
            config._parse_terms(section, coeffs, 1)
