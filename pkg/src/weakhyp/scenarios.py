"""Built-in run configurations.

``example1`` is the third order operator tau^3 - t^2 |xi|^2 tau with a
constant zeroth order term, on a short horizon at high frequency.
``example2`` is (tau^2 - t^2 |xi|^2)(tau^2 - b(t) |xi|^2) with a square-root
kink in b.  ``case3`` is a strictly hyperbolic wave operator with a Hölder
1/2 speed.  ``example1-growth`` feeds exponentially growing data at the
endpoint index.  ``custom`` is a template to copy and edit.
"""
from __future__ import annotations

from .config import RunConfig, parse
from .errors import ConfigError

EXAMPLE1 = """\
[run]
scenario = example1
tol = 1e-10

[problem]
m = 3
l = 0
n = 1
T = 0.002

[coefficients]
a = t_power(power=2)
one = constant(value=1)

[principal]
1:|2| = a

[lower]
0:0 = one

[data]
kind = decay
delta = 1
components = all

[sweep]
k_min = 20
k_max = 30
count = 200
n_out = 256

[energy]
s_test = midpoint
kappa = 1
kappa_ladder = 0, 1, 4, 16
rho0 = auto
rate_fits = yes
monotonicity = yes

[output]
dir = report-example1
"""

EXAMPLE2 = """\
[run]
scenario = example2
tol = 1e-10

[problem]
m = 4
l = 0
n = 1
T = 1

[coefficients]
a = t_power(power=2)
b = abs_kink(center=0.5, power=0.5, offset=4)
apb = sum(a, b)
ab = product(a, b)

[principal]
2:|2| = apb
0:|4| = -1 * ab

[data]
kind = decay
delta = 1
components = first

[sweep]
k_min = 4
k_max = 10
count = 64
n_out = 256

[energy]
s_test = midpoint
kappa = 1
kappa_ladder = 0, 1, 4, 16
rho0 = auto
rate_fits = yes
monotonicity = yes

[output]
dir = report-example2
"""

CASE3 = """\
[run]
scenario = case3
tol = 1e-10

[problem]
m = 2
l = 0
n = 1
T = 1

[coefficients]
c = abs_kink(center=0.5, power=0.5, scale=0.5, offset=1)

[principal]
0:|2| = c

[data]
kind = decay
delta = 1
components = all

[sweep]
k_min = 4
k_max = 10
count = 64
n_out = 256

[energy]
s_test = midpoint
kappa = 1
kappa_ladder = 0, 1, 4, 16
rho0 = auto
rate_fits = yes
monotonicity = yes

[output]
dir = report-case3
"""

EXAMPLE1_GROWTH = """\
[run]
scenario = example1-growth
tol = 1e-10

[problem]
m = 3
l = 0
n = 1
T = 1

[coefficients]
a = t_power(power=2)
one = constant(value=1)

[principal]
1:|2| = a

[lower]
0:0 = one

[data]
kind = growth
delta = 1
components = all

[sweep]
k_min = 4
k_max = 10
count = 64
n_out = 256

[energy]
s_test = endpoint
kappa = ladder
kappa_ladder = 1, 4, 16, 64
rho0 = auto
rate_fits = no
monotonicity = yes

[output]
dir = report-example1-growth
"""

CUSTOM = """\
[run]
scenario = custom
tol = 1e-8

[problem]
m = 2
l = 0
n = 1
T = 1

[coefficients]
c = smooth_step(center=0.5, width=0.2, scale=1, offset=1)

[principal]
0:|2| = c

[data]
kind = decay
delta = 1
components = all

[sweep]
k_min = 3
k_max = 8
count = 24
n_out = 128

[energy]
s_test = 2
kappa = 1
kappa_ladder = 0, 1, 4
rho0 = auto
rate_fits = no
monotonicity = yes

[output]
dir = report-custom
"""

SCENARIOS = {
    "example1": EXAMPLE1,
    "example2": EXAMPLE2,
    "case3": CASE3,
    "example1-growth": EXAMPLE1_GROWTH,
    "custom": CUSTOM,
}


def scenario_text(name: str) -> str:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; have {sorted(SCENARIOS)}") from None


def scenario_config(name: str, overrides=()) -> RunConfig:
    return parse(scenario_text(name)).with_overrides(overrides)
