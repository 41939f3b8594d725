"""Vanishing versus non-vanishing oscillation.

A power-type symbol keeps the same normalized oscillation at every scale,
while a smooth bump loses it at small scales, at large scales and far away.
"""

from cmolip.grid import Cube, unit_cube
from cmolip.oscillation import cmo_profile, osc_alpha
from cmolip.presets import function_from_spec

alpha = 0.25
print("O_alpha(sgn|x|^alpha) on dilations of the unit cube")
for e in range(-3, 4):
    Q = unit_cube(1).scaled(2.0**e)
    f = function_from_spec(f"sgnpow:{alpha}", Q, 4096)
    print(f"  side 2^{e:+d}: {osc_alpha(f, Q, alpha):.6f}")
print(f"  closed form: {1 / (2**alpha * (alpha + 1)):.6f}")

dom = Cube((0.0,), 64.0)
small = [2.0**-j for j in range(0, 7)]
large = [2.0**j for j in range(0, 6)]
for name in (f"sgnpow:{alpha}", "bump"):
    f = function_from_spec(name, dom, 8192)
    prof = cmo_profile(f, alpha, small, [1, 2, 4, 8], large)
    print(f"\n{name}: verdict {prof.verdict_json()}")
    for cond, param, val in prof.rows():
        print(f"  {cond:12s} {param:10.5g} {val:.4g}")
