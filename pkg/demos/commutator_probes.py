"""Lower bounds, annulus decay and the compactness signature for commutators."""

import warnings

import numpy as np

from cmolip.grid import Cube, GridFunction
from cmolip.harness import annulus_upper_decay, fk_compactness_probe, lower_bound_ratio
from cmolip.operators import CommutatorSpec, KernelSpec, weighted_lp_norm
from cmolip.presets import function_from_spec
from cmolip.weights import WeightSpec

p, q, alpha = 1.5, 6.0, 0.5
kernel = KernelSpec.sgn(1)

dom = Cube((0.0,), 16.0)
w = WeightSpec(GridFunction.constant(1.0, dom, 2048), p, q)
b = function_from_spec("sgnpow:0.5", dom, 2048)
print("lower-bound ratio for sgn|x|^(1/2) on centered cubes")
for side in (0.5, 0.25, 0.125, 0.0625):
    r = lower_bound_ratio(b, kernel, w, Cube((0.0,), side), 1, alpha)
    print(f"  side {side:7.4f}: ratio {r.ratio:.4f}  (k0 = {r.details['k0']:.3f})")

dom = Cube((0.0,), 64.0)
w = WeightSpec(GridFunction.constant(1.0, dom, 4096), p, q)
print("\nannulus decay, Q = [-1/32, 1/32]")
for name in ("bump", "lacunary", "sgnpow:0.5"):
    b = function_from_spec(name, dom, 4096)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = annulus_upper_decay(b, kernel, w, Cube((0.0,), 1 / 16), 1, alpha, range(3, 8))
    print(f"  {name:11s} slope {r.slope:+.3f} bits/annulus")

dom = Cube((0.0,), 16.0)
print("\ntranslation modulus over a ball of concentrating indicators")
for name in ("bump", "sgnpow:0.5"):
    b = function_from_spec(name, dom, 2048)
    x = b.points()[..., 0]
    ball = []
    for lev in range(7):
        ind = GridFunction(dom, (np.abs(x) < 2.0**-lev / 2).astype(float))
        ball.append(GridFunction(dom, ind.values / weighted_lp_norm(ind, None, p)))
    r = fk_compactness_probe(CommutatorSpec(kernel, b, 1), None, p, q, ball, [1, 2, 4],
                             [2.0**-j for j in range(1, 8)])
    curve = "  ".join(f"{r.modulus[k]:.3g}" for k in sorted(r.modulus, reverse=True))
    print(f"  {name:11s} {curve}")
