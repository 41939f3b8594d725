"""Approximate a bump by a piecewise multilinear function and smooth it.

Prints the scale indices chosen for each tolerance, the resulting oscillation
error, and the Holder seminorm of the error before and after mollification.
"""

from cmolip.approximation import approx_error, build_vertex_maps, mollify, plan_scales
from cmolip.grid import Cube, GridFunction, make_dyadic_family
from cmolip.oscillation import lip_alpha_norm
from cmolip.presets import function_from_spec

alpha = 0.5
f = function_from_spec("bump", Cube((0.0,), 2.0), 8192)
family = make_dyadic_family(f.domain, 0, 13)
print(" eps    i   j   k  d1  d2     error   Lip(f-g)   Lip(f-h)")
for eps in (0.2, 0.1, 0.05, 0.025):
    plan = plan_scales(f, alpha, eps)
    g = build_vertex_maps(f, plan)
    err = approx_error(f, g, alpha, family)
    h = mollify(g, 2 * f.cell_size, f)
    lg = lip_alpha_norm(GridFunction(f.domain, f.values - g.sample(f).values), alpha)
    lh = lip_alpha_norm(GridFunction(f.domain, f.values - h.values), alpha)
    print(f"{eps:5.3f} {plan.i_eps:4d}{plan.j_eps:4d}{plan.k_eps:4d}{plan.d1:4d}{plan.d2:4d}"
          f"  {err:9.3g}  {lg:9.3g}  {lh:9.3g}")
