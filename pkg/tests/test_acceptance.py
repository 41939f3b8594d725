"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.  The lines bypass pytest's output
capture so they show up in a normal ``pytest -v`` run.
"""

from __future__ import annotations

import math
import sys
import warnings

import numpy as np
import pytest

from cmolip.approximation import approx_error, build_vertex_maps, mollify, plan_scales
from cmolip.cube_interp import (WeightedCube, gradient_bound_check, interp_core, interpolate,
                                restrict_to_face)
from cmolip.grid import Cube, GridFunction, make_dyadic_family, unit_cube, vertex_bits
from cmolip.harness import (annulus_upper_decay, build_median_sets, fk_compactness_probe,
                            lower_bound_ratio)
from cmolip.operators import CommutatorSpec, KernelSpec, apply_commutator_m, apply_T, weighted_lp_norm
from cmolip.oscillation import cmo_profile, lip_alpha_norm, osc_alpha, osc_alpha_inf
from cmolip.presets import function_from_spec, kernel_from_spec, weight_from_spec
from cmolip.weights import (WeightSpec, ap_constant, doubling_check, full_family, paired_q,
                            refinement_sweep, reverse_holder_check)


@pytest.fixture
def emit(capsys):
    def _emit(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return _emit


# ---------------------------------------------------------------------------


def test_01_dilation_invariant_oscillation(emit):
    worst_err = 0.0
    worst_spread = 0.0
    for alpha in (0.25, 0.5, 0.75):
        exact = 1 / (2**alpha * (alpha + 1))
        vals = []
        for e in range(-3, 4):
            Q = unit_cube(1).scaled(2.0**e)
            f = function_from_spec(f"sgnpow:{alpha}", Q, 4096)
            vals.append(osc_alpha(f, Q, alpha))
        worst_err = max(worst_err, max(abs(v / exact - 1) for v in vals))
        worst_spread = max(worst_spread, (max(vals) - min(vals)) / min(vals))
    ok = worst_err <= 0.01 and worst_spread <= 0.01
    emit(1, ok, f"max relative error {worst_err:.2e}, max spread over dilations {worst_spread:.2e} (tol 1e-2)")


def test_02_cmo_profile_dichotomy(emit):
    alpha = 0.25
    dom = Cube((0.0,), 64.0)
    res = 8192
    h = dom.side / res
    halvings = [2.0**-j for j in range(0, 7)]
    fine = [2.0**-j for j in range(0, 16) if 2.0**-j >= 2 * h]
    large = [2.0**j for j in range(0, 6)]
    dist = [1.0, 2.0, 4.0, 8.0]

    s = function_from_spec(f"sgnpow:{alpha}", dom, res)
    ps = cmo_profile(s, alpha, halvings, dist, large)
    s_curve = [v for _, v in ps.small_scale]
    s_ok = min(s_curve) >= 0.9 * s_curve[0]

    b = function_from_spec("bump", dom, res)
    pb = cmo_profile(b, alpha, fine, dist, large)
    b_ok = all(pb.verdict)
    ends = [f"{c[0][1]:.3g}->{c[-1][1]:.3g}" for c in (pb.small_scale, pb.large_scale, pb.far_away)]
    emit(2, s_ok and b_ok,
         f"sgnpow small-scale min/initial {min(s_curve) / s_curve[0]:.3f} (need >= 0.9); "
         f"bump verdict {pb.verdict}, curve endpoints {', '.join(ends)} (need >= 10x decay)")


def test_03_weighted_cube_interpolant(emit):
    rng = np.random.default_rng(3)
    vert = pou = face = 0.0
    grad_fail = 0
    for n in (1, 2):
        bits = vertex_bits(n)
        for _ in range(200):
            Q = Cube(tuple(rng.uniform(-2, 2, n)), float(rng.uniform(0.1, 3)))
            wq = WeightedCube(Q, rng.normal(size=2**n))
            vert = max(vert, float(np.abs(interp_core(Q.lo, Q.hi, wq.psi, Q.vertices()) - wq.psi).max()))
            x = Q.lo + rng.uniform(size=(20, n)) * Q.side
            basis = sum(interp_core(Q.lo, Q.hi, np.eye(2**n)[k], x) for k in range(len(bits)))
            pou = max(pou, float(np.abs(basis - 1).max()))
        for _ in range(100):
            Q = Cube(tuple(rng.uniform(-2, 2, n)), float(rng.uniform(0.1, 3)))
            wq = WeightedCube(Q, rng.normal(size=2**n))
            axis = int(rng.integers(n))
            upper = bool(rng.integers(2))
            x = Q.lo + rng.uniform(size=n) * Q.side
            x[axis] = Q.hi[axis] if upper else Q.lo[axis]
            sub = restrict_to_face(wq, axis, upper)
            full = interpolate(wq, x)
            part = sub if n == 1 else interpolate(sub, np.delete(x, axis))
            face = max(face, abs(full - part))
    for _ in range(1000):
        n = int(rng.integers(1, 3))
        Q = Cube(tuple(rng.uniform(-2, 2, n)), float(rng.uniform(0.1, 3)))
        rep = gradient_bound_check(WeightedCube(Q, rng.normal(size=2**n) * rng.uniform(0.01, 10)),
                                   samples=9, fd_error_budget=1e-4)
        grad_fail += not rep.ok
    ok = vert <= 1e-12 and pou <= 1e-12 and face <= 1e-10 and grad_fail == 0
    emit(3, ok, f"vertex {vert:.1e}, partition of unity {pou:.1e}, face {face:.1e}, "
                f"gradient failures {grad_fail}/1000")


def test_04_constructive_approximation(emit):
    alpha = 0.5
    f = function_from_spec("bump", Cube((0.0,), 2.0), 8192)
    fam = make_dyadic_family(f.domain, 0, 13)
    ratios = []
    moll_ok = True
    rows = []
    for eps in (0.2, 0.1, 0.05, 0.025):
        plan = plan_scales(f, alpha, eps)
        g = build_vertex_maps(f, plan)
        err = approx_error(f, g, alpha, fam)
        ratios.append(err / eps)
        t = 2 * f.cell_size
        h = mollify(g, t, f)
        lg = lip_alpha_norm(GridFunction(f.domain, f.values - g.sample(f).values), alpha)
        lh = lip_alpha_norm(GridFunction(f.domain, f.values - h.values), alpha)
        moll_ok &= lh <= 3 * lg
        rows.append(f"eps={eps}: err/eps={err / eps:.3g}, Lip(f-h)/Lip(f-g)={lh / lg:.3g}")
    band = max(ratios) / min(ratios)
    emit(4, band <= 2 and moll_ok,
         f"err/eps band {band:.3g} (need <= 2), mollified within 3x: {moll_ok}; " + "; ".join(rows))


def test_05_alpha_one_degeneracy(emit):
    dom = Cube((0.0,), 8.0)
    res = 1024
    presets = ["const:0.3", "linear", "sgnpow:1", "lacunary", "lacunary:0.5",
               "bump", "bump:0.1", "bump:0.01", "bump:0.001", "bump:0.0001"]
    small = [2.0**-j for j in range(0, 7)]
    large = [2.0**j for j in range(-1, 3)]
    dist = [1.0, 2.0, 3.0]
    checked = violations = 0
    for spec in presets:
        f = function_from_spec(spec, dom, res)
        prof = cmo_profile(f, 1.0, small, dist, large)
        lip = lip_alpha_norm(f, 1.0)
        for eps in (0.1, 0.01, 0.001):
            if prof.holds_at(eps):
                checked += 1
                violations += lip > 10 * eps
    emit(5, checked > 0 and violations == 0,
         f"{checked} (preset, eps) pairs pass the profile at alpha=1, violations {violations}")


def test_06_sandwich(emit):
    rng = np.random.default_rng(6)
    worst = -math.inf
    draws = 0
    while draws < 10_000:
        n = int(rng.integers(1, 3))
        res = int(rng.choice([8, 16, 32]))
        dom = Cube((0.0,) * n, 1.0)
        kind = rng.integers(3)
        shape = (res,) * n
        if kind == 0:
            vals = rng.normal(size=shape)
        elif kind == 1:
            vals = rng.integers(-2, 3, size=shape).astype(float)
        else:
            vals = np.cumsum(rng.standard_cauchy(size=shape), axis=0)
        f = GridFunction(dom, vals)
        side = float(rng.uniform(2.0 / res, 1.0))
        c = rng.uniform(-0.5 + side / 2, 0.5 - side / 2, n)
        Q = Cube(tuple(c), side)
        if not f.cell_mask(Q).any():
            continue
        alpha = float(rng.uniform(0, 1))
        o = osc_alpha(f, Q, alpha)
        oi = osc_alpha_inf(f, Q, alpha)
        worst = max(worst, oi - o, o - 2 * oi)
        draws += 1
    emit(6, worst <= 1e-9, f"largest sandwich violation {worst:.2e} over {draws} draws (slack 1e-9)")


def test_07_operator_oracles(emit):
    chi = GridFunction.from_function(lambda x: (np.abs(x) <= 1).astype(float), Cube((0.0,), 8.0), 4096)
    t_val = float(apply_T(KernelSpec.sgn(1), chi, points=[2.0])[0])
    e1 = abs(t_val / math.log(3) - 1)
    chi01 = GridFunction.from_function(lambda x: ((x >= 0) & (x <= 1)).astype(float), Cube((0.5,), 4.0), 4096)
    i_val = float(apply_T(KernelSpec.riesz(0.5, 1), chi01, points=[0.0])[0])
    e2 = abs(i_val / 2 - 1)
    dom = Cube((0.0,), 8.0)
    f = GridFunction.from_function(lambda x: np.exp(-x**2) * (1 + 0.3 * np.sin(3 * x)), dom, 4096)
    b = GridFunction.from_function(lambda x: x, dom, 4096)
    g1 = apply_commutator_m(CommutatorSpec(KernelSpec.sgn(1), b, 1), f)
    e3 = float(np.abs(g1.values - f.integral()).max() / abs(f.integral()))
    g2 = apply_commutator_m(CommutatorSpec(KernelSpec.sgn(1), b, 2), f)
    expect = b.values * f.integral() - GridFunction(dom, b.values * f.values).integral()
    e4 = float(np.abs(g2.values - expect).max() / np.abs(expect).max())
    ok = e1 <= 0.02 and e2 <= 0.05 and e3 <= 1e-6 and e4 <= 0.02
    emit(7, ok, f"log 3 rel err {e1:.1e}, I_1/2 rel err {e2:.1e}, m=1 collapse {e3:.1e}, m=2 collapse {e4:.1e}")


def test_08_median_construction(emit):
    cases = [(1, "sgnpow:0.5", "sgn"), (1, "bump", "sgn"), (1, "lacunary", "sgn"), (1, "linear", "sgn"),
             (1, "bump", "riesz:0.5"), (2, "linear", "cos"), (2, "bump", "cos"), (2, "sgnpow:0.5", "cos")]
    failures = pairs = runs = 0
    for n, bs, ks in cases:
        res = 1024 if n == 1 else 256
        dom = Cube((0.0,) * n, 8.0)
        b = function_from_spec(bs, dom, res)
        k = kernel_from_spec(ks, n)
        for c, s in ((0.0, 0.25), (0.3, 0.125), (-0.5, 0.25), (0.1, 0.0625)):
            mc = build_median_sets(b, k, Cube((c,) * n, s), 0.25)
            failures += mc.failures
            pairs += mc.pairs_checked
            runs += 1
    emit(8, failures == 0, f"{runs} constructions, {pairs} sampled pairs, {failures} failures")


def _ratio_sweep(n, bs, ks, ws, p, alpha, res, L, seed=0):
    dom = Cube((0.0,) * n, L)
    b = function_from_spec(bs, dom, res)
    k = kernel_from_spec(ks, n)
    w = weight_from_spec(ws, dom, res)
    W = WeightSpec(w, p, paired_q(p, 1, alpha, k.beta, n))
    rng = np.random.default_rng(seed)
    out = []
    for i in range(20):
        side = 2.0 ** -(1 + i % 4)
        c = np.round(rng.uniform(-1, 1, n) / b.cell_size) * b.cell_size
        r = lower_bound_ratio(b, k, W, Cube(tuple(c), side), 1, alpha)
        if not r.degenerate:
            out.append(r.ratio)
    return np.array(out)


def test_09_lower_bound_uniformity(emit):
    cases = [(1, "sgnpow:0.5", "sgn", "one", 1.5, 2048), (1, "linear", "sgn", "one", 1.5, 2048),
             (1, "lacunary", "sgn", "one", 1.5, 2048), (2, "linear", "cos", "one", 4 / 3, 256)]
    ok = True
    parts = []
    for n, bs, ks, ws, p, res in cases:
        r = _ratio_sweep(n, bs, ks, ws, p, 0.5, res, 16.0)
        spread = float(r.min() / r.max())
        ok &= bool(np.all(r > 0)) and spread >= 0.1
        parts.append(f"{n}d {bs}/{ks}: min/max {spread:.3f}")
    emit(9, ok, "; ".join(parts) + " (need > 0 and >= 0.1)")


def test_10_annulus_decay(emit):
    dom = Cube((0.0,), 64.0)
    res = 4096
    alpha, p = 0.5, 1.5
    Q = Cube((0.0,), 1 / 16)
    w = weight_from_spec("one", dom, res)
    ok = True
    parts = []
    for ks in ("sgn", "riesz:0.1"):
        k = kernel_from_spec(ks, 1)
        W = WeightSpec(w, p, paired_q(p, 1, alpha, k.beta, 1))
        for bs in ("bump", "lacunary", "sgnpow:0.5"):
            b = function_from_spec(bs, dom, res)
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                r = annulus_upper_decay(b, k, W, Q, 1, alpha, range(3, 8))
            ok &= r.slope is not None and r.slope < -0.2
            parts.append(f"{bs}/{ks} {r.slope:.3f}")
    emit(10, ok, "slopes " + ", ".join(parts) + " (need < -0.2)")


def _fk_modulus(bs):
    dom = Cube((0.0,), 16.0)
    res = 2048
    p, q = 1.5, 6.0
    b = function_from_spec(bs, dom, res)
    x = b.points()[..., 0]
    ball = []
    for lev in range(7):
        ind = GridFunction(dom, (np.abs(x) < 2.0**-lev / 2).astype(float))
        ball.append(GridFunction(dom, ind.values / weighted_lp_norm(ind, None, p)))
    r = fk_compactness_probe(CommutatorSpec(KernelSpec.sgn(1), b, 1), None, p, q, ball,
                             [1, 2, 4], [2.0**-j for j in range(1, 8)])
    return [r.modulus[k] for k in sorted(r.modulus, reverse=True)]


def test_11_fk_signature(emit):
    mb = _fk_modulus("bump")
    ms = _fk_modulus("sgnpow:0.5")
    decay = mb[0] / mb[-1]
    floor = min(ms) / ms[0]
    emit(11, decay >= 10 and floor >= 0.3,
         f"bump modulus decay {decay:.3g}x (need >= 10), sgnpow floor {floor:.3f} of initial (need >= 0.3)")


def test_12_weights(emit):
    dom = Cube((0.0,), 2.0)
    c = GridFunction.constant(3.7, dom, 1024)
    ap1 = ap_constant(WeightSpec(c, 2.0), full_family(c))
    const_ok = abs(ap1 - 1) <= 1e-9
    bounded = refinement_sweep(0.5, 2.0)
    steps = np.diff(bounded)
    bounded_ok = bounded[-1] / bounded[0] < 1.1 and bool(np.all(steps[1:] < steps[:-1]))
    blow = refinement_sweep(1.25, 2.0)
    blow_ok = blow[-1] / blow[0] >= 10
    rng = np.random.default_rng(12)
    dbl_fail = rh_fail = 0
    for ws in ("one", "pow:0.5", "pow:-0.5"):
        w = weight_from_spec(ws, dom, 1024)
        spec = WeightSpec(w, 2.0)
        ap = ap_constant(spec, full_family(w))
        for _ in range(1000):
            side = rng.uniform(4 * w.cell_size, dom.side / 4)
            half = side
            Q = Cube((float(rng.uniform(-1 + half, 1 - half)),), side)
            dbl_fail += not doubling_check(spec, Q, 2.0, ap=ap).ok
            rh_fail += not reverse_holder_check(spec, Q, 0.1).ok
    ok = const_ok and bounded_ok and blow_ok and dbl_fail == 0 and rh_fail == 0
    emit(12, ok, f"A_2(const) - 1 = {ap1 - 1:.1e}; gamma=0.5 growth {bounded[-1] / bounded[0]:.3f}x; "
                 f"gamma=1.25 growth {blow[-1] / blow[0]:.2f}x (need >= 10); "
                 f"doubling failures {dbl_fail}, reverse Hoelder failures {rh_fail} of 3000")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
