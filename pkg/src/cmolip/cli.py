"""Command line entry point ``cmolip``.

Exit codes: 0 on success, 2 for invalid arguments, 3 when the computation
cannot be carried out on the requested grid.  Reports are JSON with sorted
keys; identical arguments (including ``--seed``) give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np
import scipy.fft

from . import __version__
from .approximation import approx_error, build_vertex_maps, mollify, plan_scales
from .errors import NumericError, ValidationError
from .grid import Cube, GridFunction, make_dyadic_family
from .harness import (annulus_upper_decay, build_median_sets, fk_compactness_probe,
                      lower_bound_ratio)
from .operators import CommutatorSpec, apply_commutator_m, truncate_kernel, weighted_lp_norm
from .oscillation import OscillationParams, bmo_alpha_norm, cmo_profile, lip_alpha_norm
from .presets import function_from_spec, kernel_from_spec, weight_from_spec
from .weights import (WeightSpec, ap_constant, apq_constant, doubling_check, full_family,
                      paired_q, reverse_holder_check)

# ---------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------


class UsageError(ValidationError):
    pass


def _domain(text: str, dim: int) -> Cube:
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise UsageError(f"--domain has {len(parts)} axes but --dim is {dim}")
    lo, hi = [], []
    for p in parts:
        ends = p.split("..")
        try:
            a, b = (float(v) for v in ends)
        except ValueError:
            raise UsageError(f"malformed domain axis {p!r}; use lo..hi") from None
        lo.append(a)
        hi.append(b)
    return Cube.from_bounds(lo, hi)


def _int_range(text: str) -> list[int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        return list(range(a, b + 1))
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected an integer range a..b or a list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _cube(text: str, dim: int) -> Cube:
    try:
        center, side = text.split(":")
        c = [float(v) for v in center.split(",")]
        s = float(side)
    except ValueError:
        raise UsageError(f"malformed cube {text!r}; use center[,center2]:side") from None
    if len(c) != dim:
        raise UsageError(f"cube center has {len(c)} coordinates, expected {dim}")
    return Cube(tuple(c), s)


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _dump(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _grid_meta(f: GridFunction) -> dict:
    return {"dim": f.dim, "domain": [[float(a), float(b)] for a, b in zip(f.lo, f.domain.hi)],
            "resolution": f.resolution, "outside": f.outside}


def _base(args, f: GridFunction | None = None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "command")}
    rep = {"tool": "cmolip", "version": __version__, "subcommand": args.command,
           "seed": args.seed, "params": params}
    if f is not None:
        rep["grid"] = _grid_meta(f)
    return rep


def _grid_args(args):
    return _domain(args.domain, args.dim), args.res


def _load(spec, args) -> GridFunction:
    dom, res = _grid_args(args)
    return function_from_spec(spec, dom, res)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------


def _family_for(f: GridFunction, levels: int | None):
    top = int(math.floor(math.log2(f.resolution))) if levels is None else levels
    while top > 0 and sum(2 ** (f.dim * k) for k in range(top + 1)) > 2_000_000:
        top -= 1
    return make_dyadic_family(f.domain, 0, top)


def cmd_osc_norm(args) -> dict:
    f = _load(args.f, args)
    fam = _family_for(f, args.levels)
    params = OscillationParams(args.alpha, fam)
    bmo = bmo_alpha_norm(f, params)
    lip = lip_alpha_norm(f, args.alpha, seed=args.seed)
    rep = _base(args, f)
    rep.update({"bmo_alpha": bmo, "lip_alpha": lip, "lip_over_bmo": lip / bmo if bmo > 0 else None,
                "family_levels": [fam.min_level, fam.max_level]})
    return rep


def _default_sides(f: GridFunction):
    side = f.domain.side
    small = [side * 2.0**-j for j in range(3, 10) if side * 2.0**-j >= 2 * f.cell_size]
    large = [side * 2.0**-j for j in (4, 3, 2, 1)]
    half = side / 2
    dist = [half * t for t in (1 / 8, 1 / 4, 3 / 8, 1 / 2)]
    return small, large, dist


def cmd_cmo_profile(args) -> dict:
    f = _load(args.f, args)
    small, large, dist = _default_sides(f)
    small = _float_list(args.small_sides) if args.small_sides else small
    large = _float_list(args.large_sides) if args.large_sides else large
    dist = _float_list(args.distances) if args.distances else dist
    n = f.dim
    prof = cmo_profile(f, args.alpha, [s**n for s in small], dist, [s**n for s in large])
    _write(args.out, prof.to_csv_text())
    rep = _base(args, f)
    rep.update({"verdict": prof.verdict_json(),
                "curves": {"small_scale": prof.small_scale, "large_scale": prof.large_scale,
                           "far_away": prof.far_away}})
    _write(args.verdict, _dump(rep))
    return rep


def cmd_approximate(args) -> dict:
    f = _load(args.input, args)
    if args.outside is not None:
        f = f.like(f.values, outside=args.outside)
    outs = args.out.split(",") if args.out else []
    if args.out and len(outs) != 3:
        raise UsageError("--out takes three paths: g.csv,h.csv,report.json")
    plan = plan_scales(f, args.alpha, args.eps, min_cells=args.min_cells)
    g = build_vertex_maps(f, plan)
    fam = _family_for(f, None)
    err = approx_error(f, g, args.alpha, fam)
    t = args.t if args.t is not None else 2 * f.cell_size
    h = mollify(g, t, f)
    gs = g.sample(f)
    rep = _base(args, f)
    rep.update({"i_eps": plan.i_eps, "j_eps": plan.j_eps, "k_eps": plan.k_eps, "d1": plan.d1,
                "d2": plan.d2, "A_d2": plan.offset_constant, "approx_error": err,
                "measured_C": err / args.eps, "t": t, "tail_certified": plan.tail_certified,
                "notes": list(plan.notes),
                "lip_alpha_f_minus_g": lip_alpha_norm(f - GridFunction(f.domain, gs.values), args.alpha,
                                                      seed=args.seed),
                "lip_alpha_f_minus_h": lip_alpha_norm(GridFunction(f.domain, f.values - h.values),
                                                      args.alpha, seed=args.seed)})
    if outs:
        _write(outs[0], GridFunction(f.domain, gs.values).to_csv_text())
        _write(outs[1], GridFunction(f.domain, h.values).to_csv_text())
        _write(outs[2], _dump(rep))
    return rep


def _kernel(args, n):
    k = kernel_from_spec(args.kernel, n)
    if getattr(args, "delta", 0.0):
        k = truncate_kernel(k, args.delta)
    return k


def cmd_commutator_apply(args) -> dict:
    b = _load(args.b, args)
    f = _load(args.f, args)
    k = _kernel(args, b.dim)
    g = apply_commutator_m(CommutatorSpec(k, b, args.m), f)
    _write(args.out, g.to_csv_text())
    rep = _base(args, b)
    rep.update({"l2_norm": weighted_lp_norm(g, None, 2.0), "max_abs": float(np.abs(g.values).max())})
    return rep


def _weight_setup(args, b: GridFunction, k):
    dom, res = _grid_args(args)
    w = weight_from_spec(args.weight, dom, res)
    q = paired_q(args.p, args.m, args.alpha, k.beta, b.dim)
    return WeightSpec(w, args.p, q), q


def cmd_verify_lower(args) -> dict:
    b = _load(args.b, args)
    k = _kernel(args, b.dim)
    ws, q = _weight_setup(args, b, k)
    Q = _cube(args.cube, b.dim)
    mc = build_median_sets(b, k, Q, args.gamma, seed=args.seed)
    r = lower_bound_ratio(b, k, ws, Q, args.m, args.alpha, gamma=args.gamma, seed=args.seed)
    rep = _base(args, b)
    rep.update({"q": q, "P": str(mc.P), "k0": mc.k0, "eps0": mc.eps0, "m_b": mc.m_b,
                "theta0": mc.theta0, "checks": mc.checks, "pairs_checked": mc.pairs_checked,
                "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "degenerate": r.degenerate})
    return rep


def cmd_verify_upper(args) -> dict:
    b = _load(args.b, args)
    k = _kernel(args, b.dim)
    ws, q = _weight_setup(args, b, k)
    Q = _cube(args.cube, b.dim)
    r = annulus_upper_decay(b, k, ws, Q, args.m, args.alpha, _int_range(args.d_range), eta0=args.eta0,
                            seed=args.seed)
    rep = _base(args, b)
    rep.update({"q": q, "d_values": r.d_values, "norms": r.norms, "slope": r.slope,
                "truncated": r.truncated})
    return rep


def cmd_compactness_probe(args) -> dict:
    b = _load(args.b, args)
    k = _kernel(args, b.dim)
    ws, q = _weight_setup(args, b, k)
    n = b.dim
    center = np.array(_float_list(args.ball_center) if args.ball_center else [0.0] * n)
    if center.size != n:
        raise UsageError("--ball-center needs one coordinate per axis")
    wp = ws.w.map(lambda v: v**args.p)
    pts = b.points()
    ball = []
    for lev in _int_range(args.ball_levels):
        s = 2.0**-lev
        inside = np.all(np.abs(pts - center) < s / 2, axis=-1)
        if not inside.any():
            raise UsageError(f"ball level {lev} holds no cell")
        ind = GridFunction(b.domain, inside.astype(float))
        ball.append(GridFunction(b.domain, ind.values / weighted_lp_norm(ind, wp, args.p)))
    r = fk_compactness_probe(CommutatorSpec(k, b, args.m), ws.w, args.p, q, ball,
                             _float_list(args.N_range), _float_list(args.rho_range))
    rep = _base(args, b)
    rep.update({"q": q, "bound": r.bound, "tail": [[k_, v] for k_, v in sorted(r.tail.items())],
                "modulus": [[k_, v] for k_, v in sorted(r.modulus.items())],
                "tail_monotone": r.tail_monotone, "modulus_monotone": r.modulus_monotone})
    return rep


def _random_cube(rng, dom: Cube, h: float, lam: float) -> Cube:
    n = dom.dim
    s = rng.uniform(4 * h, dom.side / (2 * lam))
    half = lam * s / 2
    c = [rng.uniform(lo + half, hi - half) for lo, hi in zip(dom.lo, dom.hi)]
    return Cube(tuple(c), s)


def cmd_weights_check(args) -> dict:
    dom, res = _grid_args(args)
    w = weight_from_spec(args.weight, dom, res)
    ws = WeightSpec(w, args.p, args.q)
    fam = full_family(w)
    ap = ap_constant(ws, fam)
    rng = np.random.default_rng(args.seed)
    dbl = rh = 0
    for _ in range(args.draws):
        Q = _random_cube(rng, w.domain, w.cell_size, args.lam)
        dbl += doubling_check(ws, Q, args.lam, ap=ap).ok
        rh += reverse_holder_check(ws, Q, args.eps_rh).ok
    rep = _base(args, w)
    rep.update({"ap_constant": ap, "apq_constant": apq_constant(ws, fam) if args.q else None,
                "doubling_pass": dbl, "reverse_holder_pass": rh, "draws": args.draws})
    return rep


# ---------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="-4..4", help="lo..hi per axis, comma separated (default -4..4)")
    common.add_argument("--dim", type=int, choices=(1, 2), default=1)
    common.add_argument("--res", type=int, default=1024, help="cells per axis")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")

    p = argparse.ArgumentParser(prog="cmolip", description="Fractional oscillation toolkit.")
    p.add_argument("--version", action="version", version=f"cmolip {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("osc-norm", parents=[common], help="BMO_alpha and Lip_alpha estimates")
    s.add_argument("--f", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--levels", type=int, default=None, help="depth of the dyadic family")
    s.add_argument("--out")
    s.set_defaults(handler=cmd_osc_norm)

    s = sub.add_parser("cmo-profile", parents=[common], help="vanishing-oscillation curves")
    s.add_argument("--f", required=True)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--small-sides")
    s.add_argument("--large-sides")
    s.add_argument("--distances")
    s.add_argument("--out", help="profile CSV")
    s.add_argument("--verdict", help="verdict JSON")
    s.set_defaults(handler=cmd_cmo_profile)

    s = sub.add_parser("approximate", parents=[common], help="piecewise multilinear approximation")
    s.add_argument("--input", required=True, help="grid CSV or preset")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--outside", type=float, default=None, help="value of f beyond the grid")
    s.add_argument("--t", type=float, default=None, help="mollifier radius (default two cells)")
    s.add_argument("--min-cells", type=int, default=2)
    s.add_argument("--out", help="g.csv,h.csv,report.json")
    s.set_defaults(handler=cmd_approximate)

    def op_args(s, need_f=False):
        s.add_argument("--b", required=True)
        if need_f:
            s.add_argument("--f", required=True)
        s.add_argument("--kernel", default="sgn")
        s.add_argument("--delta", type=float, default=0.0, help="smooth truncation radius")
        s.add_argument("--m", type=int, default=1)

    s = sub.add_parser("commutator-apply", parents=[common], help="apply an iterated commutator")
    op_args(s, need_f=True)
    s.add_argument("--out", help="output grid CSV")
    s.set_defaults(handler=cmd_commutator_apply)

    for name, handler, help_ in (("verify-lower", cmd_verify_lower, "median construction and lower bound"),
                                 ("verify-upper", cmd_verify_upper, "decay over annuli"),
                                 ("compactness-probe", cmd_compactness_probe, "bound, tail and modulus curves")):
        s = sub.add_parser(name, parents=[common], help=help_)
        op_args(s)
        s.add_argument("--weight", default="one")
        s.add_argument("--p", type=float, default=2.0)
        s.add_argument("--alpha", type=float, required=True)
        s.add_argument("--out")
        if name == "verify-lower":
            s.add_argument("--cube", required=True, help="center[,center2]:side")
            s.add_argument("--gamma", type=float, default=0.25)
        elif name == "verify-upper":
            s.add_argument("--cube", required=True, help="center[,center2]:side")
            s.add_argument("--d-range", default="3..7")
            s.add_argument("--eta0", type=float, default=None)
        else:
            s.add_argument("--ball-levels", default="0..7")
            s.add_argument("--ball-center", default=None)
            s.add_argument("--N-range", default="1,2,3")
            s.add_argument("--rho-range", default="0.5,0.25,0.125,0.0625,0.03125,0.015625,0.0078125")
        s.set_defaults(handler=handler)

    s = sub.add_parser("weights-check", parents=[common], help="A_p constants and random cube checks")
    s.add_argument("--weight", required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--q", type=float, default=None)
    s.add_argument("--draws", type=int, default=1000)
    s.add_argument("--lam", type=float, default=2.0)
    s.add_argument("--eps-rh", type=float, default=0.1)
    s.add_argument("--out")
    s.set_defaults(handler=cmd_weights_check)
    return p


_NEG_VALUE = re.compile(r"-[\d.]")


def _join_negative_values(argv: list[str]) -> list[str]:
    """Attach values such as ``-1..1`` to their option so argparse does not read them as flags."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEG_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        with scipy.fft.set_workers(args.threads):
            report = args.handler(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    text = _dump(report)
    if args.command not in ("cmo-profile", "approximate", "commutator-apply"):
        _write(getattr(args, "out", None), text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
