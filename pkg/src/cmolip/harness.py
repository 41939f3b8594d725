"""Verification engines: median-set constructions, commutator lower bounds,
decay over annuli, and a discrete compactness probe.

Each engine returns a report object.  Quantities that the theory bounds only
up to unknown constants are returned as ratios; the tests assert uniformity
of those ratios rather than absolute values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConstructionError, PreconditionError, ResolutionError
from .grid import Cube, GridFunction, cube_sample
from .operators import (CommutatorSpec, KernelSpec, apply_commutator_m, sign_windows,
                        validate_sign_window, weighted_lp_norm)
from .oscillation import lip_alpha_norm, osc_alpha_inf
from .weights import WeightSpec, weighted_measure


def median_value(b: GridFunction, Q: Cube) -> float:
    """Lower median of the cell samples of ``b`` on ``Q``."""
    return cube_sample(b, Q).lower_median()


def median_conditions(values: np.ndarray, m: float) -> tuple[bool, bool]:
    """Both defining counts: at most half the samples lie above ``m``, at most half below."""
    v = np.asarray(values, dtype=float)
    return bool(2 * np.count_nonzero(v > m) <= v.size), bool(2 * np.count_nonzero(v < m) <= v.size)


# ---------------------------------------------------------------------
# Median construction
# ---------------------------------------------------------------------


def kernel_directions(kernel: KernelSpec) -> list[tuple[np.ndarray, float, int]]:
    """Candidate ``(theta0, eps0, sign)`` triples, best first.

    ``theta0`` is the center of a single-sign window of Omega and ``eps0`` half
    its peak ``|Omega|``.  Windows are ranked by width, then by their minimum
    ``|Omega|``, then positive before negative, then by table index.
    """
    validate_sign_window(kernel)
    wins = sign_windows(kernel)
    om = kernel.omega
    if kernel.dim == 1:
        ranked = sorted(wins, key=lambda w: (-abs(om[w[0]]), w[2] < 0, w[0]))
        return [(np.array([1.0 if w[0] == 0 else -1.0]), 0.5 * abs(om[w[0]]), w[2]) for w in ranked]
    m = om.size

    def key(w):
        idx = (w[0] + np.arange(w[1])) % m
        return (-w[1], -float(np.abs(om[idx]).min()), w[2] < 0, w[0])

    out = []
    for s0, ln, sgn in sorted(wins, key=key):
        idx = (s0 + np.arange(ln)) % m
        angle = 2 * np.pi * (s0 + (ln - 1) / 2) / m
        out.append((np.array([math.cos(angle), math.sin(angle)]), 0.5 * float(np.abs(om[idx]).max()), sgn))
    return out


def kernel_direction(kernel: KernelSpec) -> tuple[np.ndarray, float, int]:
    """The best-ranked ``(theta0, eps0, sign)``."""
    return kernel_directions(kernel)[0]


@dataclass(frozen=True, eq=False)
class MedianConstruction:
    Q: Cube
    P: Cube
    m_b: float
    E1: np.ndarray
    E2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    eps0: float
    k0: float
    gamma: float
    theta0: np.ndarray
    checks: dict = field(default_factory=dict)
    pairs_checked: int = 0

    @property
    def failures(self) -> int:
        return sum(v["failures"] for v in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.failures == 0


def _sample(idx: np.ndarray, k: int, rng) -> np.ndarray:
    if idx.size <= k:
        return idx
    return np.sort(rng.choice(idx, size=k, replace=False))


def _near_fraction(kernel: KernelSpec, x: np.ndarray, ys: np.ndarray, eps0: float) -> np.ndarray:
    """For each row of ``x``, the number of ``ys`` with ``|Omega(x - y)| < eps0``."""
    z = x[:, None, :] - ys[None, :, :]
    return np.count_nonzero(np.abs(kernel.omega_at(z)) < eps0, axis=1)


def _kernel_checks(kernel: KernelSpec, pts, q_idx, p_idx, eps0, gamma, q_cells, rng, samples):
    xs = pts[_sample(q_idx, samples, rng)]
    near = _near_fraction(kernel, xs, pts[p_idx], eps0)
    frac_fail = int(np.count_nonzero(near > gamma * q_cells))
    ys = pts[_sample(p_idx, samples, rng)]
    signs = np.sign(kernel.omega_at(xs[:, None, :] - ys[None, :, :]))
    sign_fail = int(np.count_nonzero(signs != signs.flat[0])) if signs.size else 0
    return frac_fail, sign_fail, xs.shape[0] * ys.shape[0], float(near.max(initial=0) / max(q_cells, 1))


def _find_companion(b, kernel, Q, theta0, eps0, gamma, pts, q_idx, q_cells, samples, seed):
    h = b.cell_size
    start = 10 * math.sqrt(b.dim)
    step = max(0.5 * h / Q.side, 1e-3)
    for t in range(1, 100_000):
        shift = np.round((start + t * step) * Q.side * theta0 / h) * h
        P = Q.translated(-shift)
        if not b.domain.contains(P, tol=1e-9):
            return None
        k_eff = float(np.linalg.norm(shift) / Q.side)
        if k_eff <= start:
            continue
        p_idx = np.flatnonzero(b.cell_mask(P).ravel())
        frac_fail, sign_fail, _, _ = _kernel_checks(kernel, pts, q_idx, p_idx, eps0, gamma, q_cells,
                                                    np.random.default_rng(seed), samples)
        if frac_fail == 0 and sign_fail == 0:
            return P, k_eff, theta0, eps0
    return None


def build_median_sets(b: GridFunction, kernel: KernelSpec, Q: Cube, gamma: float,
                      samples: int = 64, seed: int = 0) -> MedianConstruction:
    """Companion cube, median split and half-measure selections for ``Q``.

    The companion ``P = Q - k0 l_Q theta0`` is placed at the smallest ``k0``
    above ``10 sqrt(n)`` (on a half-cell ladder, snapped to whole cells) whose
    kernel sign and near-set conditions hold on the sampled targets; when the
    best direction runs out of domain the next-ranked window is tried.  The four
    pair properties are re-checked on ``samples`` points per set and reported.
    """
    if not 0 < gamma < 1:
        raise ArgumentError(f"gamma must lie in (0, 1), got {gamma}")
    if kernel.dim != b.dim:
        raise ArgumentError("kernel and symbol dimensions differ")
    rng = np.random.default_rng(seed)
    n, h = b.dim, b.cell_size
    q_mask = b.cell_mask(Q)
    q_cells = int(q_mask.sum())
    if q_cells == 0:
        raise ResolutionError(f"{Q} holds no cell")
    pts = b.points().reshape(-1, n)
    q_idx = np.flatnonzero(q_mask.ravel())
    found = None
    for theta0, eps0, _ in kernel_directions(kernel):
        found = _find_companion(b, kernel, Q, theta0, eps0, gamma, pts, q_idx, q_cells, samples, seed)
        if found is not None:
            break
    if found is None:
        raise ConstructionError(
            "no companion cube inside the domain satisfies the kernel sign and near-set conditions")
    P, k0, theta0, eps0 = found

    p_mask = b.cell_mask(P)
    p_idx = np.flatnonzero(p_mask.ravel())
    bv = b.values.ravel()
    m_b = median_value(b, P)
    E1 = q_mask & (b.values >= m_b)
    E2 = q_mask & (b.values <= m_b)
    half = int(round(q_cells / 2))
    order = p_idx[np.argsort(bv[p_idx], kind="stable")]
    F1 = np.zeros(b.values.shape, dtype=bool)
    F2 = np.zeros(b.values.shape, dtype=bool)
    F1.ravel()[order[:half]] = True
    F2.ravel()[order[::-1][:half]] = True

    checks = {}
    pairs = 0
    cover_fail = int(np.count_nonzero(q_mask & ~(E1 | E2)))
    measure_fail = int(abs(F1.sum() - q_cells / 2) > 1) + int(abs(F2.sum() - q_cells / 2) > 1)
    checks["partition"] = {"failures": cover_fail + measure_fail}
    sign_fail = 0
    dom_fail = 0
    for E, F in ((E1, F1), (E2, F2)):
        ex = _sample(np.flatnonzero(E.ravel()), samples, rng)
        fy = _sample(np.flatnonzero(F.ravel()), samples, rng)
        if ex.size == 0 or fy.size == 0:
            continue
        diff = bv[ex][:, None] - bv[fy][None, :]
        pairs += diff.size
        sign_fail += int(min(np.count_nonzero(diff < 0), np.count_nonzero(diff > 0)))
        lhs = np.abs(bv[ex] - m_b)[:, None]
        dom_fail += int(np.count_nonzero(lhs > np.abs(diff) + 1e-12 * (1 + lhs)))
    checks["symbol_sign"] = {"failures": sign_fail}
    checks["median_domination"] = {"failures": dom_fail}
    frac_fail, ksign_fail, kp, worst = _kernel_checks(kernel, pts, q_idx, p_idx, eps0, gamma, q_cells,
                                                      rng, samples)
    pairs += kp
    checks["kernel_sign"] = {"failures": ksign_fail}
    checks["near_set"] = {"failures": frac_fail, "worst_fraction": worst}
    return MedianConstruction(Q, P, m_b, E1, E2, F1, F2, eps0, k0, gamma, theta0, checks, pairs)


# ---------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class RatioReport:
    lhs: float
    rhs: float
    ratio: float
    degenerate: bool = False
    details: dict = field(default_factory=dict)


def _normalized_indicator(w: WeightSpec, mask: np.ndarray) -> GridFunction:
    mass = weighted_measure(w, mask, power=w.p)
    if mass <= 0:
        raise ResolutionError("indicator set holds no cell")
    return GridFunction(w.w.domain, np.where(mask, mass ** (-1 / w.p), 0.0))


def _check_setup(b: GridFunction, kernel: KernelSpec, w: WeightSpec, m: int, alpha: float):
    if not b.same_grid(w.w):
        raise ArgumentError("weight and symbol must share a grid")
    if w.q is None:
        raise ArgumentError("the weight spec needs q")
    w.check_exponents(m, alpha, kernel.beta, b.dim)


def lower_bound_ratio(b: GridFunction, kernel: KernelSpec, w: WeightSpec, Q: Cube, m: int,
                      alpha: float, gamma: float = 0.25, seed: int = 0) -> RatioReport:
    """``sum_i ||C_b^m f_i||_{L^q(w^q, Q)}`` against ``O~_alpha(b; Q)^m``.

    ``f_i`` are the ``w^p``-normalized indicators of the half-measure sets of
    :func:`build_median_sets` and ``C_b^m`` is the iterated commutator.
    """
    _check_setup(b, kernel, w, m, alpha)
    osc = osc_alpha_inf(b, Q, alpha)
    if osc <= 0:
        return RatioReport(0.0, 0.0, math.nan, True, {"reason": "zero oscillation on Q"})
    mc = build_median_sets(b, kernel, Q, gamma, seed=seed)
    q_mask = b.cell_mask(Q)
    wq = w.w.map(lambda v: v**w.q)
    spec = CommutatorSpec(kernel, b, m)
    lhs = 0.0
    for F in (mc.F1, mc.F2):
        g = apply_commutator_m(spec, _normalized_indicator(w, F), mask=q_mask)
        lhs += weighted_lp_norm(g, wq, w.q, q_mask)
    rhs = osc**m
    return RatioReport(lhs, rhs, lhs / rhs, False,
                       {"k0": mc.k0, "eps0": mc.eps0, "P": str(mc.P), "construction_failures": mc.failures})


@dataclass(frozen=True, eq=False)
class CompactnessProbe:
    Q: Cube
    eta0: float
    L_Q: float
    E: Cube
    F: Cube
    f_test: GridFunction
    B: np.ndarray
    x0: np.ndarray
    y0: np.ndarray
    P: Cube
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def _extremal_points(b: GridFunction, Q: Cube, P: Cube):
    """``x0`` maximizes ``|b - b_P|`` on ``Q``; ``y0`` in ``P`` makes ``|b(x0) - b(y0)|`` closest to the mean deviation."""
    pts = b.points().reshape(-1, b.dim)
    bv = b.values.ravel()
    qi = np.flatnonzero(b.cell_mask(Q).ravel())
    pi = np.flatnonzero(b.cell_mask(P).ravel())
    bP = bv[pi].mean()
    dev = np.abs(bv[qi] - bP)
    target = dev.mean()
    x_i = qi[int(np.argmax(dev))]
    y_i = pi[int(np.argmin(np.abs(np.abs(bv[x_i] - bv[pi]) - target)))]
    return pts[x_i], pts[y_i], target


def compactness_cubes(b: GridFunction, kernel: KernelSpec, Q: Cube, alpha: float, eta0: float,
                      lip_norm: float | None = None, seed: int = 0, cell_floor: bool = False):
    """``(P, E, F, L_Q, x0, y0, osc)`` for the compactness lower bound.

    ``L_Q`` below one cell raises unless ``cell_floor`` is set, in which case
    it is raised to one cell.
    """
    n = b.dim
    if eta0 <= 0:
        raise ArgumentError(f"eta0 must be positive, got {eta0}")
    osc = osc_alpha_inf(b, Q, alpha)
    if osc < eta0:
        raise PreconditionError(f"infimum oscillation {osc:.6g} on {Q} is below eta0 = {eta0}")
    lip = lip_norm if lip_norm is not None else lip_alpha_norm(b, alpha, seed=seed)
    if lip <= 0:
        raise PreconditionError("the symbol is constant")
    frac = min((eta0 / (4 * lip)) ** (1 / alpha) / math.sqrt(n), 0.5)
    gamma = frac**n / 2 ** (n + 1)
    mc = build_median_sets(b, kernel, Q, gamma, seed=seed)
    x0, y0, _ = _extremal_points(b, Q, mc.P)
    L = min((osc / (4 * lip)) ** (1 / alpha) * Q.side / math.sqrt(n), Q.side / 2)
    if L < b.cell_size * (1 - 1e-9):
        if cell_floor:
            L = b.cell_size
        else:
            raise ResolutionError(f"side L_Q = {L:.3g} is below the cell size {b.cell_size:.3g}")
    # Snap to whole cells so that E and F hold the same number of cells.
    L = math.floor(L / b.cell_size + 1e-9) * b.cell_size
    E = Cube(tuple(x0), L)
    F = Cube(tuple(y0), L)
    return mc.P, E, F, L, x0, y0, osc


def compactness_lower_probe(b: GridFunction, kernel: KernelSpec, w: WeightSpec, Q: Cube, m: int,
                            alpha: float, eta0: float, B=None, seed: int = 0,
                            cell_floor: bool = False) -> CompactnessProbe:
    """``||C_b^m f||_{L^q(E \\ B, w^q)}`` against ``min(O~^{2n/alpha}, 1) O~^m``.

    ``B`` is a cell mask holding at most half of ``E``'s cells.
    """
    _check_setup(b, kernel, w, m, alpha)
    P, E, F, L, x0, y0, osc = compactness_cubes(b, kernel, Q, alpha, eta0, seed=seed, cell_floor=cell_floor)
    e_mask = b.cell_mask(E)
    B = np.zeros(b.values.shape, dtype=bool) if B is None else np.asarray(B, dtype=bool)
    if B.shape != b.values.shape:
        raise ArgumentError("exclusion mask does not match the grid")
    if 2 * int((B & e_mask).sum()) > int(e_mask.sum()) or 2 * int(B.sum()) > int(e_mask.sum()):
        raise ArgumentError("the exclusion set may hold at most half of E")
    f = _normalized_indicator(w, b.cell_mask(F))
    target = e_mask & ~B
    g = apply_commutator_m(CommutatorSpec(kernel, b, m), f, mask=target)
    wq = w.w.map(lambda v: v**w.q)
    lhs = weighted_lp_norm(g, wq, w.q, target)
    rhs = min(osc ** (2 * b.dim / alpha), 1.0) * osc**m
    return CompactnessProbe(Q, eta0, L, E, F, f, B, x0, y0, P, lhs, rhs)


# ---------------------------------------------------------------------
# Upper decay and compactness curves
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    d_values: tuple
    norms: tuple
    slope: float | None
    truncated: tuple = ()


def annulus_upper_decay(b: GridFunction, kernel: KernelSpec, w: WeightSpec, Q: Cube, m: int,
                        alpha: float, d_range, eta0: float | None = None, f: GridFunction | None = None,
                        seed: int = 0) -> DecayReport:
    """Weighted ``L^q`` norms of ``C_b^m f`` on ``2^{d+1} Q \\ 2^d Q`` and the least-squares slope of ``log2``.

    ``f`` defaults to the normalized indicator of the compactness cube ``F``
    (at least one cell wide).
    Values of ``d`` whose annulus leaves the grid are dropped with a warning.
    """
    _check_setup(b, kernel, w, m, alpha)
    if not np.all(np.isfinite(kernel.omega)):
        raise ArgumentError("Omega must be bounded")
    if f is None:
        osc = osc_alpha_inf(b, Q, alpha)
        if eta0 is None and osc <= 0:
            raise PreconditionError(f"the symbol has zero oscillation on {Q}")
        _, _, F, *_ = compactness_cubes(b, kernel, Q, alpha, eta0 if eta0 is not None else osc,
                                          seed=seed, cell_floor=True)
        f = _normalized_indicator(w, b.cell_mask(F))
    ds = [int(d) for d in d_range]
    kept = [d for d in ds if b.domain.contains(Q.scaled(2.0 ** (d + 1)), tol=1e-9)]
    dropped = tuple(d for d in ds if d not in kept)
    if dropped:
        warnings.warn(f"annuli for d = {list(dropped)} leave the grid and were skipped", stacklevel=2)
    if not np.any(f.values):
        return DecayReport(tuple(kept), tuple(0.0 for _ in kept), None, dropped)
    g = apply_commutator_m(CommutatorSpec(kernel, b, m), f)
    wq = w.w.map(lambda v: v**w.q)
    norms = []
    for d in kept:
        ring = b.cell_mask(Q.scaled(2.0 ** (d + 1))) & ~b.cell_mask(Q.scaled(2.0**d))
        norms.append(weighted_lp_norm(g, wq, w.q, ring))
    slope = None
    if len(kept) >= 2 and all(v > 0 for v in norms):
        slope = float(np.polyfit(kept, np.log2(norms), 1)[0])
    return DecayReport(tuple(kept), tuple(norms), slope, dropped)


@dataclass(frozen=True)
class FKReport:
    bound: float
    tail: dict
    modulus: dict

    @property
    def tail_monotone(self) -> bool:
        v = [self.tail[k] for k in sorted(self.tail)]
        return all(a >= b - 1e-12 * (1 + abs(a)) for a, b in zip(v, v[1:]))

    @property
    def modulus_monotone(self) -> bool:
        v = [self.modulus[k] for k in sorted(self.modulus)]
        return all(a <= b + 1e-12 * (1 + abs(b)) for a, b in zip(v, v[1:]))


def _shift_vectors(n: int, radius: int, limit: int = 400):
    """Integer shifts with Euclidean length in ``(0, radius]`` (a deterministic subset when many)."""
    if n == 1:
        return [(s,) for s in range(-radius, radius + 1) if s]
    full = [(i, j) for i in range(-radius, radius + 1) for j in range(-radius, radius + 1)
            if (i or j) and i * i + j * j <= radius * radius]
    if len(full) <= limit:
        return full
    out = set()
    for r in range(1, radius + 1):
        d = int(round(r / math.sqrt(2)))
        for v in ((r, 0), (0, r), (d, d), (d, -d)):
            out.add(v)
            out.add((-v[0], -v[1]))
    return sorted(out)


def _shift_difference(g: np.ndarray, s, wq: np.ndarray | None, q: float, vol: float) -> float:
    n = g.ndim
    a = [slice(None)] * n
    bsl = [slice(None)] * n
    for ax, k in enumerate(s):
        if k > 0:
            a[ax], bsl[ax] = slice(k, None), slice(None, -k)
        elif k < 0:
            a[ax], bsl[ax] = slice(None, k), slice(-k, None)
    diff = np.abs(g[tuple(a)] - g[tuple(bsl)]) ** q
    if wq is not None:
        diff = diff * wq[tuple(bsl)]
    return float((diff.sum() * vol) ** (1 / q))


def fk_compactness_probe(spec: CommutatorSpec, w: GridFunction | None, p: float, q: float, ball,
                         N_range, rho_range) -> FKReport:
    """Bound, tail and translation-modulus curves of ``C_b^m`` over a finite ball.

    Every ball member must satisfy ``||f||_{L^p(w^p)} <= 1``.  Shifts are whole
    cells with ``|y| <= rho``.
    """
    ball = list(ball)
    if not ball:
        raise ArgumentError("the ball is empty")
    b = spec.b
    wp = None if w is None else w.map(lambda v: v**p)
    wq = None if w is None else w.map(lambda v: v**q)
    for f in ball:
        if not f.same_grid(b):
            raise ArgumentError("ball members must share the symbol's grid")
        norm = weighted_lp_norm(f, wp, p)
        if norm > 1 + 1e-9:
            raise ArgumentError(f"ball member has norm {norm:.6g} > 1")
    outs = [apply_commutator_m(spec, f) for f in ball]
    bound = max(weighted_lp_norm(g, wq, q) for g in outs)
    pts = b.points().reshape(b.values.shape + (b.dim,))
    tail = {}
    for N in N_range:
        outside = np.max(np.abs(pts), axis=-1) > N
        tail[float(N)] = max(weighted_lp_norm(g, wq, q, outside) if outside.any() else 0.0 for g in outs)
    modulus = {}
    h = b.cell_size
    wv = None if wq is None else wq.values
    for rho in rho_range:
        r = int(math.floor(rho / h + 1e-9))
        shifts = _shift_vectors(b.dim, r)
        best = 0.0
        for g in outs:
            for s in shifts:
                best = max(best, _shift_difference(g.values, s, wv, q, b.cell_volume))
        modulus[float(rho)] = best
    return FKReport(bound, tail, modulus)
