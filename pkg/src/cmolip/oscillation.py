"""Fractional mean oscillation and the norms built from it.

For a cube ``Q`` in ``R^n`` and ``0 <= alpha <= 1``::

    O_alpha(f; Q)  = |Q|^{-(1 + alpha/n)} * integral_Q |f - f_Q|
    ~O_alpha(f; Q) = |Q|^{-(1 + alpha/n)} * min_c integral_Q |f - c|

Integrals over a cube are cell means times ``|Q|``, so both quantities reduce
to ``side**(-alpha)`` times a mean absolute deviation.  The minimizing constant
is the lower median of the samples.

Suprema over "all cubes" are replaced by maxima over explicit finite sweeps
(a dyadic family plus its half-step translates, or a translated lattice), so
every norm returned here is a lower estimate of the true supremum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .grid import (
    Cube,
    DyadicFamily,
    GridFunction,
    aligned_cells,
    block_view,
    cube_sample,
    flat_blocks,
    lattice_samples,
)


@dataclass(frozen=True)
class OscillationParams:
    alpha: float
    family: DyadicFamily

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ArgumentError(f"alpha must lie in [0, 1], got {self.alpha}")


def osc_alpha(f: GridFunction, Q: Cube, alpha: float) -> float:
    s = cube_sample(f, Q)
    return s.abs_dev(s.mean()) * Q.side ** (-alpha)


def osc_alpha_inf(f: GridFunction, Q: Cube, alpha: float) -> float:
    s = cube_sample(f, Q)
    return s.abs_dev(s.lower_median()) * Q.side ** (-alpha)


def lower_median_rows(samples: np.ndarray) -> np.ndarray:
    k = (samples.shape[1] - 1) // 2
    return np.partition(samples, k, axis=1)[:, k]


def osc_rows(samples: np.ndarray, side: float, alpha: float, inf: bool = False) -> np.ndarray:
    """Oscillation of each row of ``samples`` (one row per cube of the given side)."""
    if samples.shape[0] == 0:
        return np.empty(0)
    c = lower_median_rows(samples) if inf else samples.mean(axis=1)
    return np.abs(samples - c[:, None]).mean(axis=1) * side ** (-alpha)


def _family_level_samples(f: GridFunction, family: DyadicFamily, k: int, translates: bool):
    """Rows of samples for the level-``k`` cubes (plus half-step translates), or None if unaligned."""
    side = family.level_side(k)
    cells = aligned_cells(f, side)
    root_cells = aligned_cells(f, family.root.side)
    if cells is None or root_cells is None:
        return None
    start, stop = f.index_bounds(family.root)
    if np.any(start < 0) or np.any(stop > f.resolution) or np.any(stop - start != root_cells):
        return None
    stride = cells // 2 if translates and cells >= 2 else cells
    blocks = block_view(f.values, cells, stride, start, stop)
    return flat_blocks(blocks, f.dim)


def _half_step_translates(Q: Cube, root: Cube):
    n = Q.dim
    for shift in itertools.product((-0.5, 0.0, 0.5), repeat=n):
        if any(shift):
            P = Q.translated(np.array(shift) * Q.side)
            if root.contains(P, tol=1e-12):
                yield P


def family_max(f: GridFunction, family: DyadicFamily, alpha: float, inf: bool = False,
               translates: bool = True) -> float:
    """Max of the oscillation over a dyadic family (and, optionally, its half-step translates)."""
    best = 0.0
    for k in family.levels:
        rows = _family_level_samples(f, family, k, translates)
        if rows is not None:
            vals = osc_rows(rows, family.level_side(k), alpha, inf)
            if vals.size:
                best = max(best, float(vals.max()))
            continue
        osc = osc_alpha_inf if inf else osc_alpha
        for Q in family.level_cubes(k):
            best = max(best, osc(f, Q, alpha))
            if translates:
                for P in _half_step_translates(Q, family.root):
                    best = max(best, osc(f, P, alpha))
    return best


def bmo_alpha_norm(f: GridFunction, params: OscillationParams) -> float:
    """Largest ``O_alpha`` over the family and its half-step translates (a lower estimate)."""
    if len(params.family) == 0:
        raise ArgumentError("empty cube family")
    return family_max(f, params.family, params.alpha)


# ---------------------------------------------------------------------
# Lipschitz seminorm
# ---------------------------------------------------------------------


def _shift_ratio_max(v: np.ndarray, shift: tuple, h: float, alpha: float) -> float:
    n = v.ndim
    a = []
    b = []
    for d in shift:
        if d >= 0:
            a.append(slice(d, None))
            b.append(slice(0, v.shape[0] - d))
        else:
            a.append(slice(0, v.shape[0] + d))
            b.append(slice(-d, None))
    da = v[tuple(a)]
    if da.size == 0:
        return 0.0
    dist = h * float(np.sqrt(sum(d * d for d in shift)))
    return float(np.abs(da - v[tuple(b)]).max()) / dist**alpha


def _half_plane_shifts(n: int, radius: int):
    """Nonzero integer shifts with max-norm at most ``radius``, one of each ``+-`` pair."""
    for s in itertools.product(range(-radius, radius + 1), repeat=n):
        if any(s) and s > tuple(-x for x in s):
            yield s


def lip_alpha_norm(f: GridFunction, alpha: float, pair_budget: int | None = None, seed: int = 0) -> float:
    """Largest difference quotient ``|f(x)-f(y)|/|x-y|^alpha`` over sample pairs.

    All pairs are used when their number is at most ``pair_budget**2``.
    Otherwise the estimate combines every pair within a small cell
    neighbourhood, pairs along dyadic axis and diagonal offsets, and a seeded
    random subset of ``pair_budget**2`` global pairs.
    """
    if not 0.0 < alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    r = f.resolution
    pair_budget = r if pair_budget is None else int(pair_budget)
    if pair_budget < r:
        raise ArgumentError(f"pair_budget {pair_budget} is below the resolution {r}")
    v = f.values
    h = f.cell_size
    n = f.dim
    npts = v.size
    if npts < 2:
        return 0.0
    best = 0.0
    if npts * (npts - 1) // 2 <= pair_budget**2:
        for s in _half_plane_shifts(n, r - 1):
            best = max(best, _shift_ratio_max(v, s, h, alpha))
        return best
    shifts = set(_half_plane_shifts(n, 4))
    j = 1
    while j < r:
        for s in _half_plane_shifts(n, 1):
            shifts.add(tuple(j * x for x in s))
        j *= 2
    for s in sorted(shifts):
        best = max(best, _shift_ratio_max(v, s, h, alpha))
    rng = np.random.default_rng(seed)
    m = min(pair_budget**2, 4_000_000)
    flat = v.ravel()
    i1 = rng.integers(0, npts, m)
    i2 = rng.integers(0, npts, m)
    keep = i1 != i2
    i1, i2 = i1[keep], i2[keep]
    p1 = np.stack(np.unravel_index(i1, v.shape), axis=-1)
    p2 = np.stack(np.unravel_index(i2, v.shape), axis=-1)
    dist = h * np.sqrt(((p1 - p2) ** 2).sum(axis=-1))
    if dist.size:
        best = max(best, float((np.abs(flat[i1] - flat[i2]) / dist**alpha).max()))
    return best


def meyers_ratio(f: GridFunction, params: OscillationParams, pair_budget: int | None = None,
                 seed: int = 0) -> float:
    """``Lip_alpha / BMO_alpha`` with ``0/0 = 1`` and ``x/0 = inf``."""
    if not 0.0 < params.alpha <= 1.0:
        raise ArgumentError("the Lipschitz comparison needs alpha in (0, 1]")
    lip = lip_alpha_norm(f, params.alpha, pair_budget, seed)
    bmo = bmo_alpha_norm(f, params)
    if bmo == 0.0:
        return 1.0 if lip == 0.0 else float("inf")
    return lip / bmo


# ---------------------------------------------------------------------
# CMO profile
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class OscProfile:
    """Decay curves for the three vanishing-oscillation conditions.

    ``small_scale`` lists ``(volume, sup)`` with volumes decreasing,
    ``large_scale`` with volumes increasing, and ``far_away`` lists
    ``(d, sup over lattice cubes missing [-d, d]^n)`` with ``d`` increasing.
    """

    small_scale: list
    large_scale: list
    far_away: list
    decay_factor: float = 0.1
    verdict: tuple = field(init=False)

    def __post_init__(self):
        if not (self.small_scale and self.large_scale and self.far_away):
            raise ArgumentError("profile curves must be nonempty")
        v = tuple(curve[-1][1] <= self.decay_factor * curve[0][1]
                  for curve in (self.small_scale, self.large_scale, self.far_away))
        object.__setattr__(self, "verdict", v)

    def holds_at(self, eps: float) -> bool:
        """True when every curve ends strictly below ``eps``."""
        return all(curve[-1][1] < eps for curve in (self.small_scale, self.large_scale, self.far_away))

    def rows(self):
        for name, curve in (("small_scale", self.small_scale), ("large_scale", self.large_scale),
                            ("far_away", self.far_away)):
            for param, val in curve:
                yield name, param, val

    def to_csv_text(self) -> str:
        lines = ["condition,parameter,sup_osc"]
        lines += [f"{name},{param!r},{val!r}" for name, param, val in self.rows()]
        return "\n".join(lines) + "\n"

    def verdict_json(self) -> dict:
        return {"c1": bool(self.verdict[0]), "c2": bool(self.verdict[1]), "c3": bool(self.verdict[2])}


def _scale_cells(f: GridFunction, volume: float) -> int:
    side = volume ** (1.0 / f.dim)
    cells = int(round(side / f.cell_size))
    if cells < 1:
        raise ArgumentError(f"scale {volume} is below one grid cell")
    if cells > f.resolution:
        raise ArgumentError(f"scale {volume} exceeds the grid domain")
    return cells


def lattice_sup(f: GridFunction, cells: int, alpha: float, inf: bool = False) -> float:
    samples, _ = lattice_samples(f, cells)
    vals = osc_rows(samples, cells * f.cell_size, alpha, inf)
    return float(vals.max()) if vals.size else 0.0


def cmo_profile(f: GridFunction, alpha: float, scales, distances, large_scales=None,
                decay_factor: float = 0.1) -> OscProfile:
    """Sample the three vanishing-oscillation conditions on translated lattices.

    ``scales`` (cube volumes) drive the small-scale curve; ``large_scales``
    (default: ``scales``) drive the large-scale curve.  Lattices step by half
    a cube side, so on a domain symmetric about 0 the 0-centered cubes are
    included.  The far-away curve uses every requested size.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    large_scales = scales if large_scales is None else large_scales
    if len(scales) == 0 or len(large_scales) == 0 or len(distances) == 0:
        raise ArgumentError("scales and distances must be nonempty")
    cache: dict[int, float] = {}

    def sup_at(volume):
        cells = _scale_cells(f, volume)
        if cells not in cache:
            cache[cells] = lattice_sup(f, cells, alpha)
        return (cells * f.cell_size) ** f.dim, cache[cells]

    small = [sup_at(r) for r in sorted(scales, reverse=True)]
    large = [sup_at(r) for r in sorted(large_scales)]

    sizes = sorted({_scale_cells(f, r) for r in list(scales) + list(large_scales)})
    per_size = []
    for cells in sizes:
        samples, corners = lattice_samples(f, cells)
        per_size.append((corners, corners + cells * f.cell_size,
                         osc_rows(samples, cells * f.cell_size, alpha)))
    far = []
    for d in sorted(distances):
        best = None
        for lo, hi, vals in per_size:
            disjoint = np.any((lo > d) | (hi < -d), axis=1)
            if disjoint.any():
                m = float(vals[disjoint].max())
                best = m if best is None else max(best, m)
        if best is None:
            raise ArgumentError(f"no lattice cube inside the domain misses [-{d}, {d}]^n")
        far.append((float(d), best))
    return OscProfile(small, large, far, decay_factor)
