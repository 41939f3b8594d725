"""Muckenhoupt constants and related diagnostics for sampled weights.

A weight is a positive :class:`~cmolip.grid.GridFunction`.  Singular weights
such as ``|x|^gamma`` are sampled at cell centers, so the singular point is
never evaluated; the discrete constants therefore stay finite on every grid
and divergence shows up as growth under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError
from .grid import Cube, DyadicFamily, GridFunction, aligned_cells, block_view, flat_blocks, make_dyadic_family


@dataclass(frozen=True, eq=False)
class WeightSpec:
    w: GridFunction
    p: float
    q: float | None = None

    def __post_init__(self):
        if not np.all(self.w.values > 0):
            raise ArgumentError("weights must be strictly positive")
        if not 1 < self.p < math.inf:
            raise ArgumentError(f"p must lie in (1, inf), got {self.p}")
        if self.q is not None and not 1 < self.q < math.inf:
            raise ArgumentError(f"q must lie in (1, inf), got {self.q}")

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1)

    def check_exponents(self, m: int, alpha: float, beta: float, n: int, tol: float = 1e-9) -> None:
        """Require ``1/q = 1/p - (m alpha + beta)/n``."""
        if self.q is None:
            raise ArgumentError("the exponent relation needs q")
        lhs = 1 / self.q
        rhs = 1 / self.p - (m * alpha + beta) / n
        if abs(lhs - rhs) > tol:
            raise ArgumentError(f"1/q = {lhs:.6g} but 1/p - (m alpha + beta)/n = {rhs:.6g}")


def paired_q(p: float, m: int, alpha: float, beta: float, n: int) -> float:
    """``q`` from ``1/q = 1/p - (m alpha + beta)/n``."""
    inv = 1 / p - (m * alpha + beta) / n
    if inv <= 0:
        raise ArgumentError(f"no finite q: 1/p - (m alpha + beta)/n = {inv:.6g} <= 0")
    return 1 / inv


def _mask(w: GridFunction, E) -> np.ndarray:
    if E is None:
        return np.ones(w.values.shape, dtype=bool)
    if isinstance(E, Cube):
        if not w.domain.contains(E, tol=1e-9):
            raise DomainError(f"set {E} leaves the weight's domain {w.domain}")
        return w.cell_mask(E)
    mask = np.asarray(E, dtype=bool)
    if mask.shape != w.values.shape:
        raise ArgumentError("cell-set mask does not match the weight grid")
    return mask


def weighted_measure(spec: WeightSpec, E, power: float = 1.0) -> float:
    """``integral_E w^power`` by the midpoint rule (0 for an empty set)."""
    mask = _mask(spec.w, E)
    if not mask.any():
        return 0.0
    return float((spec.w.values[mask] ** power).sum() * spec.w.cell_volume)


def _family_rows(w: GridFunction, family: DyadicFamily):
    """Yield ``(side, samples)`` per level, samples shaped ``(cubes, cells)``."""
    start, stop = w.index_bounds(family.root)
    root_cells = aligned_cells(w, family.root.side)
    aligned = (root_cells is not None and np.all(start >= 0) and np.all(stop <= w.resolution)
               and np.all(stop - start == root_cells))
    for k in family.levels:
        side = family.level_side(k)
        cells = aligned_cells(w, side)
        if aligned and cells is not None:
            yield side, flat_blocks(block_view(w.values, cells, cells, start, stop), w.dim)
        else:
            rows = [w.values[w.cell_mask(Q)] for Q in family.level_cubes(k)]
            for r in rows:
                if r.size:
                    yield side, r[None, :]


def cube_ap(values: np.ndarray, p: float) -> np.ndarray:
    """``avg(w) * avg(w^{1-p'})^{p-1}`` for each row of samples."""
    pp = p / (p - 1)
    return values.mean(axis=1) * (values ** (1 - pp)).mean(axis=1) ** (p - 1)


def ap_constant(spec: WeightSpec, family: DyadicFamily) -> float:
    """Largest A_p product over the family (a lower estimate of the A_p constant)."""
    best = 0.0
    for _, rows in _family_rows(spec.w, family):
        if rows.size:
            best = max(best, float(cube_ap(rows, spec.p).max()))
    return best


def apq_constant(spec: WeightSpec, family: DyadicFamily) -> float:
    """Largest ``(avg w^q)^{1/q} (avg w^{-p'})^{1/p'}`` over the family.

    This is the displayed supremum itself; no outer power is applied.
    """
    if spec.q is None:
        raise ArgumentError("apq_constant needs q")
    pp = spec.p_prime
    q = spec.q
    best = 0.0
    for _, rows in _family_rows(spec.w, family):
        if rows.size:
            val = (rows**q).mean(axis=1) ** (1 / q) * (rows ** (-pp)).mean(axis=1) ** (1 / pp)
            best = max(best, float(val.max()))
    return best


def full_family(w: GridFunction) -> DyadicFamily:
    """Dyadic family of the weight's domain down to single cells (capped at 10^6 cubes)."""
    levels = int(round(math.log2(w.resolution)))
    top = levels
    while top > 0 and sum(2 ** (w.dim * k) for k in range(top + 1)) > 10**6:
        top -= 1
    return make_dyadic_family(w.domain, 0, top)


@dataclass(frozen=True)
class DoublingReport:
    ratio: float
    cap: float
    ok: bool


def doubling_check(spec: WeightSpec, Q: Cube, lam: float, ap: float | None = None) -> DoublingReport:
    """``w(lam Q) / w(Q)`` against ``lam^{np} [w]_{A_p}``.

    ``ap`` defaults to the A_p constant over the domain's dyadic family,
    enlarged by the product on ``lam Q`` itself.
    """
    if lam <= 1:
        raise ArgumentError("lambda must exceed 1")
    big = Q.scaled(lam)
    w = spec.w
    if not w.domain.contains(big, tol=1e-9):
        raise DomainError(f"{big} leaves the weight's domain {w.domain}")
    if ap is None:
        ap = ap_constant(spec, full_family(w))
    ap = max(ap, float(cube_ap(w.values[w.cell_mask(big)][None, :], spec.p)[0]))
    ratio = weighted_measure(spec, big) / weighted_measure(spec, Q)
    cap = lam ** (w.dim * spec.p) * ap
    return DoublingReport(ratio, cap, ratio <= cap)


@dataclass(frozen=True)
class ReverseHolderReport:
    lhs: float
    rhs: float
    ok: bool


def reverse_holder_check(spec: WeightSpec, Q: Cube, eps_rh: float) -> ReverseHolderReport:
    """``(avg w^{1+eps})^{1/(1+eps)} <= 2 avg w`` on ``Q``."""
    if eps_rh <= 0:
        raise ArgumentError("eps_rh must be positive")
    v = spec.w.values[_mask(spec.w, Q)]
    if v.size == 0:
        raise DomainError(f"cube {Q} holds no cell of the weight grid")
    lhs = float((v ** (1 + eps_rh)).mean() ** (1 / (1 + eps_rh)))
    rhs = float(2 * v.mean())
    return ReverseHolderReport(lhs, rhs, lhs <= rhs)


def reverse_holder_threshold(spec: WeightSpec, Q: Cube, eps_values) -> float:
    """First ``eps`` in the increasing sweep at which the reverse Hoelder check fails (inf if none)."""
    for e in sorted(eps_values):
        if not reverse_holder_check(spec, Q, e).ok:
            return float(e)
    return math.inf


def power_weight(gamma: float, domain: Cube, resolution: int) -> GridFunction:
    """``|x|^gamma`` sampled at cell centers."""
    return GridFunction.from_function(lambda *x: np.sqrt(sum(c * c for c in x)) ** gamma, domain, resolution)


def refinement_sweep(gamma: float, p: float, base_resolution: int = 64, refinements: int = 6,
                     half_width: float = 1.0) -> list[float]:
    """A_p constant of ``|x|^gamma`` on ``[-half_width, half_width]`` under repeated grid doubling.

    Each step doubles the resolution and adds one dyadic level, so the finest
    family cubes are always single cells.
    """
    out = []
    dom = Cube((0.0,), 2 * half_width)
    for k in range(refinements + 1):
        res = base_resolution * 2**k
        w = power_weight(gamma, dom, res)
        out.append(ap_constant(WeightSpec(w, p), full_family(w)))
    return out
