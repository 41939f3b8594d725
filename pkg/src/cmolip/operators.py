"""Quadrature for homogeneous integral operators and their commutators.

The operator is ``T f(x) = integral Omega((x-y)/|x-y|) |x-y|^{beta-n} f(y) dy``
with ``Omega`` sampled on the sphere (two values in one dimension, a periodic
angular table in two).  Sources are the cells of ``f``; every off-diagonal
cell is handled by the midpoint rule.  The cell containing the target gets an
exact local integral instead:

* ``beta = 0``, plain operator: the cell is omitted (principal value).
* ``beta > 0``: ``f(x) * integral_cell Omega |z|^{beta-n} dz`` in closed form
  (power rule in 1-d, a polar integral over the square in 2-d).
* commutators: the weight ``prod_j (b_j(x) - b_j(y))`` is replaced inside the
  cell by its first-order Taylor polynomial ``prod_j grad b_j(x) . (x - y)``,
  which is exact for affine symbols.

Full-grid evaluations use the translation structure of the kernel (FFT
convolution of the midpoint kernel table); targets given as a cell mask or
as arbitrary points are summed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
from scipy.signal import fftconvolve

from .errors import ArgumentError, ValidationError
from .grid import Cube, DyadicFamily, GridFunction, aligned_cells, block_view

TABLE_SIZE = 4096


def _smooth_step(s):
    """C-infinity step: 1 for s <= 0, 0 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1 - s, 1.0)), 0.0)
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, a / np.where(a + b > 0, a + b, 1.0)))


def cutoff(r, delta: float):
    """``phi_delta(|z|)``: 1 on ``|z| <= delta/2``, 0 on ``|z| >= delta``, smooth in between."""
    return _smooth_step(2.0 * np.asarray(r, dtype=float) / delta - 1.0)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Homogeneous kernel data.

    ``omega`` holds ``(Omega(+1), Omega(-1))`` in one dimension, or the values
    at angles ``2 pi k / len(omega)`` in two dimensions (linearly
    interpolated).  ``delta > 0`` multiplies the kernel by ``1 - phi_delta``.
    """

    omega: np.ndarray
    beta: float = 0.0
    delta: float = 0.0
    mean_zero_required: bool = field(init=False)

    def __post_init__(self):
        om = np.array(self.omega, dtype=float).ravel()
        if om.size < 2 or (om.size != 2 and om.size < 8):
            raise ArgumentError("omega needs 2 values (n=1) or an angular table of at least 8 values (n=2)")
        if not np.all(np.isfinite(om)):
            raise ArgumentError("omega must be finite")
        om.flags.writeable = False
        object.__setattr__(self, "omega", om)
        n = self.dim
        if not 0.0 <= self.beta < n:
            raise ArgumentError(f"beta must lie in [0, {n}), got {self.beta}")
        if self.delta < 0:
            raise ArgumentError("truncation radius must be nonnegative")
        object.__setattr__(self, "mean_zero_required", self.beta == 0.0)
        if self.beta == 0.0 and abs(self.sphere_mean()) > 1e-9:
            raise ValidationError(f"beta = 0 needs a mean-zero Omega; spherical mean is {self.sphere_mean():.3g}")

    # -- constructors -------------------------------------------------
    @classmethod
    def sgn(cls, n: int = 1, beta: float = 0.0) -> "KernelSpec":
        """Odd kernel: ``sgn(z)`` in 1-d, ``sgn(z_1)`` in 2-d."""
        if n == 1:
            return cls(np.array([1.0, -1.0]), beta)
        return cls.from_angle_function(lambda t: np.sign(np.cos(t)), beta)

    @classmethod
    def riesz(cls, beta: float, n: int = 1) -> "KernelSpec":
        """``Omega = 1``: the fractional integral of order ``beta``."""
        if n == 1:
            return cls(np.array([1.0, 1.0]), beta)
        return cls(np.ones(TABLE_SIZE), beta)

    @classmethod
    def from_angle_function(cls, fn, beta: float = 0.0, delta: float = 0.0) -> "KernelSpec":
        theta = 2 * np.pi * np.arange(TABLE_SIZE) / TABLE_SIZE
        vals = np.asarray(fn(theta), dtype=float)
        if beta == 0.0:
            vals = vals - vals.mean()  # remove roundoff drift from the sampled mean
        return cls(vals, beta, delta)

    @classmethod
    def from_table(cls, angles, values, beta: float = 0.0) -> "KernelSpec":
        """Resample an ``(angle, value)`` table onto the standard periodic grid."""
        angles = np.mod(np.asarray(angles, dtype=float), 2 * np.pi)
        order = np.argsort(angles)
        angles, values = angles[order], np.asarray(values, dtype=float)[order]
        theta = 2 * np.pi * np.arange(TABLE_SIZE) / TABLE_SIZE
        vals = np.interp(theta, angles, values, period=2 * np.pi)
        return cls(vals, beta)

    # -- evaluation ---------------------------------------------------
    @property
    def dim(self) -> int:
        return 1 if self.omega.size == 2 else 2

    def sphere_mean(self) -> float:
        return float(self.omega.mean())

    def lr_norm(self, r: float) -> float:
        """``L^r`` norm of Omega on the sphere (counting measure in 1-d, arc length in 2-d)."""
        if self.dim == 1:
            return float((np.abs(self.omega) ** r).sum() ** (1 / r))
        return float((np.abs(self.omega) ** r).mean() * 2 * np.pi) ** (1 / r)

    def omega_theta(self, theta) -> np.ndarray:
        t = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
        m = self.omega.size
        pos = t / (2 * np.pi) * m
        i0 = np.floor(pos).astype(np.int64) % m
        w = pos - np.floor(pos)
        return (1 - w) * self.omega[i0] + w * self.omega[(i0 + 1) % m]

    def omega_at(self, z) -> np.ndarray:
        """Omega at the direction of ``z`` (shape ``(..., n)``)."""
        z = np.asarray(z, dtype=float)
        if self.dim == 1:
            return np.where(z[..., 0] >= 0, self.omega[0], self.omega[1])
        return self.omega_theta(np.arctan2(z[..., 1], z[..., 0]))

    def kernel(self, z) -> np.ndarray:
        """``Omega(z/|z|) |z|^{beta-n} (1 - phi_delta(z))``; zero at ``z = 0``."""
        z = np.asarray(z, dtype=float)
        r = np.sqrt((z**2).sum(axis=-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            k = self.omega_at(z) * np.where(r > 0, r, 1.0) ** (self.beta - self.dim)
        k = np.where(r > 0, k, 0.0)
        if self.delta > 0:
            k = k * (1 - cutoff(r, self.delta))
        return k


def truncate_kernel(spec: KernelSpec, delta: float) -> KernelSpec:
    if delta <= 0:
        raise ArgumentError("truncation radius must be positive")
    return replace(spec, delta=float(delta))


def sign_windows(spec: KernelSpec, min_width: float = 2 * np.pi / 64, min_mean: float = 1e-6):
    """Maximal single-sign windows of Omega as ``(start_index, length, sign)``.

    Only windows at least ``min_width`` wide (2-d) whose mean absolute value is
    at least ``min_mean`` are kept.  In 1-d each nonzero direction is a window.
    """
    om = spec.omega
    if spec.dim == 1:
        return [(i, 1, int(np.sign(v))) for i, v in enumerate(om) if abs(v) >= min_mean]
    m = om.size
    sgn = np.sign(om).astype(int)
    if np.all(sgn == sgn[0]):
        runs = [(0, m, int(sgn[0]))] if sgn[0] != 0 else []
    else:
        start = int(np.flatnonzero(sgn != np.roll(sgn, 1))[0])
        runs = []
        i = 0
        while i < m:
            j = i
            s = sgn[(start + i) % m]
            while j < m and sgn[(start + j) % m] == s:
                j += 1
            if s != 0:
                runs.append(((start + i) % m, j - i, int(s)))
            i = j
    out = []
    for s0, ln, s in runs:
        idx = (s0 + np.arange(ln)) % m
        if ln * 2 * np.pi / m >= min_width and np.abs(om[idx]).mean() >= min_mean:
            out.append((s0, ln, s))
    return out


def validate_sign_window(spec: KernelSpec) -> None:
    if not sign_windows(spec):
        raise ValidationError("Omega has no single-sign window of positive mean and width >= 2 pi/64")


@dataclass(frozen=True, eq=False)
class CommutatorSpec:
    kernel: KernelSpec
    b: GridFunction
    m: int = 1
    b_vector: tuple | None = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ArgumentError(f"commutator order must be a positive integer, got {self.m}")
        if self.b.dim != self.kernel.dim:
            raise ArgumentError("symbol and kernel dimensions differ")
        if self.b_vector is not None:
            bv = tuple(self.b_vector)
            if len(bv) != self.m:
                raise ArgumentError(f"b_vector has {len(bv)} entries, expected m = {self.m}")
            if any(not bj.same_grid(self.b) for bj in bv):
                raise ArgumentError("every b_j must share the grid of b")
            object.__setattr__(self, "b_vector", bv)


# ---------------------------------------------------------------------
# Local (diagonal) cell integrals
# ---------------------------------------------------------------------


def _power_part(lo, hi, p):
    """``integral_lo^hi u^{p-1} du`` for ``0 <= lo <= hi``; logarithmic finite part when ``p = 0``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if p > 0:
        return (hi**p - lo**p) / p
    with np.errstate(divide="ignore"):
        lg_hi = np.where(hi > 0, np.log(np.where(hi > 0, hi, 1.0)), 0.0)
        lg_lo = np.where(lo > 0, np.log(np.where(lo > 0, lo, 1.0)), 0.0)
    return np.where(hi > lo, lg_hi - lg_lo, 0.0)


def cell_integral_1d(spec: KernelSpec, x, a, b, slope=None, m: int = 0):
    """``integral_a^b (slope (x-y))^m Omega(sgn(x-y)) |x-y|^{beta-1} dy`` in closed form.

    With ``m = 0`` and ``beta = 0`` the logarithmic singularity at ``y = x`` is
    taken in the finite-part sense, which equals the principal value for a
    mean-zero Omega.
    """
    x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
    s = 1.0 if slope is None else np.asarray(slope, dtype=float)
    p = m + spec.beta
    z0, z1 = x - b, x - a
    pos = _power_part(np.maximum(z0, 0), np.maximum(z1, 0), p)
    neg = _power_part(np.maximum(-z1, 0), np.maximum(-z0, 0), p)
    return s**m * spec.omega[0] * pos + (-s) ** m * spec.omega[1] * neg


def _square_radius(theta, left, right, down, up):
    """Distance from an interior point to the boundary of a box along direction theta."""
    c, s = np.cos(theta), np.sin(theta)
    with np.errstate(divide="ignore"):
        rx = np.where(c > 0, right / np.where(c > 0, c, 1), np.where(c < 0, -left / np.where(c < 0, c, 1), np.inf))
        ry = np.where(s > 0, up / np.where(s > 0, s, 1), np.where(s < 0, -down / np.where(s < 0, s, 1), np.inf))
    return np.minimum(rx, ry)


def _polar_weights(spec: KernelSpec, h: float, p: float, offset=(0.0, 0.0), nt: int = TABLE_SIZE):
    """Angles and weights with ``sum w(theta) g(theta) ~ integral Omega(theta) g(theta) R(theta)^p / p dtheta``.

    ``R`` is the distance from the point ``cell center + offset`` to the cell
    boundary.  For ``p = 0`` the radial factor is ``log R``.
    """
    theta = 2 * np.pi * (np.arange(nt) + 0.5) / nt
    ox, oy = offset
    R = _square_radius(theta, h / 2 + ox, h / 2 - ox, h / 2 + oy, h / 2 - oy)
    rad = np.log(R) if p == 0 else R**p / p
    return theta, spec.omega_theta(theta) * rad * (2 * np.pi / nt)


def _truncated_cell_integral(spec: KernelSpec, h: float, grads, n: int, sub: int = 16):
    """Diagonal cell integral of a truncated kernel by a sub-cell midpoint rule."""
    t = ((np.arange(sub) + 0.5) / sub - 0.5) * h
    z = np.stack(np.meshgrid(*([t] * n), indexing="ij"), axis=-1).reshape(-1, n)
    k = spec.kernel(z) * (h / sub) ** n  # kernel(x - y) with y = x - z
    if grads is None:
        return float(k.sum())
    w = np.ones((grads[0].shape[0], z.shape[0]))
    for g in grads:
        w = w * (g @ z.T)
    return w @ k


def diagonal_values(spec: KernelSpec, h: float, n: int, grads=None) -> np.ndarray | float:
    """Exact local integral over the cell centered at the target.

    ``grads`` is ``None`` for the plain operator, otherwise a list of ``m``
    arrays of shape ``(M, n)`` holding the symbol gradients at ``M`` targets.
    """
    m = 0 if grads is None else len(grads)
    p = m + spec.beta
    if spec.delta > 0:
        if spec.delta / 2 >= h * math.sqrt(n) / 2:
            return 0.0 if grads is None else np.zeros(grads[0].shape[0])
        return _truncated_cell_integral(spec, h, grads, n)
    if p == 0:
        return 0.0  # principal value over the symmetric cell
    if n == 1:
        if grads is None:
            return float(cell_integral_1d(spec, 0.0, -h / 2, h / 2))
        slope = np.prod(np.stack([g[:, 0] for g in grads]), axis=0)
        return cell_integral_1d(spec, 0.0, -h / 2, h / 2, slope=1.0, m=m) * slope
    theta, w = _polar_weights(spec, h, p)
    if grads is None:
        return float(w.sum())
    e = np.stack([np.cos(theta), np.sin(theta)], axis=0)  # (2, nt)
    prod = np.ones((grads[0].shape[0], theta.size))
    for g in grads:
        prod = prod * (g @ e)
    return prod @ w


def _gradients(b: GridFunction) -> np.ndarray:
    """Central-difference gradient of ``b`` at every cell, shape ``values.shape + (n,)``."""
    if b.resolution < 2:
        return np.zeros(b.values.shape + (b.dim,))
    g = np.gradient(b.values, b.cell_size)
    if b.dim == 1:
        g = [g]
    return np.stack(g, axis=-1)


# ---------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------


def _kernel_table(spec: KernelSpec, f: GridFunction) -> np.ndarray:
    """Midpoint kernel weights ``K(k h) h^n`` for offsets ``k`` in ``(-(r-1)..r-1)^n``, center zeroed."""
    r, n, h = f.resolution, f.dim, f.cell_size
    off = (np.arange(-(r - 1), r)) * h
    z = np.stack(np.meshgrid(*([off] * n), indexing="ij"), axis=-1)
    return spec.kernel(z) * h**n


def _conv(table: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``sum_y table[x - y] g[y]`` on the grid of ``g``."""
    r = g.shape[0]
    full = fftconvolve(g, table, mode="full")
    sl = tuple(slice(r - 1, 2 * r - 1) for _ in range(g.ndim))
    return full[sl]


def _check_kernel(spec: KernelSpec, f: GridFunction):
    if spec.dim != f.dim:
        raise ArgumentError(f"{spec.dim}-d kernel applied to a {f.dim}-d grid function")


def apply_T(spec: KernelSpec, f: GridFunction, x_grid: GridFunction | None = None,
            points=None):
    """Apply the operator at the cells of ``x_grid`` (default: the grid of ``f``) or at ``points``.

    ``points`` (shape ``(M, n)`` or ``(M,)`` in 1-d) returns an array; the
    source cells adjacent to each point are integrated exactly (1-d) or the
    cell containing it by the polar formula (2-d).
    """
    _check_kernel(spec, f)
    if points is not None:
        return _apply_T_points(spec, f, np.asarray(points, dtype=float))
    if x_grid is None or x_grid.same_grid(f):
        table = _kernel_table(spec, f)
        out = _conv(table, f.values)
        out = out + diagonal_values(spec, f.cell_size, f.dim) * f.values
        return GridFunction(f.domain, out)
    pts = x_grid.points().reshape(-1, f.dim)
    vals = _apply_T_points(spec, f, pts)
    return GridFunction(x_grid.domain, vals.reshape(x_grid.values.shape))


def _apply_T_points(spec: KernelSpec, f: GridFunction, pts: np.ndarray) -> np.ndarray:
    n, h = f.dim, f.cell_size
    if pts.ndim == 1:
        pts = pts[:, None] if n == 1 else pts[None, :]
    src = f.points().reshape(-1, n)
    fv = f.values.ravel()
    nz = np.flatnonzero(fv)
    src, fv = src[nz], fv[nz]
    out = np.zeros(pts.shape[0])
    chunk = max(1, 4_000_000 // max(1, src.shape[0]))
    for i in range(0, pts.shape[0], chunk):
        x = pts[i:i + chunk]
        z = x[:, None, :] - src[None, :, :]
        w = spec.kernel(z) * h**n
        near = np.all(np.abs(z) < (h if n == 1 else h / 2) * (1 + 1e-12), axis=-1)
        if spec.delta == 0 and near.any():
            ti, si = np.nonzero(near)
            if n == 1:
                a = src[si, 0] - h / 2
                w[ti, si] = cell_integral_1d(spec, x[ti, 0], a, a + h)
            else:
                for t, s in zip(ti, si):
                    off = x[t] - src[s]
                    theta, wt = _polar_weights(spec, h, spec.beta, offset=off)
                    w[t, s] = 0.0 if spec.beta == 0 and np.allclose(off, 0) else wt.sum()
        out[i:i + chunk] = w @ fv
    return out


def _symbols(spec: CommutatorSpec):
    return list(spec.b_vector) if spec.b_vector is not None else [spec.b] * spec.m


def _commutator(spec: CommutatorSpec, f: GridFunction, mask=None) -> GridFunction:
    k = spec.kernel
    _check_kernel(k, f)
    if not f.same_grid(spec.b):
        raise ArgumentError("f and the symbol must share a grid")
    bs = _symbols(spec)
    n, h = f.dim, f.cell_size
    # Differences b(x) - b(y) are unchanged by centering; centering limits cancellation.
    centered = [bj.values - bj.values.mean() for bj in bs]
    grads = [_gradients(bj) for bj in bs]
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        n_src = int(np.count_nonzero(f.values))
        if int(mask.sum()) * max(n_src, 1) <= 50_000_000:
            return _commutator_direct(k, f, centered, grads, mask)
    table = _kernel_table(k, f)
    m = len(bs)
    out = np.zeros(f.values.shape)
    for size in range(m + 1):
        for S in combinations(range(m), size):
            inner = f.values.copy()
            for j in S:
                inner = inner * centered[j]
            term = _conv(table, inner)
            for j in range(m):
                if j not in S:
                    term = term * centered[j]
            out += (-1) ** size * term
    diag = diagonal_values(k, h, n, [g.reshape(-1, n) for g in grads])
    out += np.reshape(diag, f.values.shape) * f.values
    if mask is not None:
        out = np.where(mask, out, 0.0)
    return GridFunction(f.domain, out)


def _commutator_direct(k: KernelSpec, f: GridFunction, centered, grads, mask) -> GridFunction:
    n, h = f.dim, f.cell_size
    pts = f.points().reshape(-1, n)
    fv = f.values.ravel()
    src_idx = np.flatnonzero(fv)
    tgt_idx = np.flatnonzero(mask.ravel())
    bflat = [c.ravel() for c in centered]
    out = np.zeros(fv.size)
    if src_idx.size and tgt_idx.size:
        chunk = max(1, 4_000_000 // src_idx.size)
        for i in range(0, tgt_idx.size, chunk):
            ti = tgt_idx[i:i + chunk]
            z = pts[ti][:, None, :] - pts[src_idx][None, :, :]
            w = k.kernel(z) * h**n
            for bj in bflat:
                w = w * (bj[ti][:, None] - bj[src_idx][None, :])
            out[ti] = w @ fv[src_idx]
        diag = diagonal_values(k, h, n, [g.reshape(-1, n)[tgt_idx] for g in grads])
        out[tgt_idx] += np.asarray(diag) * fv[tgt_idx]
    return GridFunction(f.domain, out.reshape(f.values.shape))


def apply_commutator_m(spec: CommutatorSpec, f: GridFunction, x_grid: GridFunction | None = None,
                       mask=None) -> GridFunction:
    """Iterated commutator ``integral (b(x)-b(y))^m K(x-y) f(y) dy`` on the grid of ``b``.

    ``mask`` restricts evaluation to a subset of target cells (others are 0).
    """
    if x_grid is not None and not x_grid.same_grid(spec.b):
        raise ArgumentError("commutator targets must be the cells of the symbol's grid")
    if spec.b_vector is not None:
        spec = replace(spec, b_vector=None)
    return _commutator(spec, f, mask)


def apply_commutator_vec(spec: CommutatorSpec, f: GridFunction, x_grid: GridFunction | None = None,
                         mask=None) -> GridFunction:
    """Multilinear commutator ``integral prod_j (b_j(x)-b_j(y)) K(x-y) f(y) dy``."""
    if spec.b_vector is None:
        raise ArgumentError("multilinear commutator needs b_vector")
    if x_grid is not None and not x_grid.same_grid(spec.b):
        raise ArgumentError("commutator targets must be the cells of the symbol's grid")
    return _commutator(spec, f, mask)


# ---------------------------------------------------------------------
# Maximal function and norms
# ---------------------------------------------------------------------


def fractional_maximal(f: GridFunction, gamma: float, family: DyadicFamily) -> GridFunction:
    """``max over family cubes Q containing x of |Q|^{gamma/n - 1} integral_Q |f|`` at each cell."""
    n = f.dim
    if not 0 < gamma < n:
        raise ArgumentError(f"gamma must lie in (0, {n}), got {gamma}")
    out = np.zeros(f.values.shape)
    absf = np.abs(f.values)
    start, stop = f.index_bounds(family.root)
    root_cells = aligned_cells(f, family.root.side)
    inside = np.all(start >= 0) and np.all(stop <= f.resolution) and root_cells is not None
    for k in family.levels:
        side = family.level_side(k)
        cells = aligned_cells(f, side)
        if inside and cells is not None and np.all(stop - start == root_cells):
            sub = absf[tuple(slice(a, b) for a, b in zip(start, stop))]
            m = root_cells // cells
            shp = []
            for _ in range(n):
                shp += [m, cells]
            means = sub.reshape(shp).mean(axis=tuple(range(1, 2 * n, 2)))
            vals = side**gamma * means
            for ax in range(n):
                vals = np.repeat(vals, cells, axis=ax)
            region = tuple(slice(a, b) for a, b in zip(start, stop))
            out[region] = np.maximum(out[region], vals)
        else:
            for Q in family.level_cubes(k):
                mask = f.cell_mask(Q)
                if mask.any():
                    val = side**gamma * absf[mask].mean()
                    out[mask] = np.maximum(out[mask], val)
    return GridFunction(f.domain, out)


def _region_mask(g: GridFunction, E) -> np.ndarray:
    if E is None:
        return np.ones(g.values.shape, dtype=bool)
    if isinstance(E, Cube):
        return g.cell_mask(E)
    mask = np.asarray(E, dtype=bool)
    if mask.shape != g.values.shape:
        raise ArgumentError("cell-set mask does not match the grid")
    return mask


def weighted_lp_norm(g: GridFunction, w: GridFunction | None, p: float, E=None) -> float:
    """``(integral_E |g|^p w)^{1/p}``; ``w`` is passed already raised to the needed power."""
    if not 1 <= p < math.inf:
        raise ArgumentError(f"p must lie in [1, inf), got {p}")
    mask = _region_mask(g, E)
    wv = 1.0 if w is None else w.values
    if w is not None:
        if not w.same_grid(g):
            raise ArgumentError("weight and function live on different grids")
        if np.any(w.values <= 0):
            raise ArgumentError("weight must be positive")
    integrand = np.abs(g.values) ** p * wv
    return float((integrand[mask].sum() * g.cell_volume) ** (1 / p))
