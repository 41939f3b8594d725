"""Piecewise multilinear approximation of functions with vanishing oscillation.

Given ``f`` and a tolerance ``eps`` the construction proceeds in four steps.

1. :func:`plan_scales` picks integers ``i, j, k`` from the oscillation
   curves of ``f``: cubes of side at most ``2^{i+2}`` oscillate less than
   ``eps``, so do cubes of side at least ``2^j`` and cubes missing
   ``R_k = [-2^k, 2^k]^n``.  It then fixes ``d1 = k + 1`` and the outermost
   shell ``d2``.
2. :func:`build_vertex_maps` tiles ``R_{d2+1}`` by dyadic cubes of side
   ``2^i`` inside ``R_{d1}`` and of side ``2^{i+m-d1}`` in the shell
   ``R_m \\ R_{m-1}``.  Vertex values are averages of ``f`` over a cube of the
   same size centered at the vertex, except on the outer boundary of each
   shell where the next shell's interpolant is inherited.  The outermost
   shell carries the constant ``A_{d2}``.
3. :func:`approx_error` measures the infimum oscillation of ``f - g``.
4. :func:`mollify` smooths ``g`` and removes the constant at infinity.

Every shell uses the same number of lattice steps, ``N = 2^{d1-i+1}`` per
axis, so each shell's vertex values are stored as one dense array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .cube_interp import WeightedCube, interp_core
from .errors import ArgumentError, DomainError, ScaleUnresolvableError
from .grid import Cube, DyadicFamily, GridFunction, cube_sample, lattice_samples, vertex_bits
from .oscillation import family_max, osc_alpha, osc_rows


def _log2_exact(x: float) -> int | None:
    k = round(math.log2(x))
    return k if 2.0**k == x else None


def _check_dyadic_grid(f: GridFunction) -> int:
    """Return ``log2(cell_size)``; the grid must be a dyadic lattice through the origin."""
    e = _log2_exact(f.cell_size)
    if e is None:
        raise ArgumentError(f"cell size {f.cell_size} must be a power of two")
    offs = f.lo / f.cell_size
    if not np.allclose(offs, np.round(offs), rtol=0, atol=1e-9):
        raise ArgumentError("the grid must have a cell edge at the origin")
    return e


@dataclass(frozen=True, eq=False)
class ScaleCurves:
    """Lattice oscillations per dyadic side ``2^s`` with a bound for sides past the scan."""

    s_min: int
    s_max: int
    sup: dict
    corners: dict
    values: dict
    f: GridFunction
    alpha: float

    @property
    def compact(self) -> bool:
        return self.f.outside is not None

    def _mass(self, k: int | None = None) -> float:
        f = self.f
        dev = np.abs(f.values - f.outside)
        if k is not None:
            dev = dev[np.max(np.abs(f.points()), axis=-1) > 2.0**k]
        return float(dev.sum() * f.cell_volume)

    def tail(self, s: int, k: int | None = None) -> float:
        """Bound ``2 ||f - outside||_1 / |Q|^{1+alpha/n}`` for cubes of side ``>= 2^s``.

        With ``k`` only the mass outside ``R_k`` counts (cubes missing ``R_k``).
        Zero for functions without an outside value, whose large cubes are not covered.
        """
        if not self.compact:
            return 0.0
        return 2.0 * self._mass(k) * 2.0 ** (-s * (self.f.dim + self.alpha))

    def sup_between(self, lo: int, hi: int) -> float:
        best = 0.0
        for s in range(max(lo, self.s_min), min(hi, self.s_max) + 1):
            best = max(best, self.sup[s])
        if hi > self.s_max:
            best = max(best, self.tail(max(lo, self.s_max + 1)))
        return best

    def sup_disjoint(self, k: int) -> float:
        """Largest oscillation over scanned cubes missing ``R_k``, plus the tail bound."""
        r = 2.0**k
        best = 0.0
        for s in range(self.s_min, self.s_max + 1):
            lo = self.corners[s]
            hi = lo + 2.0**s
            miss = np.any((lo >= r) | (hi <= -r), axis=1)
            if miss.any():
                best = max(best, float(self.values[s][miss].max()))
        return max(best, self.tail(self.s_max + 1, k))


def _big_cube_osc(f: GridFunction, s: int, alpha: float):
    """Oscillation of the cubes of side ``2^s`` (larger than the grid) with corners on ``2^{s-1} Z^n`` meeting the grid."""
    L = 2.0**s
    n = f.dim
    step = L / 2
    ranges = [np.arange(np.floor((f.lo[j] - L) / step) + 1, np.ceil(f.domain.hi[j] / step)) * step for j in range(n)]
    corners = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, n)
    total = (L / f.cell_size) ** n
    vals = np.empty(corners.shape[0])
    for t, lo in enumerate(corners):
        sl = f.cell_mask(Cube(tuple(lo + L / 2), L))
        inside = f.values[sl]
        n_out = total - inside.size
        mean = (inside.sum() + n_out * f.outside) / total
        dev = (np.abs(inside - mean).sum() + n_out * abs(f.outside - mean)) / total
        vals[t] = dev * L ** (-alpha)
    return vals, corners


def scale_curves(f: GridFunction, alpha: float, min_cells: int = 2, extra_levels: int = 16) -> ScaleCurves:
    """Scan half-step lattices of dyadic cubes from ``min_cells`` cells up.

    Without an outside value the scan stops at the grid size.  With one, cubes
    straddling the grid boundary are included and the scan continues
    ``extra_levels`` dyadic sides beyond the grid.
    """
    e = _check_dyadic_grid(f)
    s_min = e + int(math.log2(min_cells))
    s_dom = e + int(math.floor(math.log2(f.resolution)))
    padded = f.outside is not None
    s_max = s_dom + extra_levels if padded else s_dom
    sup, corners, values = {}, {}, {}
    for s in range(s_min, s_max + 1):
        if s <= s_dom:
            cells = 2 ** (s - e)
            samples, lo = lattice_samples(f, cells, pad=cells if padded else 0)
            v = osc_rows(samples, 2.0**s, alpha)
        else:
            v, lo = _big_cube_osc(f, s, alpha)
        sup[s] = float(v.max()) if v.size else 0.0
        corners[s], values[s] = lo, v
    return ScaleCurves(s_min, s_max, sup, corners, values, f, alpha)


@dataclass(frozen=True)
class ApproxPlan:
    eps: float
    alpha: float
    n: int
    i_eps: int
    j_eps: int
    k_eps: int
    d1: int
    d2: int
    offset_constant: float = 0.0
    tail_certified: bool = False  # outer-shell condition certified beyond the grid by an L^1 bound
    notes: tuple = ()

    def __post_init__(self):
        if self.i_eps + 3 > self.k_eps:
            raise ArgumentError("scale indices need i + 3 <= k")
        if self.d1 != self.k_eps + 1 or self.d2 < self.d1 or self.d2 < self.j_eps:
            raise ArgumentError("shell indices need d1 = k + 1 and d2 >= max(d1, j)")
        if not math.isfinite(self.offset_constant):
            raise ArgumentError("A_d2 must be finite")

    @property
    def lattice_steps(self) -> int:
        """Lattice steps per axis in every shell."""
        return 2 ** (self.d1 - self.i_eps + 1)

    def shell_side(self, m: int) -> float:
        """Side of the cubes in shell ``m`` (``2^i`` inside ``R_{d1}``)."""
        return 2.0 ** (self.i_eps + max(m, self.d1) - self.d1)

    @property
    def shells(self) -> list:
        return [(m, self.shell_side(m)) for m in range(self.d1, self.d2 + 2)]

    def shell_cubes(self, m: int) -> list[Cube]:
        """Cubes of shell ``m``: those of ``R_m`` not inside ``R_{m-1}`` (all of ``R_{d1}`` for ``m = d1``)."""
        s = self.shell_side(m)
        idx = _active_cells(self.lattice_steps, self.n, m == self.d1)
        lo = -(2.0**m) + idx * s
        return [Cube(tuple(c + s / 2), s) for c in lo]


def _active_cells(N: int, n: int, inner: bool) -> np.ndarray:
    """Integer lower corners of the shell cubes, ``(count, n)``."""
    grids = np.stack(np.meshgrid(*([np.arange(N)] * n), indexing="ij"), axis=-1).reshape(-1, n)
    if inner:
        return grids
    q = N // 4
    inside = np.all((grids >= q) & (grids + 1 <= 3 * q), axis=1)
    return grids[~inside]


def _active_vertices(N: int, n: int, inner: bool) -> np.ndarray:
    """Mask over the ``(N+1)^n`` vertex lattice of vertices belonging to shell cubes."""
    if inner:
        return np.ones((N + 1,) * n, dtype=bool)
    q = N // 4
    idx = np.arange(N + 1)
    grids = np.meshgrid(*([idx] * n), indexing="ij")
    strictly_inside = np.ones((N + 1,) * n, dtype=bool)
    for g in grids:
        strictly_inside &= (g > q) & (g < 3 * q)
    return ~strictly_inside


def _box_means(f: GridFunction, centers: np.ndarray, side: float) -> np.ndarray:
    """Means of ``f`` over cubes of the given side centered at ``centers`` (``(M, n)``), via prefix sums."""
    n, h, r = f.dim, f.cell_size, f.resolution
    cells = side / h
    if abs(cells - round(cells)) > 1e-9 or round(cells) < 1:
        raise ArgumentError(f"averaging side {side} is not a whole number of cells")
    start = np.floor((centers - side / 2 - f.lo) / h + 1e-9).astype(np.int64)
    stop = start + int(round(cells))
    lo_c = np.clip(start, 0, r)
    hi_c = np.clip(stop, 0, r)
    if f.outside is None and (np.any(lo_c != start) or np.any(hi_c != stop)):
        bad = np.flatnonzero(np.any((lo_c != start) | (hi_c != stop), axis=1))[0]
        raise DomainError(f"averaging cube of side {side} at vertex {tuple(centers[bad])} leaves the grid")
    S = np.zeros((r + 1,) * n)
    S[(slice(1, None),) * n] = f.values
    for ax in range(n):
        S = np.cumsum(S, axis=ax)
    total = np.zeros(centers.shape[0])
    for bits in vertex_bits(n):
        idx = tuple(hi_c[:, j] if bits[j] else lo_c[:, j] for j in range(n))
        sign = (-1) ** (n - int(bits.sum()))
        total += sign * S[idx]
    count_in = np.prod(np.maximum(hi_c - lo_c, 0), axis=1)
    count_all = int(round(cells)) ** n
    if f.outside is not None:
        total += (count_all - count_in) * f.outside
    return total / count_all


def _shell_vertex_coords(plan: ApproxPlan, m: int) -> np.ndarray:
    N = plan.lattice_steps
    s = plan.shell_side(m)
    axis = -(2.0**m) + np.arange(N + 1) * s
    return np.stack(np.meshgrid(*([axis] * plan.n), indexing="ij"), axis=-1)


def _offset_constant(f: GridFunction, plan_like) -> float:
    """Mean of the vertex averages over the distinct vertices of the shell-``d2`` cubes."""
    m = plan_like.d2
    mask = _active_vertices(plan_like.lattice_steps, plan_like.n, m == plan_like.d1)
    pts = _shell_vertex_coords(plan_like, m)[mask]
    return float(_box_means(f, pts, plan_like.shell_side(m)).mean())


def plan_scales(f: GridFunction, alpha: float, eps: float, min_cells: int = 2,
                curves: ScaleCurves | None = None, max_d2: int = 64) -> ApproxPlan:
    """Choose the scale indices for tolerance ``eps``.

    ``k`` is the smallest index whose complement condition holds, ``i`` the
    largest index not exceeding ``k - 3`` whose small-scale condition holds,
    ``j`` the smallest large-scale index, and ``d2`` the smallest shell index
    at or above ``max(j, d1)`` for which cubes of side at least ``2^{i+d2-d1}``
    oscillate at most ``2^{i-d1-1} eps``.

    Cubes are scanned on half-step lattices of dyadic sides inside the grid
    (and up to one domain width past it for functions with a declared
    ``outside`` value, whose larger cubes are covered by the bound
    ``O_alpha <= 2 ||f - outside||_1 / |Q|^{1+alpha/n}``).
    """
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if not 0 < alpha <= 1:
        raise ArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    c = curves if curves is not None else scale_curves(f, alpha, min_cells)
    n = f.dim
    half = float(np.min(np.abs(np.concatenate([f.lo, f.domain.hi]))))
    k_hi = c.s_max + 1
    k = next((kk for kk in range(c.s_min + 3, k_hi + 1) if c.sup_disjoint(kk) < eps), None)
    if k is None:
        raise ScaleUnresolvableError(
            f"oscillation of cubes away from the origin stays >= {eps} on the grid", condition=3)
    i = next((ii for ii in range(k - 3, c.s_min - 1, -1) if c.sup_between(c.s_min, ii + 2) < eps), None)
    if i is None:
        raise ScaleUnresolvableError(
            f"small-scale oscillation never falls below {eps} (smallest scanned side 2^{c.s_min})",
            condition=1)
    j = next((jj for jj in range(c.s_min, c.s_max + 2) if c.sup_between(jj, c.s_max + 64) < eps), None)
    if j is None:
        raise ScaleUnresolvableError(f"large-scale oscillation never falls below {eps}", condition=2)
    d1 = k + 1
    thr = 2.0 ** (i - d1 - 1) * eps
    d2 = None
    for dd in range(max(j, d1), max(j, d1) + max_d2):
        if f.outside is None and 2.0**dd + 2.0 ** (i + dd - d1 - 1) > half * (1 + 1e-12):
            break
        s0 = i + dd - d1
        if c.sup_between(s0, c.s_max + 64) <= thr:
            d2 = dd
            break
    if d2 is None:
        raise ScaleUnresolvableError(
            f"no outer shell within range keeps large cubes below {thr:.3g} (condition on P_m)", condition=4)
    tail_certified = f.outside is not None
    notes = () if tail_certified else (
        "cubes larger than the grid domain were not scanned for the outer-shell condition",)
    proto = ApproxPlan(eps, alpha, n, i, j, k, d1, d2, 0.0, tail_certified, notes)
    A = _offset_constant(f, proto)
    return ApproxPlan(eps, alpha, n, i, j, k, d1, d2, A, tail_certified, notes)


@dataclass(frozen=True, eq=False)
class PiecewiseInterpolant:
    """The assembled approximant: per-shell vertex arrays plus the value at infinity."""

    plan: ApproxPlan
    vertex_values: dict  # m -> array of shape (N+1,)*n
    outside_value: float

    @property
    def n(self) -> int:
        return self.plan.n

    def shell_of(self, x: np.ndarray) -> np.ndarray:
        r = np.max(np.abs(x), axis=-1)
        with np.errstate(divide="ignore"):
            m = np.ceil(np.log2(np.where(r > 0, r, 1.0))).astype(np.int64)
        return np.maximum(m, self.plan.d1)

    def _eval_shell(self, m: int, x: np.ndarray) -> np.ndarray:
        N = self.plan.lattice_steps
        s = self.plan.shell_side(m)
        base = -(2.0**m)
        u = (x - base) / s
        c = np.clip(np.floor(u).astype(np.int64), 0, N - 1)
        lo = base + c * s
        V = self.vertex_values[m]
        psi = np.stack([V[tuple((c + bits).T)] for bits in vertex_bits(self.n)], axis=-1)
        return interp_core(lo, lo + s, psi, x)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or (self.n > 1 and x.ndim == 1) or (self.n == 1 and x.shape[-1] != 1):
            x = x[..., None] if self.n == 1 else x
        flat = x.reshape(-1, self.n)
        out = np.full(flat.shape[0], self.outside_value)
        m = self.shell_of(flat)
        for mm in np.unique(m):
            if mm > self.plan.d2 + 1:
                continue
            sel = m == mm
            out[sel] = self._eval_shell(int(mm), flat[sel])
        return out.reshape(x.shape[:-1])

    def sample(self, grid: GridFunction) -> GridFunction:
        """Values at the cell centers of ``grid``."""
        vals = self(grid.points().reshape(-1, grid.dim)).reshape(grid.values.shape)
        return GridFunction(grid.domain, vals, self.outside_value if grid.outside is not None else None)

    def shell_pieces(self, m: int):
        N = self.plan.lattice_steps
        s = self.plan.shell_side(m)
        V = self.vertex_values[m]
        for c in _active_cells(N, self.n, m == self.plan.d1):
            lo = -(2.0**m) + c * s
            psi = [V[tuple(c + bits)] for bits in vertex_bits(self.n)]
            yield WeightedCube(Cube(tuple(lo + s / 2), s), psi)

    @property
    def pieces(self) -> list:
        out = []
        for m in range(self.plan.d1, self.plan.d2 + 2):
            out.extend(self.shell_pieces(m))
        return out

    def pieces_containing(self, x) -> list:
        x = np.asarray(x, dtype=float).reshape(self.n)
        r = float(np.max(np.abs(x)))
        found = []
        for m in range(self.plan.d1, self.plan.d2 + 2):
            if r > 2.0**m * (1 + 1e-12) or (m > self.plan.d1 and r < 2.0 ** (m - 1) * (1 - 1e-12)):
                continue
            for wq in self.shell_pieces(m):
                if wq.cube.contains_point(x, tol=1e-12):
                    found.append(wq)
        return found

    def lipschitz_bound(self) -> float:
        """Largest piece-level gradient bound ``|Q|^{-1/n} M_Q``."""
        best = 0.0
        bits = vertex_bits(self.n)
        for m in range(self.plan.d1, self.plan.d2 + 2):
            N = self.plan.lattice_steps
            cells = _active_cells(N, self.n, m == self.plan.d1)
            V = self.vertex_values[m]
            psi = np.stack([V[tuple((cells + b).T)] for b in bits], axis=-1)
            psi = np.sort(psi, axis=1)
            med = psi[:, (psi.shape[1] - 1) // 2]
            M = np.abs(psi - med[:, None]).sum(axis=1)
            best = max(best, float(M.max()) / self.plan.shell_side(m))
        return best


def build_vertex_maps(f: GridFunction, plan: ApproxPlan) -> PiecewiseInterpolant:
    """Assemble the approximant shell by shell, from the outside in."""
    n = plan.n
    N = plan.lattice_steps
    A = plan.offset_constant
    values = {plan.d2 + 1: np.full((N + 1,) * n, A)}
    partial = PiecewiseInterpolant(plan, values, A)
    for m in range(plan.d2, plan.d1 - 1, -1):
        active = _active_vertices(N, n, m == plan.d1)
        coords = _shell_vertex_coords(plan, m)
        idx = np.stack(np.meshgrid(*([np.arange(N + 1)] * n), indexing="ij"), axis=-1)
        on_boundary = np.any((idx == 0) | (idx == N), axis=-1)
        V = np.zeros((N + 1,) * n)
        bnd = active & on_boundary
        V[bnd] = partial._eval_shell(m + 1, coords[bnd])
        inner = active & ~on_boundary
        V[inner] = _box_means(f, coords[inner], plan.shell_side(m))
        values[m] = V
    return PiecewiseInterpolant(plan, values, A)


def approx_error(f: GridFunction, g: PiecewiseInterpolant, alpha: float, family: DyadicFamily) -> float:
    """Largest infimum oscillation of ``f - g`` over the family cubes."""
    gv = g(f.points().reshape(-1, f.dim)).reshape(f.values.shape)
    diff = GridFunction(f.domain, f.values - gv)
    return family_max(diff, family, alpha, inf=True, translates=False)


def mollifier_weights(t: float, h: float, n: int) -> np.ndarray:
    """Discrete unit-mass samples of ``exp(-1/(1-|z/t|^2))`` on the cell lattice."""
    k = int(math.ceil(t / h))
    off = np.arange(-k, k + 1) * h
    z = np.stack(np.meshgrid(*([off] * n), indexing="ij"), axis=-1)
    r2 = (z**2).sum(axis=-1) / t**2
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(r2 < 1, np.exp(-1.0 / np.where(r2 < 1, 1 - r2, 1.0)), 0.0)
    return w / w.sum()


def mollify(g: PiecewiseInterpolant, t: float, grid: GridFunction) -> GridFunction:
    """``g * phi_t - A_{d2}`` sampled on the cells of ``grid`` (declared zero outside it)."""
    h = grid.cell_size
    if t <= 0 or t < 2 * h * (1 - 1e-12):
        raise ArgumentError(f"mollifier radius {t} must be at least two cells ({2 * h})")
    n = grid.dim
    w = mollifier_weights(t, h, n)
    k = (w.shape[0] - 1) // 2
    r = grid.resolution
    padded = Cube(grid.domain.center, grid.domain.side + 2 * k * h)
    template = GridFunction(padded, np.zeros((r + 2 * k,) * n))
    gv = g.sample(template).values - g.outside_value
    sm = fftconvolve(gv, w, mode="valid")
    sm[np.abs(sm) < 1e-13 * max(1.0, float(np.abs(gv).max()))] = 0.0
    return GridFunction(grid.domain, sm, outside=0.0)


@dataclass(frozen=True)
class ChainReport:
    lhs: float
    rhs: float
    ok: bool
    chain_constant: float
    eps_used: float
    reason: str = ""


def chain_constant(alpha: float, n: int) -> float:
    """``2^n (sum_{j>=0} 2^{-j alpha} + 1)``; for ``n = 1`` this is ``2 sum 2^{-j alpha} + 2``."""
    if alpha <= 0:
        return math.inf
    return 2**n * (1.0 / (1.0 - 2.0**-alpha) + 1.0)


def dyadic_chain(Q: Cube, subQ: Cube) -> list[Cube]:
    """Cubes ``Q = Q_0 > Q_1 > ... > Q_N`` of sides ``l_Q 2^{-j}``, each containing ``subQ``.

    ``Q_N`` is the last one whose side is at least that of ``subQ``.
    """
    chain = [Q]
    while chain[-1].side / 2 >= subQ.side * (1 - 1e-12):
        P = chain[-1]
        s = P.side / 2
        c = np.clip(subQ.c, P.lo + s / 2, P.hi - s / 2)
        chain.append(Cube(tuple(c), s))
    return chain


def regularity_chain_bound(f: GridFunction, Q: Cube, subQ: Cube, alpha: float, eps: float) -> ChainReport:
    """Compare ``|f_Q - f_subQ|`` with ``C_chain |Q|^{alpha/n} eps``.

    The precondition ``O_alpha(f; P) <= eps`` is checked on the dyadic chain
    from ``Q`` down to ``subQ``; a violation gives ``ok = False`` with a reason.
    """
    n = f.dim
    C = chain_constant(alpha, n)
    lhs = abs(cube_sample(f, Q).mean() - cube_sample(f, subQ).mean())
    rhs = C * Q.volume ** (alpha / n) * eps
    if not Q.contains(subQ, tol=1e-12):
        return ChainReport(lhs, rhs, False, C, eps, "subQ is not inside Q")
    worst = max(osc_alpha(f, P, alpha) for P in dyadic_chain(Q, subQ))
    if worst > eps * (1 + 1e-12):
        return ChainReport(lhs, rhs, False, C, eps, f"chain oscillation {worst:.6g} exceeds eps")
    return ChainReport(lhs, rhs, lhs <= rhs, C, eps)
