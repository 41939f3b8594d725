"""Cubes, uniformly sampled functions and dyadic cube families.

Everything else in the package is phrased in terms of three objects:

* :class:`Cube` -- a closed axis-parallel cube given by its center and side.
* :class:`GridFunction` -- samples at the cell centers of a uniform grid on a
  cubic box.  Integrals use the midpoint rule; a cell belongs to a cube when
  its center does.
* :class:`DyadicFamily` -- the dyadic descendants of a root cube between two
  levels.

Cell membership is half-open in index space: a center lying exactly on the
lower face of a cube is handed to the neighbouring cube below it, so dyadic
children partition their parent's cells exactly.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ArgumentError, CapacityError, DomainError, ResolutionError

# Tolerance, in units of one cell, for deciding that a face passes through a
# cell center.
_TIE = 1e-9
MAX_FAMILY_CUBES = 10**7


@dataclass(frozen=True)
class Cube:
    """Closed axis-parallel cube ``center + side * [-1/2, 1/2]^n``."""

    center: tuple
    side: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1 or c.size not in (1, 2):
            raise ArgumentError(f"cube dimension must be 1 or 2, got center {self.center!r}")
        if not np.all(np.isfinite(c)):
            raise ArgumentError("cube center must be finite")
        side = float(self.side)
        if not (math.isfinite(side) and side > 0):
            raise ArgumentError(f"cube side must be positive, got {self.side!r}")
        object.__setattr__(self, "center", tuple(c.tolist()))
        object.__setattr__(self, "side", side)

    @classmethod
    def from_bounds(cls, lo, hi) -> "Cube":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        widths = hi - lo
        if not np.allclose(widths, widths[0], rtol=1e-12, atol=0):
            raise ArgumentError(f"bounds {lo}..{hi} do not describe a cube")
        return cls(tuple((lo + hi) / 2), float(widths[0]))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def volume(self) -> float:
        return self.side**self.dim

    @property
    def lo(self) -> np.ndarray:
        return self.c - self.side / 2

    @property
    def hi(self) -> np.ndarray:
        return self.c + self.side / 2

    def scaled(self, a: float) -> "Cube":
        return Cube(self.center, a * self.side)

    def translated(self, v) -> "Cube":
        return Cube(self.c + np.asarray(v, dtype=float), self.side)

    def vertices(self) -> np.ndarray:
        """Vertices as a ``(2**n, n)`` array; row ``k`` has bit ``j`` of ``k`` selecting axis ``j``."""
        bits = vertex_bits(self.dim)
        return np.where(bits == 1, self.hi, self.lo)

    def contains_point(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pad = tol * self.side
        return np.all((x >= self.lo - pad) & (x <= self.hi + pad), axis=-1)

    def contains(self, other: "Cube", tol: float = 0.0) -> bool:
        pad = tol * other.side
        return bool(np.all(other.lo >= self.lo - pad) and np.all(other.hi <= self.hi + pad))

    def is_disjoint(self, other: "Cube") -> bool:
        """True when the closed cubes do not meet."""
        return bool(np.any(other.lo > self.hi) or np.any(other.hi < self.lo))

    def __str__(self) -> str:
        return "x".join(f"[{a:g},{b:g}]" for a, b in zip(self.lo, self.hi))


def vertex_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` array of 0/1 vertex selectors, first axis varying fastest."""
    return np.array([[(k >> j) & 1 for j in range(n)] for k in range(2**n)], dtype=int)


def unit_cube(n: int = 1) -> Cube:
    """``[-1/2, 1/2]^n``."""
    return Cube((0.0,) * n, 1.0)


def dyadic_box(i: int, n: int = 1) -> Cube:
    """``[-2^i, 2^i]^n``."""
    return Cube((0.0,) * n, 2.0 ** (i + 1))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real function at the cell centers of a uniform grid.

    ``values`` has shape ``(r,) * n`` with axis ``j`` running along ``x_{j+1}``.
    ``outside`` optionally declares the value of the function beyond the box;
    when it is ``None`` (the default) any cube leaving the box is an error,
    otherwise the function is treated as extended by that constant.
    """

    domain: Cube
    values: np.ndarray
    outside: float | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        n = self.domain.dim
        if vals.ndim != n or len(set(vals.shape)) != 1 or vals.shape[0] < 1:
            raise ArgumentError(f"values of shape {vals.shape} do not fit a {n}-d cubic grid")
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("grid values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.outside is not None:
            object.__setattr__(self, "outside", float(self.outside))

    # -- construction -------------------------------------------------
    @classmethod
    def from_function(cls, fn, domain: Cube, resolution: int, outside=None) -> "GridFunction":
        """Sample ``fn(x1[, x2])`` at cell centers."""
        if int(resolution) != resolution or resolution < 1:
            raise ArgumentError(f"resolution must be a positive integer, got {resolution!r}")
        h = domain.side / resolution
        axes = [lo + (np.arange(resolution) + 0.5) * h for lo in domain.lo]
        coords = np.meshgrid(*axes, indexing="ij")
        vals = np.broadcast_to(np.asarray(fn(*coords), dtype=float), coords[0].shape)
        return cls(domain, vals, outside)

    @classmethod
    def constant(cls, c: float, domain: Cube, resolution: int, outside=None) -> "GridFunction":
        return cls(domain, np.full((resolution,) * domain.dim, float(c)), outside)

    def like(self, values, outside="keep") -> "GridFunction":
        return GridFunction(self.domain, values, self.outside if outside == "keep" else outside)

    # -- geometry -----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def cell_size(self) -> float:
        return self.domain.side / self.resolution

    @property
    def cell_volume(self) -> float:
        return self.cell_size**self.dim

    @property
    def lo(self) -> np.ndarray:
        return self.domain.lo

    def axis_centers(self, axis: int = 0) -> np.ndarray:
        return self.domain.lo[axis] + (np.arange(self.resolution) + 0.5) * self.cell_size

    def coords(self) -> tuple:
        return tuple(np.meshgrid(*[self.axis_centers(a) for a in range(self.dim)], indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell centers as an array of shape ``values.shape + (n,)``."""
        return np.stack(self.coords(), axis=-1)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.domain == other.domain and self.resolution == other.resolution

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    # -- arithmetic ---------------------------------------------------
    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if not self.same_grid(other):
                raise ArgumentError("grid functions live on different grids")
            out = None
            if self.outside is not None and other.outside is not None:
                out = op(self.outside, other.outside)
            return GridFunction(self.domain, op(self.values, other.values), out)
        other = float(other)
        out = None if self.outside is None else op(self.outside, other)
        return GridFunction(self.domain, op(self.values, other), out)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __abs__(self):
        out = None if self.outside is None else abs(self.outside)
        return GridFunction(self.domain, np.abs(self.values), out)

    def map(self, fn) -> "GridFunction":
        """Apply a numpy ufunc-like callable to the samples."""
        out = None if self.outside is None else float(fn(np.float64(self.outside)))
        return GridFunction(self.domain, fn(self.values), out)

    # -- cell membership ----------------------------------------------
    def index_bounds(self, Q: Cube) -> tuple[np.ndarray, np.ndarray]:
        """Unclipped per-axis ``[start, stop)`` index ranges of cells whose centers lie in ``Q``."""
        if Q.dim != self.dim:
            raise ArgumentError(f"cube of dimension {Q.dim} on a {self.dim}-d grid")
        h = self.cell_size
        t_lo = (Q.lo - self.lo) / h - 0.5
        t_hi = (Q.hi - self.lo) / h - 0.5
        start = np.floor(t_lo + _TIE).astype(np.int64) + 1
        stop = np.floor(t_hi + _TIE).astype(np.int64) + 1
        return start, stop

    def cell_mask(self, Q: Cube) -> np.ndarray:
        start, stop = self.index_bounds(Q)
        r = self.resolution
        mask = np.zeros(self.values.shape, dtype=bool)
        sl = tuple(slice(max(a, 0), min(b, r)) for a, b in zip(start, stop))
        mask[sl] = True
        return mask

    # -- csv ----------------------------------------------------------
    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    def to_csv_text(self) -> str:
        dom = ",".join(f"{a!r}..{b!r}" for a, b in zip(self.lo.tolist(), self.domain.hi.tolist()))
        lines = [f"# domain={dom} resolution={self.resolution}"]
        rows = self.values.reshape(self.resolution, -1)
        lines += [",".join(repr(float(v)) for v in row) for row in rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path, outside=None) -> "GridFunction":
        text = Path(path).read_text()
        return cls.from_csv_text(text, outside=outside)

    @classmethod
    def from_csv_text(cls, text: str, outside=None) -> "GridFunction":
        header = text.splitlines()[0] if text else ""
        m = re.match(r"#\s*domain=(\S+)\s+resolution=(\d+)", header)
        if not m:
            raise ArgumentError("grid CSV must start with '# domain=<lo..hi per axis> resolution=<r>'")
        bounds = [tuple(float(v) for v in part.split("..")) for part in m.group(1).split(",")]
        if any(len(b) != 2 for b in bounds):
            raise ArgumentError(f"malformed domain field {m.group(1)!r}")
        r = int(m.group(2))
        rows = [ln for ln in text.splitlines()[1:] if ln.strip() and not ln.lstrip().startswith("#")]
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows], dtype=float)
        n = len(bounds)
        if data.size != r**n:
            raise ArgumentError(f"expected {r**n} values, found {data.size}")
        dom = Cube.from_bounds([b[0] for b in bounds], [b[1] for b in bounds])
        return cls(dom, data.reshape((r,) * n), outside)


# ---------------------------------------------------------------------
# Cube samples
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class CubeSample:
    """Samples of a function on a cube: grid values plus ``n_fill`` copies of ``fill``."""

    values: np.ndarray
    n_fill: int = 0
    fill: float = 0.0

    @property
    def count(self) -> int:
        return self.values.size + self.n_fill

    def mean(self) -> float:
        return float((self.values.sum() + self.n_fill * self.fill) / self.count)

    def abs_dev(self, c: float) -> float:
        """Mean of ``|v - c|`` over the sample."""
        return float((np.abs(self.values - c).sum() + self.n_fill * abs(self.fill - c)) / self.count)

    def lower_median(self) -> float:
        k = (self.count - 1) // 2
        v = np.sort(self.values, axis=None)
        if self.n_fill == 0:
            return float(v[k])
        below = int(np.searchsorted(v, self.fill, side="left"))
        if k < below:
            return float(v[k])
        if k < below + self.n_fill:
            return float(self.fill)
        return float(v[k - self.n_fill])


def cube_sample(f: GridFunction, Q: Cube) -> CubeSample:
    """Collect the samples of ``f`` on ``Q`` with the admissibility checks of :func:`cube_average`."""
    if Q.side < f.cell_size * (1 - 1e-9):
        raise ResolutionError(f"cube {Q} is smaller than one cell ({f.cell_size:g})")
    start, stop = f.index_bounds(Q)
    counts = stop - start
    if np.any(counts <= 0):
        raise ResolutionError(f"cube {Q} contains no cell center")
    r = f.resolution
    lo_c = np.clip(start, 0, r)
    hi_c = np.clip(stop, 0, r)
    inside = np.prod(np.maximum(hi_c - lo_c, 0))
    total = int(np.prod(counts))
    if f.outside is None:
        overlap = np.prod(np.clip(np.minimum(Q.hi, f.domain.hi) - np.maximum(Q.lo, f.lo), 0, None))
        if overlap < Q.volume * (1 - 1e-9) or inside < total:
            raise DomainError(f"cube {Q} leaves the grid domain {f.domain}")
    sl = tuple(slice(a, b) for a, b in zip(lo_c, hi_c))
    vals = f.values[sl] if inside > 0 else np.empty((0,))
    fill = 0.0 if f.outside is None else f.outside
    return CubeSample(np.asarray(vals).ravel(), int(total - inside), fill)


def cube_average(f: GridFunction, Q: Cube) -> float:
    """Mean of ``f`` over ``Q`` by the midpoint rule on cells centered in ``Q``."""
    return cube_sample(f, Q).mean()


def restrict(f: GridFunction, Q: Cube) -> GridFunction:
    """Sub-grid of the cells of ``f`` centered in ``Q``; the domain snaps to those cells."""
    h = f.cell_size
    if np.any(Q.lo < f.lo - h) or np.any(Q.hi > f.domain.hi + h):
        if f.domain.is_disjoint(Q):
            raise DomainError(f"cube {Q} does not meet the domain {f.domain}")
        raise DomainError(f"cube {Q} exceeds the domain {f.domain} by more than one cell")
    start, stop = f.index_bounds(Q)
    r = f.resolution
    start = np.clip(start, 0, r)
    stop = np.clip(stop, 0, r)
    counts = stop - start
    if np.any(counts <= 0):
        raise DomainError(f"cube {Q} contains no cell of the grid")
    if len(set(counts.tolist())) != 1:
        raise DomainError(f"cells of {f.domain} inside {Q} do not form a cube")
    sl = tuple(slice(a, b) for a, b in zip(start, stop))
    lo = f.lo + start * h
    dom = Cube(tuple(lo + counts[0] * h / 2), counts[0] * h)
    return GridFunction(dom, f.values[sl], f.outside)


# ---------------------------------------------------------------------
# Dyadic families
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicFamily:
    """Dyadic descendants of ``root`` at levels ``min_level..max_level``.

    Cubes are generated on demand; ``cubes`` materializes them as a dict
    ``{level: [Cube, ...]}``.
    """

    root: Cube
    min_level: int
    max_level: int

    @property
    def levels(self) -> range:
        return range(self.min_level, self.max_level + 1)

    def level_side(self, k: int) -> float:
        return self.root.side * 2.0**-k

    def level_corners(self, k: int) -> np.ndarray:
        """Lower corners of the level-``k`` cubes, shape ``(2**(n*k), n)``."""
        m = 2**k
        s = self.level_side(k)
        idx = np.array(list(itertools.product(range(m), repeat=self.root.dim)), dtype=float)
        idx = idx[:, ::-1]  # first axis fastest, matching vertex ordering
        return self.root.lo + idx * s

    def level_cubes(self, k: int) -> list[Cube]:
        s = self.level_side(k)
        return [Cube(tuple(lo + s / 2), s) for lo in self.level_corners(k)]

    @property
    def cubes(self) -> dict[int, list[Cube]]:
        return {k: self.level_cubes(k) for k in self.levels}

    def __iter__(self):
        for k in self.levels:
            yield from self.level_cubes(k)

    def __len__(self) -> int:
        return family_size(self.root.dim, self.min_level, self.max_level)


def family_size(n: int, min_level: int, max_level: int) -> int:
    return sum(2 ** (n * k) for k in range(min_level, max_level + 1))


def make_dyadic_family(root: Cube, min_level: int, max_level: int) -> DyadicFamily:
    if min_level > max_level:
        raise ArgumentError(f"min_level {min_level} exceeds max_level {max_level}")
    if min_level < 0:
        raise ArgumentError("dyadic levels start at 0 (the root)")
    if family_size(root.dim, min_level, max_level) > MAX_FAMILY_CUBES:
        raise CapacityError(
            f"levels {min_level}..{max_level} in dimension {root.dim} exceed {MAX_FAMILY_CUBES} cubes"
        )
    return DyadicFamily(root, int(min_level), int(max_level))


# ---------------------------------------------------------------------
# Vectorised lattice sweeps
# ---------------------------------------------------------------------


def block_view(values: np.ndarray, size: int, stride: int, start=None, stop=None) -> np.ndarray:
    """All ``size^n`` windows of ``values[start:stop]`` whose corners step by ``stride``.

    Returns an array of shape ``(m_1, ..., m_n, size, ..., size)`` (a view).
    """
    n = values.ndim
    start = (0,) * n if start is None else tuple(int(a) for a in start)
    stop = values.shape if stop is None else tuple(int(b) for b in stop)
    sub = values[tuple(slice(a, b) for a, b in zip(start, stop))]
    if any(d < size for d in sub.shape):
        return np.empty((0,) * n + (size,) * n)
    win = sliding_window_view(sub, (size,) * n)
    return win[(slice(None, None, stride),) * n]


def flat_blocks(blocks: np.ndarray, n: int) -> np.ndarray:
    """Reshape ``(m..., s...)`` blocks to ``(M, s**n)``."""
    s = blocks.shape[n:]
    return blocks.reshape(-1, int(np.prod(s)))


def aligned_cells(f: GridFunction, side: float) -> int | None:
    """Number of cells per axis in a cube of the given side, or None if not a whole number."""
    k = side / f.cell_size
    kr = round(k)
    if kr >= 1 and abs(k - kr) <= 1e-9 * max(1.0, k):
        return int(kr)
    return None


def lattice_samples(f: GridFunction, cells: int, stride: int | None = None, pad: int = 0):
    """Samples of every lattice cube of ``cells`` cells per axis, corners stepping by ``stride``.

    With ``pad > 0`` the grid is first extended by ``pad`` cells of ``f.outside``
    on every side (``f.outside`` must be set).  Returns ``(samples, corners)``
    where ``samples`` has shape ``(M, cells**n)`` and ``corners`` holds the
    lower-corner coordinates ``(M, n)``.
    """
    n = f.dim
    stride = max(1, cells // 2) if stride is None else stride
    vals = f.values
    lo = f.lo
    if pad:
        if f.outside is None:
            raise DomainError("padding requires a declared outside value")
        vals = np.pad(vals, pad, constant_values=f.outside)
        lo = lo - pad * f.cell_size
    blocks = block_view(vals, cells, stride)
    counts = blocks.shape[:n]
    if 0 in counts:
        return np.empty((0, cells**n)), np.empty((0, n))
    idx = np.stack(np.meshgrid(*[np.arange(m) * stride for m in counts], indexing="ij"), axis=-1)
    corners = lo + idx.reshape(-1, n) * f.cell_size
    return flat_blocks(blocks, n), corners
