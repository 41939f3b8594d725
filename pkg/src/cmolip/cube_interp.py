"""Cubes carrying values at their vertices, and their multilinear interpolant.

The interpolant of a weighted cube ``Q`` with vertex values ``psi`` is::

    F_Q(x) = sum_{a in V_Q} prod_j (2 c_j - x_j - a_j) / (2 c_j - 2 a_j) * psi(a)

which is affine in each coordinate, reproduces ``psi`` at the vertices and
restricts to the interpolant of a face on that face.  Vertex ``k`` is the one
whose coordinate ``j`` is the upper endpoint exactly when bit ``j`` of ``k``
is set, so in the plane the order is (0,0), (1,0), (0,1), (1,1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError
from .grid import Cube, vertex_bits


@dataclass(frozen=True, eq=False)
class WeightedCube:
    cube: Cube
    psi: np.ndarray

    def __post_init__(self):
        psi = np.array(self.psi, dtype=float).ravel()
        if psi.size != 2**self.cube.dim:
            raise ArgumentError(f"{self.cube.dim}-d cube needs {2 ** self.cube.dim} vertex values, got {psi.size}")
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)

    @classmethod
    def from_function(cls, cube: Cube, fn) -> "WeightedCube":
        """Vertex values ``fn(vertex)`` for each vertex (a length-n array)."""
        return cls(cube, [fn(a) for a in cube.vertices()])

    @property
    def dim(self) -> int:
        return self.cube.dim

    def vertex_items(self):
        return list(zip(map(tuple, self.cube.vertices()), self.psi.tolist()))


def vertex_osc(wq: WeightedCube) -> float:
    """``min_c sum_a |psi(a) - c|``, attained at the lower median of the vertex values."""
    v = np.sort(wq.psi)
    c = v[(v.size - 1) // 2]
    return float(np.abs(v - c).sum())


def interp_core(lo, hi, psi, x) -> np.ndarray:
    """Evaluate the closed-form interpolant without checking that ``x`` lies in the cube.

    ``lo``, ``hi`` and ``x`` broadcast to shape ``(..., n)``; ``psi`` to ``(..., 2**n)``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = x.shape[-1]
    two_c = lo + hi
    out = 0.0
    for k, bits in enumerate(vertex_bits(n)):
        a = np.where(bits == 1, hi, lo)
        w = np.prod((two_c - x - a) / (two_c - 2 * a), axis=-1)
        out = out + w * psi[..., k]
    return np.asarray(out)


def interpolate(wq: WeightedCube, x):
    """Value of the interpolant at ``x`` (a point or an array of points of shape ``(..., n)``)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != wq.dim:
        if wq.dim == 1:
            x = x[..., None]
        else:
            raise ArgumentError(f"points of shape {x.shape} for a {wq.dim}-d cube")
    if not np.all(wq.cube.contains_point(x, tol=1e-12)):
        raise DomainError(f"point outside the cube {wq.cube}")
    out = interp_core(wq.cube.lo, wq.cube.hi, wq.psi, x)
    return float(out) if out.ndim == 0 else out


def restrict_to_face(wq: WeightedCube, axis: int, upper: bool):
    """Weighted cube on the face ``x_axis = hi`` (``upper``) or ``lo``.

    In one dimension the face is a vertex and its value is returned.
    """
    n = wq.dim
    if not 0 <= axis < n:
        raise ArgumentError(f"axis {axis} is invalid for a {n}-d cube")
    bits = vertex_bits(n)
    verts = wq.cube.vertices()
    keep = bits[:, axis] == int(bool(upper))
    vals = np.array([interp_core(wq.cube.lo, wq.cube.hi, wq.psi, v) for v in verts[keep]])
    if n == 1:
        return float(vals[0])
    center = np.delete(wq.cube.c, axis)
    return WeightedCube(Cube(tuple(center), wq.cube.side), vals)


@dataclass(frozen=True)
class GradientReport:
    max_partial: float
    bound: float
    ok: bool


def gradient_bound_check(wq: WeightedCube, samples: int = 33, fd_error_budget: float = 1e-4) -> GradientReport:
    """Compare central-difference partials on an interior lattice with ``|Q|^{-1/n} M_Q``."""
    if samples < 2:
        raise ArgumentError("need at least 2 samples per axis")
    n = wq.dim
    Q = wq.cube
    t = (np.arange(samples) + 0.5) / samples
    grids = np.meshgrid(*[Q.lo[j] + t * Q.side for j in range(n)], indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, n)
    step = 1e-6 * Q.side
    best = 0.0
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        d = (interp_core(Q.lo, Q.hi, wq.psi, pts + e) - interp_core(Q.lo, Q.hi, wq.psi, pts - e)) / (2 * step)
        best = max(best, float(np.abs(d).max()))
    bound = Q.volume ** (-1.0 / n) * vertex_osc(wq)
    return GradientReport(best, bound, best <= bound * (1 + 1e-6) + fd_error_budget)
