"""Named functions, kernels and weights used by the CLI, tests and demos.

Spec strings:

* functions: ``const[:c]``, ``linear``, ``bump[:amp[:radius]]``,
  ``sgnpow:alpha``, ``lacunary[:beta]``, or a path to a grid CSV file;
* kernels: ``sgn[:beta]``, ``riesz:beta``, ``cos[:beta]``, ``table:path[:beta]``;
* weights: ``one``, ``pow:gamma``, ``csv:path``.

In two dimensions ``linear``, ``sgnpow`` and ``lacunary`` depend on the first
coordinate only, while ``bump`` is radial.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ArgumentError
from .grid import Cube, GridFunction
from .operators import KernelSpec

LACUNARY_TERMS = 24


def _floats(parts, names, defaults):
    vals = list(defaults)
    if len(parts) > len(names):
        raise ArgumentError(f"too many parameters; expected at most {names}")
    for i, p in enumerate(parts):
        try:
            vals[i] = float(p)
        except ValueError:
            raise ArgumentError(f"parameter {names[i]} must be a number, got {p!r}") from None
    return vals


def bump_profile(r2: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - r^2))`` for ``r < 1`` and 0 otherwise (peak value 1 at the origin)."""
    inside = r2 < 1
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(inside, np.exp(1 - 1 / np.where(inside, 1 - r2, 1.0)), 0.0)


def bump(amp: float = 1.0, radius: float = 1.0):
    def fn(*x):
        return amp * bump_profile(sum(c * c for c in x) / radius**2)
    return fn


def sgnpow(alpha: float):
    return lambda *x: np.sign(x[0]) * np.abs(x[0]) ** alpha


def lacunary(beta: float = 0.75):
    """``bump(x) * sum_k 2^{-k beta} cos(2^k 2 pi x_1)``: Hoelder of order ``beta`` and compactly supported."""
    def fn(*x):
        s = sum(2.0 ** (-k * beta) * np.cos(2.0**k * 2 * np.pi * x[0]) for k in range(LACUNARY_TERMS))
        return bump_profile(sum(c * c for c in x)) * s
    return fn


def function_from_spec(spec: str, domain: Cube, resolution: int) -> GridFunction:
    """Sample a named preset, or read a grid CSV when ``spec`` is an existing path."""
    if spec.startswith("preset:"):
        spec = spec[len("preset:"):]
    name, *parts = spec.split(":")
    if name == "const":
        (c,) = _floats(parts, ["c"], [1.0])
        return GridFunction.constant(c, domain, resolution, outside=c)
    if name == "linear":
        _floats(parts, [], [])
        return GridFunction.from_function(lambda *x: x[0], domain, resolution)
    if name == "bump":
        amp, radius = _floats(parts, ["amp", "radius"], [1.0, 1.0])
        if radius <= 0:
            raise ArgumentError("bump radius must be positive")
        return GridFunction.from_function(bump(amp, radius), domain, resolution, outside=0.0)
    if name == "sgnpow":
        if not parts:
            raise ArgumentError("sgnpow needs an exponent, e.g. sgnpow:0.5")
        (a,) = _floats(parts, ["alpha"], [0.0])
        if not 0 < a <= 1:
            raise ArgumentError("sgnpow exponent must lie in (0, 1]")
        return GridFunction.from_function(sgnpow(a), domain, resolution)
    if name == "lacunary":
        (beta,) = _floats(parts, ["beta"], [0.75])
        if not 0 < beta <= 1:
            raise ArgumentError("lacunary exponent must lie in (0, 1]")
        return GridFunction.from_function(lacunary(beta), domain, resolution, outside=0.0)
    path = Path(spec)
    if path.exists():
        return GridFunction.from_csv(path)
    raise ArgumentError(f"unknown function preset or missing file: {spec!r}")


def kernel_from_spec(spec: str, n: int) -> KernelSpec:
    name, *parts = spec.split(":")
    if name == "sgn":
        (beta,) = _floats(parts, ["beta"], [0.0])
        return KernelSpec.sgn(n, beta)
    if name == "riesz":
        if not parts:
            raise ArgumentError("riesz needs an order, e.g. riesz:0.5")
        (beta,) = _floats(parts, ["beta"], [0.0])
        if beta <= 0:
            raise ArgumentError("riesz order must be positive")
        return KernelSpec.riesz(beta, n)
    if name == "cos":
        if n != 2:
            raise ArgumentError("the cos kernel is two-dimensional")
        (beta,) = _floats(parts, ["beta"], [0.0])
        return KernelSpec.from_angle_function(np.cos, beta)
    if name == "table":
        if not parts:
            raise ArgumentError("table needs a file, e.g. table:omega.csv")
        path, *rest = parts
        (beta,) = _floats(rest, ["beta"], [0.0])
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if n == 1:
            if data.size != 2:
                raise ArgumentError("a 1-d kernel table holds two values: Omega(+1), Omega(-1)")
            return KernelSpec(data.ravel(), beta)
        if data.shape[1] != 2:
            raise ArgumentError("a 2-d kernel table has rows 'angle,value'")
        return KernelSpec.from_table(data[:, 0], data[:, 1], beta)
    raise ArgumentError(f"unknown kernel preset: {spec!r}")


def weight_from_spec(spec: str, domain: Cube, resolution: int) -> GridFunction:
    name, *parts = spec.split(":")
    if name == "one":
        _floats(parts, [], [])
        return GridFunction.constant(1.0, domain, resolution)
    if name == "pow":
        if not parts:
            raise ArgumentError("pow needs an exponent, e.g. pow:0.5")
        (g,) = _floats(parts, ["gamma"], [0.0])
        return GridFunction.from_function(lambda *x: np.sqrt(sum(c * c for c in x)) ** g, domain, resolution)
    if name == "csv":
        if not parts:
            raise ArgumentError("csv needs a file, e.g. csv:w.csv")
        w = GridFunction.from_csv(":".join(parts))
        if not np.all(w.values > 0):
            raise ArgumentError("weights must be strictly positive")
        return w
    raise ArgumentError(f"unknown weight preset: {spec!r}")
