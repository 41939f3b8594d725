import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmolip.errors import ArgumentError, PreconditionError
from cmolip.grid import Cube, GridFunction
from cmolip.harness import (annulus_upper_decay, build_median_sets, compactness_lower_probe,
                            fk_compactness_probe, kernel_direction, lower_bound_ratio, median_conditions,
                            median_value)
from cmolip.operators import CommutatorSpec, KernelSpec
from cmolip.presets import function_from_spec, kernel_from_spec
from cmolip.weights import WeightSpec

DOM = Cube((0.0,), 16.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=64))
def test_median_value_splits_the_sample(vals):
    f = GridFunction(Cube((0.5,), 1.0), np.array(vals))
    m = median_value(f, f.domain)
    assert median_conditions(np.array(vals), m) == (True, True)


def test_kernel_direction_prefers_positive_window():
    theta, eps0, sign = kernel_direction(KernelSpec.sgn(1))
    assert sign == 1 and eps0 > 0
    np.testing.assert_allclose(np.abs(theta), [1.0])


@pytest.mark.parametrize("spec", ["sgnpow:0.5", "bump", "lacunary"])
def test_median_construction_postconditions(spec):
    b = function_from_spec(spec, DOM, 1024)
    mc = build_median_sets(b, KernelSpec.sgn(1), Cube((0.2,), 0.25), 0.25)
    assert mc.ok and mc.failures == 0
    assert mc.k0 >= 10
    assert b.domain.contains(mc.P, tol=1e-9)
    q_cells = int(b.cell_mask(mc.Q).sum())
    assert abs(int(mc.F1.sum()) - q_cells / 2) <= 1
    assert not np.any(mc.E1 & ~b.cell_mask(mc.Q))


def test_median_construction_argument_checks():
    b = function_from_spec("bump", DOM, 256)
    with pytest.raises(ArgumentError):
        build_median_sets(b, KernelSpec.sgn(1), Cube((0.0,), 0.25), 1.5)
    with pytest.raises(ArgumentError):
        build_median_sets(b, KernelSpec.from_angle_function(np.cos), Cube((0.0,), 0.25), 0.25)


def _weight(res, p, q):
    return WeightSpec(GridFunction.constant(1.0, DOM, res), p, q)


def test_lower_bound_ratio_positive_and_degenerate():
    b = function_from_spec("sgnpow:0.5", DOM, 1024)
    r = lower_bound_ratio(b, KernelSpec.sgn(1), _weight(1024, 1.5, 6.0), Cube((0.0,), 0.25), 1, 0.5)
    assert r.ratio > 0 and not r.degenerate
    c = GridFunction.constant(1.0, DOM, 1024)
    r = lower_bound_ratio(c, KernelSpec.sgn(1), _weight(1024, 1.5, 6.0), Cube((0.0,), 0.25), 1, 0.5)
    assert r.degenerate
    with pytest.raises(ArgumentError):
        lower_bound_ratio(b, KernelSpec.sgn(1), _weight(1024, 1.5, 4.0), Cube((0.0,), 0.25), 1, 0.5)


def test_linear_symbol_ratio_is_scale_free():
    b = function_from_spec("linear", DOM, 2048)
    w = _weight(2048, 1.5, 6.0)
    ratios = [lower_bound_ratio(b, KernelSpec.sgn(1), w, Cube((0.0,), s), 1, 0.5).ratio for s in (0.5, 0.25, 0.125)]
    assert max(ratios) / min(ratios) < 1.01


def test_compactness_probe_exclusion_and_scaling():
    b = function_from_spec("linear", Cube((0.0, 0.0), 32.0), 128)
    k = kernel_from_spec("cos", 2)
    w = WeightSpec(GridFunction.constant(1.0, b.domain, 128), 4 / 3, 2.0)
    Q = Cube((0.0, 0.0), 1.0)
    eta0 = 0.125
    full = compactness_lower_probe(b, k, w, Q, 1, 0.5, eta0, cell_floor=True)
    assert full.ratio > 0
    e_cells = np.flatnonzero(b.cell_mask(full.E).ravel())
    B = np.zeros(b.values.shape, dtype=bool)
    B.ravel()[e_cells[: e_cells.size // 2]] = True
    half = compactness_lower_probe(b, k, w, Q, 1, 0.5, eta0, B=B, cell_floor=True)
    assert full.ratio / half.ratio < 4
    two = compactness_lower_probe(b * 2, k, w, Q, 1, 0.5, eta0, cell_floor=True)
    assert two.lhs == pytest.approx(2 * full.lhs, rel=1e-9)
    with pytest.raises(PreconditionError):
        compactness_lower_probe(b, k, w, Q, 1, 0.5, 100.0, cell_floor=True)


def test_annulus_decay_slope_and_edge_cases():
    dom = Cube((0.0,), 64.0)
    b = function_from_spec("bump", dom, 4096)
    w = WeightSpec(GridFunction.constant(1.0, dom, 4096), 1.5, 6.0)
    Q = Cube((0.0,), 1 / 16)
    r = annulus_upper_decay(b, KernelSpec.sgn(1), w, Q, 1, 0.5, range(3, 8))
    assert r.slope < 0
    zero = annulus_upper_decay(b, KernelSpec.sgn(1), w, Q, 1, 0.5, range(3, 6), f=b * 0.0)
    assert zero.norms == (0.0, 0.0, 0.0) and zero.slope is None
    with pytest.warns(UserWarning):
        cut = annulus_upper_decay(b, KernelSpec.sgn(1), w, Q, 1, 0.5, range(3, 12))
    assert cut.truncated == (10, 11)


def _ball(b, p, levels):
    x = b.points()[..., 0]
    out = []
    for lev in levels:
        ind = GridFunction(b.domain, (np.abs(x) < 2.0**-lev / 2).astype(float))
        out.append(GridFunction(b.domain, ind.values / (ind.integral() ** (1 / p))))
    return out


def test_fk_probe_curves():
    b = function_from_spec("bump", DOM, 1024)
    spec = CommutatorSpec(KernelSpec.sgn(1), b, 1)
    r = fk_compactness_probe(spec, None, 1.5, 6.0, _ball(b, 1.5, range(5)), [1, 2, 4, 8],
                             [0.5, 0.25, 0.125, 0.0625])
    assert r.bound > 0
    assert r.modulus_monotone and r.tail_monotone
    assert r.tail[8.0] == 0.0  # nothing of the grid lies outside [-8, 8]
    with pytest.raises(ArgumentError):
        fk_compactness_probe(spec, None, 1.5, 6.0, [b * 100.0], [1], [0.5])
    with pytest.raises(ArgumentError):
        fk_compactness_probe(spec, None, 1.5, 6.0, [], [1], [0.5])
