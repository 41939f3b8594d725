import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmolip.approximation import (ApproxPlan, approx_error, build_vertex_maps, chain_constant,
                                  dyadic_chain, mollifier_weights, mollify, plan_scales,
                                  regularity_chain_bound, scale_curves)
from cmolip.errors import ArgumentError, ScaleUnresolvableError
from cmolip.grid import Cube, GridFunction, make_dyadic_family
from cmolip.presets import function_from_spec


@pytest.fixture(scope="module")
def bump():
    return function_from_spec("bump", Cube((0.0,), 2.0), 1024)


@pytest.fixture(scope="module")
def bump_fit(bump):
    plan = plan_scales(bump, 0.5, 0.1)
    return plan, build_vertex_maps(bump, plan)


def test_plan_indices_frozen(bump):
    p = plan_scales(bump, 0.5, 0.2)
    assert (p.i_eps, p.j_eps, p.k_eps, p.d1, p.d2) == (-5, 2, 0, 1, 14)
    p = plan_scales(bump, 0.5, 0.1)
    assert (p.i_eps, p.j_eps, p.k_eps, p.d1, p.d2) == (-7, 3, 0, 1, 18)
    assert p.offset_constant == 0.0


def test_plan_2d_frozen():
    f = function_from_spec("bump", Cube((0.0, 0.0), 4.0), 256)
    p = plan_scales(f, 0.5, 0.2)
    assert (p.i_eps, p.j_eps, p.k_eps, p.d1, p.d2) == (-5, 2, 0, 1, 11)


def test_plan_invariants(bump_fit):
    plan, _ = bump_fit
    assert plan.i_eps + 3 <= plan.k_eps
    assert plan.d1 == plan.k_eps + 1
    assert plan.d2 >= max(plan.d1, plan.j_eps)
    assert plan.lattice_steps == 2 ** (plan.d1 - plan.i_eps + 1)
    assert plan.shell_side(plan.d1) == 2.0**plan.i_eps


def test_plan_validation():
    with pytest.raises(ArgumentError):
        ApproxPlan(0.1, 0.5, 1, i_eps=0, j_eps=0, k_eps=1, d1=2, d2=2)
    with pytest.raises(ArgumentError):
        ApproxPlan(0.1, 0.5, 1, i_eps=-3, j_eps=5, k_eps=0, d1=1, d2=3)


def test_non_dyadic_grid_is_rejected():
    f = function_from_spec("bump", Cube((0.0,), 3.0), 1000)
    with pytest.raises(ArgumentError):
        plan_scales(f, 0.5, 0.1)


def test_sgnpow_is_not_approximable():
    f = function_from_spec("sgnpow:0.5", Cube((0.0,), 2.0), 1024)
    with pytest.raises(ScaleUnresolvableError) as exc:
        plan_scales(f, 0.5, 0.1)
    assert exc.value.condition in (1, 2, 3, 4)


def test_scale_curves_extend_beyond_grid(bump):
    c = scale_curves(bump, 0.5)
    assert c.s_max > 1
    assert c.sup_disjoint(c.s_max) <= c.sup_disjoint(0) + 1e-15


def test_interpolant_is_continuous(bump_fit):
    plan, g = bump_fit
    # shell boundaries sit at |x| = 2^m; compare values just inside and outside
    for m in range(plan.d1, plan.d1 + 4):
        r = 2.0**m
        for s in (-1, 1):
            a, b = g(np.array([[s * r * (1 - 1e-12)]])), g(np.array([[s * r * (1 + 1e-12)]]))
            assert a == pytest.approx(b, abs=1e-9)
    assert float(g(np.array([[2.0 ** (plan.d2 + 3)]]))[0]) == plan.offset_constant


def test_vertex_values_are_box_means(bump_fit, bump):
    plan, g = bump_fit
    x = np.array([[0.0]])
    side = plan.shell_side(plan.d1)
    mean = bump.values[bump.cell_mask(Cube((0.0,), side))].mean()
    assert float(g(x)[0]) == pytest.approx(mean, rel=1e-12)


def test_error_is_below_eps(bump_fit, bump):
    plan, g = bump_fit
    err = approx_error(bump, g, 0.5, make_dyadic_family(bump.domain, 0, 10))
    assert 0 < err < plan.eps
    assert g.lipschitz_bound() < math.inf
    assert g.pieces_containing([0.25])


@given(st.floats(0.02, 0.5), st.sampled_from([1, 2]))
def test_mollifier_has_unit_mass(t, n):
    h = 0.01
    w = mollifier_weights(t, h, n)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w >= 0)
    np.testing.assert_allclose(w, np.flip(w))


def test_mollify_contracts_and_rejects_small_radius(bump_fit, bump):
    _, g = bump_fit
    h = mollify(g, 4 * bump.cell_size, bump)
    gs = g.sample(bump)
    assert np.abs(h.values).max() <= np.abs(gs.values).max() + 1e-12
    assert np.abs(h.values - gs.values).max() < 1e-3
    with pytest.raises(ArgumentError):
        mollify(g, 0.5 * bump.cell_size, bump)


def test_chain_constant_closed_form():
    assert chain_constant(1.0, 1) == pytest.approx(2 * 2 + 2)
    assert chain_constant(0.5, 2) == pytest.approx(4 * (1 / (1 - 2**-0.5) + 1))


def test_dyadic_chain_nests():
    Q = Cube((0.0,), 1.0)
    sub = Cube((0.3,), 1 / 16)
    chain = dyadic_chain(Q, sub)
    assert [c.side for c in chain] == [2.0**-j for j in range(5)]
    assert all(a.contains(b, tol=1e-12) for a, b in zip(chain, chain[1:]))
    assert all(c.contains(sub, tol=1e-12) for c in chain)


def test_regularity_chain_bound_holds_for_holder_function():
    f = function_from_spec("sgnpow:0.5", Cube((0.0,), 2.0), 1024)
    rep = regularity_chain_bound(f, Cube((0.0,), 2.0), Cube((0.5,), 1 / 32), 0.5, eps=0.5)
    assert rep.ok, rep.reason
    rep = regularity_chain_bound(f, Cube((0.0,), 2.0), Cube((0.5,), 1 / 32), 0.5, eps=0.1)
    assert not rep.ok and "exceeds" in rep.reason
