import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmolip.errors import ArgumentError, DomainError, ResolutionError
from cmolip.grid import (Cube, GridFunction, cube_average, cube_sample, family_size, lattice_samples,
                         make_dyadic_family, restrict, unit_cube, vertex_bits)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_cube_rejects_bad_input():
    with pytest.raises(ArgumentError):
        Cube((0.0,), 0.0)
    with pytest.raises(ArgumentError):
        Cube((0.0, 0.0, 0.0), 1.0)
    with pytest.raises(ArgumentError):
        Cube((float("nan"),), 1.0)


def test_cube_geometry():
    Q = Cube((1.0, -1.0), 2.0)
    assert Q.volume == 4.0
    np.testing.assert_array_equal(Q.lo, [0.0, -2.0])
    np.testing.assert_array_equal(Q.hi, [2.0, 0.0])
    assert Q.vertices().shape == (4, 2)
    assert Q.contains(Cube((1.0, -1.0), 1.0))
    assert not Q.contains(Q.scaled(2))
    assert Q.is_disjoint(Q.translated([5.0, 0.0]))
    assert Cube.from_bounds([0, 0], [2, 2]).side == 2.0
    with pytest.raises(ArgumentError):
        Cube.from_bounds([0, 0], [2, 3])


def test_vertex_bits_order():
    np.testing.assert_array_equal(vertex_bits(2), [[0, 0], [1, 0], [0, 1], [1, 1]])
    assert unit_cube(2).side == 1.0


def test_gridfunction_validation():
    dom = unit_cube(1)
    with pytest.raises(ArgumentError):
        GridFunction(dom, np.zeros((4, 4)))
    with pytest.raises(ArgumentError):
        GridFunction(dom, np.array([1.0, np.inf]))
    with pytest.raises(ArgumentError):
        GridFunction.from_function(lambda x: x, dom, 0)
    f = GridFunction(dom, np.arange(4.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_arithmetic_tracks_outside_value():
    dom = unit_cube(1)
    f = GridFunction.constant(2.0, dom, 8, outside=1.0)
    g = GridFunction.constant(3.0, dom, 8)
    assert (f + 1).outside == 2.0
    assert (f - g).outside is None
    assert (f * f).outside == 1.0
    assert abs(-f).outside == 1.0
    with pytest.raises(ArgumentError):
        f + GridFunction.constant(0.0, dom, 16)


@given(arrays(np.float64, st.integers(1, 12), elements=finite))
def test_csv_round_trip_1d(vals):
    f = GridFunction(Cube((0.25,), 3.0), vals)
    g = GridFunction.from_csv_text(f.to_csv_text())
    assert g.same_grid(f)
    np.testing.assert_array_equal(g.values, f.values)


@given(arrays(np.float64, st.tuples(st.integers(1, 6)).map(lambda t: (t[0], t[0])), elements=finite))
def test_csv_round_trip_2d(vals):
    f = GridFunction(Cube((-1.0, 2.0), 0.5), vals)
    g = GridFunction.from_csv_text(f.to_csv_text())
    np.testing.assert_array_equal(g.values, f.values)
    np.testing.assert_allclose(g.domain.lo, f.domain.lo)


def test_csv_rejects_malformed():
    with pytest.raises(ArgumentError):
        GridFunction.from_csv_text("1,2,3\n")
    with pytest.raises(ArgumentError):
        GridFunction.from_csv_text("# domain=0..1 resolution=4\n1,2\n")


def test_cell_membership_tie_rule():
    # cells of [0,1] with 4 cells have centers 1/8, 3/8, 5/8, 7/8
    f = GridFunction(Cube((0.5,), 1.0), np.array([1.0, 2.0, 3.0, 4.0]))
    s = cube_sample(f, Cube.from_bounds([0.125], [0.625]))
    np.testing.assert_array_equal(s.values, [2.0, 3.0])
    assert cube_average(f, Cube.from_bounds([0.0], [0.5])) == 1.5


def test_cube_sample_errors():
    f = GridFunction(Cube((0.5,), 1.0), np.arange(4.0))
    with pytest.raises(ResolutionError):
        cube_sample(f, Cube((0.5,), 0.1))
    with pytest.raises(DomainError):
        cube_sample(f, Cube((1.0,), 1.0))


def test_outside_fill_counts():
    f = GridFunction(Cube((0.5,), 1.0), np.array([1.0, 2.0, 3.0, 4.0]), outside=0.0)
    s = cube_sample(f, Cube((1.0,), 1.0))
    assert s.values.size == 2 and s.n_fill == 2
    assert s.mean() == 7.0 / 4
    assert s.lower_median() == 0.0


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.integers(0, 10), st.floats(-100, 100))
def test_lower_median_matches_sorted_sample(vals, n_fill, fill):
    from cmolip.grid import CubeSample
    s = CubeSample(np.array(vals), n_fill, fill)
    full = np.sort(np.concatenate([vals, [fill] * n_fill]))
    assert s.lower_median() == full[(full.size - 1) // 2]


def test_restrict_snaps_to_cells():
    f = GridFunction.from_function(lambda x: x, Cube((0.0,), 2.0), 16)
    g = restrict(f, Cube((0.5,), 1.0))
    assert g.resolution == 8
    np.testing.assert_allclose(g.values, f.values[8:])
    with pytest.raises(DomainError):
        restrict(f, Cube((10.0,), 1.0))


def test_dyadic_family_counts():
    fam = make_dyadic_family(unit_cube(2), 1, 3)
    assert sum(len(v) for v in fam.cubes.values()) == family_size(2, 1, 3) == 4 + 16 + 64
    assert fam.level_side(3) == 0.125


def test_lattice_samples_shapes():
    f = GridFunction.from_function(lambda x, y: x + y, Cube((0.0, 0.0), 1.0), 8)
    samples, corners = lattice_samples(f, 4)
    assert samples.shape[1] == 16
    assert samples.shape[0] == corners.shape[0] == 9  # stride 2 cells: 3 positions per axis
