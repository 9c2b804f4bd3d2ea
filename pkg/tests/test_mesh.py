import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from savch.errors import InvalidParameterError
from savch.mesh import (
    build_unit_square_mesh,
    coarse_node_indices,
    element_geometry,
    inject,
    prolong,
    triangle_geometry,
)


@pytest.mark.parametrize("n", [1, 2, 3, 16])
def test_counts_and_area(n):
    m = build_unit_square_mesh(n)
    assert m.num_nodes == (n + 1) ** 2
    assert m.num_triangles == 2 * n * n
    assert m.h == 1.0 / n
    assert np.all(m.areas > 0)
    assert abs(m.areas.sum() - 1.0) <= 1e-14
    assert m.triangles.min() >= 0 and m.triangles.max() < m.num_nodes


def test_single_cell():
    m = build_unit_square_mesh(1)
    np.testing.assert_array_equal(m.nodes, [[0, 0], [1, 0], [0, 1], [1, 1]])
    # diagonal from bottom-left (0) to top-right (3)
    assert all(0 in t and 3 in t for t in m.triangles)
    np.testing.assert_array_equal(m.areas, [0.5, 0.5])


def test_row_major_ordering():
    m = build_unit_square_mesh(4)
    assert m.node_index(3, 2) == 2 * 5 + 3
    np.testing.assert_array_equal(m.nodes[m.node_index(3, 2)], [0.75, 0.5])


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_invalid_resolution(bad):
    with pytest.raises(InvalidParameterError):
        build_unit_square_mesh(bad)


def test_reference_triangle_geometry():
    area, grads = triangle_geometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert area == 0.5
    np.testing.assert_array_equal(grads, [[-1, -1], [1, 0], [0, 1]])


def test_scaled_triangle_geometry():
    v = np.array([[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]])
    a1, g1 = triangle_geometry(v)
    a2, g2 = triangle_geometry(2 * v)
    assert a2 == pytest.approx(4 * a1, rel=1e-15)
    np.testing.assert_allclose(g2, g1 / 2, rtol=1e-14)


def test_element_geometry_bounds():
    m = build_unit_square_mesh(2)
    area, grads = element_geometry(m, 0)
    assert area == pytest.approx(0.125)
    assert np.abs(grads.sum(axis=0)).max() <= 1e-15
    with pytest.raises(IndexError):
        element_geometry(m, m.num_triangles)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6))
def test_gradients_sum_to_zero(coords):
    v = np.array(coords).reshape(3, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        area, grads = triangle_geometry(v)
    if abs(area) < 1e-3:
        return
    scale = np.abs(grads).max()
    assert np.abs(grads.sum(axis=0)).max() <= 1e-14 * max(1.0, scale)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_nested_nodes(n):
    coarse = build_unit_square_mesh(n)
    fine = build_unit_square_mesh(2 * n)
    idx = coarse_node_indices(coarse, fine)
    np.testing.assert_array_equal(fine.nodes[idx], coarse.nodes)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_prolong_then_inject_is_identity(n, seed):
    v = np.random.default_rng(seed).standard_normal((n + 1) ** 2)
    coarse = build_unit_square_mesh(n)
    fine = build_unit_square_mesh(2 * n)
    np.testing.assert_array_equal(inject(fine, prolong(coarse, v, fine), coarse), v)


def test_prolong_reproduces_linear_functions():
    coarse = build_unit_square_mesh(3)
    fine = build_unit_square_mesh(12)
    lin = lambda p: 0.3 + 2 * p[:, 0] - 1.5 * p[:, 1]
    np.testing.assert_allclose(prolong(coarse, lin(coarse.nodes), fine), lin(fine.nodes), atol=1e-14)


def test_non_nested_rejected():
    with pytest.raises(InvalidParameterError):
        inject(build_unit_square_mesh(6), np.zeros(49), build_unit_square_mesh(4))
