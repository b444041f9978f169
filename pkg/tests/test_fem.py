import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nemato.errors import ConfigError, ConfinementError, ContractError, InversionError, MeshError
from nemato.fem import (
    FREE,
    LAMBDA,
    SIGMA,
    Box,
    Mesh,
    State,
    apply_dirichlet,
    edge_quadrature,
    element_dets,
    element_gradient,
    element_gradients,
    geometric_area,
    integrate_boundary,
    integrate_volume,
    min_det,
    polygon_area,
    unit_square_mesh,
)


@pytest.mark.parametrize("n, nn, ne", [(2, 9, 8), (4, 25, 32), (7, 64, 98)])
def test_mesh_counts(n, nn, ne):
    mesh = unit_square_mesh(n)
    assert (mesh.n_nodes, mesh.n_elements) == (nn, ne)
    assert len(mesh.boundary_edges) == 4 * n


def test_mesh_geometry():
    mesh = unit_square_mesh(5)
    assert mesh.measure() == pytest.approx(1.0, rel=1e-15)
    assert mesh.measure("boundary") == pytest.approx(4.0, rel=1e-15)
    assert np.all(mesh.areas > 0)
    np.testing.assert_allclose(mesh.areas, 1 / 50)


def test_default_labels():
    mesh = unit_square_mesh(4)
    assert mesh.measure(LAMBDA) == pytest.approx(1.0)
    assert mesh.measure(SIGMA) == pytest.approx(1.0)
    assert mesh.measure(FREE) == pytest.approx(2.0)
    np.testing.assert_array_equal(mesh.nodes[mesh.dirichlet_nodes, 0], 0.0)
    assert len(mesh.dirichlet_nodes) + len(mesh.free_nodes) == mesh.n_nodes


def test_custom_labels():
    mesh = unit_square_mesh(3, {"left": LAMBDA, "right": LAMBDA, "top": SIGMA})
    assert mesh.measure(LAMBDA) == pytest.approx(2.0)
    assert mesh.measure(SIGMA) == pytest.approx(1.0)
    assert len(mesh.dirichlet_nodes) == 8


@pytest.mark.parametrize("labels, err", [({"diagonal": LAMBDA}, ConfigError), ({"left": FREE}, ConfigError), ({"right": "wet"}, MeshError)])
def test_bad_labels(labels, err):
    with pytest.raises(err):
        unit_square_mesh(3, labels)


@pytest.mark.parametrize("n", [1, 0, 2.5])
def test_bad_size(n):
    with pytest.raises(ConfigError):
        unit_square_mesh(n)


def test_clockwise_element_rejected():
    nodes = [[0, 0], [1, 0], [0, 1]]
    with pytest.raises(MeshError):
        Mesh(nodes, [[0, 2, 1]], [[0, 1], [1, 2], [2, 0]], [LAMBDA, FREE, FREE])


def test_nonconforming_rejected():
    nodes = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, -1]]
    with pytest.raises(MeshError):
        Mesh(nodes, [[0, 1, 2], [1, 3, 2], [0, 4, 1], [1, 0, 3]], [[0, 1]], [LAMBDA])


def test_mesh_arrays_readonly():
    mesh = unit_square_mesh(2)
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 3.0


def test_affine_field_gradient_exact(rng):
    mesh = unit_square_mesh(6)
    G = rng.standard_normal((2, 2))
    c = rng.standard_normal(2)
    y = mesh.nodes @ G.T + c
    np.testing.assert_allclose(element_gradients(mesh, y), np.broadcast_to(G, (mesh.n_elements, 2, 2)), atol=1e-13)
    np.testing.assert_allclose(element_gradient(mesh, y, 5), G, atol=1e-13)
    np.testing.assert_allclose(element_dets(mesh, y), np.linalg.det(G), atol=1e-12)


def test_element_gradient_index():
    mesh = unit_square_mesh(2)
    with pytest.raises(MeshError):
        element_gradient(mesh, mesh.nodes, 8)


def test_gradient_wrong_mesh():
    with pytest.raises(ContractError):
        element_gradients(unit_square_mesh(2), np.zeros((4, 2)))


@pytest.mark.parametrize(
    "f, exact",
    [
        (lambda x: np.ones(len(x)), 1.0),
        (lambda x: x[:, 0], 0.5),
        (lambda x: x[:, 0] * x[:, 1], 0.25),
        (lambda x: x[:, 0] ** 2, 1 / 3),
    ],
)
def test_volume_quadrature_exact_to_degree_two(f, exact):
    assert integrate_volume(unit_square_mesh(3), f) == pytest.approx(exact, rel=1e-13)


def test_volume_quadrature_converges():
    errs = [abs(integrate_volume(unit_square_mesh(n), lambda x: np.sin(np.pi * x[:, 0]) * np.exp(x[:, 1])) - 2 / np.pi * (math.e - 1)) for n in (4, 8)]
    assert errs[1] < errs[0] / 8


def test_volume_infinite_value():
    mesh = unit_square_mesh(2)
    v = np.ones(mesh.n_elements)
    v[3] = np.inf
    assert integrate_volume(mesh, v) == math.inf
    with pytest.raises(ContractError):
        integrate_volume(mesh, np.ones(3))


def test_boundary_quadrature():
    mesh = unit_square_mesh(4)
    assert integrate_boundary(mesh, None, lambda x: np.ones(len(x))) == pytest.approx(4.0)
    # the 2-point Gauss rule is exact for cubics along an edge
    assert integrate_boundary(mesh, SIGMA, lambda x: x[:, 1] ** 3) == pytest.approx(0.25, rel=1e-13)
    idx, pts, w = edge_quadrature(mesh, LAMBDA)
    assert pts.shape == (len(idx), 2, 2) and w.sum() == pytest.approx(1.0)
    np.testing.assert_array_equal(pts[..., 0], 0.0)


def test_boundary_per_edge_values():
    mesh = unit_square_mesh(3)
    assert integrate_boundary(mesh, LAMBDA, np.full(3, 2.0)) == pytest.approx(2.0)
    with pytest.raises(ContractError):
        integrate_boundary(mesh, LAMBDA, np.ones(5))


@settings(max_examples=30)
@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(-1.0, 1.0))
def test_area_identities_affine(a, d, s):
    mesh = unit_square_mesh(4)
    G = np.array([[a, s], [0.0, d]])
    y = mesh.nodes @ G.T
    assert geometric_area(mesh, y) == pytest.approx(a * d, rel=1e-12)
    assert polygon_area(mesh, y) == pytest.approx(a * d, rel=1e-12)
    assert min_det(mesh, y) == pytest.approx(a * d, rel=1e-12)


def test_area_identity_nonaffine(rng):
    mesh = unit_square_mesh(8)
    y = mesh.nodes + 0.03 * rng.standard_normal(mesh.nodes.shape)
    assert min_det(mesh, y) > 0
    assert geometric_area(mesh, y) == pytest.approx(polygon_area(mesh, y), rel=1e-12)


def test_box():
    box = Box((0.0, 0.0), (2.0, 1.0))
    assert box.contains(np.array([[1.0, 0.5], [2.5, 0.5]])).tolist() == [True, False]
    assert np.all(box.contains(box.clamp(np.array([[3.0, -1.0]]))))
    with pytest.raises(Exception):
        Box((1.0, 0.0), (0.0, 1.0))


def test_apply_dirichlet():
    mesh = unit_square_mesh(3)
    y = apply_dirichlet(mesh, mesh.nodes, lambda x: x + np.array([0.1, 0.0]))
    np.testing.assert_allclose(y[mesh.dirichlet_nodes, 0], 0.1)
    np.testing.assert_array_equal(y[mesh.free_nodes], mesh.nodes[mesh.free_nodes])


def test_apply_dirichlet_errors():
    mesh = unit_square_mesh(3)
    with pytest.raises(InversionError):
        apply_dirichlet(mesh, mesh.nodes, lambda x: x + np.array([0.5, 0.0]))
    with pytest.raises(ConfinementError):
        apply_dirichlet(mesh, mesh.nodes, lambda x: x, Box((0.1, 0.0), (1.0, 1.0)))
    with pytest.raises(ContractError):
        apply_dirichlet(mesh, mesh.nodes, np.zeros((2, 2)))


def test_state_contract():
    mesh = unit_square_mesh(2)
    q = State.reference(mesh, (3.0, 4.0))
    np.testing.assert_allclose(q.m, [[0.6, 0.8]] * 9)
    with pytest.raises(ContractError):
        State(mesh, mesh.nodes, np.ones((9, 2)))
    with pytest.raises(ContractError):
        State(mesh, mesh.nodes[:4], q.m)
    with pytest.raises(ValueError):
        q.y[0, 0] = 1.0
    assert q.same_mesh(State.reference(unit_square_mesh(2)))
    assert not q.same_mesh(State.reference(unit_square_mesh(3)))
