"""P1 finite elements on the unit square.

The reference mesh is a structured triangulation of ``(0, 1)^2`` with
``2 n^2`` right triangles. Boundary edges carry one of the labels
``"Lambda"`` (Dirichlet part), ``"Sigma"`` (traction part) or ``"free"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ConfigError, ConfinementError, ContractError, InversionError, MeshError

__all__ = [
    "LAMBDA",
    "SIGMA",
    "FREE",
    "Mesh",
    "State",
    "Box",
    "unit_square_mesh",
    "element_gradient",
    "element_gradients",
    "integrate_volume",
    "integrate_boundary",
    "min_det",
    "element_dets",
    "geometric_area",
    "polygon_area",
    "apply_dirichlet",
    "edge_quadrature",
    "TRI_BARY",
    "TRI_WEIGHTS",
    "EDGE_POINTS",
    "EDGE_WEIGHTS",
]

LAMBDA, SIGMA, FREE = "Lambda", "Sigma", "free"
_LABELS = (LAMBDA, SIGMA, FREE)
_SIDES = ("left", "right", "bottom", "top")

#: 3-point (degree 2) triangle rule at the edge midpoints, barycentric coordinates.
TRI_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
TRI_WEIGHTS = np.full(3, 1.0 / 3.0)
#: 2-point Gauss rule on an edge, parameter in [0, 1].
EDGE_POINTS = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])
EDGE_WEIGHTS = np.array([0.5, 0.5])


@dataclass(frozen=True)
class Box:
    """Axis-aligned confinement box ``O = (lo, hi)``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ConfigError("confinement box needs lo < hi componentwise")

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, float)
        return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=-1)

    def clamp(self, pts, margin: float = 1e-12) -> np.ndarray:
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return np.clip(pts, lo, hi)


class Mesh:
    """Immutable P1 triangulation.

    Attributes
    ----------
    nodes : (nn, 2) array
    elements : (ne, 3) int array, counter-clockwise
    boundary_edges : (nb, 2) int array
    edge_labels : (nb,) array of str
    edge_sides : (nb,) array of str
    areas : (ne,) array
    grads : (ne, 3, 2) array of shape-function gradients
    """

    def __init__(self, nodes, elements, boundary_edges, edge_labels, edge_sides=None, boundary_loop=None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.boundary_edges = np.asarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.edge_labels = np.asarray(edge_labels, dtype=object)
        self.edge_sides = np.asarray(edge_sides if edge_sides is not None else [""] * len(self.boundary_edges), dtype=object)
        self.boundary_loop = None if boundary_loop is None else np.asarray(boundary_loop, dtype=np.int64)
        for arr in (self.nodes, self.elements, self.boundary_edges):
            arr.setflags(write=False)
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise MeshError("elements must be (ne, 3)")
        if len(self.edge_labels) != len(self.boundary_edges):
            raise MeshError("one label per boundary edge required")
        if not set(self.edge_labels) <= set(_LABELS):
            raise MeshError(f"labels must be among {_LABELS}")
        X = self.nodes[self.elements]
        E = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=-1)  # columns are edges
        det = E[:, 0, 0] * E[:, 1, 1] - E[:, 0, 1] * E[:, 1, 0]
        if np.any(det <= 0):
            raise MeshError("degenerate or clockwise element")
        self.areas = 0.5 * det
        Einv = np.linalg.inv(E)  # rows: gradients of barycentric coords 1, 2
        g = np.empty((len(self.elements), 3, 2))
        g[:, 1] = Einv[:, 0]
        g[:, 2] = Einv[:, 1]
        g[:, 0] = -g[:, 1] - g[:, 2]
        self.grads = g
        self.areas.setflags(write=False)
        self.grads.setflags(write=False)
        self._check_conforming()
        if not np.any(self.edge_labels == LAMBDA):
            raise MeshError("the Dirichlet part Lambda must be nonempty")

    def _check_conforming(self):
        edges = {}
        for e, tri in enumerate(self.elements):
            for a, b in ((0, 1), (1, 2), (2, 0)):
                key = tuple(sorted((int(tri[a]), int(tri[b]))))
                edges.setdefault(key, []).append(e)
        if any(len(v) > 2 for v in edges.values()):
            raise MeshError("non-conforming mesh: edge shared by more than two elements")
        boundary = {k for k, v in edges.items() if len(v) == 1}
        given = {tuple(sorted(map(int, be))) for be in self.boundary_edges}
        if boundary != given:
            raise MeshError("boundary edge list does not match the element boundary")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.boundary_edges]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    def edges_with(self, label: str) -> np.ndarray:
        return np.nonzero(self.edge_labels == label)[0]

    def nodes_with(self, label: str) -> np.ndarray:
        """Sorted node ids lying on edges with ``label``."""
        idx = self.edges_with(label)
        return np.unique(self.boundary_edges[idx].ravel())

    @cached_property
    def dirichlet_nodes(self) -> np.ndarray:
        return self.nodes_with(LAMBDA)

    @cached_property
    def free_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, bool)
        mask[self.dirichlet_nodes] = False
        return np.nonzero(mask)[0]

    def measure(self, label: str | None = None) -> float:
        """Area of the domain (``label=None``) or length of a boundary part."""
        if label is None:
            return float(self.areas.sum())
        if label == "boundary":
            return float(self.edge_lengths.sum())
        return float(self.edge_lengths[self.edges_with(label)].sum())

    @cached_property
    def quad_points(self) -> np.ndarray:
        """Reference coordinates of the 3-point rule, shape (ne, 3, 2)."""
        return np.einsum("qa,eai->eqi", TRI_BARY, self.nodes[self.elements])

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Weights of the 3-point rule, shape (ne, 3)."""
        return self.areas[:, None] * TRI_WEIGHTS[None, :]


def unit_square_mesh(n: int, labels: Mapping[str, str] | None = None) -> Mesh:
    """Structured mesh of ``(0, 1)^2`` with ``2 n^2`` triangles.

    Parameters
    ----------
    n : int
        Subdivisions per side, ``n >= 2``.
    labels : mapping, optional
        Side name (``left``, ``right``, ``bottom``, ``top``) to label. The
        default puts ``Lambda`` on the left edge and ``Sigma`` on the right.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ConfigError("mesh size n must be an integer >= 2")
    lab = {"left": LAMBDA, "right": SIGMA, "bottom": FREE, "top": FREE}
    if labels:
        unknown = set(labels) - set(_SIDES)
        if unknown:
            raise ConfigError(f"unknown mesh sides {sorted(unknown)}")
        lab.update(labels)
    h = 1.0 / n
    xs = np.arange(n + 1) * h
    X, Y = np.meshgrid(xs, xs)  # node id = j*(n+1)+i
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    nodes[:, 0][np.isclose(nodes[:, 0], 1.0)] = 1.0
    nodes[:, 1][np.isclose(nodes[:, 1], 1.0)] = 1.0

    def nid(i, j):
        return j * (n + 1) + i

    elems = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            elems.append((a, b, c))
            elems.append((a, c, d))
    edges, labs, sides = [], [], []
    # counter-clockwise boundary walk: bottom, right, top, left
    loop = []
    for i in range(n):
        edges.append((nid(i, 0), nid(i + 1, 0)))
        sides.append("bottom")
        loop.append(nid(i, 0))
    for j in range(n):
        edges.append((nid(n, j), nid(n, j + 1)))
        sides.append("right")
        loop.append(nid(n, j))
    for i in range(n, 0, -1):
        edges.append((nid(i, n), nid(i - 1, n)))
        sides.append("top")
        loop.append(nid(i, n))
    for j in range(n, 0, -1):
        edges.append((nid(0, j), nid(0, j - 1)))
        sides.append("left")
        loop.append(nid(0, j))
    labs = [lab[s] for s in sides]
    if LAMBDA not in labs:
        raise ConfigError("at least one side must be labeled Lambda")
    return Mesh(nodes, elems, edges, labs, sides, loop)


@dataclass(frozen=True)
class State:
    """Discrete state ``q = (y, m)``: nodal deformation and nodal unit director.

    The director is stored on the reference mesh, i.e. ``m`` represents the
    composition of the deformed-configuration director with ``y``.
    """

    mesh: Mesh = field(repr=False)
    y: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        m = np.array(self.m, dtype=float)
        if y.shape != (self.mesh.n_nodes, 2) or m.shape != (self.mesh.n_nodes, 2):
            raise ContractError("y and m must be (n_nodes, 2) arrays on the state's mesh")
        if np.any(np.abs(np.linalg.norm(m, axis=1) - 1.0) > 1e-10):
            raise ContractError("director must have unit length at every node")
        y.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "m", m)

    @classmethod
    def reference(cls, mesh: Mesh, director=(1.0, 0.0)) -> "State":
        m = np.tile(np.asarray(director, float) / np.linalg.norm(director), (mesh.n_nodes, 1))
        return cls(mesh, mesh.nodes.copy(), m)

    def replace(self, y=None, m=None) -> "State":
        return State(self.mesh, self.y if y is None else y, self.m if m is None else m)

    def same_mesh(self, other: "State") -> bool:
        return self.mesh is other.mesh or (
            self.mesh.n_nodes == other.mesh.n_nodes and np.array_equal(self.mesh.elements, other.mesh.elements) and np.array_equal(self.mesh.nodes, other.mesh.nodes)
        )


# --------------------------------------------------------------------------
# Gradients, quadrature and geometry
# --------------------------------------------------------------------------
def element_gradients(mesh: Mesh, field_values) -> np.ndarray:
    """Per-element gradients of a nodal field ``(nn, k)`` -> ``(ne, k, 2)``."""
    v = np.asarray(field_values, dtype=float)
    if v.shape[0] != mesh.n_nodes:
        raise ContractError("field does not live on this mesh")
    return np.einsum("eak,eaj->ekj", v[mesh.elements], mesh.grads)


def element_gradient(mesh: Mesh, field_values, element: int) -> np.ndarray:
    """Constant gradient of a P1 field on one element."""
    if not 0 <= element < mesh.n_elements:
        raise MeshError("element index out of range")
    v = np.asarray(field_values, dtype=float)
    return np.einsum("ak,aj->kj", v[mesh.elements[element]], mesh.grads[element])


def element_dets(mesh: Mesh, y) -> np.ndarray:
    F = element_gradients(mesh, y)
    return F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]


def integrate_volume(mesh: Mesh, integrand) -> float:
    """Integral over the reference domain.

    ``integrand`` is either an array of per-element constants (midpoint
    rule) or a callable ``f(x) -> values`` evaluated at the 3-point rule.
    Any infinite element value makes the integral ``inf``; no infinite
    value enters the summation.
    """
    if callable(integrand):
        vals = np.asarray(integrand(mesh.quad_points.reshape(-1, 2)), dtype=float).reshape(mesh.n_elements, 3)
        if not np.all(np.isfinite(vals)):
            return math.inf
        return float(np.sum(vals * mesh.quad_weights))
    vals = np.asarray(integrand, dtype=float)
    if vals.shape != (mesh.n_elements,):
        raise ContractError("per-element integrand must have shape (n_elements,)")
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(np.dot(vals, mesh.areas))


def edge_quadrature(mesh: Mesh, label: str | None):
    """Points and weights of the 2-point rule on edges with ``label`` (``None``: all)."""
    idx = np.arange(len(mesh.boundary_edges)) if label is None else mesh.edges_with(label)
    e = mesh.boundary_edges[idx]
    p0, p1 = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
    pts = p0[:, None, :] + EDGE_POINTS[None, :, None] * (p1 - p0)[:, None, :]
    w = mesh.edge_lengths[idx][:, None] * EDGE_WEIGHTS[None, :]
    return idx, pts, w


def integrate_boundary(mesh: Mesh, label: str | None, integrand) -> float:
    """Integral over boundary edges carrying ``label`` (``None``: whole boundary).

    ``integrand`` is an array of per-edge constants or a callable evaluated
    at the 2-point Gauss rule.
    """
    idx, pts, w = edge_quadrature(mesh, label)
    if callable(integrand):
        vals = np.asarray(integrand(pts.reshape(-1, 2)), dtype=float).reshape(len(idx), 2)
        if not np.all(np.isfinite(vals)):
            return math.inf
        return float(np.sum(vals * w))
    vals = np.asarray(integrand, dtype=float)
    if vals.shape != (len(idx),):
        raise ContractError("per-edge integrand must have one value per selected edge")
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(np.dot(vals, mesh.edge_lengths[idx]))


def min_det(mesh: Mesh, y) -> float:
    """Smallest element determinant of ``Dy``."""
    return float(np.min(element_dets(mesh, y)))


def geometric_area(mesh: Mesh, y) -> float:
    """``int det Dy dx``; equals the image area for injective ``y``."""
    return float(np.dot(element_dets(mesh, y), mesh.areas))


def polygon_area(mesh: Mesh, y) -> float:
    """Shoelace area of the image of the boundary loop."""
    if mesh.boundary_loop is None:
        raise MeshError("mesh has no boundary loop")
    p = np.asarray(y, float)[mesh.boundary_loop]
    x0, y0 = p[:, 0], p[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    return float(0.5 * np.sum(x0 * y1 - x1 * y0))


def apply_dirichlet(mesh: Mesh, y, values, box: Box | None = None) -> np.ndarray:
    """Overwrite the ``Lambda`` nodes of ``y`` with datum values.

    Parameters
    ----------
    values : array (n_lambda, 2) or callable
        Values at :attr:`Mesh.dirichlet_nodes` or the datum map itself.
    box : Box, optional
        Active confinement box.

    Raises
    ------
    InversionError
        If the result has an element with ``det <= 0``.
    ConfinementError
        If a Dirichlet value lies outside ``box``.
    """
    idx = mesh.dirichlet_nodes
    vals = values(mesh.nodes[idx]) if callable(values) else values
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (len(idx), 2) or not np.all(np.isfinite(vals)):
        raise ContractError("Dirichlet values must be finite and match the Lambda nodes")
    if box is not None and not np.all(box.contains(vals)):
        raise ConfinementError("Dirichlet datum leaves the confinement box")
    out = np.array(y, dtype=float)
    out[idx] = vals
    if min_det(mesh, out) <= 0:
        raise InversionError("Dirichlet data invert an element")
    return out

