"""Energy, dissipation and power functionals on discrete states.

A state stores the deformation ``y`` and the director ``m`` as nodal P1
fields on the reference mesh; ``m`` represents the deformed-configuration
director composed with ``y``. Integrals over the deformed configuration are
pulled back through ``y`` with the change-of-variables formula, so they are
element-wise exact under P1 and matched quadrature.

Quadrature conventions:

* elastic and nematic densities are element-wise constant (midpoint rule);
* load terms and the dissipation use the 3-point edge-midpoint rule;
* surface terms use 2-point Gauss on each ``Sigma`` edge.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import tensor as tn
from .errors import ConfinementError, ContractError, DomainError
from .fem import SIGMA, TRI_BARY, Box, Mesh, State, edge_quadrature, element_gradients
from .material import MaterialModel
from .timedata import BoundaryDatum, LoadSet

__all__ = [
    "EnergyBreakdown",
    "element_directors",
    "assemble",
    "total_energy",
    "dissipation",
    "variation",
    "power_time_independent",
    "pullback",
    "pullback_inverse",
    "aux_energy",
    "displacement_power",
    "aux_power",
    "scatter",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyBreakdown:
    """``total = elastic + nematic - loads``."""

    elastic: float
    nematic: float
    loads: float
    total: float

    @classmethod
    def make(cls, elastic, nematic, loads):
        if not (math.isfinite(elastic) and math.isfinite(nematic)):
            return cls(float(elastic), float(nematic), float(loads), math.inf)
        return cls(float(elastic), float(nematic), float(loads), float(elastic + nematic - loads))


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------
def scatter(mesh: Mesh, contrib: np.ndarray) -> np.ndarray:
    """Sum element-node contributions ``(ne, 3, k)`` into nodal values ``(nn, k)``."""
    k = contrib.shape[-1]
    idx = mesh.elements.ravel()
    flat = contrib.reshape(-1, k)
    return np.stack([np.bincount(idx, weights=flat[:, j], minlength=mesh.n_nodes) for j in range(k)], axis=1)


def _scatter_edges(mesh: Mesh, edge_idx: np.ndarray, contrib: np.ndarray) -> np.ndarray:
    k = contrib.shape[-1]
    idx = mesh.boundary_edges[edge_idx].ravel()
    flat = contrib.reshape(-1, k)
    return np.stack([np.bincount(idx, weights=flat[:, j], minlength=mesh.n_nodes) for j in range(k)], axis=1)


def element_directors(mesh: Mesh, m: np.ndarray):
    """Normalized element averages of the nodal director and their norms."""
    mbar = np.asarray(m, float)[mesh.elements].mean(axis=1)
    r = np.linalg.norm(mbar, axis=1)
    if np.any(r < 1e-14):
        # antipodal nodal values: fall back to the first vertex
        mbar = np.where((r < 1e-14)[:, None], np.asarray(m, float)[mesh.elements[:, 0]], mbar)
        r = np.linalg.norm(mbar, axis=1)
    return mbar / r[:, None], r


def _at_quad(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    return np.einsum("qa,eai->eqi", TRI_BARY, np.asarray(v, float)[mesh.elements])


def _at_edges(mesh: Mesh, v: np.ndarray, edge_idx: np.ndarray) -> np.ndarray:
    from .fem import EDGE_POINTS

    e = mesh.boundary_edges[edge_idx]
    v = np.asarray(v, float)
    v0, v1 = v[e[:, 0]], v[e[:, 1]]
    return v0[:, None, :] + EDGE_POINTS[None, :, None] * (v1 - v0)[:, None, :]


def _edge_shape():
    from .fem import EDGE_POINTS

    return np.stack([1.0 - EDGE_POINTS, EDGE_POINTS], axis=1)  # (point, node)


def _det2(F):
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def _cof2(F):
    C = np.empty_like(F)
    C[..., 0, 0] = F[..., 1, 1]
    C[..., 0, 1] = -F[..., 1, 0]
    C[..., 1, 0] = -F[..., 0, 1]
    C[..., 1, 1] = F[..., 0, 0]
    return C


def _check_mesh(q: State, mesh: Mesh):
    if q.mesh is not mesh and not q.same_mesh(State(mesh, mesh.nodes, np.tile([1.0, 0.0], (mesh.n_nodes, 1)))):
        raise ContractError("state lives on a different mesh")


# --------------------------------------------------------------------------
# total energy
# --------------------------------------------------------------------------
def assemble(mesh: Mesh, model: MaterialModel, loads: LoadSet | None, t: float, y, m, grad: bool = False):
    """Energy terms of ``E(t, (y, m))`` and, optionally, nodal gradients.

    Returns
    -------
    EnergyBreakdown, gy, gm
        ``gy``, ``gm`` are ``(nn, 2)`` gradients of the total energy, or
        ``None`` if ``grad`` is false or the energy is infinite.
    """
    y = np.asarray(y, float)
    m = np.asarray(m, float)
    loads = loads or LoadSet()
    Dy = element_gradients(mesh, y)
    Dm = element_gradients(mesh, m)
    z, r = element_directors(mesh, m)
    area = mesh.areas
    W, P, dz = kernels.elastic_eval(model, Dy, z, with_grad=grad)
    if not np.all(np.isfinite(W)):
        return EnergyBreakdown(math.inf, math.inf, math.nan, math.inf), None, None
    phi, gM, gY = kernels.nematic_eval(Dm, Dy, with_grad=grad)
    elastic = float(np.dot(W, area))
    nematic = float(np.dot(phi, area))
    det = _det2(Dy)
    wq = mesh.quad_weights
    need_q = loads.f is not None or loads.h is not None
    yq = _at_quad(mesh, y) if need_q else None
    work = 0.0
    gy_nodes = np.zeros((mesh.n_elements, 3, 2)) if grad else None
    gm_nodes = np.zeros((mesh.n_elements, 3, 2)) if grad else None
    gy_extra = np.zeros((mesh.n_nodes, 2)) if grad else None
    if loads.f is not None:
        fv = loads.f.value(t, mesh.quad_points)
        work += float(np.sum(wq * np.einsum("eqi,eqi->eq", fv, yq)))
        if grad:
            gy_nodes -= np.einsum("eq,qa,eqi->eai", wq, TRI_BARY, fv)
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            gv = loads.g.value(t, pts)
            ye = _at_edges(mesh, y, idx)
            work += float(np.sum(w * np.einsum("epi,epi->ep", gv, ye)))
            if grad:
                gy_extra -= _scatter_edges(mesh, idx, np.einsum("ep,pa,epi->eai", w, _edge_shape(), gv))
    if loads.h is not None:
        mq = _at_quad(mesh, m)
        hv = loads.h.value(t, yq)
        hm = np.einsum("eqi,eqi->eq", hv, mq)
        work += float(np.sum(wq * hm * det[:, None]))
        if grad:
            Dh = loads.h.gradient(t, yq)  # (ne, q, i, j) = d h_i / d xi_j
            dht_m = np.einsum("eqij,eqi->eqj", Dh, mq)
            gy_nodes -= np.einsum("eq,e,qa,eqj->eaj", wq, det, TRI_BARY, dht_m)
            cof = _cof2(Dy)
            gy_nodes -= np.einsum("e,eij,eaj->eai", np.sum(wq * hm, axis=1), cof, mesh.grads)
            gm_nodes -= np.einsum("eq,e,qa,eqi->eai", wq, det, TRI_BARY, hv)
    energy = EnergyBreakdown.make(elastic, nematic, work)
    if not grad:
        return energy, None, None
    # elastic and nematic parts
    S = area[:, None, None] * (P + gY)
    gy_nodes += np.einsum("eij,eaj->eai", S, mesh.grads)
    gm_nodes += np.einsum("eij,eaj->eai", area[:, None, None] * gM, mesh.grads)
    if np.any(dz):
        proj = dz - np.einsum("ei,ei->e", dz, z)[:, None] * z
        gz = (area / r)[:, None] * proj / 3.0
        gm_nodes += gz[:, None, :]
    gy = scatter(mesh, gy_nodes) + gy_extra
    gm = scatter(mesh, gm_nodes)
    return energy, gy, gm


def total_energy(t: float, q: State, model: MaterialModel, loads: LoadSet | None = None, datum: BoundaryDatum | None = None) -> EnergyBreakdown:
    """``E(t, q) = elastic + nematic - loads``.

    The datum is not needed to evaluate ``E`` (admissibility is a property
    of ``q``) and is accepted for signature uniformity.
    """
    return assemble(q.mesh, model, loads, t, q.y, q.m)[0]


# --------------------------------------------------------------------------
# dissipation
# --------------------------------------------------------------------------
def dissipation(q: State, q_hat: State) -> float:
    """``D(q, q_hat) = int |m - m_hat| dx`` by the 3-point rule."""
    if not q.same_mesh(q_hat):
        raise ContractError("dissipation requires states on a shared mesh")
    mesh = q.mesh
    d = _at_quad(mesh, q.m) - _at_quad(mesh, q_hat.m)
    return float(np.sum(mesh.quad_weights * np.linalg.norm(d, axis=-1)))


def variation(trajectory, t: float) -> float:
    """Dissipation accumulated along the grid up to time ``t``.

    ``trajectory`` is a sequence of ``(t_k, state)`` pairs (or any object
    with ``times`` and ``states`` attributes) with increasing times.
    """
    times, states = _unpack_trajectory(trajectory)
    if len(times) == 0:
        raise DomainError("empty trajectory")
    if t < times[0] - 1e-15 or t > times[-1] + 1e-12 * max(1.0, abs(times[-1])):
        raise DomainError("t outside the trajectory's time interval")
    total = 0.0
    for k in range(1, len(times)):
        if times[k] > t + 1e-15:
            break
        total += dissipation(states[k], states[k - 1])
    return total


def _unpack_trajectory(trajectory):
    if hasattr(trajectory, "times") and hasattr(trajectory, "states"):
        return list(trajectory.times), list(trajectory.states)
    times = [float(a) for a, _ in trajectory]
    states = [b for _, b in trajectory]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("trajectory times must be strictly increasing")
    return times, states


# --------------------------------------------------------------------------
# time derivative of the energy
# --------------------------------------------------------------------------
def _flag(loads: LoadSet, datum: BoundaryDatum | None, t: float):
    kinks = set(loads.kinks) | set(datum.kinks if datum is not None else ())
    if any(abs(t - k) <= 1e-14 * max(1.0, abs(k)) for k in kinks):
        log.warning("t=%r is a non-differentiability time; using the right derivative", t)
        return True
    return False


def power_time_independent(t: float, q: State, loads: LoadSet | None, side: str = "right") -> float:
    """``d/dt E(t, q) = -int f'.y - int_Sigma g'.y - int h'(y).m det Dy``."""
    loads = loads or LoadSet()
    _flag(loads, None, t)
    mesh = q.mesh
    out = 0.0
    wq = mesh.quad_weights
    if loads.f is not None or loads.h is not None:
        yq = _at_quad(mesh, q.y)
    if loads.f is not None:
        out -= float(np.sum(wq * np.einsum("eqi,eqi->eq", loads.f.rate(t, mesh.quad_points, side), yq)))
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            out -= float(np.sum(w * np.einsum("epi,epi->ep", loads.g.rate(t, pts, side), _at_edges(mesh, q.y, idx))))
    if loads.h is not None:
        det = _det2(element_gradients(mesh, q.y))
        mq = _at_quad(mesh, q.m)
        out -= float(np.sum(wq * det[:, None] * np.einsum("eqi,eqi->eq", loads.h.rate(t, yq, side), mq)))
    return out


# --------------------------------------------------------------------------
# pull-back between the two formulations
# --------------------------------------------------------------------------
def pullback(t: float, p: State, datum: BoundaryDatum, box: Box | None = None) -> State:
    """``Upsilon_t(u, m) = (d_t o u, m)`` on nodal values.

    Raises
    ------
    ConfinementError
        If an image node leaves the confinement box.
    """
    y = datum.apply(t, p.y)
    if box is not None and not np.all(box.contains(y)):
        raise ConfinementError("image node outside the confinement box")
    return State(p.mesh, y, p.m)


def pullback_inverse(t: float, q: State, datum: BoundaryDatum, box: Box | None = None) -> State:
    """Inverse of :func:`pullback`: ``u = d_t^{-1} o y``."""
    if box is not None and not np.all(box.contains(q.y)):
        raise ConfinementError("node outside the confinement box")
    return State(q.mesh, datum.inverse(t, q.y), q.m)


# --------------------------------------------------------------------------
# auxiliary energy F = J - M
# --------------------------------------------------------------------------
def aux_energy(t: float, p: State, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum) -> EnergyBreakdown:
    """``F(t, p) = J(t, p) - M(t, p)`` in the auxiliary variables ``p = (u, m)``.

    ``J^e = sum W((Dd_t o u) Du, z)|e|``, ``J^n = sum |Dm Du^{-1} Dd_t^{-1}|^2
    det(Dd_t Du)|e|``, and ``M`` collects the load terms evaluated on
    ``d_t o u``.
    """
    loads = loads or LoadSet()
    mesh = p.mesh
    A = datum.A(t)
    Du = element_gradients(mesh, p.y)
    G = A @ Du
    z, _ = element_directors(mesh, p.m)
    W, _, _ = kernels.elastic_eval(model, G, z, with_grad=False)
    if not np.all(np.isfinite(W)):
        return EnergyBreakdown(math.inf, math.inf, math.nan, math.inf)
    Dm = element_gradients(mesh, p.m)
    # |Dm Du^{-1} A^{-1}|^2 det(A) det(Du)
    X = Dm @ tn.inverse(Du) @ tn.inverse(A)
    Jn = np.einsum("eij,eij->e", X, X) * (tn.determinant(A) * _det2(Du))
    Je = float(np.dot(W, mesh.areas))
    Jn = float(np.dot(Jn, mesh.areas))
    M = 0.0
    wq = mesh.quad_weights
    if loads.f is not None or loads.h is not None:
        dq = datum.apply(t, _at_quad(mesh, p.y))
    if loads.f is not None:
        M += float(np.sum(wq * np.einsum("eqi,eqi->eq", loads.f.value(t, mesh.quad_points), dq)))
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            M += float(np.sum(w * np.einsum("epi,epi->ep", loads.g.value(t, pts), datum.apply(t, _at_edges(mesh, p.y, idx)))))
    if loads.h is not None:
        mq = _at_quad(mesh, p.m)
        jac = tn.determinant(A) * _det2(Du)
        M += float(np.sum(wq * jac[:, None] * np.einsum("eqi,eqi->eq", loads.h.value(t, dq), mq)))
    return EnergyBreakdown.make(Je, Jn, M)


# --------------------------------------------------------------------------
# displacement power and the time derivative of F
# --------------------------------------------------------------------------
def displacement_power(t: float, q: State, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum, side: str = "right") -> float:
    """Power of the time-dependent boundary datum at the state ``q``.

    With the Eulerian velocity ``v = (d/dt d_t) o d_t^{-1}`` and
    ``Dv = A'(t) A(t)^{-1}``::

        P = int K(Dy, z) : Dv
          + int_im (|Dn|^2 I - 2 Dn^T Dn) : Dv
          - int f . v(y) - int_Sigma g . v(y)
          - int_im ((Dh) v + (div v) h) . n

    The image integrals are pulled back through ``y``. This is the form for
    which ``dE/dt + P = dF/dt`` holds exactly.
    """
    loads = loads or LoadSet()
    _flag(loads, datum, t)
    mesh = q.mesh
    Lv = datum.velocity_gradient(t, side)
    if not np.any(Lv) and not np.any(datum.b_dot(t, side)):
        return 0.0
    Dy = element_gradients(mesh, q.y)
    Dm = element_gradients(mesh, q.m)
    z, _ = element_directors(mesh, q.m)
    W, P, _ = kernels.elastic_eval(model, Dy, z, with_grad=True)
    if P is None:
        return math.nan
    area = mesh.areas
    K = P @ np.swapaxes(Dy, -1, -2)
    out = float(np.dot(area, np.einsum("eij,ij->e", K, Lv)))
    det = _det2(Dy)
    X = Dm @ tn.inverse(Dy)
    nx2 = np.einsum("eij,eij->e", X, X)
    T = nx2[:, None, None] * np.eye(2) - 2.0 * np.swapaxes(X, -1, -2) @ X
    out += float(np.dot(area * det, np.einsum("eij,ij->e", T, Lv)))
    wq = mesh.quad_weights
    if loads.f is not None or loads.h is not None:
        yq = _at_quad(mesh, q.y)
        vq = datum.eulerian_velocity(t, yq, side)
    if loads.f is not None:
        out -= float(np.sum(wq * np.einsum("eqi,eqi->eq", loads.f.value(t, mesh.quad_points), vq)))
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            ye = _at_edges(mesh, q.y, idx)
            out -= float(np.sum(w * np.einsum("epi,epi->ep", loads.g.value(t, pts), datum.eulerian_velocity(t, ye, side))))
    if loads.h is not None:
        mq = _at_quad(mesh, q.m)
        hv = loads.h.value(t, yq)
        Dh = loads.h.gradient(t, yq)
        integrand = np.einsum("eqij,eqj->eqi", Dh, vq) + np.trace(Lv) * hv
        out -= float(np.sum(wq * det[:, None] * np.einsum("eqi,eqi->eq", integrand, mq)))
    return out


def aux_power(t: float, p: State, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum, side: str = "right") -> float:
    """``d/dt F(t, p)`` from the analytic time-derivative formulas.

    Terms (``G = Dd_t``, ``G' = D(d/dt d_t)``, ``F = Du``)::

        dJe = int (dW(G F) F^T) : G'
        dJn = int_im (|M G^{-1}|^2 I - 2 G^{-T} M^T M G^{-1}) : (G' G^{-1}) det G
        dMb = int f' . (d o u) + f . (d' o u)
        dMs = same on Sigma with g
        dMf = int_im (h' o d + (Dh o d) d') det G . m + (cof G : G') (h o d) . m
    """
    loads = loads or LoadSet()
    _flag(loads, datum, t)
    mesh = p.mesh
    A = datum.A(t)
    Ad = datum.A_dot(t, side)
    Du = element_gradients(mesh, p.y)
    Dm = element_gradients(mesh, p.m)
    G = A @ Du
    z, _ = element_directors(mesh, p.m)
    area = mesh.areas
    out = 0.0
    if np.any(Ad):
        _, P, _ = kernels.elastic_eval(model, G, z, with_grad=True)
        if P is None:
            return math.nan
        out += float(np.dot(area, np.einsum("eij,ij->e", P @ np.swapaxes(Du, -1, -2), Ad)))
        # image of u: M = Dm Du^{-1} (director gradient on im u), dw = det Du dx
        Mimg = Dm @ tn.inverse(Du)
        Ai = tn.inverse(A)
        X = Mimg @ Ai
        nx2 = np.einsum("eij,eij->e", X, X)
        T = nx2[:, None, None] * np.eye(2) - 2.0 * Ai.T @ np.swapaxes(Mimg, -1, -2) @ Mimg @ Ai
        out += float(np.dot(area * _det2(Du) * tn.determinant(A), np.einsum("eij,ij->e", T, Ad @ Ai)))
    wq = mesh.quad_weights
    if loads.f is not None or loads.h is not None:
        uq = _at_quad(mesh, p.y)
        dq = datum.apply(t, uq)
        ddq = datum.velocity(t, uq, side)
    if loads.f is not None:
        Xq = mesh.quad_points
        val = np.einsum("eqi,eqi->eq", loads.f.rate(t, Xq, side), dq) + np.einsum("eqi,eqi->eq", loads.f.value(t, Xq), ddq)
        out -= float(np.sum(wq * val))
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            ue = _at_edges(mesh, p.y, idx)
            val = np.einsum("epi,epi->ep", loads.g.rate(t, pts, side), datum.apply(t, ue)) + np.einsum("epi,epi->ep", loads.g.value(t, pts), datum.velocity(t, ue, side))
            out -= float(np.sum(w * val))
    if loads.h is not None:
        mq = _at_quad(mesh, p.m)
        detA = tn.determinant(A)
        jac = _det2(Du)
        hd = loads.h.value(t, dq)
        rate = loads.h.rate(t, dq, side) + np.einsum("eqij,eqj->eqi", loads.h.gradient(t, dq), ddq)
        term1 = detA * np.einsum("eqi,eqi->eq", rate, mq)
        term2 = tn.ddot(tn.cofactor(A), Ad) * np.einsum("eqi,eqi->eq", hd, mq)
        out -= float(np.sum(wq * jac[:, None] * (term1 + term2)))
    return out
