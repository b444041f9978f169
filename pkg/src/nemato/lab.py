"""Verification laboratory for the analytic inequalities.

Constants are estimated as maxima of ratios over random fields, so they are
lower bounds of the true constants. Random fields are random Fourier feature
expansions drawn once per sample and then interpolated on each mesh; the same
continuum field is therefore used at every resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import tensor as tn
from .errors import DomainError
from .fem import EDGE_POINTS, LAMBDA, SIGMA, Box, Mesh, State, edge_quadrature, element_gradients
from .functionals import _at_quad, aux_energy, displacement_power, power_time_independent, pullback, pullback_inverse, total_energy
from .material import MaterialModel
from .orlicz import NFunction, sphere_embedding_function
from .timedata import BoundaryDatum, LoadSet, StaticDatum

__all__ = [
    "InequalityReport",
    "RandomField",
    "random_fields",
    "poincare_estimate",
    "trace_estimate",
    "power_modulus_check",
    "sphere_embedding_check",
    "coercivity_probe",
    "coercivity_constants",
    "numeric_conjugate",
    "random_admissible_states",
    "CORRELATION_LENGTHS",
]

CORRELATION_LENGTHS = (0.1, 0.3, 1.0)


@dataclass
class InequalityReport:
    """Outcome of one inequality experiment.

    ``max_violation`` is the largest amount by which a hard inequality fails
    (negative when it holds with room to spare) and
    ``nan`` for constant estimates.
    """

    inequality: str
    constant: float
    n_samples: int
    resolutions: tuple = ()
    max_violation: float = math.nan
    seed: int = 0
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    details: dict = field(default_factory=dict, repr=False)
    notes: str = ""

    @property
    def ok(self) -> bool:
        if self.inequality in ("coercivity", "coercivity_aux"):
            return not self.max_violation > 0
        if self.inequality == "power_modulus":
            return bool(self.details.get("monotone", False))
        return bool(np.isfinite(self.constant))

    def summary(self) -> str:
        return (
            f"{self.inequality}: constant={self.constant:.6g} samples={self.n_samples} "
            f"resolutions={list(self.resolutions)} max_violation={self.max_violation:.3g} seed={self.seed}"
            + (f" ({self.notes})" if self.notes else "")
        )


# --------------------------------------------------------------------------
# random fields
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class RandomField:
    """``v(x) = c + amp sqrt(2/J) sum_j a_j cos(k_j . x + phi_j)``, vector valued.

    With ``vanish_left`` the field is multiplied by ``x_1`` and hence vanishes
    on the left edge of the unit square.
    """

    offset: np.ndarray
    amp: np.ndarray
    k: np.ndarray
    phase: np.ndarray
    vanish_left: bool = False

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        J = len(self.phase)
        arg = x @ self.k.T + self.phase
        v = self.offset + np.sqrt(2.0 / J) * np.cos(arg) @ self.amp
        if self.vanish_left:
            v = v * x[..., :1]
        return v


def random_fields(n: int, seed: int = 0, correlation_lengths=CORRELATION_LENGTHS, amplitudes=(1e-2, 1e2), n_features: int = 24, vanish_left: bool = False, dim: int = 2):
    """Draw ``n`` random fields cycling over the correlation lengths.

    Amplitudes are log-uniform on ``amplitudes``; a random offset of the
    same size is included unless ``vanish_left``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    lo, hi = np.log(amplitudes[0]), np.log(amplitudes[1])
    out = []
    for i in range(n):
        ell = correlation_lengths[i % len(correlation_lengths)]
        a = math.exp(rng.uniform(lo, hi))
        k = rng.standard_normal((n_features, 2)) / ell
        ph = rng.uniform(0, 2 * np.pi, n_features)
        amp = a * rng.standard_normal((n_features, dim))
        off = np.zeros(dim) if vanish_left else a * rng.standard_normal(dim) * rng.uniform(0.0, 2.0)
        out.append(RandomField(off, amp, k, ph, vanish_left))
    return out


# --------------------------------------------------------------------------
# modular quantities of P1 fields
# --------------------------------------------------------------------------
def _vol_modular(mesh: Mesh, A: NFunction, v) -> float:
    vals = np.linalg.norm(_at_quad(mesh, v), axis=-1)
    return float(np.sum(mesh.quad_weights * A(vals)))


def _grad_modular(mesh: Mesh, A: NFunction, v) -> float:
    G = element_gradients(mesh, v)
    return float(np.dot(mesh.areas, A(np.asarray(tn.frob(G)))))


def _bnd_modular(mesh: Mesh, A: NFunction, v, label) -> float:
    idx, _, w = edge_quadrature(mesh, label)
    if len(idx) == 0:
        return 0.0
    e = mesh.boundary_edges[idx]
    v = np.asarray(v, float)
    v0, v1 = v[e[:, 0]], v[e[:, 1]]
    pts = v0[:, None, :] + EDGE_POINTS[None, :, None] * (v1 - v0)[:, None, :]
    return float(np.sum(w * A(np.linalg.norm(pts, axis=-1))))


def _ratio_report(name, ratios, n, res, seed, notes="", details=None):
    ratios = np.asarray(ratios, float)
    finite = ratios[np.isfinite(ratios)]
    const = float(np.max(finite)) if finite.size else math.nan
    return InequalityReport(name, const, n, tuple(res), math.nan, int(seed), ratios, details or {}, notes)


def poincare_estimate(mesh: Mesh, A: NFunction, n_samples: int = 200, seed: int = 0, label: str = LAMBDA, fields=None, vanish_left: bool = False) -> InequalityReport:
    """Estimate ``C_P`` in ``int A(|v|) <= C_P (int A(|Dv|) + int_Lambda A(|v|))``.

    The report stores every ratio; the estimate is their maximum. Pairs with
    vanishing right side are flagged in ``details['flagged']``.
    """
    if not np.any(mesh.edge_labels == label):
        raise DomainError(f"no boundary edges labeled {label!r}")
    fields = fields if fields is not None else random_fields(n_samples, seed, vanish_left=vanish_left)
    ratios, flagged = [], 0
    for f in fields:
        v = f(mesh.nodes)
        lhs = _vol_modular(mesh, A, v)
        rhs = _grad_modular(mesh, A, v) + _bnd_modular(mesh, A, v, label)
        if rhs == 0:
            if lhs > 0:
                flagged += 1
            continue
        ratios.append(lhs / rhs)
    return _ratio_report("poincare", ratios, len(fields), (mesh_resolution(mesh),), seed, "estimate is a lower bound of C_P", {"flagged": flagged})


def trace_estimate(mesh: Mesh, A: NFunction, n_samples: int = 200, seed: int = 0, fields=None) -> InequalityReport:
    """Estimate ``C_tr`` in ``int_dOmega A(|v|) <= C_tr (int A(|Dv|) + int A(|v|))``."""
    fields = fields if fields is not None else random_fields(n_samples, seed)
    ratios, flagged = [], 0
    for f in fields:
        v = f(mesh.nodes)
        lhs = _bnd_modular(mesh, A, v, None)
        rhs = _grad_modular(mesh, A, v) + _vol_modular(mesh, A, v)
        if rhs == 0:
            if lhs > 0:
                flagged += 1
            continue
        ratios.append(lhs / rhs)
    return _ratio_report("trace", ratios, len(fields), (mesh_resolution(mesh),), seed, "estimate is a lower bound of C_tr", {"flagged": flagged})


def mesh_resolution(mesh: Mesh) -> int:
    """Subdivisions per unit length of a structured mesh."""
    return int(round(1.0 / math.sqrt(2.0 * float(np.mean(mesh.areas)))))


def multi_resolution(estimator, A: NFunction, resolutions=(8, 16, 32), n_samples: int = 100, seed: int = 0, labels=None, **kw):
    """Run ``estimator`` on unit-square meshes with shared random fields.

    Returns the per-resolution reports and the relative spread
    ``(max - min) / min`` of the estimates.
    """
    from .fem import unit_square_mesh

    fields = random_fields(n_samples, seed, vanish_left=kw.pop("vanish_left", False))
    reps = [estimator(unit_square_mesh(n, labels), A, fields=fields, seed=seed, **kw) for n in resolutions]
    vals = np.array([r.constant for r in reps])
    return reps, float((vals.max() - vals.min()) / vals.min())


# --------------------------------------------------------------------------
# modulus of continuity of the power
# --------------------------------------------------------------------------
def power_modulus_check(t: float, states, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum | None = None, h_grid=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4), noise_floor: float = 1e-9) -> InequalityReport:
    """Forward-difference error ``|(E(t+h, q_h) - E(t, q))/h - (dE/dt + P)|`` per ``h``.

    ``q_h = Upsilon_{t+h}(Upsilon_t^{-1} q)`` transports the state with the
    datum (``q_h = q`` for a static datum). The report constant is the error
    at the smallest ``h``; ``details`` holds the error per ``h``, the
    log-log slope and the monotonicity verdict (errors below ``noise_floor``
    times the power scale count as converged).
    """
    datum = datum or StaticDatum()
    loads = loads or LoadSet()
    hs = np.asarray(sorted(h_grid, reverse=True), float)
    errs = np.zeros(len(hs))
    scale = 1.0
    for q in states:
        p = pullback_inverse(t, q, datum)
        E0 = total_energy(t, q, model, loads).total
        pw = power_time_independent(t, q, loads) + displacement_power(t, q, model, loads, datum)
        scale = max(scale, abs(pw), abs(E0))
        for i, h in enumerate(hs):
            qh = pullback(t + h, p, datum)
            Eh = total_energy(t + h, qh, model, loads).total
            errs[i] = max(errs[i], abs((Eh - E0) / h - pw))
    floor = noise_floor * scale
    active = errs > floor
    monotone = bool(np.all(np.diff(np.maximum(errs, floor)) <= 1e-12 * scale + 0.05 * np.maximum(errs[:-1], floor)))
    slope = math.nan
    if np.count_nonzero(active) >= 2:
        slope = float(np.polyfit(np.log(hs[active]), np.log(errs[active]), 1)[0])
    return InequalityReport(
        "power_modulus",
        float(errs[-1]),
        len(states),
        (),
        math.nan,
        0,
        errs,
        {"h": hs, "errors": errs, "slope": slope, "monotone": monotone, "floor": floor},
    )


# --------------------------------------------------------------------------
# sphere embedding
# --------------------------------------------------------------------------
def sphere_embedding_check(A: NFunction, N: int = 2, n_samples: int = 200, seed: int = 0, n_vertices: int = 128, fields=None) -> InequalityReport:
    """Estimate ``C_em`` in ``sup|v| <= C_em A_{N-1}^{-1}(avg A(|D_tau v|) + avg A(|v|))``.

    Only the circle (``N = 2``) is discretized: ``v`` is periodic and
    piecewise linear on a regular polygon inscribed in the unit circle.
    """
    if N != 2:
        raise DomainError("only the circle (N=2) is discretized")
    B = sphere_embedding_function(A, N)
    theta = 2 * np.pi * np.arange(n_vertices) / n_vertices
    chord = 2.0 * math.sin(math.pi / n_vertices)
    total = chord * n_vertices
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    if fields is None:
        fields = []
        for i in range(n_samples):
            amp = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
            if i % 4 == 3:
                c = rng.uniform(0, 2 * np.pi)
                w = rng.uniform(0.05, 1.0)
                d = np.angle(np.exp(1j * (theta - c)))
                v = amp * np.exp(-(d / w) ** 2)[:, None] * rng.standard_normal(2)
            else:
                K = int(rng.integers(1, 12))
                ks = np.arange(1, K + 1)
                ca = rng.standard_normal((K, 2)) / ks[:, None]
                sa = rng.standard_normal((K, 2)) / ks[:, None]
                v = amp * (rng.standard_normal(2) + np.cos(np.outer(theta, ks)) @ ca + np.sin(np.outer(theta, ks)) @ sa)
            fields.append(v)
    ratios = []
    gp = EDGE_POINTS
    for v in fields:
        v = np.asarray(v, float)
        vn = np.roll(v, -1, axis=0)
        dv = np.linalg.norm(vn - v, axis=1) / chord
        pts = v[:, None, :] + gp[None, :, None] * (vn - v)[:, None, :]
        mod_v = float(np.sum(0.5 * chord * A(np.linalg.norm(pts, axis=-1)))) / total
        mod_d = float(np.sum(chord * A(dv))) / total
        sup = float(np.max(np.linalg.norm(v, axis=1)))
        if sup == 0:
            continue
        ratios.append(sup / float(B.inverse(mod_d + mod_v)))
    return _ratio_report("sphere_embedding", ratios, len(fields), (n_vertices,), seed, "finite estimate expected")


# --------------------------------------------------------------------------
# coercivity with constructive constants
# --------------------------------------------------------------------------
def numeric_conjugate(fun, s: float, lo: float = 1e-10, hi: float = 1e10) -> float:
    """``sup_{v>0} (s v - fun(v))`` for a superlinear ``fun`` by grid search plus Brent refinement."""
    grid = np.geomspace(lo, hi, 4001)
    with np.errstate(all="ignore"):
        vals = s * grid - np.asarray(fun(grid), float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    i = int(np.argmax(vals))
    best = float(vals[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda v: -(s * v - float(fun(np.asarray(v)))), bounds=(a, b), method="bounded", options={"xatol": 1e-14 * b})
    if res.success and -res.fun > best:
        best = float(-res.fun)
    return max(best, 0.0)


def _h_sup(loads: LoadSet, t: float, box: Box | None, points) -> float:
    """Upper bound of ``|h(t, .)|`` on the box, or its maximum over ``points`` without a box."""
    if loads.h is None:
        return 0.0
    if box is None:
        return float(np.max(np.linalg.norm(loads.h.value(t, points), axis=-1)))
    lo, hi = np.asarray(box.lo, float), np.asarray(box.hi, float)
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
    pr = loads.h.profile
    lin = np.max(np.linalg.norm(np.asarray(pr.c) + corners @ np.asarray(pr.G, float).T, axis=1))
    return abs(float(loads.h.theta(t))) * float(lin + np.linalg.norm(pr.a))


@dataclass(frozen=True)
class CoercivityConstants:
    K1: float
    eps: float
    c_W: float
    C_P: float
    C_tr: float


def coercivity_constants(model: MaterialModel, C_P: float, C_tr: float) -> CoercivityConstants:
    """``eps = min(1/2, c_W / (2 (C_P + C_tr (1 + C_P))))`` and ``K1 = min(c_W/2, 1/2)``."""
    cw = model.c_W
    eps = min(0.5, cw / (2.0 * (C_P + C_tr * (1.0 + C_P))))
    return CoercivityConstants(min(cw / 2.0, 0.5), eps, cw, C_P, C_tr)


def _load_constant(mesh, A, loads, t, eps, lin, b_norm):
    """Young bounds of the body and surface work: ``int Abar(lin|f|/eps) + |b| int|f|``."""
    K = 0.0
    Abar = A.conjugate
    if loads.f is not None:
        fq = np.linalg.norm(loads.f.value(t, mesh.quad_points), axis=-1)
        K += float(np.sum(mesh.quad_weights * (Abar(lin * fq / eps) + b_norm * fq)))
    if loads.g is not None:
        idx, pts, w = edge_quadrature(mesh, SIGMA)
        if len(idx):
            gq = np.linalg.norm(loads.g.value(t, pts), axis=-1)
            K += float(np.sum(w * (Abar(lin * gq / eps) + b_norm * gq)))
    return K


def coercivity_probe(t: float, states, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum | None = None, C_P: float | None = None, C_tr: float | None = None, box: Box | None = None, auxiliary: bool = False, times=None) -> InequalityReport:
    """Check the coercivity lower bound with constructive constants.

    Time-independent form (``auxiliary=False``), for ``q = (y, m)``::

        E(t,q) >= K1 (int {A(|Dy|) + Gamma(|adj Dy|) + gamma(det Dy)} + int_im |Dn|^2) - K2

    with ``Gamma(s) = (s/mu_2)^zeta``, ``gamma = sigma``, ``K1 = min(c_W/2, 1/2)``
    and ``K2`` collecting the Young bounds of the loads (``eps`` branch),
    the Dirichlet modular ``eps (C_P + C_tr C_P) int_Lambda A(|d_t|)`` and
    ``|Omega| (sigma/2)^*(sup|h|)``.

    Auxiliary form (``auxiliary=True``), for ``p = (u, m)`` and ``q = Upsilon_t p``::

        F(t,p) >= K1~ (int {A(|Du|) + Gamma~(|adj Du|) + gamma~(det Du)} + int_im(u) |Dm|^2) - K2~

    where ``Gamma~(s) = Gamma(s/m1)``, ``gamma~`` patches ``gamma(m3 .)``
    below and ``gamma(m2 .)`` above the minimizer of ``sigma``, and
    ``m1 = sup|cof(A)^{-1}|``, ``m2 = inf det A``, ``m3 = sup det A`` over
    ``times``.
    """
    datum = datum or StaticDatum()
    loads = loads or LoadSet()
    states = list(states)
    if not states:
        raise DomainError("no states to probe")
    mesh = states[0].mesh
    A = model.A
    if C_P is None or C_tr is None:
        C_P = poincare_estimate(mesh, A, 60).constant if C_P is None else C_P
        C_tr = trace_estimate(mesh, A, 60).constant if C_tr is None else C_tr
    cc = coercivity_constants(model, C_P, C_tr)
    area = float(np.sum(mesh.areas))
    sig = model.sigma
    vstar = sig.minimizer()
    gam_min = min(0.0, float(sig(vstar)))
    Gamma = lambda s: (np.asarray(s) / model.mu2) ** model.zeta  # noqa: E731
    times = np.asarray([t] if times is None else times, float)
    if auxiliary:
        mats = [datum.A(s) for s in times]
        m1 = max(float(tn.frob(tn.inverse(tn.cofactor(M)))) for M in mats)
        dets = [float(tn.determinant(M)) for M in mats]
        m2, m3 = min(dets), max(dets)
        Ainv = max(float(tn.frob(tn.inverse(M))) for M in mats)
        C_d = min(1.0, Ainv ** (-A.p_exp))
        c_n = min(float(tn.determinant(M)) / float(tn.frob(M)) ** 2 for M in mats)
        lin = max(float(tn.frob(M)) for M in mats)
        b_norm = max(float(np.linalg.norm(datum.b(s))) for s in times)

        def gam(v):
            v = np.asarray(v, float)
            with np.errstate(all="ignore"):
                low = v <= vstar / m3
                high = v >= vstar / m2
                out = np.where(low, sig(m3 * v), gam_min)
                out = np.where(high & ~low, sig(m2 * v), out)
            return out

        def Gam(s):
            return Gamma(np.asarray(s) / m1)

        cw_eff = cc.c_W * C_d
    else:
        gam = sig
        Gam = Gamma
        c_n, lin, b_norm, m1, m2, m3 = 1.0, 1.0, 0.0, 1.0, 1.0, 1.0
        cw_eff = cc.c_W
    eps = min(0.5, cw_eff / (2.0 * (C_P + C_tr * (1.0 + C_P))))
    K1 = min(cw_eff / 2.0, 0.5, c_n)
    lhs_all, rhs_all, worst = [], [], -math.inf
    counterexamples = []
    for q in states:
        if auxiliary:
            p = pullback_inverse(t, q, datum)
            lhs = aux_energy(t, p, model, loads, datum).total
            v = p.y
        else:
            lhs = total_energy(t, q, model, loads).total
            v = q.y
        Dv = element_gradients(mesh, v)
        det = np.asarray(tn.determinant(Dv))
        adj = np.asarray(tn.frob(tn.adjugate(Dv)))
        SA = float(np.dot(mesh.areas, A(np.asarray(tn.frob(Dv)))))
        SG = float(np.dot(mesh.areas, Gam(adj)))
        Sg = float(np.dot(mesh.areas, gam(det)))
        Dm = element_gradients(mesh, q.m)
        X = Dm @ tn.inverse(Dv)
        Sn = float(np.dot(mesh.areas, np.einsum("eij,eij->e", X, X) * det))
        # K2
        dir_mod = _bnd_modular(mesh, A, v, LAMBDA)
        K2 = _load_constant(mesh, A, loads, t, eps, lin, b_norm)
        K2 += eps * (C_P + C_tr * C_P) * dir_mod
        H = _h_sup(loads, t, box, _at_quad(mesh, q.y))
        if H > 0:
            K2 += area * numeric_conjugate(lambda w: 0.5 * np.asarray(gam(w)), H * m3)
        K2 += (0.5 - K1) * (-gam_min) * area
        rhs = K1 * (SA + SG + Sg + Sn) - K2
        lhs_all.append(lhs)
        rhs_all.append(rhs)
        gap = rhs - lhs
        if gap > worst:
            worst = gap
        if gap > 0:
            counterexamples.append(q)
    name = "coercivity_aux" if auxiliary else "coercivity"
    rep = InequalityReport(
        name,
        K1,
        len(states),
        (mesh_resolution(mesh),),
        float(worst),
        0,
        np.asarray(rhs_all) - np.asarray(lhs_all),
        {"lhs": np.asarray(lhs_all), "rhs": np.asarray(rhs_all), "eps": eps, "K1": K1, "C_P": C_P, "C_tr": C_tr, "m": (m1, m2, m3), "counterexamples": counterexamples},
        "constructive constants, eps branch",
    )
    return rep


def random_admissible_states(mesh: Mesh, n: int, datum: BoundaryDatum | None = None, t: float = 0.0, seed: int = 0, amplitude: float = 0.3):
    """Random states ``y = d_t(x + w(x))`` with ``w`` vanishing on ``Lambda`` (left edge) and ``det Dy > 0``.

    Half the states carry an additional uniform compression ``x_1 -> c x_1``
    with ``c`` log-uniform on ``[0.01, 1]``. Directors are random smooth
    angle fields.
    """
    datum = datum or StaticDatum()
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    lam_nodes = mesh.nodes_with(LAMBDA)
    on_left = np.allclose(mesh.nodes[lam_nodes, 0], 0.0)
    out = []
    fields = random_fields(4 * n, seed, amplitudes=(1e-2, amplitude), vanish_left=True)
    angles = random_fields(n, seed + 1, amplitudes=(0.1, 3.0), dim=1)
    fi = 0
    for i in range(n):
        for _ in range(4):
            w = fields[fi % len(fields)](mesh.nodes)
            fi += 1
            x = np.array(mesh.nodes)
            if i % 2 == 1 and on_left:
                x[:, 0] *= math.exp(rng.uniform(math.log(0.01), 0.0))
            if not on_left:
                w = w * 0.0
            u = x + w
            u[lam_nodes] = mesh.nodes[lam_nodes]
            if np.min(np.asarray(tn.determinant(element_gradients(mesh, u)))) > 0:
                break
        else:
            u = x
        phi = angles[i](mesh.nodes)[:, 0]
        m = np.column_stack([np.cos(phi), np.sin(phi)])
        out.append(State(mesh, datum.apply(t, u), m))
    return out
