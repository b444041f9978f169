"""Time-incremental minimization with stability and balance verification.

Each step minimizes ``E(t_k, q) + D(q_{k-1}, q)`` by alternating descent:
L-BFGS on the free deformation nodes (Dirichlet nodes pinned to the datum,
determinant safeguard inside the line search) and L-BFGS on per-node
director rotation angles with a Huber-smoothed dissipation. Global
minimality cannot be guaranteed; :func:`stability_check` samples competitors
and reports any violation of the stability inequality.

For a time-dependent datum the step is solved in the auxiliary variables
``p = (u, m)`` with ``y = d_t o u`` and mapped back with :func:`pullback`.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .fem import TRI_BARY, Box, Mesh, State, min_det
from .functionals import (
    EnergyBreakdown,
    _at_quad,
    assemble,
    aux_energy,
    aux_power,
    dissipation,
    displacement_power,
    power_time_independent,
    pullback_inverse,
    scatter,
)
from .material import MaterialModel
from .timedata import BoundaryDatum, LoadSet, StaticDatum

__all__ = [
    "SolverConfig",
    "Problem",
    "StepRecord",
    "StabilityReport",
    "Trajectory",
    "StepResult",
    "incremental_step",
    "minimize_deformation",
    "minimize_director",
    "run_quasistatic",
    "stability_check",
    "balance_residual",
    "huber",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of the incremental scheme.

    Attributes
    ----------
    T, n_steps : final time and number of uniform steps.
    max_sweeps : cap on alternating deformation/director sweeps per step.
    gtol : gradient-norm tolerance (max-norm, relative to the energy scale).
    ftol : relative energy decrease below which sweeps stop.
    huber_eps : smoothing width of the L1 dissipation; halved in the final sweep.
    backtrack : line-search contraction factor in (0, 1).
    det_margin : accepted steps keep ``min_det >= det_margin * min_det_prev``.
    det_floor : absolute lower bound on ``min_det``.
    n_competitors : random competitors per stability check.
    stability_tol : tolerance of the stability inequality, times the energy scale.
    box : optional confinement box for deformed positions.
    max_iter, memory : L-BFGS iteration cap and history length.
    polish : re-solve a step from a violating competitor.
    seed : seed of the competitor sampler.
    """

    T: float = 1.0
    n_steps: int = 20
    max_sweeps: int = 30
    gtol: float = 1e-10
    ftol: float = 1e-14
    huber_eps: float = 1e-4
    backtrack: float = 0.5
    det_margin: float = 1e-2
    det_floor: float = 1e-12
    n_competitors: int = 50
    stability_tol: float = 1e-8
    box: Box | None = None
    max_iter: int = 500
    memory: int = 12
    polish: bool = True
    check_stability: bool = True
    seed: int = 0

    def __post_init__(self):
        errs = []
        if not self.T > 0:
            errs.append("T must be positive")
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1):
            errs.append("n_steps must be a positive integer")
        for name in ("gtol", "ftol", "det_margin", "det_floor", "stability_tol"):
            if not getattr(self, name) > 0:
                errs.append(f"{name} must be positive")
        if not self.huber_eps >= 0:
            errs.append("huber_eps must be nonnegative")
        if not 0 < self.backtrack < 1:
            errs.append("backtrack must lie in (0, 1)")
        if self.max_sweeps < 1 or self.max_iter < 1 or self.memory < 1 or self.n_competitors < 0:
            errs.append("iteration caps must be positive")
        if errs:
            raise ConfigError(errs)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass(frozen=True)
class Problem:
    """Everything :func:`run_quasistatic` needs."""

    mesh: Mesh
    model: MaterialModel
    loads: LoadSet = field(default_factory=LoadSet)
    datum: BoundaryDatum = field(default_factory=StaticDatum)
    initial: State | None = None
    config: SolverConfig = field(default_factory=SolverConfig)

    def initial_state(self) -> State:
        """Initial state with the Dirichlet nodes placed by ``d_0``."""
        q0 = self.initial if self.initial is not None else State.reference(self.mesh, (1.0, 0.0))
        y = np.array(q0.y)
        fixed = self.mesh.dirichlet_nodes
        y[fixed] = self.datum.apply(0.0, self.mesh.nodes[fixed])
        return q0.replace(y=y)


@dataclass
class StabilityReport:
    n_checked: int
    violations: list
    max_excess: float
    tol: float
    seed: int

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class StepRecord:
    t: float
    state: State
    energy: EnergyBreakdown
    dissipation_step: float
    variation: float
    power: float
    power_left: float
    aux_energy: float
    aux_power: float
    min_det: float
    stability: StabilityReport | None = None
    flag: str = ""
    balance_residual: float = 0.0
    objective: float = math.nan
    stay: float = math.nan


@dataclass
class Trajectory:
    """Append-only carrier of the discrete evolution and its ledgers."""

    records: list = field(default_factory=list)
    diagnostic: str = ""

    @property
    def times(self):
        return [r.t for r in self.records]

    @property
    def states(self):
        return [r.state for r in self.records]

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def append(self, rec: StepRecord) -> None:
        if self.records and not rec.t > self.records[-1].t:
            raise DomainError("trajectory times must increase strictly")
        self.records.append(rec)

    @property
    def total_dissipation(self) -> float:
        return self.records[-1].variation if self.records else 0.0

    def injected_energy(self) -> float:
        """Trapezoid integral of the absolute power."""
        tot = 0.0
        for a, b in zip(self.records, self.records[1:]):
            tot += 0.5 * (b.t - a.t) * (abs(a.power) + abs(b.power_left))
        return tot


@dataclass
class StepResult:
    """``objective = E(t_k, q_k) + D(q_prev, q_k)``; ``stay = E(t_k, q_start)``."""

    state: State
    flag: str = ""
    objective: float = math.nan
    sweeps: int = 0
    stay: float = math.nan


# --------------------------------------------------------------------------
# smoothed dissipation
# --------------------------------------------------------------------------
def huber(r, eps: float):
    """Huber smoothing of ``|r|``: ``r^2/(2 eps)`` below ``eps``, ``r - eps/2`` above.

    Returns the value and the derivative with respect to ``r``.
    """
    r = np.asarray(r, float)
    if eps <= 0:
        return r, np.ones_like(r)
    small = r <= eps
    val = np.where(small, 0.5 * r * r / eps, r - 0.5 * eps)
    der = np.where(small, r / eps, 1.0)
    return val, der


def _smoothed_dissipation(mesh: Mesh, m, m_prev, eps: float, grad: bool):
    d = _at_quad(mesh, m) - _at_quad(mesh, m_prev)
    r = np.linalg.norm(d, axis=-1)
    val, der = huber(r, eps)
    w = mesh.quad_weights
    total = float(np.sum(w * val))
    if not grad:
        return total, None
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[..., None] > 0, d / np.where(r > 0, r, 1.0)[..., None], 0.0)
    gq = (w * der)[..., None] * unit  # (ne, q, 2)
    return total, scatter(mesh, np.einsum("qa,eqi->eai", TRI_BARY, gq))


def _dissipation_m(mesh: Mesh, m, m_prev) -> float:
    d = _at_quad(mesh, m) - _at_quad(mesh, m_prev)
    return float(np.sum(mesh.quad_weights * np.linalg.norm(d, axis=-1)))


# --------------------------------------------------------------------------
# L-BFGS with feasibility-aware backtracking
# --------------------------------------------------------------------------
def _lbfgs(fun, x0, gtol, max_iter, memory, backtrack, feasible=None, project=None, ftol=0.0):
    x = np.array(x0, float)
    f, g = fun(x)
    if not math.isfinite(f):
        return x, f, g, "infeasible start"
    S, Y = deque(maxlen=memory), deque(maxlen=memory)
    status = "max_iter"
    for _ in range(max_iter):
        if np.max(np.abs(g), initial=0.0) <= gtol:
            status = "converged"
            break
        q = -g.copy()
        alphas = []
        for s, yv in reversed(list(zip(S, Y))):
            rho = 1.0 / np.dot(yv, s)
            a = rho * np.dot(s, q)
            q -= a * yv
            alphas.append((rho, a))
        if S:
            q *= np.dot(S[-1], Y[-1]) / np.dot(Y[-1], Y[-1])
        else:
            q *= min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
        for (s, yv), (rho, a) in zip(zip(S, Y), reversed(alphas)):
            b = rho * np.dot(yv, q)
            q += (a - b) * s
        dg = float(np.dot(q, g))
        if not dg < 0:
            S.clear()
            Y.clear()
            q = -g * min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))
            dg = float(np.dot(q, g))
        step = 1.0
        accepted = False
        for _ls in range(60):
            xn = x + step * q
            if project is not None:
                xn = project(xn)
            if feasible is None or feasible(xn, x):
                fn, gn = fun(xn)
                if math.isfinite(fn) and fn <= f + 1e-4 * step * dg and fn < f:
                    accepted = True
                    break
            step *= backtrack
        if not accepted:
            status = "line search exhausted"
            break
        s, yv = xn - x, gn - g
        sy = float(np.dot(s, yv))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            S.append(s)
            Y.append(yv)
        df = f - fn
        x, f, g = xn, fn, gn
        if df <= ftol * max(1.0, abs(f)):
            status = "stalled"
            break
    return x, f, g, status


# --------------------------------------------------------------------------
# inner minimizations
# --------------------------------------------------------------------------
def minimize_deformation(q: State, t: float, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum, cfg: SolverConfig | None = None, auxiliary: bool = False) -> np.ndarray:
    """Descend ``E(t, (y, m))`` in the free deformation nodes with ``m`` frozen.

    With ``auxiliary=True`` the unknowns are ``u = d_t^{-1} o y`` and the
    objective is evaluated as ``F(t, (u, m))`` through ``y = d_t o u``; both
    use the same discrete energy since ``E(t, Upsilon_t p) = F(t, p)``.

    Returns
    -------
    ndarray
        The deformation nodes ``y``. Dirichlet nodes are left unchanged.
    """
    cfg = cfg or SolverConfig()
    mesh = q.mesh
    free = mesh.free_nodes
    if len(free) == 0:
        return np.array(q.y)
    A = datum.A(t) if auxiliary else np.eye(2)
    b = datum.b(t) if auxiliary else np.zeros(2)
    y_base = np.array(q.y)
    v0 = (y_base[free] - b) @ np.linalg.inv(A).T if auxiliary else y_base[free]
    loads = loads or LoadSet()
    E0 = assemble(mesh, model, loads, t, y_base, q.m)[0].total
    scale = max(1.0, abs(E0))

    def to_y(v):
        y = y_base.copy()
        y[free] = v.reshape(-1, 2) @ A.T + b
        return y

    def fun(v):
        e, gy, _ = assemble(mesh, model, loads, t, to_y(v), q.m, grad=True)
        if not math.isfinite(e.total):
            return math.inf, None
        return e.total, (gy[free] @ A).ravel()

    floor = cfg.det_floor

    def feasible(vn, vc):
        dn = min_det(mesh, to_y(vn))
        dc = min_det(mesh, to_y(vc))
        return dn > floor and dn >= cfg.det_margin * dc

    def clamp(v):
        yv = cfg.box.clamp(v.reshape(-1, 2) @ A.T + b)
        return ((yv - b) @ np.linalg.inv(A).T).ravel()

    project = clamp if cfg.box is not None else None
    x, f, _, _ = _lbfgs(fun, v0.ravel(), cfg.gtol * scale, cfg.max_iter, cfg.memory, cfg.backtrack, feasible, project, cfg.ftol)
    if not math.isfinite(f) or f > E0:
        return y_base
    return to_y(x)


def _rotate(m, phi):
    c, s = np.cos(phi), np.sin(phi)
    out = np.column_stack([c * m[:, 0] - s * m[:, 1], s * m[:, 0] + c * m[:, 1]])
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def minimize_director(q: State, q_prev: State, t: float, eps: float, model: MaterialModel, loads: LoadSet | None, cfg: SolverConfig | None = None) -> np.ndarray:
    """Descend the director objective with ``y`` frozen.

    The objective is ``E(t, (y, m)) + D_eps(m_prev, m)`` where ``D_eps``
    replaces ``|m - m_prev|`` by its Huber smoothing. The unknowns are
    per-node rotation angles, so every iterate is renormalized to the unit
    circle exactly.
    """
    cfg = cfg or SolverConfig()
    mesh = q.mesh
    loads = loads or LoadSet()
    m0 = np.array(q.m)
    mp = np.asarray(q_prev.m)

    def fun(phi):
        m = _rotate(m0, phi)
        e, _, gm = assemble(mesh, model, loads, t, q.y, m, grad=True)
        if not math.isfinite(e.total):
            return math.inf, None
        dval, dg = _smoothed_dissipation(mesh, m, mp, eps, True)
        g = gm + dg
        tang = np.column_stack([-m[:, 1], m[:, 0]])
        return e.total + dval, np.einsum("ai,ai->a", g, tang)

    E0 = assemble(mesh, model, loads, t, q.y, m0)[0].total
    scale = max(1.0, abs(E0))
    phi, f, _, _ = _lbfgs(fun, np.zeros(mesh.n_nodes), cfg.gtol * scale, cfg.max_iter, cfg.memory, cfg.backtrack, ftol=cfg.ftol)
    return _rotate(m0, phi) if math.isfinite(f) else m0


def _true_objective(mesh, model, loads, t, y, m, m_prev):
    e = assemble(mesh, model, loads, t, y, m)[0].total
    return e + _dissipation_m(mesh, m, m_prev)


def _snap(mesh, model, loads, t, y, m, m_prev, radius):
    """Snap nearly-stuck nodes onto ``m_prev`` when the true objective drops."""
    best = _true_objective(mesh, model, loads, t, y, m, m_prev)
    near = np.linalg.norm(m - m_prev, axis=1) < radius
    changed = near & np.any(m != m_prev, axis=1)
    if not np.any(changed):
        return m, best
    trial = m.copy()
    trial[changed] = m_prev[changed]
    val = _true_objective(mesh, model, loads, t, y, trial, m_prev)
    if val <= best:
        return trial, val
    # node by node when the collective snap does not pay off
    for a in np.flatnonzero(changed):
        cand = m.copy()
        cand[a] = m_prev[a]
        v = _true_objective(mesh, model, loads, t, y, cand, m_prev)
        if v <= best:
            m, best = cand, v
    return m, best


# --------------------------------------------------------------------------
# one incremental step
# --------------------------------------------------------------------------
def _start_state(t: float, q_prev: State, t_prev: float, datum: BoundaryDatum, box: Box | None) -> State:
    """``Upsilon_t(Upsilon_{t_prev}^{-1} q_prev)``: the previous state carried by the datum."""
    if datum.is_static or t == t_prev:
        return q_prev
    p = pullback_inverse(t_prev, q_prev, datum)
    y = datum.apply(t, p.y)
    if box is not None:
        y = box.clamp(y)
    return q_prev.replace(y=y)


def incremental_step(t_k: float, q_prev: State, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum, cfg: SolverConfig | None = None, t_prev: float | None = None, start: State | None = None) -> StepResult:
    """Approximate minimizer of ``E(t_k, .) + D(q_prev, .)``.

    The result never does worse than staying put: if the alternating descent
    fails to lower the true objective below ``E(t_k, q_start)``, the start
    state is returned with a warning flag. ``q_start`` is ``q_prev`` for a
    static datum and ``Upsilon_{t_k}(p_prev)`` otherwise.
    """
    cfg = cfg or SolverConfig()
    loads = loads or LoadSet()
    mesh = q_prev.mesh
    t_prev = t_k if t_prev is None else t_prev
    q_start = _start_state(t_k, q_prev, t_prev, datum, cfg.box)
    aux = not datum.is_static
    base = _true_objective(mesh, model, loads, t_k, q_start.y, q_start.m, q_prev.m)
    if not math.isfinite(base):
        return StepResult(q_prev, "non-admissible start", base, 0, base)
    q = start if start is not None else q_start
    m_prev = np.asarray(q_prev.m)
    scale = max(1.0, abs(base))
    obj = _true_objective(mesh, model, loads, t_k, q.y, q.m, m_prev)
    eps = cfg.huber_eps
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        y = minimize_deformation(q, t_k, model, loads, datum, cfg, auxiliary=aux)
        q = q.replace(y=y)
        m = minimize_director(q, q_prev, t_k, eps, model, loads, cfg)
        m, _ = _snap(mesh, model, loads, t_k, q.y, m, m_prev, 3.0 * eps)
        q = q.replace(m=m)
        new = _true_objective(mesh, model, loads, t_k, q.y, q.m, m_prev)
        done = obj - new <= cfg.ftol * scale + 1e-13 * scale
        obj = min(obj, new)
        if done:
            break
    # final sharpening sweep
    m = minimize_director(q, q_prev, t_k, 0.5 * eps, model, loads, cfg)
    m, _ = _snap(mesh, model, loads, t_k, q.y, m, m_prev, 1.5 * eps)
    trial = q.replace(m=m)
    if _true_objective(mesh, model, loads, t_k, trial.y, trial.m, m_prev) <= obj:
        q = trial
    q = q.replace(y=minimize_deformation(q, t_k, model, loads, datum, cfg, auxiliary=aux))
    obj = _true_objective(mesh, model, loads, t_k, q.y, q.m, m_prev)
    if not math.isfinite(obj) or obj > base:
        log.warning("no admissible descent at t=%r; keeping the start state", t_k)
        return StepResult(q_start, "no descent", base, sweeps, base)
    if base - obj <= 1e-13 * scale:
        # a gain at roundoff level is not a move; keeps frozen data exactly frozen
        return StepResult(q_start, "", base, sweeps, base)
    return StepResult(q, "", obj, sweeps, base)


# --------------------------------------------------------------------------
# stability
# --------------------------------------------------------------------------
def _competitors(q: State, q_prev: State | None, n: int, rng: np.random.Generator, amplitudes=(1e-3, 1e-2, 1e-1)):
    mesh = q.mesh
    free = mesh.free_nodes
    h = float(np.sqrt(np.mean(mesh.areas) * 2.0))
    out = []
    for k in range(n):
        a = amplitudes[k % len(amplitudes)]
        kind = (k // len(amplitudes)) % 3
        y = np.array(q.y)
        m = np.array(q.m)
        if kind in (0, 2) and len(free):
            y[free] += a * h * rng.standard_normal((len(free), 2))
        if kind in (1, 2):
            m = _rotate(m, a * rng.standard_normal(mesh.n_nodes))
        out.append(("random", a, State(mesh, y, m)))
    # pure director flips
    out.append(("flip", math.pi, q.replace(m=-np.asarray(q.m))))
    out.append(("rotate", math.pi / 2, q.replace(m=_rotate(np.asarray(q.m), np.full(mesh.n_nodes, math.pi / 2)))))
    out.append(("rotate", -math.pi / 2, q.replace(m=_rotate(np.asarray(q.m), np.full(mesh.n_nodes, -math.pi / 2)))))
    subset = rng.random(mesh.n_nodes) < 0.5
    m = np.array(q.m)
    m[subset] *= -1.0
    out.append(("partial flip", math.pi, q.replace(m=m)))
    if q_prev is not None:
        out.append(("previous", 0.0, q_prev))
    return out


def stability_check(t: float, q: State, q_prev: State | None, model: MaterialModel, loads: LoadSet | None, datum: BoundaryDatum | None = None, n_competitors: int = 50, tol: float = 1e-8, seed: int = 0, extra=()) -> StabilityReport:
    """Sample competitors ``q_hat`` and test ``E(t,q) <= E(t,q_hat) + D(q,q_hat) + tol*scale``.

    ``q_prev`` must be admissible at ``t`` (for a time-dependent datum pass
    the previous state carried by the datum). The energy scale is
    ``max(1, |E(t, q)|)``.
    """
    loads = loads or LoadSet()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(round(t * 1e9)) & 0xFFFFFFFF]))
    E = assemble(q.mesh, model, loads, t, q.y, q.m)[0].total
    scale = max(1.0, abs(E))
    viol = []
    max_excess = -math.inf
    comps = _competitors(q, q_prev, n_competitors, rng) + [("extra", 0.0, c) for c in extra]
    for kind, amp, qh in comps:
        Eh = assemble(q.mesh, model, loads, t, qh.y, qh.m)[0].total
        if not math.isfinite(Eh):
            continue
        excess = E - Eh - dissipation(q, qh)
        max_excess = max(max_excess, excess)
        if excess > tol * scale:
            viol.append({"kind": kind, "amplitude": amp, "excess": excess, "state": qh})
    return StabilityReport(len(comps), viol, max_excess, tol * scale, int(seed))


# --------------------------------------------------------------------------
# quasistatic driver
# --------------------------------------------------------------------------
def _power(t, q, model, loads, datum, side):
    return power_time_independent(t, q, loads, side) + displacement_power(t, q, model, loads, datum, side)


def _record(t, q, prob: Problem, prev: StepRecord | None, flag="") -> StepRecord:
    model, loads, datum = prob.model, prob.loads, prob.datum
    e = assemble(q.mesh, model, loads, t, q.y, q.m)[0]
    dstep = dissipation(q, prev.state) if prev is not None else 0.0
    var = (prev.variation if prev is not None else 0.0) + dstep
    pr = _power(t, q, model, loads, datum, "right")
    kinks = set(loads.kinks) | set(datum.kinks)
    pl = _power(t, q, model, loads, datum, "left") if any(abs(t - k) <= 1e-14 * max(1.0, abs(k)) for k in kinks) else pr
    p = pullback_inverse(t, q, datum)
    return StepRecord(
        t=float(t),
        state=q,
        energy=e,
        dissipation_step=dstep,
        variation=var,
        power=pr,
        power_left=pl,
        aux_energy=aux_energy(t, p, model, loads, datum).total,
        aux_power=aux_power(t, p, model, loads, datum),
        min_det=min_det(q.mesh, q.y),
        flag=flag,
    )


def _admissible(q: State) -> bool:
    return min_det(q.mesh, q.y) > 0 and np.all(np.abs(np.linalg.norm(q.m, axis=1) - 1.0) <= 1e-10)


def run_quasistatic(problem: Problem, progress=None) -> Trajectory:
    """Run the incremental scheme on the uniform grid of ``problem.config``.

    The initial state is pre-relaxed by one incremental step at ``t = 0``.
    Each record carries the energy, the step dissipation, the variation, the
    power ``dE/dt + P``, the auxiliary pair ``(F, dF/dt)``, ``min_det`` and
    the stability report. The balance residual is filled in at the end.
    """
    cfg = problem.config
    model, loads, datum = problem.model, problem.loads, problem.datum
    times = cfg.times
    q0 = problem.initial_state()
    res = incremental_step(0.0, q0, model, loads, datum, cfg)
    q = res.state
    traj = Trajectory()
    rec0 = _record(0.0, q, problem, None, res.flag)
    rec0.objective, rec0.stay = res.objective, res.stay
    traj.append(rec0)
    for k in range(1, len(times)):
        t, tp = float(times[k]), float(times[k - 1])
        prev = traj.records[-1]
        res = incremental_step(t, prev.state, model, loads, datum, cfg, t_prev=tp)
        qk = res.state
        report = None
        if cfg.check_stability:
            q_start = _start_state(t, prev.state, tp, datum, cfg.box)
            report = stability_check(t, qk, q_start, model, loads, datum, cfg.n_competitors, cfg.stability_tol, cfg.seed + k)
            if not report.ok and cfg.polish:
                for v in report.violations[:3]:
                    alt = incremental_step(t, prev.state, model, loads, datum, cfg, t_prev=tp, start=v["state"])
                    if alt.objective < res.objective:
                        res = alt
                qk = res.state
                report = stability_check(t, qk, q_start, model, loads, datum, cfg.n_competitors, cfg.stability_tol, cfg.seed + k)
        if not _admissible(qk):
            traj.diagnostic = f"non-admissible state at step {k} (t={t})"
            log.error(traj.diagnostic)
            break
        rec = _record(t, qk, problem, prev, res.flag)
        rec.stability = report
        rec.objective, rec.stay = res.objective, res.stay
        traj.append(rec)
        if progress is not None:
            progress(k, rec)
    balance_residual(traj)
    return traj


def balance_residual(trajectory: Trajectory) -> np.ndarray:
    """``r_k = E_k + Var_k - E_0 - int_0^{t_k} (dE/dt + P)`` with the trapezoid rule.

    Also stores ``r_k`` in each record.
    """
    recs = trajectory.records
    if not recs:
        return np.zeros(0)
    r = np.zeros(len(recs))
    E0 = recs[0].energy.total
    integral = 0.0
    for k, rec in enumerate(recs):
        if k:
            a = recs[k - 1]
            integral += 0.5 * (rec.t - a.t) * (a.power + rec.power_left)
        r[k] = rec.energy.total + rec.variation - E0 - integral
        rec.balance_residual = float(r[k])
    return r
