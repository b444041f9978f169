"""Standalone property checks shared by the CLI drivers and the acceptance suite.

Each ``check_*`` function runs one self-contained verification and returns a
:class:`CheckResult` holding the verdict, the measured metrics and a short
human-readable detail line. Nothing here raises on a failed property; a
failure is a result with ``passed = False``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn
from .fem import State, geometric_area, min_det, polygon_area, unit_square_mesh
from .functionals import (
    aux_energy,
    aux_power,
    displacement_power,
    power_time_independent,
    pullback,
    total_energy,
)
from .lab import (
    coercivity_probe,
    multi_resolution,
    poincare_estimate,
    power_modulus_check,
    random_admissible_states,
    sphere_embedding_check,
    trace_estimate,
)
from .material import (
    MaterialModel,
    PowerLogSigma,
    default_model,
    elastic_density,
    elastic_stress,
    kirchhoff,
    multiplicative_estimates_check,
    sample_deformations,
)
from .orlicz import NFunction, Power, PowerLog, conjugate_eval, luxemburg_norm_batch
from .solver import Problem, SolverConfig, run_quasistatic
from .timedata import AffinePath, Load, LoadSet, PiecewisePolynomial, Profile, StaticDatum

__all__ = [
    "CheckResult",
    "check_orlicz",
    "check_tensor",
    "check_stress",
    "check_multiplicative",
    "check_pullback",
    "check_power",
    "check_stretch",
    "check_frozen",
    "check_lab",
    "check_area",
    "stretch_problem",
    "smooth_loads",
    "smooth_datum",
    "ACCEPTANCE",
]


@dataclass
class CheckResult:
    """Verdict of one check.

    Attributes
    ----------
    name : str
        Stable identifier used in failure lists.
    passed : bool
        Whether every asserted property held.
    metrics : dict
        Measured quantities (errors, counts, runtimes).
    detail : str
        One-line summary.
    failures : list of str
        Names of the individual properties that failed.
    """

    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    detail: str = ""
    failures: list = field(default_factory=list)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        return {"name": self.name, "passed": self.passed, "failures": list(self.failures), "metrics": {k: clean(v) for k, v in self.metrics.items()}, "detail": self.detail}


def _result(name, conditions: dict, metrics: dict, detail: str) -> CheckResult:
    failed = [k for k, ok in conditions.items() if not ok]
    return CheckResult(name, not failed, metrics, detail + (f" [failed: {', '.join(failed)}]" if failed else ""), failed)


# --------------------------------------------------------------------------
# shared problem data
# --------------------------------------------------------------------------
def smooth_loads(degree: int = 2) -> LoadSet:
    """Body, surface and field loads with a polynomial time amplitude."""
    coeffs = [1.0, 0.5, 0.3, -0.2][: degree + 1]
    theta = PiecewisePolynomial.polynomial(coeffs)
    return LoadSet(
        f=Load(Profile(c=(0.1, 0.2), G=((0.1, 0.0), (0.0, 0.2)), a=(0.1, 0.1), k=(1.0, 2.0)), theta),
        g=Load(Profile(c=(0.3, -0.1)), theta),
        h=Load(Profile(c=(0.5, 0.2), G=((0.2, 0.1), (0.0, 0.3)), a=(0.1, -0.2), k=(2.0, 1.0)), theta),
    )


def smooth_datum() -> AffinePath:
    """Affine boundary datum quadratic in time with ``A(0) = I``."""
    A = PiecewisePolynomial.polynomial([np.eye(2), [[0.3, 0.1], [0.0, 0.2]], [[0.1, 0.0], [0.05, 0.1]]])
    b = PiecewisePolynomial.polynomial([[0.0, 0.0], [0.1, 0.2]])
    return AffinePath(A, b)


def stretch_problem(n_steps: int = 20, field: float = 1.3, mesh_n: int = 8, **cfg) -> Problem:
    """Uniaxial stretch ``diag(1, 1) -> diag(1.3, 1)`` of both vertical edges.

    The director starts along ``e2`` and a constant field ``(field, 0)``
    pulls it towards ``e1`` once the stretch has lowered the elastic
    barrier, so the run contains a genuine sliding phase.
    """
    mesh = unit_square_mesh(mesh_n, {"left": "Lambda", "right": "Lambda"})
    loads = LoadSet(h=Load(Profile(c=(float(field), 0.0))))
    datum = AffinePath.ramp(np.eye(2), np.diag([1.3, 1.0]), 1.0)
    return Problem(mesh, default_model(), loads, datum, State.reference(mesh, (0.0, 1.0)), SolverConfig(n_steps=n_steps, **cfg))


def _random_states(mesh, n, rng, amplitude=0.05, base=None):
    base = np.eye(2) if base is None else np.asarray(base)
    out = []
    for _ in range(n):
        G = base + 0.15 * rng.standard_normal((2, 2))
        while np.linalg.det(G) < 0.3:
            G = base + 0.15 * rng.standard_normal((2, 2))
        y = mesh.nodes @ G.T + amplitude / (math.sqrt(mesh.n_nodes) - 1.0) * rng.standard_normal(mesh.nodes.shape)
        th = rng.uniform(0.0, 2.0 * np.pi, mesh.n_nodes)
        out.append(State(mesh, y, np.column_stack([np.cos(th), np.sin(th)])))
    return out


# --------------------------------------------------------------------------
# 1. Orlicz suite
# --------------------------------------------------------------------------
def check_orlicz(n_fields: int = 1000, n_samples: int = 10_000, seed: int = 0, functions: tuple | None = None, budget: float = 5.0) -> CheckResult:
    """Luxemburg norm vs the classical p-norm and the hard Orlicz inequalities.

    * For ``Power(p)``, the Luxemburg norm of ``n_fields`` random weighted
      fields equals ``(sum w |v|^p)^(1/p)`` to relative ``1e-8``.
    * Young ``s t <= A(s) + conj A(t)``, Hölder
      ``int |u v| <= 2 |u|_A |v|_conj`` and the norm-modular relation
      (``rho(v) <= |v|`` when ``|v| <= 1``, ``rho(v) >= |v|`` otherwise) on
      ``n_samples`` samples, with zero violations.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ps = (1.5, 2.0, 3.0, 4.5)
    vals = np.abs(rng.standard_normal((n_fields, 64))) * np.exp(rng.uniform(-3, 3, (n_fields, 1)))
    w = rng.uniform(0.1, 1.0, (n_fields, 64))
    w /= w.sum(axis=1, keepdims=True)
    norm_err = 0.0
    for i, p in enumerate(ps):
        rows = slice(i, None, len(ps))
        got = luxemburg_norm_batch(Power(p), vals[rows], w[rows], tol=1e-13)
        want = np.einsum("kn,kn->k", w[rows], vals[rows] ** p) ** (1.0 / p)
        norm_err = max(norm_err, float(np.max(np.abs(got - want) / want)))

    functions = functions or (Power(2.0), Power(1.5), Power(3.0, 0.5), PowerLog(2.0, 1.0), PowerLog(1.5, 0.5))
    young = holder = modular = 0
    for A in functions:
        s = np.exp(rng.uniform(-5, 5, n_samples))
        tt = np.exp(rng.uniform(-5, 5, n_samples))
        lhs = s * tt
        rhs = A(s) + conjugate_eval(A, tt)
        young += int(np.count_nonzero(lhs > rhs * (1 + 1e-12)))

        k = max(1, n_samples // 64)
        u = np.abs(rng.standard_normal((k, 64))) * np.exp(rng.uniform(-3, 3, (k, 1)))
        v = np.abs(rng.standard_normal((k, 64))) * np.exp(rng.uniform(-3, 3, (k, 1)))
        wk = np.full((k, 64), 1.0 / 64)
        nu = luxemburg_norm_batch(A, u, wk)
        nv = luxemburg_norm_batch(A.conjugate_function, v, wk)
        holder += int(np.count_nonzero(np.sum(wk * u * v, axis=1) > 2 * nu * nv * (1 + 1e-9)))
        rho = np.sum(wk * A(u), axis=1)
        small = nu <= 1
        modular += int(np.count_nonzero(small & (rho > nu * (1 + 1e-9))) + np.count_nonzero(~small & (rho < nu * (1 - 1e-9))))
    elapsed = time.perf_counter() - t0
    metrics = {"norm_rel_err": norm_err, "young_violations": young, "holder_violations": holder, "modular_violations": modular, "runtime": elapsed}
    conds = {"norm": norm_err <= 1e-8, "young": young == 0, "holder": holder == 0, "norm_modular": modular == 0, "runtime": elapsed < budget}
    return _result("orlicz", conds, metrics, f"norm err {norm_err:.2e}, violations Y/H/M = {young}/{holder}/{modular}, {elapsed:.2f}s")


# --------------------------------------------------------------------------
# 2. tensor differentials
# --------------------------------------------------------------------------
def _random_matrices(rng, count, n, min_det=0.1):
    out, have = [], 0
    while have < count:
        A = rng.uniform(-2, 2, (2 * count, n, n)) + np.eye(n)
        ok = np.asarray(tn.determinant(A)) >= min_det
        ok &= np.linalg.cond(A) < 1e3
        out.append(A[ok])
        have += int(ok.sum())
    return np.concatenate(out)[:count]


def check_tensor(n_points: int = 1000, seed: int = 0, h: float = 1e-6, budget: float = 5.0) -> CheckResult:
    """``d_det``, ``d_inv``, ``d_adj``, ``d_cof`` vs central differences in 2D and 3D."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pairs = {"det": (tn.determinant, tn.d_det), "inv": (tn.inverse, tn.d_inv), "adj": (tn.adjugate, tn.d_adj), "cof": (tn.cofactor, tn.d_cof)}
    errs = {k: 0.0 for k in pairs}
    for n in (2, 3):
        A = _random_matrices(rng, n_points, n)
        B = rng.standard_normal((n_points, n, n))
        for k, (fun, d) in pairs.items():
            errs[k] = max(errs[k], tn.fd_check(fun, A, B, d(A, B), h))
    elapsed = time.perf_counter() - t0
    conds = {f"d_{k}": e <= 1e-5 for k, e in errs.items()}
    conds["runtime"] = elapsed < budget
    metrics = {f"d_{k}_rel_err": e for k, e in errs.items()} | {"runtime": elapsed}
    return _result("tensor", conds, metrics, ", ".join(f"d_{k} {e:.1e}" for k, e in errs.items()) + f", {elapsed:.2f}s")


# --------------------------------------------------------------------------
# 3. stress consistency
# --------------------------------------------------------------------------
def stress_models() -> tuple:
    """Material models covering both sigma families, anisotropy and 3D."""
    return (
        default_model(),
        MaterialModel(mu=2.0, zeta=1.5),
        MaterialModel(A=PowerLog(1.0, 1.0), mu=0.7, zeta=2.5, sigma=PowerLogSigma()),
        MaterialModel(A=PowerLog(2.0, 0.5), mu=1.5, zeta=2.0, n=3),
    )


def check_stress(n_points: int = 1000, seed: int = 0, h: float = 1e-6, models=None, budget: float = 10.0) -> CheckResult:
    """Analytic ``dW/dF`` and ``K = dW/dF F^T`` vs finite differences of ``W``.

    ``dW/dF`` is compared componentwise; ``K`` through the outer
    perturbation identity ``d/de W((I + e H) F) = K : H`` along random ``H``.
    Samples satisfy ``det F >= 0.1``.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    errP = errK = 0.0
    for model in models or stress_models():
        n = model.n
        F, z = sample_deformations(rng, n_points, n, max_norm=4.0, min_det=0.1)
        P = elastic_stress(model, F, z)
        scale = np.maximum(1.0, np.asarray(tn.frob(P)))
        fd = np.zeros_like(P)
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n))
                E[i, j] = h
                fd[:, i, j] = (elastic_density(model, F + E, z) - elastic_density(model, F - E, z)) / (2 * h)
        errP = max(errP, float(np.max(np.asarray(tn.frob(fd - P)) / scale)))
        K = kirchhoff(model, F, z)
        H = rng.standard_normal((n_points, n, n))
        H /= np.asarray(tn.frob(H))[:, None, None]
        I = np.eye(n)
        fdK = (elastic_density(model, (I + h * H) @ F, z) - elastic_density(model, (I - h * H) @ F, z)) / (2 * h)
        an = np.asarray(tn.ddot(K, H))
        errK = max(errK, float(np.max(np.abs(fdK - an) / np.maximum(1.0, np.asarray(tn.frob(K))))))
    elapsed = time.perf_counter() - t0
    conds = {"dW/dF": errP <= 1e-5, "K": errK <= 1e-5, "runtime": elapsed < budget}
    return _result("stress", conds, {"P_rel_err": errP, "K_rel_err": errK, "runtime": elapsed}, f"dW/dF {errP:.1e}, K {errK:.1e}, {elapsed:.2f}s")


# --------------------------------------------------------------------------
# 4. multiplicative estimates
# --------------------------------------------------------------------------
def check_multiplicative(n_samples: int = 10_000, delta: float = 1e-3, seed: int = 0, models=None) -> CheckResult:
    """The three multiplicative stability estimates with fitted ``a_W`` and ``b_W = 1``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    metrics, conds = {}, {}
    for i, model in enumerate(models or stress_models()[:3]):
        samples = sample_deformations(rng, n_samples, model.n)
        rep = multiplicative_estimates_check(model, samples, delta, rng=rng, max_halvings=3)
        conds[f"model{i}"] = rep.passed and rep.halvings <= 3
        metrics[f"model{i}_halvings"] = rep.halvings
        metrics[f"model{i}_a_W"] = rep.a_W
        metrics[f"model{i}_violations"] = sum(rep.violations.values())
    total = sum(v for k, v in metrics.items() if k.endswith("violations"))
    return _result("multiplicative", conds, metrics, f"{len(conds)} models, {total} violations, max halvings {max(v for k, v in metrics.items() if k.endswith('halvings'))}")


# --------------------------------------------------------------------------
# 5. pull-back identity
# --------------------------------------------------------------------------
def check_pullback(n_states: int = 100, mesh_n: int = 8, seed: int = 0, times=(0.0, 0.37, 1.0)) -> CheckResult:
    """``|E(t, Upsilon_t p) - F(t, p)| <= 1e-10 (1 + |E|)`` for an affine datum."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    mesh = unit_square_mesh(mesh_n)
    model, loads, datum = default_model(), smooth_loads(), smooth_datum()
    worst = 0.0
    for k, p in enumerate(_random_states(mesh, n_states, rng)):
        t = times[k % len(times)]
        E = total_energy(t, pullback(t, p, datum), model, loads).total
        F = aux_energy(t, p, model, loads, datum).total
        worst = max(worst, abs(E - F) / (1.0 + abs(E)))
    return _result("pullback", {"identity": worst <= 1e-10}, {"max_scaled_err": worst, "n_states": n_states}, f"max |E-F|/(1+|E|) = {worst:.2e} over {n_states} states")


# --------------------------------------------------------------------------
# 6. power formulas
# --------------------------------------------------------------------------
def check_power(n_states: int = 10, mesh_n: int = 4, h: float = 1e-4, seed: int = 0, times=(0.2, 0.55, 0.9)) -> CheckResult:
    """Analytic time derivatives vs centered differences, and the error slope.

    Three quantities are compared at step ``h``, with relative error
    ``|fd - an| / max(|fd|, 1)``:

    * ``dE/dt`` at fixed ``q``;
    * ``dF/dt`` at fixed ``p``;
    * ``dE/dt + P`` against the difference of ``E(s, Upsilon_s p)``.

    The forward-difference error of the power on quadratic-in-time data must
    decay with log-log slope ``1 +- 0.3``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    mesh = unit_square_mesh(mesh_n)
    model, loads, datum = default_model(), smooth_loads(3), smooth_datum()
    err = {"dE/dt": 0.0, "dF/dt": 0.0, "dE/dt+P": 0.0}

    def rel(fd, an):
        return abs(fd - an) / max(abs(fd), 1.0)

    for k, p in enumerate(_random_states(mesh, n_states, rng)):
        t = times[k % len(times)]
        q = pullback(t, p, datum)
        fd = (total_energy(t + h, q, model, loads).total - total_energy(t - h, q, model, loads).total) / (2 * h)
        err["dE/dt"] = max(err["dE/dt"], rel(fd, power_time_independent(t, q, loads)))
        fd = (aux_energy(t + h, p, model, loads, datum).total - aux_energy(t - h, p, model, loads, datum).total) / (2 * h)
        err["dF/dt"] = max(err["dF/dt"], rel(fd, aux_power(t, p, model, loads, datum)))
        fd = (total_energy(t + h, pullback(t + h, p, datum), model, loads).total - total_energy(t - h, pullback(t - h, p, datum), model, loads).total) / (2 * h)
        an = power_time_independent(t, q, loads) + displacement_power(t, q, model, loads, datum)
        err["dE/dt+P"] = max(err["dE/dt+P"], rel(fd, an))

    quad = smooth_loads(2)
    states = [pullback(0.3, p, datum) for p in _random_states(mesh, 3, rng)]
    rep = power_modulus_check(0.3, states, model, quad, datum, h_grid=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3))
    slope = rep.details["slope"]
    conds = {k: v <= 1e-4 for k, v in err.items()}
    conds["slope"] = bool(abs(slope - 1.0) <= 0.3)
    conds["monotone"] = rep.details["monotone"]
    metrics = {k + "_rel_err": v for k, v in err.items()} | {"slope": slope}
    return _result("power", conds, metrics, ", ".join(f"{k} {v:.1e}" for k, v in err.items()) + f", slope {slope:.3f}")


# --------------------------------------------------------------------------
# 7. stretch test
# --------------------------------------------------------------------------
def _stretch_metrics(traj):
    recs = traj.records
    scale = max(1.0, max(abs(r.energy.total) for r in recs))
    descent = all(r.objective <= r.stay + 1e-12 * scale for r in recs[1:])
    mdet = min(r.min_det for r in recs)
    unit = max(float(np.max(np.abs(np.linalg.norm(r.state.m, axis=1) - 1.0))) for r in recs)
    viol = sum(len(r.stability.violations) for r in recs if r.stability is not None)
    checked = sum(r.stability.n_checked for r in recs if r.stability is not None)
    res = max(abs(r.balance_residual) for r in recs)
    budget = traj.total_dissipation + abs(traj.injected_energy())
    return {"descent": descent, "min_det": mdet, "unit_err": unit, "violations": viol, "n_checked": checked, "max_residual": res, "budget": budget, "variation": traj.total_dissipation, "complete": not traj.diagnostic}


def check_stretch(n_steps: int = 20, field: float = 1.3, budget: float = 300.0) -> CheckResult:
    """Incremental stretch run at ``n_steps`` and ``2 n_steps``.

    Asserted at both resolutions: descent against staying put at every
    step, positive ``min_det``, unit directors to ``1e-10``, no stability
    violation, and a balance residual below 2% of the dissipated plus
    injected energy. Halving the step must reduce the residual by a factor
    in ``[1.5, 2.5]``.
    """
    t0 = time.perf_counter()
    coarse = _stretch_metrics(run_quasistatic(stretch_problem(n_steps, field)))
    fine = _stretch_metrics(run_quasistatic(stretch_problem(2 * n_steps, field)))
    elapsed = time.perf_counter() - t0
    factor = coarse["max_residual"] / fine["max_residual"] if fine["max_residual"] > 0 else math.inf
    conds = {}
    for tag, m in (("coarse", coarse), ("fine", fine)):
        conds[f"{tag}_complete"] = m["complete"]
        conds[f"{tag}_descent"] = m["descent"]
        conds[f"{tag}_min_det"] = m["min_det"] > 0
        conds[f"{tag}_unit"] = m["unit_err"] <= 1e-10
        conds[f"{tag}_stability"] = m["violations"] == 0
        conds[f"{tag}_residual"] = m["max_residual"] <= 0.02 * m["budget"]
    conds["halving_factor"] = 1.5 <= factor <= 2.5
    conds["runtime"] = elapsed < budget
    metrics = {f"{tag}_{k}": v for tag, m in (("coarse", coarse), ("fine", fine)) for k, v in m.items()}
    metrics |= {"halving_factor": factor, "runtime": elapsed}
    detail = f"residual {coarse['max_residual']:.2e} -> {fine['max_residual']:.2e} (factor {factor:.2f}), var {coarse['variation']:.3f}, violations {coarse['violations']}+{fine['violations']}, {elapsed:.1f}s"
    return _result("stretch", conds, metrics, detail)


# --------------------------------------------------------------------------
# 8. frozen data
# --------------------------------------------------------------------------
def check_frozen(n_steps: int = 6, mesh_n: int = 6) -> CheckResult:
    """Static datum and loads from a relaxed start give a constant trajectory."""
    mesh = unit_square_mesh(mesh_n)
    loads = LoadSet(f=Load(Profile(c=(0.05, -0.02))), h=Load(Profile(c=(0.2, 0.1))))
    datum = StaticDatum(np.diag([1.1, 0.95]), (0.02, 0.0))
    prob = Problem(mesh, default_model(), loads, datum, State.reference(mesh, (1.0, 0.0)), SolverConfig(n_steps=n_steps))
    traj = run_quasistatic(prob)
    r0 = traj.records[0]
    same = all(np.array_equal(r.state.y, r0.state.y) and np.array_equal(r.state.m, r0.state.m) for r in traj.records)
    var = [r.variation for r in traj.records]
    conds = {"complete": len(traj.records) == n_steps + 1, "variation_zero": all(v == 0.0 for v in var), "constant": same}
    return _result("frozen", conds, {"max_variation": max(var), "n_records": len(traj.records)}, f"{len(traj.records)} records, max variation {max(var)!r}, constant={same}")


# --------------------------------------------------------------------------
# 9. inequality lab
# --------------------------------------------------------------------------
def check_lab(n_samples: int = 100, n_states: int = 100, resolutions=(8, 16, 32), seed: int = 0, A: NFunction | None = None) -> CheckResult:
    """Multi-resolution stability of C_P and C_tr, and the coercivity probe.

    The coercivity bound is probed on ``n_states`` random admissible states
    in both the time-independent form and the auxiliary (pulled-back) form,
    with the finest-mesh constants.
    """
    A = A or Power(2.0)
    reps_p, spread_p = multi_resolution(poincare_estimate, A, resolutions, n_samples, seed)
    reps_t, spread_t = multi_resolution(trace_estimate, A, resolutions, n_samples, seed)
    C_P, C_tr = reps_p[-1].constant, reps_t[-1].constant
    model = default_model()
    loads = LoadSet(f=Load(Profile(c=(0.3, 0.1))), g=Load(Profile(c=(0.2, 0.0))), h=Load(Profile(c=(0.5, 0.5))))
    mesh = unit_square_mesh(8)
    plain = coercivity_probe(0.0, random_admissible_states(mesh, n_states, seed=seed), model, loads, C_P=C_P, C_tr=C_tr)
    datum = smooth_datum()
    t = 0.5
    aux_states = random_admissible_states(mesh, n_states, datum, t, seed=seed + 1)
    aux = coercivity_probe(t, aux_states, model, loads, datum, C_P=C_P, C_tr=C_tr, auxiliary=True, times=np.linspace(0.0, 1.0, 11))
    emb = sphere_embedding_check(A, 2, n_samples, seed)
    conds = {
        "poincare_spread": spread_p < 0.2,
        "trace_spread": spread_t < 0.2,
        "coercivity": plain.ok and plain.max_violation <= 0,
        "coercivity_aux": aux.ok and aux.max_violation <= 0,
        "embedding_finite": bool(math.isfinite(emb.constant)),
    }
    metrics = {
        "C_P": [r.constant for r in reps_p],
        "C_tr": [r.constant for r in reps_t],
        "poincare_spread": spread_p,
        "trace_spread": spread_t,
        "coercivity_max_violation": plain.max_violation,
        "coercivity_aux_max_violation": aux.max_violation,
        "C_em": emb.constant,
    }
    return _result("lab", conds, metrics, f"spread C_P {spread_p:.1%}, C_tr {spread_t:.1%}; coercivity max(rhs-lhs) {plain.max_violation:.2e} plain, {aux.max_violation:.2e} aux")


# --------------------------------------------------------------------------
# 10. area formula
# --------------------------------------------------------------------------
def check_area(n_maps: int = 100, mesh_n: int = 8, seed: int = 0) -> CheckResult:
    """``|sum det(Dy)|e| - area(y(Omega))| <= 1e-12`` for random affine injective ``y``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    mesh = unit_square_mesh(mesh_n)
    worst = 0.0
    for _ in range(n_maps):
        G = rng.uniform(-2, 2, (2, 2))
        while np.linalg.det(G) < 0.05:
            G = rng.uniform(-2, 2, (2, 2))
        y = mesh.nodes @ G.T + rng.uniform(-1, 1, 2)
        assert min_det(mesh, y) > 0
        worst = max(worst, abs(geometric_area(mesh, y) - polygon_area(mesh, y)))
    return _result("area", {"area": worst <= 1e-12}, {"max_abs_err": worst}, f"max |int det - area| = {worst:.2e} over {n_maps} maps")


ACCEPTANCE = (
    ("1 orlicz", check_orlicz),
    ("2 tensor", check_tensor),
    ("3 stress", check_stress),
    ("4 multiplicative", check_multiplicative),
    ("5 pullback", check_pullback),
    ("6 power", check_power),
    ("7 stretch", check_stretch),
    ("8 frozen", check_frozen),
    ("9 lab", check_lab),
    ("10 area", check_area),
)
