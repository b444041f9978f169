"""Command-line drivers.

Subcommands::

    nemato simulate --config FILE --out DIR
    nemato orlicz-check [--p P] [--out DIR]
    nemato inequality-lab --which {poincare,trace,power,embedding,coercivity,all} [--config FILE] [--out DIR]
    nemato derivative-check [--out DIR]
    nemato material-check [--out DIR]

Every subcommand prints one ``PASS``/``FAIL`` line per asserted property and
exits 0 iff all of them pass. On failure the names are also printed as a
JSON list on stderr (``FAILURES: [...]``) and, when ``--out`` is given,
written to ``failures.json``. Usage errors exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, checks
from .config import load_config
from .errors import NematoError
from .fem import unit_square_mesh
from .functionals import pullback
from .io import fmt, write_ledger, write_snapshot, write_text
from .lab import (
    coercivity_probe,
    multi_resolution,
    poincare_estimate,
    power_modulus_check,
    random_admissible_states,
    sphere_embedding_check,
    trace_estimate,
)
from .material import default_model
from .orlicz import Power
from .solver import run_quasistatic

__all__ = ["main", "run_subcommand", "build_parser"]

log = logging.getLogger("nemato")

LAB_CHOICES = ("poincare", "trace", "power", "embedding", "coercivity", "all")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nemato", description="Quasistatic nematic elastomer simulator and inequality laboratory.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True

    s = sub.add_parser("simulate", help="run the incremental scheme from a TOML config")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)

    o = sub.add_parser("orlicz-check", help="Luxemburg norm and Orlicz inequality suite")
    o.add_argument("--p", type=float, default=2.0, help="exponent of the Power N-function for the inequality samples")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", type=Path)

    lab = sub.add_parser("inequality-lab", help="estimate and cross-check the analytic inequalities")
    lab.add_argument("--which", choices=LAB_CHOICES, default="all")
    lab.add_argument("--config", type=Path, help="optional experiment config (material, loads, datum, lab block)")
    lab.add_argument("--n-samples", type=int)
    lab.add_argument("--seed", type=int)
    lab.add_argument("--out", type=Path)

    d = sub.add_parser("derivative-check", help="finite-difference suites: stress, dE/dt, dF/dt and P")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", type=Path)

    m = sub.add_parser("material-check", help="multiplicative stability estimates of the elastic density")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", type=Path)
    return p


# --------------------------------------------------------------------------
# reporting
# --------------------------------------------------------------------------
def _finish(results, out: Path | None) -> int:
    failures = [f"{r.name}.{f}" for r in results for f in (r.failures or ([] if r.passed else ["failed"]))]
    for r in results:
        print(r.line())
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text(out / "checks.json", json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True))
        if failures:
            write_text(out / "failures.json", json.dumps(failures, indent=2))
    if failures:
        print("FAILURES: " + json.dumps(failures), file=sys.stderr)
        return 1
    return 0


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------
def _simulate(args) -> int:
    cfg = load_config(args.config)
    prob = cfg.problem()
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    def progress(k, rec):
        log.info("step %d t=%.6g E=%.10g var=%.6g", k, rec.t, rec.energy.total, rec.variation)

    traj = run_quasistatic(prob, progress)
    write_ledger(traj, out / "ledger.csv")
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    for k, rec in enumerate(traj.records):
        write_snapshot(snaps / f"step_{k:05d}.txt", rec.t, rec.state)

    lines = ["# t n_checked n_violations max_excess tol seed"]
    for rec in traj.records:
        st = rec.stability
        if st is None:
            lines.append(f"{fmt(rec.t)} 0 0 0 nan -")
        else:
            lines.append(f"{fmt(rec.t)} {st.n_checked} {len(st.violations)} {fmt(st.max_excess)} {fmt(st.tol)} {st.seed}")
    write_text(out / "stability.txt", "\n".join(lines))

    budget = traj.total_dissipation + abs(traj.injected_energy())
    res = [abs(r.balance_residual) for r in traj.records]
    lines = ["# t balance_residual energy variation flag"]
    lines += [f"{fmt(r.t)} {fmt(r.balance_residual)} {fmt(r.energy.total)} {fmt(r.variation)} {r.flag or '-'}" for r in traj.records]
    lines += [
        f"# max_abs_residual {fmt(max(res))}",
        f"# total_dissipation {fmt(traj.total_dissipation)}",
        f"# injected_energy {fmt(traj.injected_energy())}",
        f"# relative_residual {fmt(max(res) / budget if budget > 0 else (0.0 if max(res) == 0 else math.inf))}",
    ]
    write_text(out / "balance.txt", "\n".join(lines))

    recs = traj.records
    scale = max(1.0, max(abs(r.energy.total) for r in recs))
    cond = {
        "complete": not traj.diagnostic and len(recs) == cfg.n_steps + 1,
        "descent": all(r.objective <= r.stay + 1e-12 * scale for r in recs[1:]),
        "min_det": min(r.min_det for r in recs) > 0,
        "unit_director": max(float(np.max(np.abs(np.linalg.norm(r.state.m, axis=1) - 1.0))) for r in recs) <= 1e-10,
        "stability": all(r.stability is None or r.stability.ok for r in recs),
    }
    failed = [k for k, v in cond.items() if not v]
    detail = f"{len(recs)} records, final E={recs[-1].energy.total:.10g}, variation={traj.total_dissipation:.6g}, max residual={max(res):.3e}"
    if traj.diagnostic:
        detail += f", {traj.diagnostic}"
    return _finish([checks.CheckResult("simulate", not failed, {}, detail, failed)], out)


# --------------------------------------------------------------------------
# inequality lab
# --------------------------------------------------------------------------
def _lab(args) -> int:
    cfg = load_config(args.config) if args.config else None
    A = cfg.A if cfg else Power(2.0)
    model = cfg.model if cfg else default_model()
    n = args.n_samples or (cfg.lab_samples if cfg else 100)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    resolutions = cfg.lab_resolutions if cfg else (8, 16, 32)
    loads = cfg.loads if cfg else checks.smooth_loads(0)
    datum = cfg.datum if cfg else checks.smooth_datum()
    mesh = cfg.mesh() if cfg else unit_square_mesh(8)
    which = LAB_CHOICES[:-1] if args.which == "all" else (args.which,)
    reports, results = [], []
    C_P = C_tr = None

    if "poincare" in which or "coercivity" in which:
        reps, spread = multi_resolution(poincare_estimate, A, resolutions, n, seed)
        C_P = reps[-1].constant
        if "poincare" in which:
            reports += reps
            results.append(checks._result("poincare", {"spread": spread < 0.2, "finite": all(r.ok for r in reps)}, {"spread": spread}, f"C_P={[round(r.constant, 6) for r in reps]} spread {spread:.2%}"))
    if "trace" in which or "coercivity" in which:
        reps, spread = multi_resolution(trace_estimate, A, resolutions, n, seed)
        C_tr = reps[-1].constant
        if "trace" in which:
            reports += reps
            results.append(checks._result("trace", {"spread": spread < 0.2, "finite": all(r.ok for r in reps)}, {"spread": spread}, f"C_tr={[round(r.constant, 6) for r in reps]} spread {spread:.2%}"))
    if "power" in which:
        t = 0.3 * (cfg.T if cfg else 1.0)
        rng_states = random_admissible_states(mesh, 3, None, 0.0, seed=seed, amplitude=0.1)
        states = [pullback(t, p, datum) for p in rng_states]
        rep = power_modulus_check(t, states, model, loads, datum)
        reports.append(rep)
        results.append(checks._result("power", {"monotone": rep.details["monotone"]}, {"slope": rep.details["slope"]}, f"error at smallest h {rep.constant:.3e}, slope {rep.details['slope']:.3f}"))
    if "embedding" in which:
        rep = sphere_embedding_check(A, 2, n, seed)
        reports.append(rep)
        results.append(checks._result("embedding", {"finite": rep.ok}, {"C_em": rep.constant}, f"C_em={rep.constant:.6g}"))
    if "coercivity" in which:
        t = 0.5 * (cfg.T if cfg else 1.0)
        plain = coercivity_probe(t, random_admissible_states(mesh, n, seed=seed), model, loads, None, C_P=C_P, C_tr=C_tr)
        times = np.linspace(0.0, cfg.T if cfg else 1.0, 11)
        aux = coercivity_probe(t, random_admissible_states(mesh, n, datum, t, seed=seed + 1), model, loads, datum, C_P=C_P, C_tr=C_tr, auxiliary=True, times=times)
        reports += [plain, aux]
        for rep in (plain, aux):
            results.append(checks._result(rep.inequality, {"no_violation": rep.ok}, {"max_violation": rep.max_violation}, f"max(rhs-lhs)={rep.max_violation:.3e} over {rep.n_samples} states"))

    for rep in reports:
        print(rep.summary())
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with (args.out / "lab_reports.csv").open("w", encoding="ascii", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["inequality", "constant", "n_samples", "resolutions", "max_violation", "seed"])
            for rep in reports:
                w.writerow([rep.inequality, fmt(rep.constant), rep.n_samples, " ".join(map(str, rep.resolutions)), fmt(rep.max_violation), rep.seed])
        write_text(args.out / "lab_report.txt", "\n".join(rep.summary() for rep in reports))
    return _finish(results, args.out)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------
def _orlicz(args) -> int:
    return _finish([checks.check_orlicz(seed=args.seed, functions=(Power(args.p),))], args.out)


def _derivative(args) -> int:
    return _finish([checks.check_tensor(seed=args.seed), checks.check_stress(seed=args.seed), checks.check_power(seed=args.seed)], args.out)


def _material(args) -> int:
    return _finish([checks.check_multiplicative(seed=args.seed)], args.out)


_HANDLERS = {
    "simulate": _simulate,
    "orlicz-check": _orlicz,
    "inequality-lab": _lab,
    "derivative-check": _derivative,
    "material-check": _material,
}


def run_subcommand(name: str, args: list[str] | None = None) -> int:
    """Run ``name`` with the argument list ``args``; returns the exit status."""
    return main([name, *(args or [])])


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _HANDLERS[ns.command](ns)
    except NematoError as exc:
        errors = getattr(exc, "errors", None) or [str(exc)]
        print(f"error: {type(exc).__name__}", file=sys.stderr)
        for e in errors:
            print(f"  {e}", file=sys.stderr)
        print("FAILURES: " + json.dumps([f"{ns.command}.{type(exc).__name__}"] + list(map(str, errors))), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("FAILURES: " + json.dumps([f"{ns.command}.io", str(exc)]), file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
