"""Experiment configuration: TOML text to a validated :class:`ExperimentConfig`.

Sections (``[mesh]`` and ``[time]`` are required)::

    seed = 0
    [mesh]      n, labels = {left = "Lambda", ...}, box = {lo = [..], hi = [..]}
    [orlicz]    family = "power" | "powerlog", p, q, c
    [material]  mu, zeta, sigma = {family = "powerpower", a, alpha, b, beta, c}
    [loads.f] / [loads.g] / [loads.h]   c, G, a, k, phase, theta = {poly = [..]}
    [datum]     family = "static" | "ramp" | "affine_path", ...
    [time]      T, n_steps
    [solver]    any field of SolverConfig except T, n_steps, box, seed
    [initial]   director = [m1, m2]
    [lab]       n_samples, resolutions

Every problem found is collected and raised together in one
:class:`ConfigError`. The environment variable ``NEMATO_SEED`` overrides the
seed.
"""
from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .errors import ConfigError, NematoError
from .fem import Box, Mesh, unit_square_mesh
from .material import MaterialModel, sigma_from_dict
from .orlicz import NFunction, Power, nfunction_from_dict
from .solver import Problem, SolverConfig
from .timedata import BoundaryDatum, LoadSet, StaticDatum, datum_from_dict, loads_from_dict

__all__ = ["ExperimentConfig", "parse_config", "load_config", "SEED_ENV"]

SEED_ENV = "NEMATO_SEED"

_SECTIONS = {
    "mesh": {"n", "labels", "box"},
    "orlicz": {"family", "p", "q", "c"},
    "material": {"mu", "zeta", "sigma"},
    "loads": {"f", "g", "h"},
    "datum": None,  # keys checked by the datum family
    "time": {"T", "n_steps"},
    "solver": {f.name for f in dataclasses.fields(SolverConfig)} - {"T", "n_steps", "box", "seed"},
    "initial": {"director"},
    "lab": {"n_samples", "resolutions"},
}
_REQUIRED = ("mesh", "time")
_DATUM_KEYS = {"static": {"family", "A", "b"}, "ramp": {"family", "A0", "A1", "b0", "b1"}, "affine_path": {"family", "A", "b"}}


@dataclass
class ExperimentConfig:
    mesh_n: int = 8
    labels: dict = field(default_factory=dict)
    box: Box | None = None
    A: NFunction = field(default_factory=lambda: Power(2.0))
    model: MaterialModel = field(default_factory=MaterialModel)
    loads: LoadSet = field(default_factory=LoadSet)
    datum: BoundaryDatum = field(default_factory=StaticDatum)
    T: float = 1.0
    n_steps: int = 20
    solver: SolverConfig = field(default_factory=SolverConfig)
    director: tuple = (1.0, 0.0)
    seed: int = 0
    lab_samples: int = 100
    lab_resolutions: tuple = (8, 16, 32)

    def mesh(self) -> Mesh:
        return unit_square_mesh(self.mesh_n, self.labels or None)

    def problem(self) -> Problem:
        from .fem import State

        mesh = self.mesh()
        return Problem(mesh, self.model, self.loads, self.datum, State.reference(mesh, self.director), self.solver)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_config(text: str, env=None) -> ExperimentConfig:
    """Parse and validate a TOML experiment description.

    Raises
    ------
    ConfigError
        With the list of every problem found (unknown keys, missing or
        duplicate sections, invalid values, cross-field violations).
    """
    env = os.environ if env is None else env
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errs: list[str] = []
    for key, val in raw.items():
        if key == "seed":
            continue
        if key not in _SECTIONS:
            errs.append(f"unknown section or key '{key}'")
        elif not isinstance(val, dict):
            errs.append(f"'{key}' must be a section")
    for sec in _REQUIRED:
        if sec not in raw:
            errs.append(f"missing section [{sec}]")
    for sec, allowed in _SECTIONS.items():
        if allowed is None or not isinstance(raw.get(sec), dict):
            continue
        for k in raw[sec]:
            if k not in allowed:
                errs.append(f"unknown key '{sec}.{k}'")
    cfg = ExperimentConfig()

    def guard(label, fn):
        try:
            return fn()
        except ConfigError as exc:
            errs.extend(f"{label}: {e}" for e in exc.errors)
        except (NematoError, ValueError, TypeError, KeyError) as exc:
            errs.append(f"{label}: {exc}")
        return None

    mesh = raw.get("mesh", {}) if isinstance(raw.get("mesh"), dict) else {}
    n = mesh.get("n", 8)
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        errs.append("mesh.n must be an integer >= 2")
    else:
        cfg.mesh_n = n
    cfg.labels = dict(mesh.get("labels", {}))
    if "box" in mesh:
        b = mesh["box"]
        cfg.box = guard("mesh.box", lambda: Box(tuple(b["lo"]), tuple(b["hi"])))
    if cfg.labels:
        guard("mesh.labels", lambda: unit_square_mesh(2, cfg.labels))

    orl = raw.get("orlicz", {}) if isinstance(raw.get("orlicz"), dict) else {}
    if orl:
        A = guard("orlicz", lambda: nfunction_from_dict({"family": "power", **orl}))
        if A is not None:
            cfg.A = A
    mat = raw.get("material", {}) if isinstance(raw.get("material"), dict) else {}
    sig = guard("material.sigma", lambda: sigma_from_dict(dict(mat.get("sigma", {}))))
    model = guard("material", lambda: MaterialModel(A=cfg.A, mu=float(mat.get("mu", 1.0)), zeta=float(mat.get("zeta", 2.0)), **({"sigma": sig} if sig is not None else {})))
    if model is not None:
        cfg.model = model

    tm = raw.get("time", {}) if isinstance(raw.get("time"), dict) else {}
    T = tm.get("T", 1.0)
    if not isinstance(T, (int, float)) or isinstance(T, bool) or not T > 0:
        errs.append("time.T must be a positive number")
        T = 1.0
    cfg.T = float(T)
    ns = tm.get("n_steps", 20)
    if not isinstance(ns, int) or isinstance(ns, bool) or ns < 1:
        errs.append("time.n_steps must be a positive integer")
        ns = 1
    cfg.n_steps = ns

    lds = raw.get("loads", {}) if isinstance(raw.get("loads"), dict) else {}
    L = guard("loads", lambda: loads_from_dict(lds))
    if L is not None:
        cfg.loads = L

    dat = raw.get("datum", {}) if isinstance(raw.get("datum"), dict) else {}
    if dat:
        fam = str(dat.get("family", "static")).lower()
        allowed = _DATUM_KEYS.get(fam)
        if allowed is None:
            errs.append(f"datum.family: unknown family '{fam}'")
        else:
            errs.extend(f"unknown key 'datum.{k}'" for k in dat if k not in allowed)
            d = guard("datum", lambda: datum_from_dict(dat, cfg.T))
            if d is not None:
                cfg.datum = d
    if cfg.box is not None:
        corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        for t in np.linspace(0.0, cfg.T, 33):
            if not np.all(cfg.box.contains(cfg.datum.apply(t, corners))):
                errs.append(f"datum: d_t maps the reference domain outside mesh.box at t={t:.6g}")
                break

    ini = raw.get("initial", {}) if isinstance(raw.get("initial"), dict) else {}
    if "director" in ini:
        d = np.asarray(ini["director"], float)
        if d.shape != (2,) or not np.linalg.norm(d) > 0:
            errs.append("initial.director must be a nonzero 2-vector")
        else:
            cfg.director = tuple(d / np.linalg.norm(d))

    lab = raw.get("lab", {}) if isinstance(raw.get("lab"), dict) else {}
    cfg.lab_samples = int(lab.get("n_samples", cfg.lab_samples))
    cfg.lab_resolutions = tuple(int(r) for r in lab.get("resolutions", cfg.lab_resolutions))
    if cfg.lab_samples < 1 or any(r < 2 for r in cfg.lab_resolutions):
        errs.append("lab.n_samples must be positive and lab.resolutions >= 2")

    seed = raw.get("seed", 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            errs.append(f"{SEED_ENV} must be an integer")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errs.append("seed must be a nonnegative integer")
        seed = 0
    cfg.seed = seed

    sol = raw.get("solver", {}) if isinstance(raw.get("solver"), dict) else {}
    s = guard("solver", lambda: SolverConfig(T=cfg.T, n_steps=cfg.n_steps, box=cfg.box, seed=cfg.seed, **sol))
    if s is not None:
        cfg.solver = s
    if errs:
        raise ConfigError(errs)
    return cfg
