"""Closed-form time-dependent data: loads and affine boundary data.

Every time dependence is a piecewise polynomial, so derivatives and the set
of non-differentiability times are known exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn
from .errors import ConfigError, DomainError

__all__ = [
    "PiecewisePolynomial",
    "Profile",
    "Load",
    "LoadSet",
    "BoundaryDatum",
    "StaticDatum",
    "AffinePath",
    "datum_from_dict",
    "loads_from_dict",
]


class PiecewisePolynomial:
    """Array-valued piecewise polynomial in ``t``.

    Piece ``i`` lives on ``[knots[i], knots[i+1]]`` and is expanded in powers
    of ``t - knots[i]``. The first and last pieces extend beyond the knots.

    Parameters
    ----------
    knots : sequence of float, length ``k + 1``
    coeffs : sequence of length ``k``; each entry is a sequence of
        coefficient arrays (constant term first), all of the same shape.
    """

    def __init__(self, knots, coeffs):
        t = np.asarray(knots, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("knots must be strictly increasing with at least two entries")
        if len(coeffs) != len(t) - 1:
            raise DomainError("one coefficient list per piece required")
        pieces = [np.asarray(c, dtype=float) for c in coeffs]
        shape = pieces[0].shape[1:]
        if any(p.ndim < 1 or p.shape[1:] != shape for p in pieces):
            raise DomainError("coefficient arrays must share a shape")
        deg = max(p.shape[0] for p in pieces)
        self.knots = t
        self.shape = shape
        self.coeffs = np.zeros((len(pieces), deg) + shape)
        for i, p in enumerate(pieces):
            self.coeffs[i, : p.shape[0]] = p

    @classmethod
    def constant(cls, value, t0: float = 0.0, t1: float = 1.0) -> "PiecewisePolynomial":
        return cls([t0, t1], [[np.asarray(value, float)]])

    @classmethod
    def polynomial(cls, coeffs, t0: float = 0.0, t1: float = 1.0) -> "PiecewisePolynomial":
        """Single piece ``sum_k c_k (t - t0)^k``."""
        return cls([t0, t1], [coeffs])

    @classmethod
    def linear(cls, v0, v1, t0: float = 0.0, t1: float = 1.0) -> "PiecewisePolynomial":
        v0, v1 = np.asarray(v0, float), np.asarray(v1, float)
        return cls([t0, t1], [[v0, (v1 - v0) / (t1 - t0)]])

    def _piece(self, t: float, side: str) -> int:
        if side == "right":
            i = int(np.searchsorted(self.knots, t, side="right")) - 1
        else:
            i = int(np.searchsorted(self.knots, t, side="left")) - 1
        return min(max(i, 0), len(self.coeffs) - 1)

    def __call__(self, t: float, side: str = "right") -> np.ndarray:
        i = self._piece(t, side)
        x = t - self.knots[i]
        c = self.coeffs[i]
        out = np.zeros(self.shape)
        for k in range(c.shape[0] - 1, -1, -1):
            out = out * x + c[k]
        return out if self.shape else float(out)

    def derivative(self, t: float, side: str = "right") -> np.ndarray:
        """Derivative; at a knot the one-sided value given by ``side``."""
        i = self._piece(t, side)
        x = t - self.knots[i]
        c = self.coeffs[i]
        out = np.zeros(self.shape)
        for k in range(c.shape[0] - 1, 0, -1):
            out = out * x + k * c[k]
        return out if self.shape else float(out)

    @property
    def kinks(self) -> tuple:
        """Interior knots where the derivative jumps."""
        out = []
        for t in self.knots[1:-1]:
            if not np.allclose(self.derivative(t, "left"), self.derivative(t, "right"), rtol=1e-13, atol=1e-15):
                out.append(float(t))
        return tuple(out)

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PiecewisePolynomial":
        if isinstance(d, (int, float)):
            return cls.constant(float(d))
        if "coeffs" in d:
            return cls(d.get("knots", [0.0, 1.0]), d["coeffs"])
        if "poly" in d:
            return cls.polynomial(d["poly"])
        raise ConfigError("time profile needs 'coeffs' (with 'knots') or 'poly'")


@dataclass(frozen=True)
class Profile:
    """Vector field ``v(x) = c + G x + a sin(k . x + phase)`` on the plane."""

    c: tuple = (0.0, 0.0)
    G: tuple = ((0.0, 0.0), (0.0, 0.0))
    a: tuple = (0.0, 0.0)
    k: tuple = (0.0, 0.0)
    phase: float = 0.0

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        s = np.sin(x @ np.asarray(self.k, float) + self.phase)
        return np.asarray(self.c, float) + x @ np.asarray(self.G, float).T + s[..., None] * np.asarray(self.a, float)

    def gradient(self, x) -> np.ndarray:
        """Jacobian ``Dv(x)``, shape ``(..., 2, 2)``."""
        x = np.asarray(x, float)
        cs = np.cos(x @ np.asarray(self.k, float) + self.phase)
        outer = np.outer(np.asarray(self.a, float), np.asarray(self.k, float))
        return np.asarray(self.G, float) + cs[..., None, None] * outer

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        allowed = {"c", "G", "a", "k", "phase"}
        bad = set(d) - allowed
        if bad:
            raise ConfigError(f"unknown profile keys {sorted(bad)}")
        kw = {}
        for key in ("c", "a", "k"):
            if key in d:
                kw[key] = tuple(float(v) for v in d[key])
        if "G" in d:
            kw["G"] = tuple(tuple(float(v) for v in row) for row in d["G"])
        if "phase" in d:
            kw["phase"] = float(d["phase"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {"c": list(self.c), "G": [list(r) for r in self.G], "a": list(self.a), "k": list(self.k), "phase": self.phase}


@dataclass(frozen=True)
class Load:
    """Separable load ``theta(t) * profile(x)``."""

    profile: Profile
    theta: PiecewisePolynomial = field(default_factory=lambda: PiecewisePolynomial.constant(1.0))

    def value(self, t, x):
        return self.theta(t) * self.profile(x)

    def rate(self, t, x, side="right"):
        return self.theta.derivative(t, side) * self.profile(x)

    def gradient(self, t, x):
        return self.theta(t) * self.profile.gradient(x)

    def rate_gradient(self, t, x, side="right"):
        return self.theta.derivative(t, side) * self.profile.gradient(x)


@dataclass(frozen=True)
class LoadSet:
    """Body force ``f``, surface traction ``g`` (on Sigma) and external field ``h``.

    Any of the three may be ``None`` (identically zero).
    """

    f: Load | None = None
    g: Load | None = None
    h: Load | None = None

    @property
    def kinks(self) -> tuple:
        """The set of times where some load fails to be differentiable."""
        ks = set()
        for ld in (self.f, self.g, self.h):
            if ld is not None:
                ks.update(ld.theta.kinks)
        return tuple(sorted(ks))

    def nondifferentiable_at(self, t: float) -> bool:
        return any(abs(t - k) <= 1e-14 * max(1.0, abs(k)) for k in self.kinks)

    @property
    def is_static(self) -> bool:
        return all(ld is None or ld.theta.coeffs[:, 1:].size == 0 or not np.any(ld.theta.coeffs[:, 1:]) for ld in (self.f, self.g, self.h))


def loads_from_dict(d: dict) -> LoadSet:
    parts = {}
    for key in ("f", "g", "h"):
        if key in d:
            sub = dict(d[key])
            theta = PiecewisePolynomial.from_dict(sub.pop("theta", 1.0))
            parts[key] = Load(Profile.from_dict(sub), theta)
    bad = set(d) - {"f", "g", "h"}
    if bad:
        raise ConfigError(f"unknown loads keys {sorted(bad)}")
    return LoadSet(**parts)


# --------------------------------------------------------------------------
# Boundary data
# --------------------------------------------------------------------------
class BoundaryDatum:
    """Affine, time-parametrized map ``d_t(x) = A(t) x + b(t)``."""

    family = "abstract"

    def A(self, t: float) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def b(self, t: float) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def A_dot(self, t: float, side: str = "right") -> np.ndarray:
        return np.zeros((2, 2))

    def b_dot(self, t: float, side: str = "right") -> np.ndarray:
        return np.zeros(2)

    @property
    def kinks(self) -> tuple:
        return ()

    @property
    def is_static(self) -> bool:
        return True

    def apply(self, t: float, x) -> np.ndarray:
        return np.asarray(x, float) @ self.A(t).T + self.b(t)

    def inverse(self, t: float, xi) -> np.ndarray:
        return (np.asarray(xi, float) - self.b(t)) @ tn.inverse(self.A(t)).T

    def velocity(self, t: float, x, side: str = "right") -> np.ndarray:
        """``d/dt d_t(x)``."""
        return np.asarray(x, float) @ self.A_dot(t, side).T + self.b_dot(t, side)

    def eulerian_velocity(self, t: float, xi, side: str = "right") -> np.ndarray:
        """``v = (d/dt d_t) o d_t^{-1}`` at deformed points ``xi``."""
        return self.velocity(t, self.inverse(t, xi), side)

    def velocity_gradient(self, t: float, side: str = "right") -> np.ndarray:
        """``Dv = A'(t) A(t)^{-1}`` (constant in space)."""
        return self.A_dot(t, side) @ tn.inverse(self.A(t))

    def check(self, times) -> None:
        for t in times:
            if not tn.determinant(self.A(t)) > 0:
                raise ConfigError(f"boundary datum has det A(t) <= 0 at t={t}")


class StaticDatum(BoundaryDatum):
    """Time-independent affine datum (default: the identity)."""

    family = "static"

    def __init__(self, A=None, b=None):
        self._A = np.eye(2) if A is None else np.asarray(A, float)
        self._b = np.zeros(2) if b is None else np.asarray(b, float)
        if self._A.shape != (2, 2) or self._b.shape != (2,):
            raise ConfigError("static datum needs a 2x2 matrix and a 2-vector")
        if not tn.determinant(self._A) > 0:
            raise ConfigError("static datum must have det A > 0")

    def A(self, t):
        return self._A

    def b(self, t):
        return self._b

    def to_dict(self):
        return {"family": "static", "A": self._A.tolist(), "b": self._b.tolist()}


class AffinePath(BoundaryDatum):
    """``d_t(x) = A(t) x + b(t)`` with piecewise-polynomial ``A`` and ``b``."""

    family = "affine_path"

    def __init__(self, A: PiecewisePolynomial, b: PiecewisePolynomial | None = None, check_times=None):
        if A.shape != (2, 2):
            raise ConfigError("A(t) must be 2x2")
        self._Ap = A
        self._bp = b if b is not None else PiecewisePolynomial.constant(np.zeros(2))
        if self._bp.shape != (2,):
            raise ConfigError("b(t) must be a 2-vector")
        grid = np.linspace(A.knots[0], A.knots[-1], 257) if check_times is None else check_times
        self.check(np.concatenate([grid, A.knots]))

    @classmethod
    def ramp(cls, A0, A1, T: float = 1.0, b0=(0.0, 0.0), b1=(0.0, 0.0)) -> "AffinePath":
        """Linear interpolation from ``(A0, b0)`` at ``t=0`` to ``(A1, b1)`` at ``t=T``."""
        return cls(PiecewisePolynomial.linear(A0, A1, 0.0, T), PiecewisePolynomial.linear(b0, b1, 0.0, T))

    def A(self, t):
        return self._Ap(t)

    def b(self, t):
        return self._bp(t)

    def A_dot(self, t, side="right"):
        return self._Ap.derivative(t, side)

    def b_dot(self, t, side="right"):
        return self._bp.derivative(t, side)

    @property
    def kinks(self):
        return tuple(sorted(set(self._Ap.kinks) | set(self._bp.kinks)))

    @property
    def is_static(self):
        return not np.any(self._Ap.coeffs[:, 1:]) and not np.any(self._bp.coeffs[:, 1:])

    def to_dict(self):
        return {"family": "affine_path", "A": self._Ap.to_dict(), "b": self._bp.to_dict()}


def datum_from_dict(d: dict | None, T: float = 1.0) -> BoundaryDatum:
    if not d:
        return StaticDatum()
    fam = str(d.get("family", "static")).lower()
    if fam == "static":
        return StaticDatum(d.get("A"), d.get("b"))
    if fam == "ramp":
        return AffinePath.ramp(d["A0"], d["A1"], T, d.get("b0", (0.0, 0.0)), d.get("b1", (0.0, 0.0)))
    if fam == "affine_path":
        return AffinePath(PiecewisePolynomial.from_dict(d["A"]), PiecewisePolynomial.from_dict(d["b"]) if "b" in d else None)
    raise ConfigError(f"unknown boundary datum family {fam!r}")
