"""Nematoelastic energy density and its derivatives.

The density is

    W(F, z) = Phi(N(z)^{-1} F),   Phi(X) = A(|X|) + |adj X|^zeta + sigma(det X),

with ``Phi = +inf`` whenever ``det X <= 0``. ``N(z)`` is the director tensor
of :func:`nemato.tensor.director_tensor`. Everything is vectorized over
stacks of matrices ``(..., n, n)`` and director stacks ``(..., n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import tensor as tn
from .errors import DomainError, ModelError
from .orlicz import NFunction, Power, nfunction_from_dict

__all__ = [
    "Sigma",
    "PowerLogSigma",
    "PowerPowerSigma",
    "MaterialModel",
    "StressEval",
    "default_model",
    "phi_eval",
    "phi_grad",
    "l_tensor",
    "elastic_density",
    "elastic_stress",
    "kirchhoff",
    "stress_eval",
    "director_gradient",
    "coercivity_minorant",
    "nematic_integrand",
    "nematic_gradients",
    "sample_deformations",
    "calibrate_w6",
    "multiplicative_estimates_check",
    "MultiplicativeReport",
    "w7_delta_table",
    "sigma_from_dict",
]


# --------------------------------------------------------------------------
# Volumetric part sigma
# --------------------------------------------------------------------------
class Sigma:
    """Convex volumetric function on ``(0, inf)``, ``+inf`` at ``v <= 0``."""

    def _value(self, v):  # pragma: no cover - abstract
        raise NotImplementedError

    def _deriv(self, v):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        pos = v > 0
        out = np.where(pos, self._value(np.where(pos, v, 1.0)), np.inf)
        return out if out.ndim else float(out)

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(~(v > 0)):
            raise DomainError("sigma' requires v > 0")
        out = self._deriv(v)
        return out if np.ndim(out) else float(out)

    def minimizer(self) -> float:
        """Point where ``sigma'`` changes sign (found by bisection)."""
        lo, hi = 1e-12, 1.0
        while self._deriv(np.float64(hi)) < 0:
            hi *= 2.0
        while self._deriv(np.float64(lo)) > 0 and lo > 1e-300:
            lo *= 0.5
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._deriv(np.float64(mid)) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PowerLogSigma(Sigma):
    """``sigma(v) = a v^alpha - b log v + c``."""

    a: float = 1.0
    alpha: float = 2.0
    b: float = 2.0
    c: float = -1.0
    family: str = field(default="powerlog", init=False, repr=False)

    def __post_init__(self):
        if not (self.a > 0 and self.alpha > 1 and self.b > 0):
            raise DomainError("PowerLogSigma requires a > 0, alpha > 1, b > 0")

    def _value(self, v):
        return self.a * v**self.alpha - self.b * np.log(v) + self.c

    def _deriv(self, v):
        return self.a * self.alpha * v ** (self.alpha - 1) - self.b / v

    def to_dict(self):
        return {"family": "powerlog", "a": self.a, "alpha": self.alpha, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class PowerPowerSigma(Sigma):
    """``sigma(v) = a v^alpha + b v^{-beta} + c``.

    The default (``v^2 + 2/v - 3``) has ``sigma(1) = 0`` and ``sigma'(1) = 0``.
    """

    a: float = 1.0
    alpha: float = 2.0
    b: float = 2.0
    beta: float = 1.0
    c: float = -3.0
    family: str = field(default="powerpower", init=False, repr=False)

    def __post_init__(self):
        if not (self.a > 0 and self.alpha > 1 and self.b > 0 and self.beta > 0):
            raise DomainError("PowerPowerSigma requires a > 0, alpha > 1, b > 0, beta > 0")

    def _value(self, v):
        return self.a * v**self.alpha + self.b * v ** (-self.beta) + self.c

    def _deriv(self, v):
        return self.a * self.alpha * v ** (self.alpha - 1) - self.b * self.beta * v ** (-self.beta - 1)

    def to_dict(self):
        return {"family": "powerpower", "a": self.a, "alpha": self.alpha, "b": self.b, "beta": self.beta, "c": self.c}


def sigma_from_dict(d: dict) -> Sigma:
    fam = str(d.get("family", "powerpower")).lower()
    kw = {k: float(v) for k, v in d.items() if k != "family"}
    if fam == "powerpower":
        return PowerPowerSigma(**kw)
    if fam == "powerlog":
        return PowerLogSigma(**kw)
    raise DomainError(f"unknown sigma family {fam!r}")


# --------------------------------------------------------------------------
# Material model
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class MaterialModel:
    """Parameters of the density ``W``.

    Attributes
    ----------
    A : NFunction
        Growth of the isochoric part.
    mu : float
        Anisotropy (``mu = 1`` is isotropic).
    zeta : float
        Exponent of the adjugate term, ``> 1``.
    sigma : Sigma
        Volumetric function.
    n : int
        Dimension (2 or 3).
    """

    A: NFunction = field(default_factory=lambda: Power(2.0))
    mu: float = 1.0
    zeta: float = 2.0
    sigma: Sigma = field(default_factory=PowerPowerSigma)
    n: int = 2

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        if not self.zeta > 1:
            raise DomainError("zeta must exceed 1")
        if self.n not in (2, 3):
            raise DomainError("n must be 2 or 3")
        self._check_sigma()

    def _check_sigma(self):
        v = np.geomspace(1e-4, 1e4, 801)
        s = self.sigma(v)
        mid = self.sigma(0.5 * (v[:-1] + v[1:]))
        if not np.all(mid <= 0.5 * (s[:-1] + s[1:]) + 1e-9 * np.abs(s[:-1] + s[1:])):
            raise ModelError("sigma is not convex on the check grid")
        if not (s[0] > s[len(v) // 2] and s[-1] / v[-1] > s[len(v) // 2 + 100] / v[len(v) // 2 + 100]):
            raise ModelError("sigma must blow up at 0 and grow superlinearly")

    @cached_property
    def mu1(self) -> float:
        return tn.director_norms(self.mu, self.n)[0]

    @cached_property
    def mu2(self) -> float:
        return tn.director_norms(self.mu, self.n)[1]

    @cached_property
    def c_W(self) -> float:
        """Coercivity constant ``(mu_1 + 1)^{-p_A}``."""
        return float((self.mu1 + 1.0) ** (-self.A.p_exp))

    def to_dict(self) -> dict:
        return {"A": self.A.to_dict(), "mu": self.mu, "zeta": self.zeta, "sigma": self.sigma.to_dict(), "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialModel":
        return cls(
            A=nfunction_from_dict(d["A"]),
            mu=float(d.get("mu", 1.0)),
            zeta=float(d.get("zeta", 2.0)),
            sigma=sigma_from_dict(d.get("sigma", {})),
            n=int(d.get("n", 2)),
        )


def default_model(**kw) -> MaterialModel:
    """Reference model: ``A = s^2``, ``zeta = 2``, ``sigma = v^2 + 2/v - 3``."""
    return MaterialModel(**kw)


@dataclass(frozen=True)
class StressEval:
    """Energy density with first Piola-type stress and Kirchhoff tensor."""

    W: np.ndarray
    P: np.ndarray
    K: np.ndarray


# --------------------------------------------------------------------------
# Phi and its derivatives
# --------------------------------------------------------------------------
def _pos_det(X):
    d = np.asarray(tn.determinant(X))
    if np.any(~(d > 0)):
        raise DomainError("stress requires det > 0")
    return d


def phi_eval(model: MaterialModel, X):
    """``Phi(X)``, returning ``+inf`` where ``det X <= 0``."""
    X = np.asarray(X, dtype=float)
    d = np.asarray(tn.determinant(X))
    pos = d > 0
    nX = np.asarray(tn.frob(X))
    nadj = np.asarray(tn.frob(tn.adjugate(X)))
    with np.errstate(invalid="ignore"):
        val = model.A(nX) + nadj**model.zeta + model.sigma(np.where(pos, d, 1.0))
    out = np.where(pos & np.isfinite(val), val, np.inf)
    return out if out.ndim else float(out)


def phi_grad(model: MaterialModel, X) -> np.ndarray:
    """Gradient ``D Phi(X)`` (requires ``det X > 0``)."""
    X = np.asarray(X, dtype=float)
    d = _pos_det(X)
    nX = np.asarray(tn.frob(X))
    cof = tn.cofactor(X)
    adj = np.swapaxes(cof, -1, -2)
    nadj = np.asarray(tn.frob(adj))
    z = model.zeta
    t1 = (np.asarray(model.A.derivative(nX)) / nX)[..., None, None] * X
    XiT = cof / d[..., None, None]
    I = np.eye(X.shape[-1])
    core = (nadj**2)[..., None, None] * I - cof @ adj
    t2 = (z * nadj ** (z - 2))[..., None, None] * (core @ XiT)
    t3 = np.asarray(model.sigma.derivative(d))[..., None, None] * cof
    return t1 + t2 + t3


def l_tensor(model: MaterialModel, X) -> np.ndarray:
    """``L(X) = D Phi(X) X^T`` in the closed form

    ``A'(|X|) X X^T / |X| + zeta(|adj X|^zeta I - |adj X|^{zeta-2} cof X adj X) + sigma'(det X) det X I``.
    """
    X = np.asarray(X, dtype=float)
    d = _pos_det(X)
    nX = np.asarray(tn.frob(X))
    cof = tn.cofactor(X)
    adj = np.swapaxes(cof, -1, -2)
    nadj = np.asarray(tn.frob(adj))
    z = model.zeta
    I = np.eye(X.shape[-1])
    t1 = (np.asarray(model.A.derivative(nX)) / nX)[..., None, None] * (X @ np.swapaxes(X, -1, -2))
    t2 = z * ((nadj**z)[..., None, None] * I - (nadj ** (z - 2))[..., None, None] * (cof @ adj))
    t3 = (np.asarray(model.sigma.derivative(d)) * d)[..., None, None] * I
    return t1 + t2 + t3


# --------------------------------------------------------------------------
# W(F, z) and derivatives
# --------------------------------------------------------------------------
def _director(model, z, F):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != model.n or np.asarray(F).shape[-1] != model.n:
        raise DomainError("dimension mismatch between model, F and z")
    return tn.director_tensor(z, model.mu)


def elastic_density(model: MaterialModel, F, z):
    """``W(F, z) = Phi(N(z)^{-1} F)``."""
    F = np.asarray(F, dtype=float)
    _, Ni = _director(model, z, F)
    return phi_eval(model, Ni @ F)


def elastic_stress(model: MaterialModel, F, z) -> np.ndarray:
    """``d W / d F = N(z)^{-1} D Phi(N(z)^{-1} F)`` (N is symmetric)."""
    F = np.asarray(F, dtype=float)
    _, Ni = _director(model, z, F)
    return Ni @ phi_grad(model, Ni @ F)


def kirchhoff(model: MaterialModel, F, z) -> np.ndarray:
    """Kirchhoff tensor ``K = dW/dF F^T = N^{-1} L(N^{-1} F) N``."""
    F = np.asarray(F, dtype=float)
    N, Ni = _director(model, z, F)
    return Ni @ l_tensor(model, Ni @ F) @ N


def stress_eval(model: MaterialModel, F, z) -> StressEval:
    F = np.asarray(F, dtype=float)
    P = elastic_stress(model, F, z)
    return StressEval(W=np.asarray(elastic_density(model, F, z)), P=P, K=P @ np.swapaxes(F, -1, -2))


def director_gradient(model: MaterialModel, F, z) -> np.ndarray:
    """Gradient of ``W(F, .)`` with respect to ``z`` taken in the ambient space.

    ``N(z)^{-1} = mu^{-e} I + (mu - mu^{-e}) z z^T`` gives
    ``dW/dz = (mu - mu^{-e}) (B + B^T) z`` with ``B = D Phi(X) F^T``.
    """
    F = np.asarray(F, dtype=float)
    z = np.asarray(z, dtype=float)
    _, Ni = _director(model, z, F)
    c = model.mu - model.mu ** (-1.0 / (model.n - 1))
    if c == 0:
        return np.zeros(np.broadcast_shapes(z.shape, F.shape[:-1]))
    B = phi_grad(model, Ni @ F) @ np.swapaxes(F, -1, -2)
    S = B + np.swapaxes(B, -1, -2)
    return c * np.einsum("...ij,...j->...i", S, z)


def coercivity_minorant(model: MaterialModel, F, z=None):
    """``c_W A(|F|) + (|adj F|/mu_2)^zeta + sigma(det F)``.

    ``z`` is accepted for signature symmetry; the bound is uniform in ``z``.
    """
    F = np.asarray(F, dtype=float)
    _pos_det(F)
    d = np.asarray(tn.determinant(F))
    val = model.c_W * model.A(np.asarray(tn.frob(F))) + (np.asarray(tn.frob(tn.adjugate(F))) / model.mu2) ** model.zeta + model.sigma(d)
    return val if np.ndim(val) else float(val)


# --------------------------------------------------------------------------
# Nematic integrand
# --------------------------------------------------------------------------
def nematic_integrand(Dm, Dy):
    """``|Dm Dy^{-1}|^2 det Dy`` (pulled-back Dirichlet energy of the director)."""
    Dy = np.asarray(Dy, dtype=float)
    d = np.asarray(tn.determinant(Dy))
    if np.any(~(d > 0)):
        raise DomainError("nematic integrand requires det Dy > 0")
    X = np.asarray(Dm, dtype=float) @ tn.inverse(Dy)
    out = np.einsum("...ij,...ij->...", X, X) * d
    return out if np.ndim(out) else float(out)


def nematic_gradients(Dm, Dy):
    """Value and partial gradients of :func:`nematic_integrand`.

    Returns
    -------
    phi, dphi_dDm, dphi_dDy
        With ``X = Dm Dy^{-1}``: ``dphi/dDm = 2 det(Dy) X Dy^{-T}`` and
        ``dphi/dDy = -2 det(Dy) X^T X Dy^{-T} + |X|^2 cof Dy``.
    """
    Dy = np.asarray(Dy, dtype=float)
    Dm = np.asarray(Dm, dtype=float)
    d = np.asarray(tn.determinant(Dy))
    if np.any(~(d > 0)):
        raise DomainError("nematic integrand requires det Dy > 0")
    cof = tn.cofactor(Dy)
    Yi = np.swapaxes(cof, -1, -2) / d[..., None, None]
    YiT = np.swapaxes(Yi, -1, -2)
    X = Dm @ Yi
    nx2 = np.einsum("...ij,...ij->...", X, X)
    gM = 2.0 * d[..., None, None] * (X @ YiT)
    gY = -2.0 * d[..., None, None] * (np.swapaxes(X, -1, -2) @ X @ YiT) + nx2[..., None, None] * cof
    return nx2 * d, gM, gY


# --------------------------------------------------------------------------
# Empirical checks of the stress assumptions
# --------------------------------------------------------------------------
def sample_deformations(rng: np.random.Generator, count: int, n: int = 2, max_norm: float = 5.0, min_det: float = 0.1):
    """Rejection sampler on ``{|F| <= max_norm, det F >= min_det}`` with random unit directors."""
    out = []
    have = 0
    while have < count:
        F = rng.uniform(-max_norm / math.sqrt(n), max_norm / math.sqrt(n), size=(2 * count + 16, n, n))
        ok = (np.asarray(tn.frob(F)) <= max_norm) & (np.asarray(tn.determinant(F)) >= min_det)
        out.append(F[ok])
        have += int(ok.sum())
    F = np.concatenate(out)[:count]
    z = rng.normal(size=(count, n))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    return F, z


def calibrate_w6(model: MaterialModel, samples) -> tuple[float, float]:
    """Fit ``(a_W, b_W)`` in ``|K(F, z)| <= a_W (W(F, z) + b_W)`` with ``b_W = 1``.

    Parameters
    ----------
    samples : tuple of arrays
        ``(F, z)`` stacks from a box with determinant bounded away from 0.
    """
    F, z = samples
    F = np.asarray(F, dtype=float)
    if F.shape[0] == 0:
        raise DomainError("empty sample set")
    W = np.asarray(elastic_density(model, F, z))
    K = kirchhoff(model, F, z)
    ratio = np.asarray(tn.frob(K)) / (W + 1.0)
    if not np.all(np.isfinite(ratio)):
        raise ModelError("unbounded Kirchhoff ratio on the sample box")
    return float(np.max(ratio)), 1.0


@dataclass
class MultiplicativeReport:
    """Outcome of :func:`multiplicative_estimates_check`."""

    delta: float
    halvings: int
    n_samples: int
    a_W: float
    b_W: float
    violations: dict
    counterexamples: list
    max_ratio: dict

    @property
    def passed(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def _perturbations(rng, count, n, delta):
    H = rng.normal(size=(count, n, n))
    H /= np.asarray(tn.frob(H))[:, None, None]
    r = rng.uniform(0.0, 1.0, size=count)
    return np.eye(n) + (delta * r)[:, None, None] * H


def multiplicative_estimates_check(
    model: MaterialModel,
    samples,
    delta: float,
    a_W: float | None = None,
    b_W: float = 1.0,
    rng: np.random.Generator | None = None,
    max_halvings: int = 3,
) -> MultiplicativeReport:
    """Check the three multiplicative estimates for ``|G - I| <= delta``.

    * ``W(GF) + b <= n/(n-1) (W(F) + b)``
    * ``|dW(GF) F^T| <= a n^2/(n-1) (W(F) + b)``
    * ``|W(GF) - W(F)| <= a n^2/(n-1) (W(F) + b) |G - I|``

    ``delta`` is halved (at most ``max_halvings`` times) while violations
    remain.
    """
    if not (0 < delta <= 1e-2):
        raise DomainError("delta must lie in (0, 1e-2]")
    F, z = samples
    F = np.asarray(F, dtype=float)
    z = np.asarray(z, dtype=float)
    if a_W is None:
        a_W, b_W = calibrate_w6(model, (F, z))
    rng = np.random.default_rng(0) if rng is None else rng
    n = model.n
    W = np.asarray(elastic_density(model, F, z))
    c1 = n / (n - 1)
    c2 = a_W * n * n / (n - 1)
    halvings = 0
    while True:
        G = _perturbations(rng, F.shape[0], n, delta)
        GF = G @ F
        WG = np.asarray(elastic_density(model, GF, z))
        PG = elastic_stress(model, GF, z)
        lhs1 = WG + b_W
        rhs1 = c1 * (W + b_W)
        lhs2 = np.asarray(tn.frob(PG @ np.swapaxes(F, -1, -2)))
        rhs2 = c2 * (W + b_W)
        gI = np.asarray(tn.frob(G - np.eye(n)))
        lhs3 = np.abs(WG - W)
        rhs3 = c2 * (W + b_W) * gI
        bad1 = ~(lhs1 <= rhs1)
        bad2 = ~(lhs2 <= rhs2)
        bad3 = ~(lhs3 <= rhs3 + 1e-14 * (W + b_W))
        viol = {"energy": int(bad1.sum()), "kirchhoff": int(bad2.sum()), "increment": int(bad3.sum())}
        if all(v == 0 for v in viol.values()) or halvings >= max_halvings:
            break
        delta *= 0.5
        halvings += 1
    idx = np.nonzero(bad1 | bad2 | bad3)[0][:10]
    cex = [{"F": F[i].tolist(), "z": z[i].tolist(), "G": G[i].tolist()} for i in idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = {
            "energy": float(np.max(lhs1 / rhs1)),
            "kirchhoff": float(np.max(lhs2 / rhs2)),
            "increment": float(np.max(np.where(rhs3 > 0, lhs3 / rhs3, 0.0))),
        }
    return MultiplicativeReport(delta, halvings, int(F.shape[0]), a_W, b_W, viol, cex, ratios)


def w7_delta_table(model: MaterialModel, samples, eps_values=(1e-1, 1e-2, 1e-3), b_W: float = 1.0, seed: int = 0) -> dict:
    """Largest ``delta`` (bisection in log scale) with
    ``|K(GF) - K(F)| <= eps (W(F) + b)`` on the samples for ``|G - I| = delta``.
    """
    F, z = samples
    F = np.asarray(F, dtype=float)
    rng = np.random.default_rng(seed)
    n = model.n
    H = rng.normal(size=F.shape)
    H /= np.asarray(tn.frob(H))[:, None, None]
    W = np.asarray(elastic_density(model, F, z))
    K = kirchhoff(model, F, z)

    def worst(delta):
        GF = (np.eye(n) + delta * H) @ F
        KG = kirchhoff(model, GF, z)
        return float(np.max(np.asarray(tn.frob(KG - K)) / (W + b_W)))

    table = {}
    for eps in eps_values:
        lo, hi = -12.0, 0.0
        if worst(10.0**lo) > eps:
            table[eps] = 0.0
            continue
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if worst(10.0**mid) <= eps:
                lo = mid
            else:
                hi = mid
        table[eps] = 10.0**lo
    return table
