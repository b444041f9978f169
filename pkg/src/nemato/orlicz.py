"""Numeric calculus of N-functions.

Three families are provided:

* :class:`Power` -- ``A(s) = c * s**p`` with ``p > 1``;
* :class:`PowerLog` -- ``A(s) = c * s**p * log(e + s)**q``;
* :class:`Tabulated` -- monotone interpolation of tabulated values,
  piecewise linear in log-log coordinates.

All evaluation routines are vectorized over numpy arrays. The growth
descriptors ``kappa`` (doubling constant) and ``p_exponent`` are computed
on a fixed log-spaced grid and are therefore *empirical* surrogates of the
global suprema.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ModelError, NumericError

__all__ = [
    "GRID",
    "NFunction",
    "Power",
    "PowerLog",
    "Tabulated",
    "WeightedSampleSet",
    "nfun_eval",
    "nfun_left_derivative",
    "conjugate_eval",
    "nfun_inverse",
    "delta2_constant",
    "p_exponent",
    "modular",
    "luxemburg_norm",
    "luxemburg_norm_batch",
    "sphere_embedding_function",
    "nfunction_from_dict",
]

#: Log-spaced grid on which growth constants and invariants are evaluated.
GRID = np.geomspace(1e-6, 1e6, 4096)

_BRACKET_FACTOR = 4.0
_BRACKET_CAP = 200


def _as_nonneg(s, name="s"):
    arr = np.asarray(s, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def _ret(arr, like):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(arr)
    return arr


class NFunction:
    """Abstract N-function. Subclasses implement ``_value`` and ``_deriv``.

    Instances are immutable; cached growth constants are computed lazily.
    """

    family: str = "abstract"

    # -- hooks -------------------------------------------------------------
    def _value(self, s: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _deriv(self, s: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _conj_closed(self, s: np.ndarray):
        """Closed-form conjugate, or ``None`` when not available."""
        return None

    def _deriv_at_zero(self) -> float:
        """Right limit of the derivative at 0 (the slope where the conjugate leaves 0)."""
        return 0.0

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    # -- public API --------------------------------------------------------
    def __call__(self, s):
        arr = _as_nonneg(s)
        out = np.where(arr > 0, self._value(np.where(arr > 0, arr, 1.0)), 0.0)
        return _ret(out, s)

    def derivative(self, s):
        """Left derivative ``A'_-(s)`` for ``s > 0``."""
        arr = np.asarray(s, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError("left derivative requires s > 0")
        return _ret(self._deriv(arr), s)

    def conjugate(self, s):
        """Convex conjugate ``sup_{sigma >= 0} (s sigma - A(sigma))``."""
        arr = _as_nonneg(s)
        closed = self._conj_closed(arr)
        if closed is None:
            closed = _numeric_conjugate(self, arr)
        return _ret(np.where(arr > 0, closed, 0.0), s)

    def inverse(self, y):
        """Inverse function ``A^{-1}(y)`` (A is strictly increasing)."""
        arr = _as_nonneg(y, "y")
        flat = arr.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            target = flat[pos]
            hi = np.ones_like(target)
            for _ in range(_BRACKET_CAP):
                low = self(hi) < target
                if not np.any(low):
                    break
                hi = np.where(low, hi * _BRACKET_FACTOR, hi)
            else:
                raise NumericError("inverse: bracket expansion exceeded cap")
            lo = np.zeros_like(hi)
            # shrink lower end geometrically so tiny targets are resolved
            lo_guess = hi.copy()
            for _ in range(_BRACKET_CAP):
                above = self(lo_guess) > target
                if not np.any(above):
                    break
                lo_guess = np.where(above, lo_guess / _BRACKET_FACTOR, lo_guess)
            lo = np.where(self(lo_guess) <= target, lo_guess, 0.0)
            hi = np.minimum(hi, np.where(lo > 0, lo * _BRACKET_FACTOR, hi))
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                below = self(mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
                if np.all(hi - lo <= 4e-16 * hi):
                    break
            out[pos] = 0.5 * (lo + hi)
        return _ret(out.reshape(arr.shape), y)

    @cached_property
    def kappa(self) -> float:
        """Doubling constant on :data:`GRID`."""
        return delta2_constant(self, GRID)

    @cached_property
    def p_exp(self) -> float:
        """Growth exponent ``p_A`` on :data:`GRID`."""
        return p_exponent(self, GRID)

    @cached_property
    def conjugate_function(self) -> "ConjugateNFunction":
        return ConjugateNFunction(self)

    def validate(self, grid: np.ndarray = GRID) -> dict[str, bool]:
        """Check the N-function invariants on ``grid``.

        Returns a mapping ``invariant -> bool``. The hard invariants
        (``increasing``, ``convex``, ``doubling``) raise :class:`ModelError`
        when violated; the two limit checks are reported only, since no finite
        grid can certify a limit.
        """
        s = np.asarray(grid, dtype=float)
        a = self(s)
        report = {}
        report["zero_at_zero"] = self(0.0) == 0.0
        report["increasing"] = bool(np.all(np.diff(a) > 0))
        mid = 0.5 * (s[:-1] + s[1:])
        lhs = self(mid)
        rhs = 0.5 * (a[:-1] + a[1:])
        ok = lhs <= rhs * (1 + 1e-9) + 1e-300
        wide = min(32, len(s) - 1)
        mid_w = 0.5 * (s[:-wide] + s[wide:])
        ok_w = self(mid_w) <= 0.5 * (a[:-wide] + a[wide:]) * (1 + 1e-9) + 1e-300
        report["convex"] = bool(np.all(ok) and np.all(ok_w))
        ratio = a / s
        report["sublinear_at_zero"] = bool(ratio[0] < ratio[len(s) // 2] and ratio[0] < 1e-2 * max(ratio[len(s) // 2], 1e-300) or ratio[0] < 1e-6)
        report["superlinear_at_infinity"] = bool(ratio[-1] > 1e2 * ratio[len(s) // 2])
        try:
            k = delta2_constant(self, s)
            report["doubling"] = bool(np.isfinite(k) and np.all(self(2 * s) <= k * a * (1 + 1e-12)))
        except NumericError:
            report["doubling"] = False
        bad = [k for k in ("zero_at_zero", "increasing", "convex", "doubling") if not report[k]]
        if bad:
            raise ModelError(f"{self!r} violates N-function invariants: {bad}")
        return report


@dataclass(frozen=True, eq=True)
class Power(NFunction):
    """``A(s) = c * s**p`` with ``p > 1`` and ``c > 0``."""

    p: float
    c: float = 1.0
    family: str = field(default="power", init=False, repr=False)

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError("Power requires p > 1")
        if not self.c > 0:
            raise DomainError("Power requires c > 0")

    def _value(self, s):
        return self.c * s**self.p

    def _deriv(self, s):
        return self.c * self.p * s ** (self.p - 1)

    def _conj_closed(self, s):
        p, c = self.p, self.c
        return (1.0 - 1.0 / p) * s * (s / (p * c)) ** (1.0 / (p - 1.0))

    def to_dict(self):
        return {"family": "power", "p": self.p, "c": self.c}

    # dataclass(frozen) + cached_property need a writable __dict__, which we have.


@dataclass(frozen=True, eq=True)
class PowerLog(NFunction):
    """``A(s) = c * s**p * log(e + s)**q`` with ``p >= 1``, ``q >= 0``, ``p > 1 or q > 0``.

    For ``p = 1`` the function is a Young function but not sublinear at 0
    (``A(s)/s -> c``); its conjugate vanishes on ``[0, c]``.
    """

    p: float
    q: float
    c: float = 1.0
    family: str = field(default="powerlog", init=False, repr=False)

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 0 and (self.p > 1 or self.q > 0)):
            raise DomainError("PowerLog requires p >= 1, q >= 0 and (p > 1 or q > 0)")
        if not self.c > 0:
            raise DomainError("PowerLog requires c > 0")

    def _value(self, s):
        return self.c * s**self.p * np.log(np.e + s) ** self.q

    def _deriv(self, s):
        L = np.log(np.e + s)
        out = self.p * s ** (self.p - 1) * L**self.q
        if self.q:
            out = out + s**self.p * self.q * L ** (self.q - 1) / (np.e + s)
        return self.c * out

    def _deriv_at_zero(self):
        return self.c if self.p == 1 else 0.0

    def _conj_closed(self, s):
        if not (self.p == 1 and self.q == 1):
            return None
        # maximizer solves c*(log(e+x) + x/(e+x)) = s; with w = e/(e+x):
        # w + log w = 2 - s/c, i.e. w = W(exp(2 - s/c)).
        r = s / self.c
        with np.errstate(over="ignore"):
            w = np.real(special.lambertw(np.exp(np.minimum(2.0 - r, 700.0))))
        small = r > 700.0  # exp underflows; use asymptotic w ~ exp(2-r)
        w = np.where(small, np.exp(2.0 - r), w)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x = np.where(r <= 1.0, 0.0, np.e / w - np.e)
            x = np.maximum(x, 0.0)
            val = s * x - self._value(np.where(x > 0, x, 1.0)) * (x > 0)
        # beyond double range the conjugate is reported as +inf
        return np.where(np.isfinite(x), np.maximum(val, 0.0), np.inf)

    def to_dict(self):
        return {"family": "powerlog", "p": self.p, "q": self.q, "c": self.c}


class Tabulated(NFunction):
    """Interpolation of tabulated values, linear in ``(log s, log A)``.

    Outside the knot range the end segments are extended, so the function is
    a power law on each tail.
    """

    family = "tabulated"

    def __init__(self, knots: Sequence[float], values: Sequence[float], validate: bool = True):
        s = np.asarray(knots, dtype=float)
        v = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or len(s) < 2:
            raise DomainError("knots and values must be 1-D arrays of equal length >= 2")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise DomainError("knots must be positive and strictly increasing")
        if np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("values must be positive and strictly increasing")
        self.knots = s
        self.values = v
        self._ls = np.log(s)
        self._lv = np.log(v)
        self._beta = np.diff(self._lv) / np.diff(self._ls)
        if validate:
            self.validate(np.geomspace(s[0], s[-1], 2048))

    def __repr__(self):
        return f"Tabulated(n={len(self.knots)}, range=[{self.knots[0]:.3g}, {self.knots[-1]:.3g}])"

    def _segment(self, s):
        # left-continuous segment index: s in (s_k, s_{k+1}] -> k
        k = np.searchsorted(self.knots, s, side="left") - 1
        return np.clip(k, 0, len(self._beta) - 1)

    def _value(self, s):
        k = self._segment(s)
        return np.exp(self._lv[k] + self._beta[k] * (np.log(s) - self._ls[k]))

    def _deriv(self, s):
        k = self._segment(s)
        return self._beta[k] * self._value(s) / s

    def to_dict(self):
        return {"family": "tabulated", "knots": self.knots.tolist(), "values": self.values.tolist()}


class ConjugateNFunction(NFunction):
    """The conjugate ``\\bar A`` viewed as a function (used for Hölder norms)."""

    family = "conjugate"

    def __init__(self, base: NFunction):
        self.base = base

    def __repr__(self):
        return f"Conjugate({self.base!r})"

    def _value(self, s):
        return np.asarray(self.base.conjugate(s), dtype=float)

    def _deriv(self, s):
        # derivative of the conjugate is the maximizer (inverse of A')
        return _maximizer(self.base, np.asarray(s, dtype=float))

    def to_dict(self):
        return {"family": "conjugate", "base": self.base.to_dict()}


def _maximizer(A: NFunction, s: np.ndarray) -> np.ndarray:
    """Vectorized solution of ``A'(sigma) = s`` (0 where ``s <= A'(0+)``).

    The root is bracketed geometrically and then refined by Illinois
    false position on ``log A'(e^u) - log s``, which is close to linear for
    power-like growth. Entries whose lower bracket collapses to 0 fall back
    to plain bisection.
    """
    flat = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
    out = np.zeros_like(flat)
    active = flat > A._deriv_at_zero()
    if not np.any(active):
        return out.reshape(np.shape(s))
    target = flat[active]
    hi = np.ones_like(target)
    for _ in range(_BRACKET_CAP):
        low = A._deriv(hi) < target
        if not np.any(low):
            break
        hi = np.where(low, hi * _BRACKET_FACTOR, hi)
    else:
        raise NumericError("conjugate: maximizer bracket failed to expand within cap")
    # pull the lower end down geometrically so small maximizers are resolved
    lo = hi.copy()
    for _ in range(_BRACKET_CAP):
        above = A._deriv(lo) >= target
        if not np.any(above):
            break
        lo = np.where(above, lo / _BRACKET_FACTOR, lo)
    lo = np.where(A._deriv(lo) >= target, 0.0, lo)
    hi = np.where(lo > 0, np.minimum(hi, lo * _BRACKET_FACTOR), hi)
    res = np.empty_like(target)
    pos = lo > 0
    if np.any(pos):
        res[pos] = _illinois(A, target[pos], lo[pos], hi[pos])
    if np.any(~pos):
        res[~pos] = _bisect(A, target[~pos], lo[~pos], hi[~pos])
    out[active] = res
    return out.reshape(np.shape(s))


def _bisect(A: NFunction, target, lo, hi):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = A._deriv(np.where(mid > 0, mid, 1e-300)) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 2e-16 * hi):
            break
    return 0.5 * (lo + hi)


def _illinois(A: NFunction, target, lo, hi):
    lt = np.log(target)
    a, b = np.log(lo), np.log(hi)

    def g(u):
        with np.errstate(divide="ignore"):
            return np.log(A._deriv(np.exp(u))) - lt

    ga, gb = g(a), g(b)
    side = np.zeros(a.shape, dtype=np.int8)
    for it in range(200):
        done = (b - a <= 4e-16 * np.maximum(1.0, np.abs(b))) | (ga == 0) | (gb == 0)
        if np.all(done):
            break
        if it < 100:
            den = gb - ga
            c = np.where(den != 0, b - gb * (b - a) / np.where(den != 0, den, 1.0), 0.5 * (a + b))
            c = np.where((c > a) & (c < b), c, 0.5 * (a + b))
        else:
            c = 0.5 * (a + b)
        gc = g(c)
        left = gc < 0  # root lies in (c, b)
        # Illinois: halve the stale endpoint value when the same side is kept
        gb = np.where(left & (side == 1), 0.5 * gb, gb)
        ga = np.where(~left & (side == -1), 0.5 * ga, ga)
        a = np.where(left, c, a)
        ga = np.where(left, gc, ga)
        b = np.where(left, b, c)
        gb = np.where(left, gb, gc)
        side = np.where(left, 1, -1).astype(np.int8)
    x = np.exp(np.where(gb == 0, b, np.where(ga == 0, a, 0.5 * (a + b))))
    return x


def _numeric_conjugate(A: NFunction, s: np.ndarray) -> np.ndarray:
    x = _maximizer(A, s)
    val = s * x - np.where(x > 0, A._value(np.where(x > 0, x, 1.0)), 0.0)
    return np.maximum(val, 0.0)


# --------------------------------------------------------------------------
# Module-level operations
# --------------------------------------------------------------------------
def nfun_eval(A: NFunction, s):
    """Evaluate ``A(s)``; exactly 0 at ``s = 0``.

    Raises
    ------
    DomainError
        If ``s`` is negative.
    """
    return A(s)


def nfun_left_derivative(A: NFunction, s):
    """Left derivative ``A'_-(s)`` for ``s > 0``."""
    return A.derivative(s)


def conjugate_eval(A: NFunction, s):
    """Conjugate ``\\bar A(s) = sup_{sigma >= 0}(s sigma - A(sigma))``.

    Closed forms are used for :class:`Power` and for ``PowerLog(1, 1)``;
    otherwise the maximizer is bracketed (factor 4, cap 200) and refined by
    bisection on the monotone left derivative.
    """
    return A.conjugate(s)


def nfun_inverse(A: NFunction, y):
    """Inverse ``A^{-1}(y)``."""
    return A.inverse(y)


def delta2_constant(A: NFunction, s_grid) -> float:
    """Maximum of ``A(2s)/A(s)`` over ``s_grid``."""
    s = np.asarray(s_grid, dtype=float)
    if s.size == 0 or np.any(s <= 0):
        raise DomainError("grid must be nonempty and strictly positive")
    r = A(2 * s) / A(s)
    if not np.all(np.isfinite(r)):
        raise NumericError("non-finite doubling ratio on grid")
    return float(np.max(r))


def p_exponent(A: NFunction, s_grid) -> float:
    """Maximum of ``s A'_-(s) / A(s)`` over ``s_grid``."""
    s = np.asarray(s_grid, dtype=float)
    if s.size == 0 or np.any(s <= 0):
        raise DomainError("grid must be nonempty and strictly positive")
    r = s * A.derivative(s) / A(s)
    if not np.all(np.isfinite(r)):
        raise NumericError("non-finite growth ratio on grid")
    return float(np.max(r))


@dataclass(frozen=True)
class WeightedSampleSet:
    """Discrete carrier of an integral: values ``v_i >= 0`` with weights ``w_i > 0``."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise DomainError("values and weights must have equal length")
        if np.any(v < 0) or np.any(~np.isfinite(v)):
            raise DomainError("values must be finite and nonnegative")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, values, measure: float = 1.0) -> "WeightedSampleSet":
        v = np.abs(np.asarray(values, dtype=float).ravel())
        return cls(v, np.full(v.shape, measure / v.size))

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def scaled(self, factor: float) -> "WeightedSampleSet":
        return WeightedSampleSet(self.values * factor, self.weights)


def modular(A: NFunction, v: WeightedSampleSet) -> float:
    """``sum_i w_i A(v_i)``."""
    return float(np.dot(v.weights, A(v.values)))


def luxemburg_norm(A: NFunction, v: WeightedSampleSet, tol: float = 1e-10) -> float:
    """Luxemburg norm ``inf{s > 0 : modular(v/s) <= 1}``.

    Bisection on ``s -> modular(v/s) - 1`` after a geometric bracket search
    (factor 4, at most 200 expansions). The returned value satisfies
    ``modular(v/s) <= 1`` and ``1 - modular(v/s) <= tol`` unless the bracket
    has shrunk to machine precision first.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    vals, w = v.values, v.weights
    if not np.any(vals > 0):
        return 0.0

    def resid(s):
        return float(np.dot(w, A(vals / s))) - 1.0

    s = float(np.max(vals))
    if resid(s) > 0:
        lo = s
        for _ in range(_BRACKET_CAP):
            s *= _BRACKET_FACTOR
            if resid(s) <= 0:
                break
            lo = s
        else:
            raise NumericError("luxemburg_norm: bracket expansion exceeded cap")
        hi = s
    else:
        hi = s
        for _ in range(_BRACKET_CAP):
            s /= _BRACKET_FACTOR
            if resid(s) > 0:
                break
            hi = s
        else:
            raise NumericError("luxemburg_norm: bracket expansion exceeded cap")
        lo = s
    r_hi = resid(hi)
    for _ in range(400):
        if -tol <= r_hi <= 0 or hi - lo <= 4e-16 * hi:
            break
        mid = 0.5 * (lo + hi)
        r_mid = resid(mid)
        if r_mid > 0:
            lo = mid
        else:
            hi, r_hi = mid, r_mid
    return hi


def luxemburg_norm_batch(A: NFunction, values, weights, tol: float = 1e-10) -> np.ndarray:
    """Row-wise :func:`luxemburg_norm` for ``values`` of shape ``(k, n)``.

    ``weights`` broadcasts against ``values``. The same bracket and
    stopping rules apply, vectorized across rows.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    vals = np.abs(np.asarray(values, dtype=float))
    w = np.broadcast_to(np.asarray(weights, dtype=float), vals.shape)
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")

    out = np.zeros(vals.shape[0])
    live = np.any(vals > 0, axis=1)
    if not np.any(live):
        return out
    v, ww = vals[live], w[live]
    s = v.max(axis=1)

    def res(s_):
        return np.einsum("kn,kn->k", ww, A(v / s_[:, None])) - 1.0

    r = res(s)
    lo = np.where(r > 0, s, 0.0)
    hi = np.where(r > 0, np.inf, s)
    up, down = r > 0, r <= 0
    cur = s.copy()
    for _ in range(_BRACKET_CAP):
        if not (np.any(up) or np.any(down)):
            break
        cur = np.where(up, cur * _BRACKET_FACTOR, np.where(down, cur / _BRACKET_FACTOR, cur))
        rc = res(cur)
        hit_up = up & (rc <= 0)
        hit_dn = down & (rc > 0)
        hi = np.where(up & (rc <= 0), cur, hi)
        lo = np.where(up & (rc > 0), cur, lo)
        lo = np.where(hit_dn, cur, lo)
        hi = np.where(down & (rc <= 0), cur, hi)
        up &= ~hit_up
        down &= ~hit_dn
    else:
        raise NumericError("luxemburg_norm_batch: bracket expansion exceeded cap")
    r_hi = res(hi)
    for _ in range(400):
        done = ((-tol <= r_hi) & (r_hi <= 0)) | (hi - lo <= 4e-16 * hi)
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        rm = res(mid)
        go_lo = (rm > 0) & ~done
        go_hi = (rm <= 0) & ~done
        lo = np.where(go_lo, mid, lo)
        hi = np.where(go_hi, mid, hi)
        r_hi = np.where(go_hi, rm, r_hi)
    out[live] = hi
    return out


# --------------------------------------------------------------------------
# Sphere embedding function A_{N-1}
# --------------------------------------------------------------------------
def _tail_exponent(A: NFunction) -> float:
    s1, s2 = 1e5, 1e6
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        c1, c2 = A.conjugate(s1), A.conjugate(s2)
    if not (c1 > 0 and c2 > 0 and np.isfinite(c2)):
        return math.inf
    return math.log(c2 / c1) / math.log(s2 / s1)


def sphere_embedding_function(A: NFunction, N: int, knots: np.ndarray | None = None) -> NFunction:
    """The N-function ``A_{N-1}`` governing maps on ``(N-1)``-spheres.

    For ``N = 2`` this is ``A`` itself. For ``N = 3`` the auxiliary function
    ``B_2(s) = s^2 int_s^inf conj(A)(sigma) / sigma^3 dsigma`` is tabulated
    by adaptive quadrature and conjugated numerically.

    Raises
    ------
    ModelError
        If the tail integral diverges, i.e. ``conj(A)`` grows at least
        quadratically.
    """
    if N == 2:
        return A
    if N != 3:
        raise DomainError("sphere_embedding_function supports N in {2, 3}")
    if _tail_exponent(A) >= 2.0 - 1e-6:
        raise ModelError("divergent tail integral: the conjugate grows at least quadratically")
    if knots is None:
        knots = np.geomspace(1e-3, 1e3, 121)

    def integrand(u, s):
        return float(A.conjugate(s * math.exp(u))) * math.exp(-2.0 * u)

    def b2(s):
        # substitution sigma = s e^u: B_2(s) = int_0^inf conj(A)(s e^u) e^{-2u} du.
        # The integral is cut at sigma_cap and the remainder is closed with the
        # local power-law exponent of the conjugate.
        cap = max(1e12, 1e4 * s)
        U = math.log(cap / s)
        val, _ = integrate.quad(integrand, 0.0, U, args=(s,), limit=400, epsabs=0.0, epsrel=1e-11)
        c_hi, c_lo = float(A.conjugate(cap)), float(A.conjugate(cap / 10))
        r = math.log(c_hi / c_lo) / math.log(10.0)
        if r >= 2.0:
            raise ModelError("divergent tail integral: the conjugate grows at least quadratically")
        return val + c_hi * math.exp(-2.0 * U) / (2.0 - r)

    sig = np.geomspace(1e-8, 1e8, 321)
    bvals = np.array([b2(s) for s in sig])
    if not np.all(np.isfinite(bvals)) or np.any(bvals <= 0):
        raise ModelError("B_2 tabulation produced non-positive or non-finite values")
    B = Tabulated(sig, bvals)
    vals = np.asarray(B.conjugate(knots), dtype=float)
    return Tabulated(knots, vals)


def nfunction_from_dict(d: dict) -> NFunction:
    """Build an N-function from its config representation."""
    fam = str(d.get("family", "")).lower()
    if fam == "power":
        return Power(float(d["p"]), float(d.get("c", 1.0)))
    if fam == "powerlog":
        return PowerLog(float(d["p"]), float(d["q"]), float(d.get("c", 1.0)))
    if fam == "tabulated":
        return Tabulated(d["knots"], d["values"])
    raise DomainError(f"unknown N-function family {fam!r}")
