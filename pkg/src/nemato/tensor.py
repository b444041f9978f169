"""Small dense matrix calculus for N in {2, 3}.

All routines accept a single ``(n, n)`` matrix or a stack ``(..., n, n)``
and operate on the trailing two axes. Adjugate and cofactor are formed from
explicit minors, so ``F @ adj(F) = det(F) I`` holds exactly in 2D.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError

__all__ = [
    "adjugate",
    "cofactor",
    "determinant",
    "inverse",
    "frob",
    "ddot",
    "minors_vector",
    "director_tensor",
    "director_norms",
    "d_adj",
    "d_cof",
    "d_inv",
    "d_det",
    "fd_check",
]


def _check_square(F):
    F = np.asarray(F, dtype=float)
    if F.ndim < 2 or F.shape[-1] != F.shape[-2] or F.shape[-1] not in (2, 3):
        raise DomainError("expected (..., n, n) array with n in {2, 3}")
    return F


def determinant(F) -> np.ndarray | float:
    """Determinant over the trailing axes."""
    F = _check_square(F)
    if F.shape[-1] == 2:
        d = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    else:
        d = np.einsum("...i,...i->...", F[..., 0, :], np.cross(F[..., 1, :], F[..., 2, :]))
    return d if np.ndim(d) else float(d)


def cofactor(F) -> np.ndarray:
    """Cofactor matrix, ``cof F = (adj F)^T``; equals ``det(F) F^{-T}`` when invertible."""
    F = _check_square(F)
    if F.shape[-1] == 2:
        C = np.empty_like(F)
        C[..., 0, 0] = F[..., 1, 1]
        C[..., 0, 1] = -F[..., 1, 0]
        C[..., 1, 0] = -F[..., 0, 1]
        C[..., 1, 1] = F[..., 0, 0]
        return C
    r0, r1, r2 = F[..., 0, :], F[..., 1, :], F[..., 2, :]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-2)


def adjugate(F) -> np.ndarray:
    """Adjugate, the unique matrix with ``F adj(F) = det(F) I``."""
    return np.swapaxes(cofactor(F), -1, -2)


def inverse(F) -> np.ndarray:
    """Inverse via the adjugate.

    Raises
    ------
    SingularityError
        If any determinant vanishes.
    """
    F = _check_square(F)
    d = np.asarray(determinant(F))
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise SingularityError("singular matrix")
    return adjugate(F) / d[..., None, None]


def frob(F) -> np.ndarray | float:
    """Frobenius norm over the trailing two axes."""
    F = np.asarray(F, dtype=float)
    r = np.sqrt(np.einsum("...ij,...ij->...", F, F))
    return r if np.ndim(r) else float(r)


def ddot(A, B):
    """Frobenius product ``A : B``."""
    r = np.einsum("...ij,...ij->...", np.asarray(A, float), np.asarray(B, float))
    return r if np.ndim(r) else float(r)


def minors_vector(F) -> np.ndarray:
    """All minors of ``F``: entries, (3D: cofactor entries,) determinant."""
    F = _check_square(F)
    n = F.shape[-1]
    parts = [F.reshape(F.shape[:-2] + (n * n,))]
    if n == 3:
        parts.append(cofactor(F).reshape(F.shape[:-2] + (9,)))
    parts.append(np.asarray(determinant(F))[..., None])
    return np.concatenate(parts, axis=-1)


def director_norms(mu: float, n: int) -> tuple[float, float]:
    """Return ``(mu_1, mu_2) = (|N(z)|, |N^{-1}(z)|)``.

    ``N(z)`` has the eigenvalue ``mu^{-1}`` once and ``mu^{1/(n-1)}`` with
    multiplicity ``n - 1``, so ``mu_1^2 = mu^{-2} + (n-1) mu^{2/(n-1)}`` and
    ``mu_2^2 = mu^2 + (n-1) mu^{-2/(n-1)}``.
    """
    if not mu > 0:
        raise DomainError("mu must be positive")
    e = 1.0 / (n - 1)
    return float(np.sqrt(mu**-2 + (n - 1) * mu ** (2 * e))), float(np.sqrt(mu**2 + (n - 1) * mu ** (-2 * e)))


def director_tensor(z, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Director tensors ``N(z)`` and ``N(z)^{-1}``.

    ``N(z) = mu^{-1} z z^T + mu^{1/(n-1)} (I - z z^T)``; both have unit
    determinant.

    Parameters
    ----------
    z : array_like, shape (..., n)
        Unit vectors.
    mu : float
        Anisotropy parameter, positive.
    """
    if not mu > 0:
        raise DomainError("mu must be positive")
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    if n not in (2, 3):
        raise DomainError("z must have 2 or 3 components")
    zz = z[..., :, None] * z[..., None, :]
    I = np.eye(n)
    e = 1.0 / (n - 1)
    N = zz / mu + mu**e * (I - zz)
    Ninv = mu * zz + mu ** (-e) * (I - zz)
    return N, Ninv


def _require_positive_det(A):
    d = np.asarray(determinant(A))
    if np.any(~(d > 0)):
        raise DomainError("differentials require det A > 0")
    return d


def d_det(A, B):
    """Directional derivative of ``det`` at ``A`` along ``B``: ``cof A : B``."""
    A = _check_square(A)
    _require_positive_det(A)
    return ddot(cofactor(A), B)


def d_inv(A, B):
    """Directional derivative of the inverse: ``-A^{-1} B A^{-1}``."""
    A = _check_square(A)
    _require_positive_det(A)
    Ai = inverse(A)
    return -Ai @ np.asarray(B, float) @ Ai


def d_adj(A, B):
    """Directional derivative of the adjugate: ``(cof A : B) A^{-1} - adj(A) B A^{-1}``."""
    A = _check_square(A)
    _require_positive_det(A)
    B = np.asarray(B, float)
    Ai = inverse(A)
    c = np.asarray(ddot(cofactor(A), B))
    return c[..., None, None] * Ai - adjugate(A) @ B @ Ai


def d_cof(A, B):
    """Directional derivative of the cofactor: ``(cof A : B) A^{-T} - cof(A) B^T A^{-T}``."""
    A = _check_square(A)
    _require_positive_det(A)
    B = np.asarray(B, float)
    AiT = np.swapaxes(inverse(A), -1, -2)
    c = np.asarray(ddot(cofactor(A), B))
    return c[..., None, None] * AiT - cofactor(A) @ np.swapaxes(B, -1, -2) @ AiT


def fd_check(fun, A, B, analytic, h: float = 1e-6) -> float:
    """Relative error of ``analytic`` against the central difference of ``fun``.

    The error is measured in the Frobenius (or absolute) norm relative to
    ``max(1, |analytic|)``.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    fd = (np.asarray(fun(A + h * B)) - np.asarray(fun(A - h * B))) / (2 * h)
    an = np.asarray(analytic, float)
    diff = fd - an
    if diff.ndim >= 2:
        num, den = frob(diff), frob(an)
    else:
        num, den = np.abs(diff), np.abs(an)
    return float(np.max(np.asarray(num) / np.maximum(1.0, np.asarray(den))))
