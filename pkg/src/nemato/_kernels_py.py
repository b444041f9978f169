"""Pure numpy element kernels (reference implementation and fallback)."""
from __future__ import annotations

import numpy as np

from . import material as mat
from . import tensor as tn


def elastic_eval(model, F, z, with_grad: bool = True):
    """Element energies ``W``, stresses ``dW/dF`` and director gradients ``dW/dz``.

    Returns ``(W, P, dz)``; when some element has ``det <= 0`` the energy is
    ``inf`` there and ``P``, ``dz`` are ``None``.
    """
    F = np.asarray(F, dtype=float)
    z = np.asarray(z, dtype=float)
    W = np.asarray(mat.elastic_density(model, F, z), dtype=float)
    if not with_grad or not np.all(np.isfinite(W)):
        return W, None, None
    P = mat.elastic_stress(model, F, z)
    dz = mat.director_gradient(model, F, z)
    return W, P, dz


def nematic_eval(Dm, Dy, with_grad: bool = True):
    """``phi = |Dm Dy^{-1}|^2 det Dy`` with partial gradients (``None`` if ``det <= 0``)."""
    Dy = np.asarray(Dy, dtype=float)
    d = np.asarray(tn.determinant(Dy))
    if np.any(~(d > 0)):
        return np.full(d.shape, np.inf), None, None
    if not with_grad:
        return np.asarray(mat.nematic_integrand(Dm, Dy)), None, None
    return mat.nematic_gradients(Dm, Dy)
