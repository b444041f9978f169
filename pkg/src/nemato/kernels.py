"""Element-kernel dispatch between the compiled core and the numpy fallback.

The compiled extension :mod:`nemato._kernels` is used when it imports and
the model is supported (2D, Power/PowerLog N-function). Setting the
environment variable ``NEMATO_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .material import PowerLogSigma, PowerPowerSigma
from .orlicz import Power, PowerLog

try:  # pragma: no cover - depends on the build
    if os.environ.get("NEMATO_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _ext
except ImportError:  # pragma: no cover - depends on the build
    _ext = None

__all__ = ["BACKEND", "has_compiled", "elastic_eval", "nematic_eval", "model_codes"]

#: Name of the active backend: ``"cython"`` or ``"python"``.
BACKEND = "cython" if _ext is not None else "python"


def has_compiled() -> bool:
    return _ext is not None


def model_codes(model):
    """Integer family codes for the compiled kernel, or ``None`` if unsupported."""
    if model.n != 2:
        return None
    A, s = model.A, model.sigma
    if type(A) is Power:
        a = (0, A.p, 0.0, A.c)
    elif type(A) is PowerLog:
        a = (1, A.p, A.q, A.c)
    else:
        return None
    if type(s) is PowerPowerSigma:
        sg = (0, s.a, s.alpha, s.b, s.beta, s.c)
    elif type(s) is PowerLogSigma:
        sg = (1, s.a, s.alpha, s.b, 0.0, s.c)
    else:
        return None
    return a + sg


def elastic_eval(model, F, z, with_grad: bool = True, backend: str | None = None):
    """Per-element ``(W, dW/dF, dW/dz)``; see :func:`nemato._kernels_py.elastic_eval`."""
    use = backend or BACKEND
    codes = model_codes(model) if use == "cython" and _ext is not None else None
    if codes is None:
        return _kernels_py.elastic_eval(model, F, z, with_grad)
    F = np.ascontiguousarray(F, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    ne = F.shape[0]
    W = np.empty(ne)
    P = np.empty((ne, 2, 2))
    dz = np.empty((ne, 2))
    bad = _ext.elastic_2d(F, z, *codes, model.mu, model.zeta, W, P, dz, with_grad)
    if bad or not with_grad:
        return W, None, None
    return W, P, dz


def nematic_eval(Dm, Dy, with_grad: bool = True, backend: str | None = None):
    """Per-element nematic integrand with gradients w.r.t. ``Dm`` and ``Dy``."""
    use = backend or BACKEND
    if use != "cython" or _ext is None or np.shape(Dy)[-1] != 2:
        return _kernels_py.nematic_eval(Dm, Dy, with_grad)
    Dm = np.ascontiguousarray(Dm, dtype=float)
    Dy = np.ascontiguousarray(Dy, dtype=float)
    ne = Dy.shape[0]
    phi = np.empty(ne)
    gM = np.empty((ne, 2, 2))
    gY = np.empty((ne, 2, 2))
    bad = _ext.nematic_2d(Dm, Dy, phi, gM, gY, with_grad)
    if bad or not with_grad:
        return phi, None, None
    return phi, gM, gY
