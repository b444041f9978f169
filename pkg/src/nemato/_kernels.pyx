# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled 2D element kernels.

Families are passed as integer codes: N-function 0 = power ``c s^p``,
1 = powerlog ``c s^p log(e+s)^q``; sigma 0 = powerpower
``a v^alpha + b v^-beta + c``, 1 = powerlog ``a v^alpha - b log v + c``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, log, INFINITY

cnp.import_array()

cdef double E_CONST = 2.718281828459045


cdef inline void _a_eval(int fam, double p, double q, double c, double s, double* val, double* der) noexcept nogil:
    cdef double L
    if fam == 0:
        val[0] = c * pow(s, p)
        der[0] = c * p * pow(s, p - 1.0)
    else:
        L = log(E_CONST + s)
        val[0] = c * pow(s, p) * pow(L, q)
        der[0] = c * (p * pow(s, p - 1.0) * pow(L, q))
        if q != 0.0:
            der[0] += c * pow(s, p) * q * pow(L, q - 1.0) / (E_CONST + s)


cdef inline void _sigma_eval(int fam, double a, double alpha, double b, double beta, double c, double v, double* val, double* der) noexcept nogil:
    if fam == 0:
        val[0] = a * pow(v, alpha) + b * pow(v, -beta) + c
        der[0] = a * alpha * pow(v, alpha - 1.0) - b * beta * pow(v, -beta - 1.0)
    else:
        val[0] = a * pow(v, alpha) - b * log(v) + c
        der[0] = a * alpha * pow(v, alpha - 1.0) - b / v


def elastic_2d(double[:, :, ::1] F, double[:, ::1] z,
               int a_fam, double a_p, double a_q, double a_c,
               int s_fam, double s_a, double s_alpha, double s_b, double s_beta, double s_c,
               double mu, double zeta,
               double[::1] W, double[:, :, ::1] P, double[:, ::1] dz, bint with_grad):
    """Fill ``W``, ``P`` and ``dz`` for every element; returns the number of
    elements with ``det <= 0`` (their energy is set to ``inf``)."""
    cdef Py_ssize_t e, ne = F.shape[0]
    cdef int bad = 0
    cdef double z0, z1, n00, n01, n11, x00, x01, x10, x11, det, nx, av, ad, sv, sd
    cdef double c00, c01, c10, c11, na2, core00, core01, core10, core11, k
    cdef double t00, t01, t10, t11, d00, d01, d10, d11, b00, b01, b10, b11
    cdef double f00, f01, f10, f11, cz = mu - 1.0 / mu
    with nogil:
        for e in range(ne):
            z0 = z[e, 0]
            z1 = z[e, 1]
            # N^{-1}(z) = mu z z^T + mu^{-1} (I - z z^T)
            n00 = mu * z0 * z0 + (1.0 - z0 * z0) / mu
            n01 = mu * z0 * z1 - z0 * z1 / mu
            n11 = mu * z1 * z1 + (1.0 - z1 * z1) / mu
            f00 = F[e, 0, 0]
            f01 = F[e, 0, 1]
            f10 = F[e, 1, 0]
            f11 = F[e, 1, 1]
            x00 = n00 * f00 + n01 * f10
            x01 = n00 * f01 + n01 * f11
            x10 = n01 * f00 + n11 * f10
            x11 = n01 * f01 + n11 * f11
            det = x00 * x11 - x01 * x10
            if det <= 0.0:
                W[e] = INFINITY
                bad += 1
                continue
            nx = sqrt(x00 * x00 + x01 * x01 + x10 * x10 + x11 * x11)
            _a_eval(a_fam, a_p, a_q, a_c, nx, &av, &ad)
            _sigma_eval(s_fam, s_a, s_alpha, s_b, s_beta, s_c, det, &sv, &sd)
            # cof X and |adj X| (= |X| in 2D)
            c00 = x11
            c01 = -x10
            c10 = -x01
            c11 = x00
            na2 = nx * nx
            W[e] = av + pow(nx, zeta) + sv
            if not with_grad:
                continue
            # core = |adj|^2 I - cof adj  (adj = cof^T)
            core00 = na2 - (c00 * c00 + c01 * c01)
            core01 = -(c00 * c10 + c01 * c11)
            core10 = -(c10 * c00 + c11 * c01)
            core11 = na2 - (c10 * c10 + c11 * c11)
            # D Phi = A'/|X| X + zeta |adj|^{zeta-2} core X^{-T} + sigma' cof, X^{-T} = cof/det
            k = zeta * pow(nx, zeta - 2.0) / det
            t00 = core00 * c00 + core01 * c10
            t01 = core00 * c01 + core01 * c11
            t10 = core10 * c00 + core11 * c10
            t11 = core10 * c01 + core11 * c11
            d00 = ad / nx * x00 + k * t00 + sd * c00
            d01 = ad / nx * x01 + k * t01 + sd * c01
            d10 = ad / nx * x10 + k * t10 + sd * c10
            d11 = ad / nx * x11 + k * t11 + sd * c11
            # P = N^{-1} D Phi
            P[e, 0, 0] = n00 * d00 + n01 * d10
            P[e, 0, 1] = n00 * d01 + n01 * d11
            P[e, 1, 0] = n01 * d00 + n11 * d10
            P[e, 1, 1] = n01 * d01 + n11 * d11
            if cz != 0.0:
                # B = D Phi F^T ; dz = cz (B + B^T) z
                b00 = d00 * f00 + d01 * f01
                b01 = d00 * f10 + d01 * f11
                b10 = d10 * f00 + d11 * f01
                b11 = d10 * f10 + d11 * f11
                dz[e, 0] = cz * (2.0 * b00 * z0 + (b01 + b10) * z1)
                dz[e, 1] = cz * ((b01 + b10) * z0 + 2.0 * b11 * z1)
            else:
                dz[e, 0] = 0.0
                dz[e, 1] = 0.0
    return bad


def nematic_2d(double[:, :, ::1] Dm, double[:, :, ::1] Dy,
               double[::1] phi, double[:, :, ::1] gM, double[:, :, ::1] gY, bint with_grad):
    """``phi = |Dm Dy^{-1}|^2 det Dy`` and its partial gradients; returns the
    number of elements with ``det Dy <= 0``."""
    cdef Py_ssize_t e, ne = Dy.shape[0]
    cdef int bad = 0
    cdef double y00, y01, y10, y11, det, i00, i01, i10, i11
    cdef double m00, m01, m10, m11, x00, x01, x10, x11, nx2
    cdef double s00, s01, s10, s11
    with nogil:
        for e in range(ne):
            y00 = Dy[e, 0, 0]
            y01 = Dy[e, 0, 1]
            y10 = Dy[e, 1, 0]
            y11 = Dy[e, 1, 1]
            det = y00 * y11 - y01 * y10
            if det <= 0.0:
                phi[e] = INFINITY
                bad += 1
                continue
            i00 = y11 / det
            i01 = -y01 / det
            i10 = -y10 / det
            i11 = y00 / det
            m00 = Dm[e, 0, 0]
            m01 = Dm[e, 0, 1]
            m10 = Dm[e, 1, 0]
            m11 = Dm[e, 1, 1]
            x00 = m00 * i00 + m01 * i10
            x01 = m00 * i01 + m01 * i11
            x10 = m10 * i00 + m11 * i10
            x11 = m10 * i01 + m11 * i11
            nx2 = x00 * x00 + x01 * x01 + x10 * x10 + x11 * x11
            phi[e] = nx2 * det
            if not with_grad:
                continue
            # gM = 2 det X Dy^{-T}
            gM[e, 0, 0] = 2.0 * det * (x00 * i00 + x01 * i01)
            gM[e, 0, 1] = 2.0 * det * (x00 * i10 + x01 * i11)
            gM[e, 1, 0] = 2.0 * det * (x10 * i00 + x11 * i01)
            gM[e, 1, 1] = 2.0 * det * (x10 * i10 + x11 * i11)
            # S = X^T X ; gY = -2 det S Dy^{-T} + |X|^2 cof Dy
            s00 = x00 * x00 + x10 * x10
            s01 = x00 * x01 + x10 * x11
            s10 = s01
            s11 = x01 * x01 + x11 * x11
            gY[e, 0, 0] = -2.0 * det * (s00 * i00 + s01 * i01) + nx2 * y11
            gY[e, 0, 1] = -2.0 * det * (s00 * i10 + s01 * i11) - nx2 * y10
            gY[e, 1, 0] = -2.0 * det * (s10 * i00 + s11 * i01) - nx2 * y01
            gY[e, 1, 1] = -2.0 * det * (s10 * i10 + s11 * i11) + nx2 * y00
    return bad
