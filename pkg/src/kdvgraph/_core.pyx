# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Airy function evaluation: Maclaurin series on [-7, 5], asymptotic expansions outside."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos, sqrt, fabs, pow, M_PI

cnp.import_array()

cdef double AI0 = 0.355028053887817239260
cdef double AIP0 = 0.258819403792806798405
cdef double SERIES_LO = -7.0
cdef double SERIES_HI = 5.0
cdef int MAX_TERMS = 200


cdef void _series(double x, double* ai, double* aip) noexcept nogil:
    cdef double x3 = x * x * x
    cdef double f = 1.0, g = x, fp = 0.0, gp = 1.0
    cdef double t = 1.0, s = x, p = x * x / 2.0, q = 1.0
    cdef int k
    fp = p
    for k in range(1, MAX_TERMS):
        t = t * x3 / ((3.0 * k - 1.0) * (3.0 * k))
        s = s * x3 / ((3.0 * k) * (3.0 * k + 1.0))
        q = q * x3 / ((3.0 * k) * (3.0 * k - 2.0))
        f += t
        g += s
        gp += q
        if k >= 2:
            p = p * x3 / ((3.0 * k - 3.0) * (3.0 * k - 1.0))
            fp += p
        if fabs(t) + fabs(s) + fabs(q) + fabs(p) < 1e-18 * (fabs(f) + fabs(g) + 1e-300):
            break
    ai[0] = AI0 * f - AIP0 * g
    aip[0] = AI0 * fp - AIP0 * gp


cdef void _asym_pos(double x, double* ai, double* aip) noexcept nogil:
    cdef double zeta = 2.0 / 3.0 * x * sqrt(x)
    cdef double u = 1.0, v, su = 1.0, sv = 1.0, sgn = 1.0, zp = 1.0
    cdef double last = 1e300, term
    cdef int k
    for k in range(1, 60):
        u = u * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
        v = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u
        zp = zp * zeta
        sgn = -sgn
        term = fabs(u / zp)
        if term > last or term < 1e-17:
            break
        last = term
        su += sgn * u / zp
        sv += sgn * v / zp
    cdef double e = exp(-zeta)
    cdef double x4 = pow(x, 0.25)
    ai[0] = e / (2.0 * sqrt(M_PI) * x4) * su
    aip[0] = -x4 * e / (2.0 * sqrt(M_PI)) * sv


cdef void _asym_neg(double x, double* ai, double* aip) noexcept nogil:
    cdef double y = -x
    cdef double zeta = 2.0 / 3.0 * y * sqrt(y)
    cdef double u = 1.0, v, zp = 1.0
    cdef double pu = 1.0, qu = 0.0, pv = 1.0, qv = 0.0
    cdef double last = 1e300, term, sgn
    cdef int k
    for k in range(1, 60):
        u = u * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
        v = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u
        zp = zp * zeta
        term = fabs(u / zp)
        if term > last or term < 1e-17:
            break
        last = term
        # even k enter P, odd k enter Q, with alternating signs per pair
        sgn = 1.0 if ((k // 2) % 2 == 0) else -1.0
        if k % 2 == 0:
            pu += sgn * u / zp
            pv += sgn * v / zp
        else:
            qu += sgn * u / zp
            qv += sgn * v / zp
    cdef double ph = zeta + M_PI / 4.0
    cdef double sn = sin(ph), cs = cos(ph)
    cdef double y4 = pow(y, 0.25)
    ai[0] = (sn * pu - cs * qu) / (sqrt(M_PI) * y4)
    aip[0] = -y4 * (cs * pv + sn * qv) / sqrt(M_PI)


def airy_ai(x):
    """Return (Ai(x), Ai'(x)) for a real array."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(np.ravel(x), dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ai = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aip = np.empty(n)
    cdef double a, b, xv
    with nogil:
        for i in range(n):
            xv = xs[i]
            if xv > SERIES_HI:
                _asym_pos(xv, &a, &b)
            elif xv < SERIES_LO:
                _asym_neg(xv, &a, &b)
            else:
                _series(xv, &a, &b)
            ai[i] = a
            aip[i] = b
    shape = np.shape(x)
    return ai.reshape(shape), aip.reshape(shape)
