# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 propagation kernel for phi'' = q(r) phi.

Mirrors _rk4_py.rk4_propagate exactly (same arithmetic, same order).
"""

import numpy as np


def rk4_propagate(double[::1] q, double[::1] qm, double step, double phi0, double dphi0):
    cdef Py_ssize_t n = q.shape[0]
    phi_arr = np.empty(n)
    dphi_arr = np.empty(n)
    cdef double[::1] phi = phi_arr
    cdef double[::1] dphi = dphi_arr
    cdef double h = step
    cdef double h2 = 0.5 * step
    cdef double h6 = step / 6.0
    cdef double p = phi0
    cdef double d = dphi0
    cdef double qi, qmid, qn
    cdef double k1p, k1d, k2p, k2d, k3p, k3d, k4p, k4d
    cdef Py_ssize_t i
    phi[0] = p
    dphi[0] = d
    for i in range(n - 1):
        qi = q[i]
        qmid = qm[i]
        qn = q[i + 1]
        k1p = d
        k1d = qi * p
        k2p = d + h2 * k1d
        k2d = qmid * (p + h2 * k1p)
        k3p = d + h2 * k2d
        k3d = qmid * (p + h2 * k2p)
        k4p = d + h * k3d
        k4d = qn * (p + h * k3p)
        p = p + h6 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        d = d + h6 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        phi[i + 1] = p
        dphi[i + 1] = d
    return phi_arr, dphi_arr
