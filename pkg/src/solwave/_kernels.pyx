# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-point kernels for the split-step local phase and reductions.

Fuses the modulus, power, exponential and multiply of the local half-step
into one pass; the numpy fallback in _kernels_py allocates five temporaries
for the same work.  Nonlinearity is the attractive pure power f(s) = -s^p.
"""

from libc.math cimport cos, sin, pow

import numpy as np

BACKEND = "cython"


def apply_local_phase(complex[::1] psi, complex[::1] out, double[::1] v,
                      double coef, double inv_scale, double p):
    """out = psi * exp(i * coef * (V + f(inv_scale * |psi|^2)))."""
    cdef Py_ssize_t i, n = psi.shape[0]
    cdef double s, arg, c, sn, re, im
    cdef bint have_v = v is not None
    cdef bint cubic = p == 1.0
    for i in range(n):
        re = psi[i].real
        im = psi[i].imag
        s = inv_scale * (re * re + im * im)
        if cubic:
            arg = -s
        else:
            arg = -pow(s, p)
        if have_v:
            arg += v[i]
        arg *= coef
        c = cos(arg)
        sn = sin(arg)
        out[i] = (re * c - im * sn) + 1j * (re * sn + im * c)
    return None


def abs2_sum(complex[::1] psi):
    cdef Py_ssize_t i, n = psi.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    return acc


def nonlinear_energy_sum(complex[::1] psi, double inv_scale, double p):
    cdef Py_ssize_t i, n = psi.shape[0]
    cdef double acc = 0.0, s
    for i in range(n):
        s = inv_scale * (psi[i].real * psi[i].real + psi[i].imag * psi[i].imag)
        acc += -pow(s, p + 1.0) / (p + 1.0)
    return acc
