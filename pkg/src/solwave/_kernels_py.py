"""Pure-numpy implementations of the hot per-point kernels.

Mirrors the compiled extension in solwave._kernels; selected as a fallback
at import time by solwave.kernels.  The nonlinearity is the attractive pure
power f(s) = -s^p.
"""

import numpy as np

BACKEND = "python"


def apply_local_phase(psi, out, v, coef, inv_scale, p):
    """out = psi * exp(i * coef * (V + f(inv_scale * |psi|^2))).

    ``v`` may be None for a zero potential.  ``psi`` and ``out`` are flat
    complex128 arrays of equal length and may alias.
    """
    s = psi.real**2 + psi.imag**2
    if p == 1.0:
        fval = -(inv_scale * s)
    else:
        fval = -np.power(inv_scale * s, p)
    arg = coef * (v + fval) if v is not None else coef * fval
    np.multiply(psi, np.exp(1j * arg), out=out)


def abs2_sum(psi):
    """Sum of squared moduli, fixed summation order."""
    return float(np.sum(psi.real**2 + psi.imag**2))


def nonlinear_energy_sum(psi, inv_scale, p):
    """Sum of F(inv_scale * |psi|^2) with F(s) = -s^(p+1)/(p+1)."""
    s = inv_scale * (psi.real**2 + psi.imag**2)
    return float(np.sum(-np.power(s, p + 1.0) / (p + 1.0)))
