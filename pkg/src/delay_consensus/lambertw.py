"""Multi-branch complex Lambert W function.

``lambert_w(z, k)`` returns the k-th branch solution ``w`` of ``w * exp(w) = z``.
Branch cuts follow the usual convention: the principal logarithm is cut along
the negative real axis and values on a cut are the limits taken from above
(counter-clockwise continuity).  On the real line only branches 0 and -1 are
real: ``W_0`` on ``[-1/e, inf)`` and ``W_{-1}`` on ``[-1/e, 0)``.

Evaluation is Halley iteration started from a branch-aware initial guess.
Everything is vectorised over ``z``; scalars in, Python ``complex`` out.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "lambert_w",
    "lambert_w_derivative",
    "LambertWSingularityError",
    "OMEGA",
]

EM1 = math.exp(-1.0)
OMEGA = 0.5671432904097838  # W_0(1)

_MAXITER = 100
_STEP_TOL = 1e-14
_BRANCH_POINT_RADIUS = 0.3

# [3/3] Pade approximant of W_0(z)/z around z = 0
_PADE_NUM = (1.0, 3.2789473684210527, 2.46, 0.16903508771929824)
_PADE_DEN = (1.0, 4.2789473684210526, 5.2389473684210526, 1.6562280701754386)


class LambertWSingularityError(ZeroDivisionError):
    """Raised when the derivative is requested at a branch singularity."""


def _as_complex_array(z):
    zz = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(zz)):
        raise ValueError("lambert_w is defined for finite arguments only")
    # -0.0 imaginary parts are folded onto +0.0 so that points on a cut take
    # the value from above
    return zz.real + 1j * (zz.imag + 0.0)


def _branch_point_series(p, sign):
    # W = -1 + s p - p^2/3 + s 11/72 p^3 - 43/540 p^4, s = +1 for the W_0 side
    return -1.0 + sign * p - p**2 / 3.0 + sign * (11.0 / 72.0) * p**3 - (43.0 / 540.0) * p**4


def _pade0(z):
    num = _PADE_NUM[0] + z * (_PADE_NUM[1] + z * (_PADE_NUM[2] + z * _PADE_NUM[3]))
    den = _PADE_DEN[0] + z * (_PADE_DEN[1] + z * (_PADE_DEN[2] + z * _PADE_DEN[3]))
    return z * num / den


def _asymptotic(z, k):
    l1 = np.log(z) + 2j * np.pi * k
    l2 = np.log(l1)
    return l1 - l2 + l2 / l1


def _initial_guess(z, k):
    with np.errstate(all="ignore"):
        p = np.sqrt(2.0 * (np.e * z + 1.0))
        near_bp = np.abs(z + EM1) < _BRANCH_POINT_RADIUS
        safe = np.where(z == 0, 1.0, z)
        guess = _asymptotic(safe, k)
        if k == 0:
            pade_region = (
                (z.real > -1.0)
                & (z.real < 1.5)
                & (np.abs(z.imag) < 1.0)
                & (z.real > -2.5 * np.abs(z.imag) - 0.2)
            )
            guess = np.where(pade_region, _pade0(z), guess)
            guess = np.where(near_bp, _branch_point_series(p, 1.0), guess)
        elif k == -1:
            real_neg = (z.imag == 0) & (z.real < 0) & (z.real > -EM1)
            lg = np.log(np.where(real_neg, -z.real, 1.0))
            guess = np.where(real_neg, lg - np.log(np.where(real_neg, -lg, 1.0)), guess)
            guess = np.where(near_bp & (z.imag >= 0), _branch_point_series(p, -1.0), guess)
        elif k == 1:
            guess = np.where(near_bp & (z.imag < 0), _branch_point_series(p, -1.0), guess)
    return guess


def _halley(z, w):
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(_MAXITER):
            ew = np.exp(w)
            f = w * ew - z
            wp1 = w + 1.0
            step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
            step = np.where(active & np.isfinite(step), step, 0.0)
            w = w - step
            active &= np.abs(step) >= _STEP_TOL * (1.0 + np.abs(w))
            if not active.any():
                break
    return w


def lambert_w(z, k: int = 0):
    """Branch ``k`` of the Lambert W function.

    Parameters
    ----------
    z : complex or array_like
        Finite argument(s).
    k : int, optional
        Branch index, default 0 (principal branch).

    Returns
    -------
    complex or numpy.ndarray
        ``w`` with ``w * exp(w) == z``.  ``W_0(-1/e)`` is exactly ``-1`` and
        ``W_k(0)`` is ``0`` for ``k == 0`` and ``-inf`` otherwise.

    Raises
    ------
    ValueError
        If any argument is not finite.
    """
    k = int(k)
    scalar = np.ndim(z) == 0
    zz = _as_complex_array(z)
    w = _halley(zz, _initial_guess(zz, k))

    at_bp = np.abs(zz + EM1) <= 4.0 * np.finfo(float).eps
    if k == 0:
        w = np.where(at_bp, -1.0 + 0j, w)
        w = np.where(zz == 0, 0j, w)
    else:
        if k == -1:
            w = np.where(at_bp & (zz.imag >= 0), -1.0 + 0j, w)
        w = np.where(zz == 0, complex(-np.inf, 0.0), w)
    if scalar:
        return complex(w)
    return w


def lambert_w_derivative(z, k: int = 0):
    """Derivative ``dW_k/dz = 1 / (z + exp(W_k(z)))``.

    Raises
    ------
    LambertWSingularityError
        At the branch point ``z = -1/e`` on the branches that meet there, and
        at ``z = 0`` for ``k != 0``.
    """
    scalar = np.ndim(z) == 0
    zz = _as_complex_array(z)
    w = np.asarray(lambert_w(zz, k))
    with np.errstate(all="ignore"):
        denom = zz + np.exp(w)
    # z + e^W = e^W (1 + W): vanishes exactly where W = -1 or e^W = 0
    singular = (np.abs(1.0 + w) < 1e-12) | ~np.isfinite(w)
    if singular.any():
        raise LambertWSingularityError(f"dW_{k}/dz is singular at the requested point")
    out = 1.0 / denom
    if scalar:
        return complex(out)
    return out

