"""Delay gain ``g(gamma, x) = Re W_0(x e^{gamma x}) / x`` and its landmarks.

For the scalar system ``dx/dt = a x(t - tau) + b x(t)`` with ``gamma = -b/a``
and ``x = a tau`` the exact decay rate is ``-(g(gamma, x) - gamma) a``, so
``g > 1`` means the delay speeds convergence up.  For ``gamma < 1`` and
``x < 0`` the gain rises from ``gamma`` at the stability boundary ``x_bar``
to a single peak at ``x_star`` and falls back to 1 at ``x = 0``, crossing 1
on the way down at ``x_tilde``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lambertw import lambert_w

__all__ = [
    "gain",
    "gain_array",
    "critical_x",
    "peak_x",
    "unity_crossing_x",
    "landmarks",
    "GainLandmarks",
    "bisect",
]


def gain(gamma: float, x: float) -> float:
    """Delay gain at a single point; ``gain(gamma, 0) == 1``."""
    gamma, x = float(gamma), float(x)
    if not (math.isfinite(gamma) and math.isfinite(x)):
        raise ValueError("gain needs finite gamma and x")
    if x == 0.0:
        return 1.0
    return lambert_w(complex(x * math.exp(gamma * x), 0.0)).real / x


def gain_array(gamma, x) -> np.ndarray:
    """Vectorised :func:`gain` (broadcasts ``gamma`` against ``x``)."""
    gamma, x = np.broadcast_arrays(np.asarray(gamma, dtype=float), np.asarray(x, dtype=float))
    out = np.ones(x.shape)
    nz = x != 0
    if nz.any():
        arg = x[nz] * np.exp(gamma[nz] * x[nz])
        out[nz] = np.asarray(lambert_w(arg + 0j)).real / x[nz]
    return out


def critical_x(gamma: float) -> float:
    """Stability boundary ``x_bar < 0``; ``-inf`` when ``|gamma| >= 1``.

    ``x_bar = -arccos(gamma) / sqrt(1 - gamma^2)``, the point where the
    rightmost characteristic root reaches the imaginary axis.
    """
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError("gamma must be finite")
    if abs(gamma) >= 1.0:
        return -math.inf
    return -math.acos(gamma) / math.sqrt(1.0 - gamma * gamma)


def peak_x(gamma: float) -> tuple[float, float]:
    """Location and height ``(x_star, g_max)`` of the gain peak on ``x < 0``."""
    gamma = float(gamma)
    if not gamma < 1.0:
        raise ValueError(f"the gain has no peak on x < 0 for gamma={gamma} >= 1")
    if gamma == 0.0:
        return -math.exp(-1.0), math.e
    w = lambert_w(complex(-gamma * math.exp(-1.0), 0.0)).real
    return w / gamma, -gamma / w


def bisect(f, lo: float, hi: float, xtol: float = 1e-12, maxiter: int = 200) -> float:
    """Root of ``f`` on a sign-change bracket ``[lo, hi]`` by plain bisection."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= xtol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def unity_crossing_x(gamma: float) -> float:
    """The unique ``x_tilde`` in ``(x_bar, x_star)`` with ``g(gamma, x_tilde) = 1``."""
    gamma = float(gamma)
    if not gamma < 1.0:
        raise ValueError(f"no unity crossing on x < 0 for gamma={gamma} >= 1")
    x_star, _ = peak_x(gamma)
    lo = critical_x(gamma)
    if math.isinf(lo):
        # g -> gamma < 1 as x -> -inf, so walking outwards finds g < 1
        lo = 2.0 * x_star
        while gain(gamma, lo) >= 1.0:
            lo *= 2.0
    return bisect(lambda x: gain(gamma, x) - 1.0, lo, x_star)


@dataclass(frozen=True)
class GainLandmarks:
    gamma: float
    x_bar: float
    x_star: float
    x_tilde: float
    g_max: float


def landmarks(gamma: float) -> GainLandmarks:
    x_star, g_max = peak_x(gamma)
    return GainLandmarks(
        gamma=float(gamma),
        x_bar=critical_x(gamma),
        x_star=x_star,
        x_tilde=unity_crossing_x(gamma),
        g_max=g_max,
    )
