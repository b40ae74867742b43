"""Exact single-mode solutions used as oracles for the simulator.

A Laplacian eigenvalue ``lam`` gives the modal equation

    dz/dt = -c z(t) - alpha k lam z(t - tau),  c = alpha (1 - k) lam,

with ``z = 0`` on ``[-tau, 0)`` and ``z(0) = z0``.  Its Laplace transform is
``z0 / h(s)`` with ``h(s) = s + c + alpha k lam e^{-s tau}``, whose roots are
``S_j = W_j(-alpha k lam tau e^{c tau}) / tau - c``.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .graph import Spectrum
from .lambertw import lambert_w
from .network import ConsensusParams

__all__ = [
    "modal_closed_form",
    "characteristic_roots",
    "series_coefficients",
    "series_solution",
    "series_integral",
]

log = logging.getLogger(__name__)

_DENOM_TOL = 1e-14


def modal_closed_form(lam: float, p: ConsensusParams, z0: float, t: float) -> float:
    """Method-of-steps solution on ``[-tau, 2 tau]``.

    ``0`` before ``t = 0``, ``z0 e^{-c t}`` on ``[0, tau)`` and
    ``z0 (e^{-c t} - alpha k lam (t - tau) e^{-c (t - tau)})`` on ``[tau, 2 tau]``;
    for ``k = 1`` (``c = 0``) the last piece is ``z0 (1 - alpha lam (t - tau))``.
    """
    tau = p.tau
    if not (-tau <= t <= 2.0 * tau):
        raise ValueError(f"t={t} is outside [-tau, 2 tau] = [{-tau}, {2 * tau}]")
    if t < 0:
        return 0.0
    c = p.alpha * (1.0 - p.k) * lam
    if t < tau or tau == 0:
        return z0 * math.exp(-c * t)
    if p.k == 1.0:
        return z0 * (1.0 - p.alpha * lam * (t - tau))
    return z0 * (math.exp(-c * t) - p.alpha * p.k * lam * (t - tau) * math.exp(-c * (t - tau)))


def characteristic_roots(lam: float, p: ConsensusParams, J: int) -> np.ndarray:
    """Roots ``S_j`` for ``j = -J..J`` (branch order)."""
    if not p.tau > 0:
        raise ValueError("the root series needs tau > 0")
    if p.k == 0:
        raise ValueError("k = 0 has the single root -alpha lam")
    c = p.alpha * (1.0 - p.k) * lam
    arg = complex(-p.alpha * p.k * lam * p.tau * math.exp(c * p.tau), 0.0)
    return np.array([lambert_w(arg, j) / p.tau - c for j in range(-J, J + 1)])


def series_coefficients(lam: float, p: ConsensusParams, roots) -> np.ndarray:
    """``C_j = 1 / (1 - alpha k lam tau e^{-S_j tau})``; near-singular terms become ``nan``."""
    roots = np.asarray(roots)
    denom = 1.0 - p.alpha * p.k * lam * p.tau * np.exp(-roots * p.tau)
    out = np.full(roots.shape, np.nan + 0j)
    ok = np.abs(denom) >= _DENOM_TOL
    out[ok] = 1.0 / denom[ok]
    if not ok.all():
        log.warning("skipped %d series term(s) with |1 - a tau e^{-S tau}| < %g", int((~ok).sum()), _DENOM_TOL)
    return out


def series_solution(spec: Spectrum, p: ConsensusParams, z0, t, J: int = 200) -> np.ndarray:
    """Truncated root series ``Re sum_{|j| <= J} e^{S_j t} C_j z0`` for each disagreement mode.

    Parameters
    ----------
    spec : Spectrum
    p : ConsensusParams
    z0 : array_like, length N - 1
        Initial modal coordinates of modes ``2..N``.
    t : float or array_like
        Times ``>= 0``.
    J : int
        Branches ``-J..J`` are summed.

    Returns
    -------
    ndarray
        Shape ``(N - 1,)`` for scalar ``t``, else ``(len(t), N - 1)``.

    Notes
    -----
    At ``t = 0`` the series converges to the midpoint ``z0 / 2`` of the jump
    from the zero history, and convergence is slow just after it.
    """
    if J < 1:
        raise ValueError("need J >= 1")
    z0 = np.asarray(z0, dtype=float)
    lam_all = spec.eigenvalues[1:]
    if z0.shape != lam_all.shape:
        raise ValueError(f"z0 must have length {lam_all.size}")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((tt.size, lam_all.size))
    cache = {}
    for i, lam in enumerate(lam_all):
        key = round(float(lam), 12)
        if key not in cache:
            S = characteristic_roots(lam, p, J)
            C = series_coefficients(lam, p, S)
            keep = np.isfinite(C)
            cache[key] = (S[keep], C[keep])
        S, C = cache[key]
        out[:, i] = (np.exp(np.outer(tt, S)) @ C).real * z0[i]
    return out[0] if scalar else out


def series_integral(lam: float, p: ConsensusParams, J: int = 500) -> complex:
    """Partial sum ``sum_{|j| <= J} C_j / S_j``.

    Integrating the series over ``[0, inf)`` gives ``-sum C_j / S_j`` per unit
    ``z0``, which must equal ``1 / h(0) = 1 / (alpha lam)``.
    """
    S = characteristic_roots(lam, p, J)
    C = series_coefficients(lam, p, S)
    keep = np.isfinite(C)
    return complex(np.sum(C[keep] / S[keep]))
