"""Closed-form rate analysis of split-feedback Laplacian consensus.

The protocol is ``dx/dt = -alpha (1-k) L x(t) - alpha k L x(t - tau) + dr/dt``.
In Laplacian eigen-coordinates every nonzero eigenvalue ``lam`` gives a scalar
mode ``dz/dt = a z(t - tau) + b z(t)`` with ``a = -alpha k lam`` and
``b = -alpha (1-k) lam``, so its exact rate is

    rho_i = (k g(1 - 1/k, -k lam alpha tau) + 1 - k) alpha lam

and the network rate is the slowest mode.  Rates only depend on ``lam``, so
repeated eigenvalues are analysed once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gain import bisect, gain_array, peak_x, unity_crossing_x
from .graph import Spectrum
from .lambertw import lambert_w

__all__ = [
    "ConsensusParams",
    "RateProfile",
    "ModeLandmarks",
    "NetworkDomainError",
    "admissible_delay_network",
    "mode_admissible_delays",
    "mode_rates",
    "mode_rates_lambert",
    "rate_curve",
    "convergence_rate",
    "mode_landmarks",
    "rate_increase_window",
    "optimal_network_delay",
    "ultimate_rate_bound",
    "split_factor_report",
    "SplitRow",
    "golden_section_max",
]

_SCAN_POINTS = 2000


class NetworkDomainError(ValueError):
    """Parameters outside the domain of a network landmark."""


@dataclass(frozen=True)
class ConsensusParams:
    alpha: float = 1.0
    k: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "k", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")

    def with_tau(self, tau: float) -> "ConsensusParams":
        return ConsensusParams(self.alpha, self.k, tau)


def _require_connected(spec: Spectrum):
    if not spec.is_connected():
        raise NetworkDomainError("graph is disconnected (lambda_2 = 0)")


def _modes(spec: Spectrum) -> np.ndarray:
    _require_connected(spec)
    return spec.distinct_nonzero()


def _require_positive_k(k: float):
    if not k > 0:
        raise NetworkDomainError(f"split factor must be positive here, got k={k}")


# --------------------------------------------------------------------------
# admissible delay

def mode_admissible_delays(spec: Spectrum, p: ConsensusParams) -> np.ndarray:
    """Per-mode stability bound ``tau_bar_i`` for each distinct eigenvalue."""
    lam = _modes(spec)
    if p.k <= 0.5:
        return np.full(lam.shape, math.inf)
    return math.acos(1.0 - 1.0 / p.k) / (p.alpha * lam * math.sqrt(2.0 * p.k - 1.0))


def admissible_delay_network(spec: Spectrum, p: ConsensusParams) -> float:
    """Largest stable delay ``tau_bar``; ``inf`` for ``k <= 0.5``.

    Set by the fastest mode, ``arccos(1 - 1/k) / (alpha lam_N sqrt(2k - 1))``.
    """
    return float(mode_admissible_delays(spec, p).min())


# --------------------------------------------------------------------------
# rates

def mode_rates(lam, alpha: float, k: float, tau) -> np.ndarray:
    """Exact rate of each mode via the delay gain; broadcasts ``lam`` and ``tau``."""
    lam, tau = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(tau, dtype=float))
    if k == 0:
        return alpha * lam.astype(float)
    g = gain_array(1.0 - 1.0 / k, -k * lam * alpha * tau)
    return (k * g + 1.0 - k) * alpha * lam


def mode_rates_lambert(lam, alpha: float, k: float, tau) -> np.ndarray:
    """Same rates from the rightmost characteristic root directly."""
    lam, tau = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(tau, dtype=float))
    out = alpha * lam.astype(float)
    pos = tau > 0
    if k != 0 and pos.any():
        lp, tp = lam[pos], tau[pos]
        c = alpha * (1.0 - k) * lp
        w = np.asarray(lambert_w(-alpha * k * lp * tp * np.exp(c * tp) + 0j))
        out = out.copy()
        out[pos] = -w.real / tp + c
    return out


def rate_curve(spec: Spectrum, alpha: float, k: float, taus) -> np.ndarray:
    """Network rate ``min_i rho_i(tau)`` on a grid of delays."""
    lam = _modes(spec)
    taus = np.asarray(taus, dtype=float)
    rates = mode_rates(lam[:, None], alpha, k, taus.ravel()[None, :])
    return rates.min(axis=0).reshape(taus.shape)


# --------------------------------------------------------------------------
# landmarks

@dataclass(frozen=True)
class ModeLandmarks:
    """Per-mode delays, one entry per distinct nonzero eigenvalue (ascending)."""

    lam: np.ndarray
    tau_bar: np.ndarray
    tau_star: np.ndarray
    tau_tilde: np.ndarray
    tau_hat: np.ndarray


def _peak_delay(lam, alpha, k):
    # the k = 1 case is the b = 0 limit, handled inside peak_x (gamma = 0)
    x_star, _ = peak_x(1.0 - 1.0 / k)
    return x_star / (-k * alpha * np.asarray(lam, dtype=float))


def _crossing_delay(lam, alpha, k, level, lo, hi_hint):
    """First delay after the mode peak ``lo`` where the mode rate drops to ``level``."""
    f = lambda t: float(mode_rates(lam, alpha, k, t)) - level
    hi = hi_hint
    if not math.isfinite(hi):
        hi = 2.0 * lo
        while f(hi) >= 0.0:
            hi *= 2.0
            if hi * alpha * abs(1.0 - k) * lam > 600.0:
                return math.inf
    return bisect(f, lo, hi)


def mode_landmarks(spec: Spectrum, alpha: float, k: float) -> ModeLandmarks:
    """Per-mode ``tau_bar_i``, ``tau_star_i``, ``tau_tilde_i`` and ``tau_hat_i``.

    ``tau_tilde_i`` is where mode ``i`` falls back to its own delay-free rate
    ``alpha lam_i``; ``tau_hat_i`` is where it falls to the network delay-free
    rate ``alpha lam_2``.  Requires ``k > 0``.
    """
    _require_positive_k(k)
    lam = _modes(spec)
    p = ConsensusParams(alpha, k, 0.0)
    tau_bar = mode_admissible_delays(spec, p)
    tau_star = _peak_delay(lam, alpha, k)
    x_tilde = unity_crossing_x(1.0 - 1.0 / k)
    tau_tilde = x_tilde / (-k * alpha * lam)
    rho0 = alpha * lam[0]
    tau_hat = np.array([
        _crossing_delay(l, alpha, k, rho0, ts, tb)
        for l, ts, tb in zip(lam, tau_star, tau_bar)
    ])
    return ModeLandmarks(lam, tau_bar, tau_star, tau_tilde, tau_hat)


def rate_increase_window(spec: Spectrum, alpha: float, k: float) -> float:
    """``tau_hat``: the network rate beats ``alpha lam_2`` exactly on ``(0, tau_hat)``."""
    return float(mode_landmarks(spec, alpha, k).tau_hat.min())


def golden_section_max(f, lo: float, hi: float, xtol: float = 1e-12, maxiter: int = 200):
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= xtol * max(1.0, abs(a)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass(frozen=True)
class OptimalDelay:
    tau_star: float
    rho_star: float
    bracket: tuple
    crossing_residual: float | None = None

    def __iter__(self):
        # unpacks as (tau_star, rho_star)
        return iter((self.tau_star, self.rho_star))


def optimal_network_delay(spec: Spectrum, alpha: float, k: float) -> OptimalDelay:
    """Delay maximising the network rate, with ``rho_star`` at that delay.

    The optimum lies in ``[tau_star_N, min(tau_star_2, tau_hat)]``.  A dense
    scan of the slowest-mode rate picks the best cell (the ``min`` has kinks
    where modes swap), then golden section polishes inside it.  When the
    optimum is interior, ``crossing_residual`` reports how far mode 2 is from
    the slowest of the other modes there; it should be near zero.
    """
    ml = mode_landmarks(spec, alpha, k)
    lo = float(ml.tau_star[-1])
    hi = float(min(ml.tau_star[0], ml.tau_hat.min()))
    lam = ml.lam

    def net(t):
        return float(mode_rates(lam, alpha, k, t).min())

    if hi - lo <= 1e-15 * max(1.0, hi):
        t = hi
        return OptimalDelay(t, net(t), (lo, hi), None)
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    vals = mode_rates(lam[:, None], alpha, k, grid[None, :]).min(axis=0)
    j = int(np.argmax(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    t, r = golden_section_max(net, a, b)
    if vals[j] > r:
        t, r = float(grid[j]), float(vals[j])
    t = min(max(t, lo), hi)
    residual = None
    if lam.size > 1 and lo < t < hi:
        rates = mode_rates(lam, alpha, k, t)
        residual = float(abs(rates[0] - rates[1:].min()))
    return OptimalDelay(float(t), float(r), (lo, hi), residual)


def ultimate_rate_bound(k: float, rho0: float) -> float:
    """Largest rate any delay can give for split factor ``k > 0``.

    ``(1 - k)(1 + 1/W_0((1 - k)/(k e))) rho0``, with the ``k = 1`` limit ``e rho0``.
    """
    _require_positive_k(k)
    if k == 1.0:
        return math.e * rho0
    w = lambert_w(complex((1.0 - k) / (k * math.e), 0.0)).real
    return (1.0 - k) * (1.0 + 1.0 / w) * rho0


# --------------------------------------------------------------------------
# profile and report

@dataclass(frozen=True)
class RateProfile:
    rho0: float
    per_mode: dict
    rho_tau: float
    tau_bar: float
    tau_hat: float | None
    tau_star: float | None
    rho_star: float | None
    ultimate_bound: float


def convergence_rate(spec: Spectrum, p: ConsensusParams) -> RateProfile:
    """Rate profile at ``p.tau``.

    ``per_mode`` maps mode index ``i = 2..N`` to its rate.  Delays past the
    admissible bound give nonpositive rates rather than errors.  For ``k <= 0``
    the delay never helps, so ``tau_hat``, ``tau_star`` and ``rho_star`` are
    ``None`` and the bound is ``rho0`` itself.
    """
    _require_connected(spec)
    lam_all = spec.eigenvalues[1:]
    rates = mode_rates(lam_all, p.alpha, p.k, p.tau)
    per_mode = {i + 2: float(r) for i, r in enumerate(rates)}
    rho0 = p.alpha * spec.lambda2
    tau_bar = admissible_delay_network(spec, p)
    if p.k > 0:
        opt = optimal_network_delay(spec, p.alpha, p.k)
        tau_hat = rate_increase_window(spec, p.alpha, p.k)
        tau_star, rho_star = opt.tau_star, opt.rho_star
        bound = ultimate_rate_bound(p.k, rho0)
    else:
        tau_hat = tau_star = rho_star = None
        bound = rho0
    return RateProfile(rho0, per_mode, float(rates.min()), tau_bar, tau_hat, tau_star, rho_star, bound)


@dataclass(frozen=True)
class SplitRow:
    k: float
    tau_bar: float | None
    tau_hat: float | None
    tau_star: float | None
    rho_star: float | None
    ultimate_bound: float | None
    effort_safe: bool
    notes: str = field(default="")


def split_factor_report(spec: Spectrum, alpha: float, k_grid) -> list[SplitRow]:
    """One row of robustness/speed/effort figures per split factor.

    ``effort_safe`` is true for ``0 < k <= 1``, where the delayed protocol never
    needs more control effort than the delay-free one.  Landmarks that do not
    apply are ``None``: all of them at ``k = 0`` (the delay is inert) and the
    acceleration ones for ``k < 0``.
    """
    rho0 = alpha * spec.lambda2
    rows = []
    for k in k_grid:
        k = float(k)
        if k == 0:
            rows.append(SplitRow(k, None, None, None, None, None, False, "delay inert"))
            continue
        tau_bar = admissible_delay_network(spec, ConsensusParams(alpha, k, 0.0))
        if k < 0:
            rows.append(SplitRow(k, tau_bar, None, None, None, None, False, "delay only slows convergence"))
            continue
        opt = optimal_network_delay(spec, alpha, k)
        rows.append(SplitRow(
            k,
            tau_bar,
            rate_increase_window(spec, alpha, k),
            opt.tau_star,
            opt.rho_star,
            ultimate_rate_bound(k, rho0),
            k <= 1.0,
        ))
    return rows
