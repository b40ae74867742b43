"""Exact decay-rate analysis of ``dx/dt = a x(t - tau) + b x(t)``.

The rightmost characteristic root is ``W_0(a tau e^{-b tau}) / tau + b``,
so the decay rate is ``rho(tau) = -Re W_0(a tau e^{-b tau}) / tau - b``.
With ``gamma = -b/a`` and ``x = a tau`` this is ``-(g(gamma, x) - gamma) a``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gain import gain, unity_crossing_x
from .lambertw import lambert_w

__all__ = [
    "ScalarSystem",
    "ScalarRateReport",
    "UnstableDelayWarning",
    "admissible_delay",
    "decay_rate",
    "decay_rate_gain_form",
    "decay_rates",
    "optimal_delay",
    "rate_gain_window",
    "analyse",
]


class UnstableDelayWarning(RuntimeWarning):
    """The requested delay lies outside the admissible (stable) range."""


@dataclass(frozen=True)
class ScalarSystem:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("coefficients must be finite")
        if self.a == 0:
            raise ValueError("the delayed coefficient a must be nonzero")
        if not self.a + self.b < 0:
            raise ValueError(f"need a + b < 0 for stability at zero delay, got a={self.a}, b={self.b}")

    @property
    def gamma(self) -> float:
        return -self.b / self.a

    @property
    def rho0(self) -> float:
        return -(self.a + self.b)


def admissible_delay(sys: ScalarSystem) -> float:
    """Critical delay ``tau_bar``; ``inf`` when stable for every delay."""
    a, b = sys.a, sys.b
    if b <= -abs(a):
        return math.inf
    return math.acos(-b / a) / math.sqrt(a * a - b * b)


def decay_rate(sys: ScalarSystem, tau: float) -> float:
    """Exact exponential decay rate for delay ``tau``.

    Delays at or beyond the admissible bound emit :class:`UnstableDelayWarning`;
    the (nonpositive) rate is still returned.
    """
    tau = float(tau)
    if tau < 0 or not math.isfinite(tau):
        raise ValueError("tau must be finite and nonnegative")
    if tau >= admissible_delay(sys):
        warnings.warn(
            f"tau={tau} is outside the admissible range [0, {admissible_delay(sys)})",
            UnstableDelayWarning,
            stacklevel=2,
        )
    if tau == 0.0:
        return sys.rho0
    w = lambert_w(complex(sys.a * tau * math.exp(-tau * sys.b), 0.0))
    return -w.real / tau - sys.b


def decay_rate_gain_form(sys: ScalarSystem, tau: float) -> float:
    """Same rate through the delay gain: ``-(g(gamma, a tau) - gamma) a``."""
    return -(gain(sys.gamma, sys.a * tau) - sys.gamma) * sys.a


def decay_rates(a, b, tau) -> np.ndarray:
    """Vectorised decay rate over broadcast ``a``, ``b``, ``tau`` (no warnings)."""
    a, b, tau = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, tau)))
    out = -(a + b)
    pos = tau > 0
    if pos.any():
        w = np.asarray(lambert_w(a[pos] * tau[pos] * np.exp(-tau[pos] * b[pos]) + 0j))
        out = out.copy()
        out[pos] = -w.real / tau[pos] - b[pos]
    return out


def optimal_delay(sys: ScalarSystem) -> tuple[float, float]:
    """``(tau_star, rho_star)``: the delay with the fastest decay, ``a < 0`` only."""
    a, b = sys.a, sys.b
    if a > 0:
        raise ValueError("a > 0: delay only slows this system down, no optimum")
    if b == 0:
        return -1.0 / (a * math.e), -a * math.e
    w = lambert_w(complex(b / (a * math.e), 0.0)).real
    return -w / b, -(1.0 + 1.0 / w) * b


def rate_gain_window(sys: ScalarSystem) -> float:
    """``tau_tilde``: the delay is beneficial exactly on ``(0, tau_tilde)``."""
    if sys.a > 0:
        raise ValueError("a > 0: no delay increases the rate")
    return unity_crossing_x(sys.gamma) / sys.a


@dataclass(frozen=True)
class ScalarRateReport:
    tau_bar: float
    tau_tilde: float | None
    tau_star: float | None
    rho_star: float | None
    rho_at: dict = field(default_factory=dict)


def analyse(sys: ScalarSystem, taus=()) -> ScalarRateReport:
    """Collect every landmark of ``sys`` plus the rate at each delay in ``taus``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnstableDelayWarning)
        rho_at = {float(t): decay_rate(sys, t) for t in taus}
    if sys.a < 0:
        tau_star, rho_star = optimal_delay(sys)
        tau_tilde = rate_gain_window(sys)
    else:
        tau_star = rho_star = tau_tilde = None
    return ScalarRateReport(admissible_delay(sys), tau_tilde, tau_star, rho_star, rho_at)
