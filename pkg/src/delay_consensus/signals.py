"""One-sided reference inputs ``r(t)`` for the agents (zero for ``t < 0``).

Every signal exposes ``value(t)`` (right-continuous), ``left_value(t)``,
``derivative(t)`` (the smooth part; jumps are listed by ``breakpoints``) and
``gamma``, a bound on ``||(I - 11^T/N) dr/dt||_inf`` that is ``inf`` for
signals with jumps.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ReferenceSignal",
    "StaticReference",
    "RampReference",
    "SinusoidReference",
    "ZOHSinusoidReference",
    "fiedler_ramp",
    "DEFAULT_AMPLITUDES",
    "DEFAULT_BIASES",
    "DEFAULT_SAMPLE_RATE",
]

DEFAULT_AMPLITUDES = (1.1, 1.0, 0.9, 1.05, 0.96)
DEFAULT_BIASES = (-0.55, 1.0, 0.6, -0.9, -0.6)
DEFAULT_SAMPLE_RATE = 2.0


def _disagreement_inf(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v - v.mean()))) if v.size else 0.0


class ReferenceSignal:
    """Base class; subclasses implement ``_value`` and ``_derivative`` for ``t >= 0``."""

    n: int
    gamma: float = math.inf

    def value(self, t: float) -> np.ndarray:
        if t < 0:
            return np.zeros(self.n)
        return self._value(t)

    def left_value(self, t: float) -> np.ndarray:
        return self.value(t) if t > 0 else np.zeros(self.n)

    def derivative(self, t: float) -> np.ndarray:
        if t < 0:
            return np.zeros(self.n)
        return self._derivative(t)

    def breakpoints(self, horizon: float) -> np.ndarray:
        """Jump times in ``(0, horizon]``."""
        return np.empty(0)

    def aligned(self, h: float) -> "ReferenceSignal":
        """Copy whose jumps sit on multiples of ``h`` (smooth signals return self)."""
        return self

    def average(self, t: float) -> float:
        return float(self.value(t).mean())

    def _value(self, t):
        raise NotImplementedError

    def _derivative(self, t):
        raise NotImplementedError


class StaticReference(ReferenceSignal):
    """Constant input ``r(t) = r0``; with it the protocol is the zero-input system."""

    def __init__(self, r0):
        self.r0 = np.array(r0, dtype=float)
        if self.r0.ndim != 1 or not np.all(np.isfinite(self.r0)):
            raise ValueError("r0 must be a finite vector")
        self.n = self.r0.size
        self.gamma = 0.0

    def _value(self, t):
        return self.r0.copy()

    def _derivative(self, t):
        return np.zeros(self.n)


class RampReference(ReferenceSignal):
    """``r(t) = r0 + v t``; the disagreement derivative is constant."""

    def __init__(self, r0, v):
        self.r0 = np.array(r0, dtype=float)
        self.v = np.array(v, dtype=float)
        if self.r0.shape != self.v.shape or self.r0.ndim != 1:
            raise ValueError("r0 and v must be vectors of the same length")
        if not (np.all(np.isfinite(self.r0)) and np.all(np.isfinite(self.v))):
            raise ValueError("ramp parameters must be finite")
        self.n = self.r0.size
        self.gamma = _disagreement_inf(self.v)

    def _value(self, t):
        return self.r0 + self.v * t

    def _derivative(self, t):
        return self.v.copy()


class SinusoidReference(ReferenceSignal):
    """``r^i(t) = a^i (2 + sin(omega t + phi)) + b^i`` with shared ``omega``, ``phi``.

    Then ``(I - J) dr/dt = omega cos(omega t + phi) (a - mean(a))``, so
    ``gamma = |omega| max_i |a^i - mean(a)|``.
    """

    def __init__(self, a, b, omega: float, phi: float = 0.0):
        self.a = np.array(a, dtype=float)
        self.b = np.array(b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("a and b must be vectors of the same length")
        self.omega, self.phi = float(omega), float(phi)
        self.n = self.a.size
        self.gamma = abs(self.omega) * _disagreement_inf(self.a)

    def _value(self, t):
        return self.a * (2.0 + math.sin(self.omega * t + self.phi)) + self.b

    def _derivative(self, t):
        return self.a * self.omega * math.cos(self.omega * t + self.phi)


class ZOHSinusoidReference(ReferenceSignal):
    """Zero-order-hold samples of per-agent sinusoids with random frequency and phase.

    In epoch ``m`` (``t`` in ``[m T, (m+1) T)``) agent ``i`` holds
    ``a^i (2 + sin(omega_m^i m T + phi_m^i)) + b^i`` where ``omega ~ N(0, 0.25)``
    and ``phi ~ N(0, (pi/2)^2)`` are drawn fresh every epoch from a seeded
    generator.  The held values jump at epoch boundaries, so ``gamma = inf``.

    Parameters
    ----------
    a, b : array_like
        Per-agent amplitudes and biases.
    sample_rate : float
        Epochs per second.
    seed : int
        Seed for ``numpy.random.default_rng``.
    n_epochs : int
        Number of epochs drawn; the last value is held afterwards.
    """

    def __init__(self, a=DEFAULT_AMPLITUDES, b=DEFAULT_BIASES, sample_rate: float = DEFAULT_SAMPLE_RATE,
                 seed: int = 42, n_epochs: int = 64, omega_var: float = 0.25,
                 phi_std: float = math.pi / 2, _times=None):
        self.a = np.array(a, dtype=float)
        self.b = np.array(b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("a and b must be vectors of the same length")
        if not sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        self.n = self.a.size
        self.sample_rate = float(sample_rate)
        self.seed = int(seed)
        self.n_epochs = int(n_epochs)
        period = 1.0 / self.sample_rate
        rng = np.random.default_rng(self.seed)
        # one draw per epoch so a longer run only appends epochs
        draws = [(rng.normal(0.0, math.sqrt(omega_var), self.n), rng.normal(0.0, phi_std, self.n))
                 for _ in range(self.n_epochs)]
        self.omega = np.array([d[0] for d in draws]).reshape(self.n_epochs, self.n)
        self.phi = np.array([d[1] for d in draws]).reshape(self.n_epochs, self.n)
        nominal = np.arange(self.n_epochs) * period
        self.samples = self.a * (2.0 + np.sin(self.omega * nominal[:, None] + self.phi)) + self.b
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("reference samples are not finite")
        self.epoch_starts = nominal if _times is None else np.asarray(_times, dtype=float)
        self.gamma = math.inf
        self._params = dict(a=self.a, b=self.b, sample_rate=self.sample_rate, seed=self.seed,
                            n_epochs=self.n_epochs, omega_var=omega_var, phi_std=phi_std)

    def _epoch(self, t) -> int:
        return int(np.searchsorted(self.epoch_starts, t, side="right")) - 1

    def _value(self, t):
        return self.samples[max(self._epoch(t), 0)].copy()

    def left_value(self, t):
        if t <= 0:
            return np.zeros(self.n)
        m = int(np.searchsorted(self.epoch_starts, t, side="left")) - 1
        return self.samples[max(m, 0)].copy()

    def _derivative(self, t):
        return np.zeros(self.n)

    def breakpoints(self, horizon):
        s = self.epoch_starts[1:]
        return s[s <= horizon]

    def aligned(self, h):
        snapped = np.round(self.epoch_starts / h) * h
        if np.array_equal(snapped, self.epoch_starts):
            return self
        if np.any(np.diff(snapped) <= 0):
            raise ValueError(f"step {h} is too coarse for the sampling period")
        return ZOHSinusoidReference(_times=snapped, **self._params)


def fiedler_ramp(spec, speed: float = 1.0, r0=None, drift: float = 0.0) -> RampReference:
    """Ramp whose disagreement moves along the slowest Laplacian mode.

    This is the worst case for the tracking error: the steady error is
    exactly ``gamma / (alpha lambda_2)`` for every split factor and delay.
    """
    u2 = np.asarray(spec.transform[:, 1])
    v = speed * u2 + drift
    if r0 is None:
        r0 = np.zeros(spec.n)
    return RampReference(r0, v)
