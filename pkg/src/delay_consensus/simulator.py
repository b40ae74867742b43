"""Fixed-step simulation of the delayed split-feedback consensus protocol.

    dx/dt = -alpha (1-k) L x(t) - alpha k L x(t - tau) + dr/dt,
    x(0) = r(0),  x(eta) = 0 for eta in [-tau, 0).

The step is ``h = tau / M`` so every delayed lookup at a step boundary falls
on a stored grid point.  Mid-step delayed values come from the cubic Hermite
interpolant of the stored step (values and slopes at both ends), which keeps
the scheme fourth order.  The solution has jumps (in ``x`` at ``t = 0`` and at
reference jumps, in ``dx/dt`` one delay later), all of them on grid points, so
left and right limits are stored separately.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, laplacian
from .network import ConsensusParams
from .scalar import UnstableDelayWarning
from .signals import ReferenceSignal, StaticReference

__all__ = [
    "Trajectory",
    "InsufficientDataError",
    "simulate",
    "simulate_derivative_free",
    "zero_input_simulate",
    "control_effort",
    "tracking_error",
    "disagreement",
    "fit_decay_rate",
    "estimate_decay_rate",
    "write_trajectory_csv",
]

SETTLING_FLOOR = 1e-12


class InsufficientDataError(ValueError):
    """Too little decay data to fit a rate."""


@dataclass
class Trajectory:
    """Grid solution; ``states``/``controls`` hold right limits, ``*_left`` left limits."""

    dt: float
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    params: ConsensusParams
    states_left: np.ndarray | None = None
    controls_left: np.ndarray | None = None
    delay_steps: int = 0
    reference: ReferenceSignal | None = None
    divergent: bool = False
    derivative_free: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def history(self) -> tuple[np.ndarray, np.ndarray]:
        """Initial function on ``[-tau, 0]``: zeros before 0, ``x(0)`` at 0."""
        m = self.delay_steps
        t = -self.dt * np.arange(m, -1, -1)
        x = np.zeros((m + 1, self.states.shape[1]))
        x[-1] = self.states[0]
        return t, x

    @property
    def n(self) -> int:
        return self.states.shape[1]


def _grid(tau: float, dt_max: float) -> tuple[float, int]:
    if not (dt_max > 0 and math.isfinite(dt_max)):
        raise ValueError(f"dt_max must be positive and finite, got {dt_max}")
    if tau == 0:
        return float(dt_max), 0
    m = int(math.ceil(tau / dt_max - 1e-12))
    return tau / m, m


def _admissible(lap, p: ConsensusParams) -> float:
    if p.k <= 0.5:
        return math.inf
    lam_max = float(np.linalg.norm(lap, 2)) if lap.size else 0.0
    lam_max = max(lam_max, 0.0)
    if lam_max == 0.0:
        return math.inf
    return math.acos(1.0 - 1.0 / p.k) / (p.alpha * lam_max * math.sqrt(2.0 * p.k - 1.0))


def _integrate(g: Graph, p: ConsensusParams, ref: ReferenceSignal, horizon: float, dt_max: float,
               derivative_free: bool) -> Trajectory:
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    if ref.n != g.n:
        raise ValueError(f"reference has {ref.n} agents, graph has {g.n}")
    lap = laplacian(g)
    h, m = _grid(p.tau, dt_max)
    ref = ref.aligned(h)
    tau_bar = _admissible(lap, p)
    unstable = p.tau >= tau_bar
    if unstable:
        warnings.warn(f"tau={p.tau} is not below the admissible delay {tau_bar}",
                      UnstableDelayWarning, stacklevel=3)

    steps = int(math.ceil(horizon / h - 1e-9))
    times = h * np.arange(steps + 1)
    n = g.n
    A = -p.alpha * (1.0 - p.k) * lap
    B = -p.alpha * p.k * lap

    # v is the integrated variable: x itself, or y = x - r in derivative-free form
    if derivative_free:
        def s(t, left=False):
            return ref.left_value(t) if left else ref.value(t)

        def f(t, left=False):
            return 0.0
    else:
        def s(t, left=False):
            return 0.0

        def f(t, left=False):
            return ref.derivative(t)

    jumps = {}
    if not derivative_free:
        for tb in ref.breakpoints(times[-1]):
            i = int(round(tb / h))
            jumps[i] = ref.value(tb) - ref.left_value(tb)

    v_r = np.empty((steps + 1, n))
    v_l = np.empty((steps + 1, n))
    dv_r = np.empty((steps + 1, n))
    dv_l = np.empty((steps + 1, n))
    x_r = np.empty((steps + 1, n))
    x_l = np.empty((steps + 1, n))

    r0 = ref.value(0.0)
    if not np.all(np.isfinite(r0)):
        raise ValueError("reference is not finite at t=0")
    x_r[0] = r0
    x_l[0] = 0.0
    v_r[0] = r0 - s(0.0)
    v_l[0] = v_r[0]
    dv_l[0] = 0.0
    zero = np.zeros(n)

    def rhs(t, v, xd, left=False):
        return A @ (v + s(t, left)) + B @ xd + f(t, left)

    def delayed_right(j):
        return x_r[j] if j >= 0 else zero

    def delayed_left(j):
        return x_l[j] if j >= 1 else zero

    def delayed_mid(j, t_mid):
        if j < 0:
            return zero
        vm = 0.5 * (v_r[j] + v_l[j + 1]) + 0.125 * h * (dv_r[j] - dv_l[j + 1])
        return vm + s(t_mid)

    for i in range(steps):
        t = times[i]
        v = v_r[i]
        if m == 0:
            k1 = A @ (v + s(t)) + B @ (v + s(t)) + f(t)
            dv_r[i] = k1
            vh = v + 0.5 * h * k1
            k2 = (A + B) @ (vh + s(t + 0.5 * h)) + f(t + 0.5 * h)
            vh = v + 0.5 * h * k2
            k3 = (A + B) @ (vh + s(t + 0.5 * h)) + f(t + 0.5 * h)
            ve = v + h * k3
            k4 = (A + B) @ (ve + s(times[i + 1], True)) + f(times[i + 1], True)
            v_new = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            dv_l[i + 1] = (A + B) @ (v_new + s(times[i + 1], True)) + f(times[i + 1], True)
        else:
            j = i - m
            d0 = delayed_right(j)
            dm = delayed_mid(j, t + 0.5 * h - p.tau)
            d1 = delayed_left(j + 1)
            k1 = rhs(t, v, d0)
            dv_r[i] = k1
            k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1, dm)
            k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2, dm)
            k4 = rhs(times[i + 1], v + h * k3, d1, True)
            v_new = v + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            dv_l[i + 1] = rhs(times[i + 1], v_new, d1, True)
        v_l[i + 1] = v_new
        x_l[i + 1] = v_new + s(times[i + 1], True)
        v_r[i + 1] = v_new + jumps.get(i + 1, 0.0)
        x_r[i + 1] = v_r[i + 1] + s(times[i + 1])
        if not np.all(np.isfinite(x_r[i + 1])):
            raise FloatingPointError(f"state overflowed at t={times[i + 1]}")
    dv_r[steps] = rhs(times[steps], v_r[steps], delayed_right(steps - m)) if m else (A + B) @ x_r[steps] + f(times[steps])

    # controls without the feed-forward term
    xd_r = np.zeros_like(x_r)
    xd_l = np.zeros_like(x_l)
    if m == 0:
        xd_r[:], xd_l[:] = x_r, x_l
    elif steps >= m:
        xd_r[m:] = x_r[: steps + 1 - m]
        xd_l[m + 1:] = x_l[1: steps + 1 - m]
    u_r = x_r @ A.T + xd_r @ B.T
    u_l = x_l @ A.T + xd_l @ B.T
    u_l[0] = u_r[0]

    divergent = bool(unstable)
    dis = np.linalg.norm(x_r - x_r.mean(axis=1, keepdims=True), axis=1)
    tail = dis[-max(1, (steps + 1) // 10):]
    if dis[0] > 0 and tail.max() > 10.0 * dis[0] and isinstance(ref, StaticReference):
        divergent = True

    return Trajectory(
        dt=h, times=times, states=x_r, controls=u_r, params=p,
        states_left=x_l, controls_left=u_l, delay_steps=m, reference=ref,
        divergent=divergent, derivative_free=derivative_free,
        meta={"tau_bar": tau_bar, "dx_right": dv_r if not derivative_free else None},
    )


def simulate(g: Graph, p: ConsensusParams, ref: ReferenceSignal, horizon: float, dt_max: float = 1e-3) -> Trajectory:
    """Integrate the protocol with the reference derivative as feed-forward.

    Reference jumps enter as impulses in ``dr/dt``, i.e. as jumps of ``x``.
    A delay at or beyond the admissible bound warns but still runs.
    """
    return _integrate(g, p, ref, horizon, dt_max, derivative_free=False)


def simulate_derivative_free(g: Graph, p: ConsensusParams, ref: ReferenceSignal, horizon: float,
                             dt_max: float = 1e-3) -> Trajectory:
    """Same protocol written as ``dy/dt = -alpha(1-k) L x - alpha k L x(t - tau)``, ``x = y + r``.

    Agents never need ``dr/dt`` here; ``y(0) = 0``.
    """
    return _integrate(g, p, ref, horizon, dt_max, derivative_free=True)


def zero_input_simulate(g: Graph, p: ConsensusParams, x0, horizon: float, dt_max: float = 1e-3) -> Trajectory:
    """Unforced run from ``x(0) = x0`` with zero history; ``divergent`` flags ``tau >= tau_bar``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnstableDelayWarning)
        return _integrate(g, p, StaticReference(x0), horizon, dt_max, derivative_free=False)


def control_effort(traj: Trajectory) -> float:
    """``sup_t max_i |u_i(t)|`` over both one-sided limits at every grid point."""
    eff = float(np.max(np.abs(traj.controls))) if traj.controls.size else 0.0
    if traj.controls_left is not None:
        eff = max(eff, float(np.max(np.abs(traj.controls_left))))
    return eff


def _reference_average(traj: Trajectory, ref: ReferenceSignal | None) -> np.ndarray:
    ref = ref if ref is not None else traj.reference
    if ref is None:
        raise ValueError("trajectory carries no reference; pass one explicitly")
    ref = ref.aligned(traj.dt)
    return np.array([ref.average(t) for t in traj.times])


def tracking_error(traj: Trajectory, ref: ReferenceSignal | None = None) -> np.ndarray:
    """Per-step ``max_i |x_i(t) - r_avg(t)|``."""
    ravg = _reference_average(traj, ref)
    return np.max(np.abs(traj.states - ravg[:, None]), axis=1)


def disagreement(traj: Trajectory) -> np.ndarray:
    """Euclidean norm of the state's component orthogonal to ``1``."""
    x = traj.states
    return np.linalg.norm(x - x.mean(axis=1, keepdims=True), axis=1)


def fit_decay_rate(times, norms, floor: float = SETTLING_FLOOR, min_peaks: int = 4) -> float:
    """Exponential rate of a decaying, possibly oscillating, positive signal.

    Samples after the signal first drops below ``floor`` times its initial
    value are discarded.  In the last 60% of what remains, the log of the
    local maxima is fitted by least squares; a non-oscillating signal has no
    interior maxima and then every sample of that window is fitted.

    Raises
    ------
    InsufficientDataError
        If the window holds fewer than ``min_peaks`` samples, or the signal
        oscillates with fewer than ``min_peaks`` usable peaks.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(norms, dtype=float)
    if t.shape != e.shape or t.ndim != 1:
        raise ValueError("times and norms must be 1-D arrays of equal length")
    if e.size == 0 or not e[0] > 0:
        raise InsufficientDataError("no initial disagreement to decay")
    below = np.nonzero(e < floor * e[0])[0]
    end = below[0] if below.size else e.size
    start = int(math.floor(0.4 * end))
    tw, ew = t[start:end], e[start:end]
    if tw.size < min_peaks:
        raise InsufficientDataError(f"only {tw.size} samples before the settling floor")
    interior = (ew[1:-1] >= ew[:-2]) & (ew[1:-1] > ew[2:])
    peaks = np.nonzero(interior)[0] + 1
    if peaks.size == 0:
        sel = np.arange(tw.size)
    elif peaks.size < min_peaks:
        raise InsufficientDataError(f"only {peaks.size} usable peaks in the fit window")
    else:
        sel = peaks
    slope = np.polyfit(tw[sel], np.log(ew[sel]), 1)[0]
    return float(-slope)


def estimate_decay_rate(traj: Trajectory) -> float:
    """Empirical convergence rate of a zero-input trajectory."""
    return fit_decay_rate(traj.times, disagreement(traj))


def write_trajectory_csv(traj: Trajectory, path, ref: ReferenceSignal | None = None) -> None:
    """Write ``t, x_1..x_N, u_1..u_N, r_avg, err`` rows at 15 significant digits."""
    n = traj.n
    ravg = _reference_average(traj, ref)
    err = np.max(np.abs(traj.states - ravg[:, None]), axis=1)
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(n)] + ["r_avg", "err"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, t in enumerate(traj.times):
            row = [t, *traj.states[i], *traj.controls[i], ravg[i], err[i]]
            w.writerow([f"{float(v):.15g}" for v in row])
