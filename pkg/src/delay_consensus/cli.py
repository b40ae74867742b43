"""Command-line driver: admissible delays, rate sweeps, simulations, effort, split report.

Every subcommand prints a CSV table on stdout; with ``--out DIR`` the table
(and any trajectories) are also written under ``DIR``.  Values are printed
with 15 significant digits, ``inf`` for unbounded and ``n/a`` for landmarks
that do not apply.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph, GraphValidationError, laplacian, load_edge_list, example_graph, spectrum
from .network import (
    ConsensusParams,
    admissible_delay_network,
    optimal_network_delay,
    rate_curve,
    rate_increase_window,
    split_factor_report,
)
from .signals import ZOHSinusoidReference, DEFAULT_SAMPLE_RATE
from .simulator import control_effort, simulate, tracking_error, write_trajectory_csv, zero_input_simulate

EXIT_OK = 0
EXIT_INVALID = 2

DEFAULT_KS = (-0.5, 0.0, 0.5, 1.0, 1.5)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str | None = None
    alpha: float = 1.0
    k: tuple = DEFAULT_KS
    tau: object = "auto"
    horizon: float = 10.0 / DEFAULT_SAMPLE_RATE
    dt_max: float = 1e-3
    seed: int = 42
    out: str | None = None
    n_points: int = 200
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if not self.k:
            raise ConfigError("k list must not be empty")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if any(not math.isfinite(k) for k in self.k):
            raise ConfigError("k values must be finite")
        if self.tau != "auto":
            if not self.tau or any(not (t >= 0 and math.isfinite(t)) for t in self.tau):
                raise ConfigError("tau grid must be non-empty, finite and nonnegative")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if not self.dt_max > 0:
            raise ConfigError("dt_max must be positive")
        if self.n_points < 2:
            raise ConfigError("n_points must be at least 2")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        return self


def fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return f"{float(v):.15g}"


def _floats(text) -> tuple:
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _tau(text):
    if isinstance(text, str) and text.strip().lower() == "auto":
        return "auto"
    return _floats(text)


_KEYS = {"graph", "alpha", "k", "tau", "horizon", "dt_max", "seed", "out", "n_points", "workers"}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = ExperimentConfig()
    try:
        if "k" in values:
            values["k"] = _floats(values["k"])
        if "tau" in values:
            values["tau"] = _tau(values["tau"])
        for key in ("alpha", "horizon", "dt_max"):
            if key in values:
                values[key] = float(values[key])
        for key in ("seed", "n_points", "workers"):
            if key in values:
                values[key] = int(values[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return replace(cfg, **values).validate()


def _graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph is None:
        return example_graph()
    try:
        return load_edge_list(cfg.graph)
    except OSError as exc:
        raise ConfigError(f"cannot read graph file {cfg.graph}: {exc}") from exc


def _spectrum(g: Graph):
    spec = spectrum(laplacian(g))
    if not spec.is_connected():
        raise ConfigError("graph is not connected")
    return spec


def _emit(rows, header, cfg: ExperimentConfig, name: str, stdout) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    stdout.write(text)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, name), "w", newline="") as fh:
            fh.write(text)
    return text


def _map(fn, items, workers: int):
    # results come back in submission order, so output order is deterministic
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# subcommands

def cmd_admissible(cfg: ExperimentConfig, stdout=sys.stdout):
    spec = _spectrum(_graph(cfg))
    rows = []
    for k in cfg.k:
        tb = None if k == 0 else admissible_delay_network(spec, ConsensusParams(cfg.alpha, k, 0.0))
        rows.append((k, tb))
    _emit(rows, ["k", "tau_bar"], cfg, "admissible.csv", stdout)
    return rows


def _sweep_job(job):
    spec, alpha, k, taus = job
    curve = rate_curve(spec, alpha, k, taus)
    if k > 0:
        opt = optimal_network_delay(spec, alpha, k)
        marks = {"tau_hat": rate_increase_window(spec, alpha, k), "tau_star": opt.tau_star}
        rho_star = opt.rho_star
    else:
        marks, rho_star = {}, None
    return curve, marks, rho_star


def _auto_taus(spec, cfg: ExperimentConfig) -> np.ndarray:
    bars = [admissible_delay_network(spec, ConsensusParams(cfg.alpha, k, 0.0)) for k in cfg.k if k != 0]
    finite = [b for b in bars if math.isfinite(b)]
    if finite:
        upper = 1.1 * max(finite)
    else:
        hats = [rate_increase_window(spec, cfg.alpha, k) for k in cfg.k if k > 0]
        upper = 1.1 * max(hats) if hats else 1.0 / (cfg.alpha * spec.lambda2)
    return np.linspace(0.0, upper, cfg.n_points + 1)


def cmd_rate_sweep(cfg: ExperimentConfig, stdout=sys.stdout):
    spec = _spectrum(_graph(cfg))
    base = _auto_taus(spec, cfg) if cfg.tau == "auto" else np.asarray(sorted(cfg.tau), dtype=float)
    results = _map(_sweep_job, [(spec, cfg.alpha, k, base) for k in cfg.k], cfg.workers)
    extra = []
    for k, (_, marks, _) in zip(cfg.k, results):
        for name, t in marks.items():
            extra.append((float(t), f"{name}[k={fmt(k)}]"))
    taus = np.concatenate([base, [t for t, _ in extra]])
    labels = [""] * base.size + [lab for _, lab in extra]
    order = np.argsort(taus, kind="stable")
    curves = [rate_curve(spec, cfg.alpha, k, taus) for k in cfg.k]
    rows = []
    for i in order:
        rows.append((taus[i], labels[i], *[c[i] for c in curves]))
    header = ["tau", "mark"] + [f"rho[k={fmt(k)}]" for k in cfg.k]
    _emit(rows, header, cfg, "rate_sweep.csv", stdout)
    summary = [(k, marks.get("tau_hat"), marks.get("tau_star"), rho_star)
               for k, (_, marks, rho_star) in zip(cfg.k, results)]
    return rows, summary


def _reference(cfg: ExperimentConfig, n: int) -> ZOHSinusoidReference:
    epochs = int(math.ceil(cfg.horizon * DEFAULT_SAMPLE_RATE)) + 2
    if n == 5:
        return ZOHSinusoidReference(seed=cfg.seed, n_epochs=epochs)
    rng = np.random.default_rng(cfg.seed)
    a = rng.uniform(0.9, 1.1, n)
    b = rng.uniform(-1.0, 1.0, n)
    return ZOHSinusoidReference(a, b, seed=cfg.seed, n_epochs=epochs)


def _sim_taus(cfg: ExperimentConfig) -> tuple:
    return (0.1,) if cfg.tau == "auto" else tuple(cfg.tau)


def _simulate_job(job):
    g, p, ref, horizon, dt_max = job
    tr = simulate(g, p, ref, horizon, dt_max)
    return tr


def epoch_end_errors(traj, ref) -> list[tuple[int, float, float]]:
    """Tracking error just before each new sample arrives, per epoch."""
    period = 1.0 / ref.sample_rate
    out = []
    m = 0
    while True:
        t_end = (m + 1) * period
        if t_end > traj.times[-1] + 1e-12:
            break
        i = int(round(t_end / traj.dt))
        ravg = float(ref.left_value(traj.times[i]).mean())
        out.append((m, float(traj.times[i]), float(np.max(np.abs(traj.states_left[i] - ravg)))))
        m += 1
    return out


def cmd_simulate(cfg: ExperimentConfig, stdout=sys.stdout):
    g = _graph(cfg)
    _spectrum(g)
    ref = _reference(cfg, g.n)
    pairs = [(k, tau) for k in cfg.k for tau in _sim_taus(cfg)]
    trajs = _map(_simulate_job, [(g, ConsensusParams(cfg.alpha, k, tau), ref, cfg.horizon, cfg.dt_max)
                                 for k, tau in pairs], cfg.workers)
    rows = []
    for (k, tau), tr in zip(pairs, trajs):
        for m, t_end, err in epoch_end_errors(tr, ref):
            rows.append((k, tau, m, t_end, err))
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            write_trajectory_csv(tr, os.path.join(cfg.out, f"trajectory_k{fmt(k)}_tau{fmt(tau)}.csv"))
    _emit(rows, ["k", "tau", "epoch", "t_end", "tracking_error"], cfg, "simulate_summary.csv", stdout)
    return rows


def _effort_job(job):
    g, p, x0, horizon, dt_max = job
    tr = zero_input_simulate(g, p, x0, horizon, dt_max)
    running = np.maximum.accumulate(np.maximum(np.abs(tr.controls), np.abs(tr.controls_left)).max(axis=1))
    return tr.times, running, control_effort(tr)


def cmd_control_effort(cfg: ExperimentConfig, stdout=sys.stdout):
    g = _graph(cfg)
    _spectrum(g)
    x0 = _reference(cfg, g.n).value(0.0)
    pairs = [(k, tau) for k in cfg.k for tau in _sim_taus(cfg)]
    res = _map(_effort_job, [(g, ConsensusParams(cfg.alpha, k, tau), x0, cfg.horizon, cfg.dt_max)
                             for k, tau in pairs], cfg.workers)
    rows = [(k, tau, eff) for (k, tau), (_, _, eff) in zip(pairs, res)]
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "control_effort_running.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"effort[k={fmt(k)},tau={fmt(tau)}]" for k, tau in pairs])
            # every run shares the same grid only when tau grids agree; fall back to per-run columns
            n = min(len(r[0]) for r in res)
            for i in range(n):
                w.writerow([fmt(res[0][0][i])] + [fmt(r[1][i]) for r in res])
    _emit(rows, ["k", "tau", "max_effort"], cfg, "control_effort.csv", stdout)
    return rows


def cmd_split_report(cfg: ExperimentConfig, stdout=sys.stdout):
    spec = _spectrum(_graph(cfg))
    report = split_factor_report(spec, cfg.alpha, cfg.k)
    rows = [(r.k, r.tau_bar, r.tau_hat, r.tau_star, r.rho_star, r.ultimate_bound, r.effort_safe) for r in report]
    header = ["k", "tau_bar", "tau_hat", "tau_star", "rho_star", "ultimate_bound", "effort_safe"]
    _emit(rows, header, cfg, "split_report.csv", stdout)
    return rows


COMMANDS = {
    "admissible": cmd_admissible,
    "rate-sweep": cmd_rate_sweep,
    "simulate": cmd_simulate,
    "control-effort": cmd_control_effort,
    "split-report": cmd_split_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delay-consensus", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of: " + ", ".join(sorted(_KEYS)))
    common.add_argument("--graph", help="edge list file ('i j [weight]' per line); default: 5-node example graph")
    common.add_argument("--alpha", type=float, help="consensus gain (default 1)")
    common.add_argument("--k", help="comma-separated split factors (default -0.5,0,0.5,1,1.5)")
    common.add_argument("--tau", help="comma-separated delays or 'auto' (default auto; 0.1 for simulations)")
    common.add_argument("--seed", type=int, help="reference RNG seed (default 42)")
    common.add_argument("--out", help="output directory for CSV files")
    common.add_argument("--horizon", type=float, help="simulated time in seconds (default 5)")
    common.add_argument("--dt-max", dest="dt_max", type=float, help="largest integration step (default 1e-3)")
    common.add_argument("--n-points", dest="n_points", type=int, help="points in an auto tau grid (default 200)")
    common.add_argument("--workers", type=int, help="worker processes for sweeps (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        COMMANDS[args.command](cfg, stdout=stdout)
    except (ConfigError, GraphValidationError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
