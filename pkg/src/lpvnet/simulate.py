"""Closed-loop delay simulation: switching-signal generation, fixed-step
RK4 with interpolated state history for the delayed output, and consensus
measurement.

The observer loop integrated here is

    x'    = A x + B K xhat
    xhat' = (A + B K + L C) xhat - L r,     r = C x(t - tau(t))

either per modal subsystem / LPV parameter (n-order) or for the full
network (N n-order) with distributed gains. Integration substeps never
straddle a switching jump; the delayed state is looked up by 4-point
Lagrange interpolation of the stored history.
"""

from __future__ import annotations

import bisect
import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .certificates import DwellSpec
from .decomposition import (
    DecomposablePlant,
    GainSchedule,
    LpvPlant,
    ModalFamily,
    assemble_full,
    lift_gains,
)


class StepTooLargeError(ValueError):
    """Integration step too coarse for the dwell or delay scale."""


class HistoryMissingError(ValueError):
    """Delayed lookup before the start of the provided initial history."""


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant switching signal under a range dwell-time."""

    jump_times: np.ndarray
    values: np.ndarray
    dwell: DwellSpec
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "jump_times", np.asarray(self.jump_times, float))
        object.__setattr__(self, "values", np.asarray(self.values, float))
        if len(self.jump_times) != len(self.values):
            raise ValueError("one value per jump required")
        if len(self.jump_times) == 0 or self.jump_times[0] != 0.0:
            raise ValueError("jump times must start at 0")
        gaps = np.diff(self.jump_times)
        if np.any(gaps < self.dwell.delta_min - 1e-12) or \
           np.any(gaps > self.dwell.delta_max + 1e-12):
            raise ValueError("consecutive jump gaps violate the dwell bounds")

    def value_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.jump_times, t + 1e-15, side="right")) - 1
        return float(self.values[max(idx, 0)])

    def jumps_in(self, t0: float, t1: float) -> np.ndarray:
        """Jump instants strictly inside (t0, t1)."""
        jt = self.jump_times
        return jt[(jt > t0 + 1e-15) & (jt < t1 - 1e-15)]


def gen_switching(seed: int, dwell: DwellSpec, horizon: float,
                  sigma_range: tuple[float, float] = (0.0, 1.0)) -> SwitchingSignal:
    """Random admissible switching: uniform gaps in [delta_min, delta_max],
    uniform values in sigma_range; reproducible from the seed."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    times = [0.0]
    while times[-1] <= horizon:
        times.append(times[-1] + float(rng.uniform(dwell.delta_min,
                                                   dwell.delta_max)))
    values = rng.uniform(sigma_range[0], sigma_range[1], size=len(times))
    return SwitchingSignal(jump_times=np.array(times), values=values,
                           dwell=dwell, seed=seed)


@dataclass(frozen=True)
class DelayProfile:
    """Time-varying output delay with 0 <= tau(t) <= tau_max."""

    kind: str
    tau_max: float
    params: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, value: float) -> "DelayProfile":
        if value < 0:
            raise ValueError("delay must be nonnegative")
        return cls(kind="constant", tau_max=value, params={"value": value})

    @classmethod
    def sinusoid(cls, amplitude: float, frequency: float,
                 offset: float) -> "DelayProfile":
        if offset - abs(amplitude) < 0:
            raise ValueError("sinusoid dips below zero delay")
        return cls(kind="sinusoid", tau_max=offset + abs(amplitude),
                   params={"amplitude": amplitude, "frequency": frequency,
                           "offset": offset})

    @classmethod
    def sampled(cls, times, values) -> "DelayProfile":
        times = np.asarray(times, float)
        values = np.asarray(values, float)
        if np.any(values < 0):
            raise ValueError("delay samples must be nonnegative")
        return cls(kind="sampled", tau_max=float(values.max()),
                   params={"times": times, "values": values})

    def tau_at(self, t: float) -> float:
        if self.kind == "constant":
            return self.params["value"]
        if self.kind == "sinusoid":
            p = self.params
            return p["offset"] + p["amplitude"] * math.sin(p["frequency"] * t)
        if self.kind == "sampled":
            return float(np.interp(t, self.params["times"],
                                   self.params["values"]))
        raise ValueError(f"unknown delay kind {self.kind!r}")


CSV_FIXED_COLUMNS = ("t", "sigma", "tau")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Uniformly sampled plant / observer trajectories of one run."""

    t: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    seed: int | None = None
    scenario: str = "run"

    @property
    def error(self) -> np.ndarray:
        return self.xhat - self.x

    def csv_name(self) -> str:
        return f"{self.scenario}_{self.seed}.csv"

    def to_csv(self, path) -> None:
        """Atomic CSV write: t, sigma, tau, x[0..], xhat[0..]."""
        nx = self.x.shape[1]
        nh = self.xhat.shape[1]
        header = list(CSV_FIXED_COLUMNS) + [f"x[{i}]" for i in range(nx)] \
            + [f"xhat[{i}]" for i in range(nh)]
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for i in range(len(self.t)):
                    row = [repr(float(self.t[i])), repr(float(self.sigma[i])),
                           repr(float(self.tau[i]))]
                    row += [repr(float(v)) for v in self.x[i]]
                    row += [repr(float(v)) for v in self.xhat[i]]
                    writer.writerow(row)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    @classmethod
    def from_csv(cls, path, seed: int | None = None,
                 scenario: str = "run") -> "TrajectoryRecord":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader]
        if tuple(header[:3]) != CSV_FIXED_COLUMNS:
            raise ValueError(f"unexpected CSV header {header[:3]}")
        data = np.array(rows)
        nx = sum(1 for h in header if h.startswith("x["))
        nh = sum(1 for h in header if h.startswith("xhat["))
        return cls(t=data[:, 0], sigma=data[:, 1], tau=data[:, 2],
                   x=data[:, 3:3 + nx], xhat=data[:, 3 + nx:3 + nx + nh],
                   seed=seed, scenario=scenario)


class _History:
    """Stored solution samples plus the pre-zero initial function."""

    def __init__(self, init_fn: Callable[[float], np.ndarray], tau_max: float):
        self.ts: list[float] = []
        self.xs: list[np.ndarray] = []
        self.init_fn = init_fn
        self.t_min = -tau_max

    def append(self, t: float, x: np.ndarray) -> None:
        self.ts.append(t)
        self.xs.append(x.copy())

    def lookup(self, t: float) -> np.ndarray:
        if t <= 0.0:
            if t < self.t_min - 1e-9:
                raise HistoryMissingError(
                    f"delayed time {t:.6f} precedes the initial history")
            return np.asarray(self.init_fn(t), float)
        ts = self.ts
        n = len(ts)
        j = bisect.bisect_left(ts, t)
        lo = max(min(j - 2, n - 4), 0)
        pts = ts[lo:lo + 4]
        vals = self.xs[lo:lo + 4]
        if len(pts) == 1:
            return vals[0]
        # Lagrange interpolation through up to 4 nearest samples
        out = np.zeros_like(vals[0])
        for i, (ti, vi) in enumerate(zip(pts, vals)):
            w = 1.0
            for m, tm in enumerate(pts):
                if m != i:
                    w *= (t - tm) / (ti - tm)
            out += w * vi
        return out


def _rk4_delay_step(t0: float, h: float, x: np.ndarray, xh: np.ndarray,
                    mats, delay: DelayProfile, hist: _History):
    """One RK4 step of the coupled plant/observer delay loop."""
    a, bk, acl, l, c = mats

    def rhs(s, xs, xhs):
        tau = delay.tau_at(s)
        if tau <= 0.0:
            xd = xs
        else:
            xd = hist.lookup(s - tau)
        r = c @ xd
        return a @ xs + bk @ xhs, acl @ xhs - l @ r

    k1x, k1h = rhs(t0, x, xh)
    k2x, k2h = rhs(t0 + 0.5 * h, x + 0.5 * h * k1x, xh + 0.5 * h * k1h)
    k3x, k3h = rhs(t0 + 0.5 * h, x + 0.5 * h * k2x, xh + 0.5 * h * k2h)
    k4x, k4h = rhs(t0 + h, x + h * k3x, xh + h * k3h)
    return (x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x),
            xh + (h / 6.0) * (k1h + 2 * k2h + 2 * k3h + k4h))


def _integrate(mats_of_sigma, sw: SwitchingSignal, delay: DelayProfile,
               x0: np.ndarray, xhat0: np.ndarray, step: float, horizon: float,
               init_history: Callable[[float], np.ndarray] | None,
               seed: int | None, scenario: str) -> TrajectoryRecord:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if step <= 0:
        raise ValueError("step must be positive")
    if step > sw.dwell.delta_min / 10.0 + 1e-12:
        raise StepTooLargeError("step must be at most delta_min / 10")
    if delay.tau_max > 0 and step > delay.tau_max / 10.0 + 1e-12:
        raise StepTooLargeError("step must be at most tau_max / 10")

    x0 = np.asarray(x0, float)
    xhat0 = np.asarray(xhat0, float)
    if init_history is None:
        def init_history(t, _x0=x0):
            return _x0

    n_steps = int(round(horizon / step))
    grid = np.arange(n_steps + 1) * step
    hist = _History(init_history, delay.tau_max)
    hist.append(0.0, x0)

    xs = np.empty((n_steps + 1, len(x0)))
    xhs = np.empty((n_steps + 1, len(xhat0)))
    xs[0] = x0
    xhs[0] = xhat0

    x, xh = x0.copy(), xhat0.copy()
    cur_sigma = sw.value_at(0.0)
    mats = mats_of_sigma(cur_sigma)
    for i in range(n_steps):
        t0, t1 = grid[i], grid[i + 1]
        # split at switching jumps so substeps never straddle one
        pieces = np.concatenate([[t0], sw.jumps_in(t0, t1), [t1]])
        for a_t, b_t in zip(pieces[:-1], pieces[1:]):
            sig = sw.value_at(a_t)
            if sig != cur_sigma:
                cur_sigma = sig
                mats = mats_of_sigma(cur_sigma)
            x, xh = _rk4_delay_step(a_t, b_t - a_t, x, xh, mats, delay, hist)
            hist.append(b_t, x)
        xs[i + 1] = x
        xhs[i + 1] = xh

    sigma_samples = np.array([sw.value_at(t) for t in grid])
    tau_samples = np.array([delay.tau_at(t) for t in grid])
    return TrajectoryRecord(t=grid, sigma=sigma_samples, tau=tau_samples,
                            x=xs, xhat=xhs, seed=seed, scenario=scenario)


def simulate_lpv_closed_loop(plant: LpvPlant, gains: GainSchedule,
                             sw: SwitchingSignal, delay: DelayProfile,
                             x0, xhat0, step: float, horizon: float,
                             rho_map: Callable[[float], float] | None = None,
                             init_history=None, seed: int | None = None,
                             scenario: str = "lpv") -> TrajectoryRecord:
    """Integrate the n-order parameter-dependent loop.

    ``rho_map`` maps the switching value sigma to the parameter rho (for a
    modal subsystem this is nu_i); by default the switching values are the
    parameter trajectory itself.
    """
    if rho_map is None:
        def rho_map(s):
            return s

    def mats(sigma):
        rho = rho_map(sigma)
        a = plant.a_at(rho)
        bk = plant.b_at(rho) @ gains.k_at(rho)
        l = gains.l_at(rho)
        c = plant.c_at(rho)
        return a, bk, a + bk + l @ c, l, c

    return _integrate(mats, sw, delay, x0, xhat0, step, horizon,
                      init_history, seed, scenario)


def simulate_network(plant: DecomposablePlant, gains: GainSchedule,
                     sw: SwitchingSignal, delay: DelayProfile,
                     x0, xhat0, step: float, horizon: float,
                     init_history=None, seed: int | None = None,
                     scenario: str = "network") -> TrajectoryRecord:
    """Integrate the full N n-order network with distributed gains."""

    def mats(sigma):
        a = assemble_full(plant.a_spec, plant.pattern, sigma)
        b = assemble_full(plant.b_spec, plant.pattern, sigma)
        c = assemble_full(plant.c_spec, plant.pattern, sigma)
        k_full, l_full = lift_gains(gains, plant.pattern, sigma)
        bk = b @ k_full
        return a, bk, a + bk + l_full @ c, l_full, c

    return _integrate(mats, sw, delay, x0, xhat0, step, horizon,
                      init_history, seed, scenario)


def simulate_modal_stack(mf: ModalFamily, gains: GainSchedule,
                         sw: SwitchingSignal, delay: DelayProfile,
                         x0_modal: np.ndarray, xhat0_modal: np.ndarray,
                         step: float, horizon: float,
                         init_history=None,
                         seed: int | None = None) -> list[TrajectoryRecord]:
    """Simulate every modal subsystem independently (matched scenario)."""
    n = mf.a_spec.shape[0]
    lpv = LpvPlant(a0=mf.a_spec.decentralized, a1=mf.a_spec.interconnected,
                   b0=mf.b_spec.decentralized, b1=mf.b_spec.interconnected,
                   c0=mf.c_spec.decentralized, c1=mf.c_spec.interconnected,
                   rho_interval=(float(min(mf.lambda1.min(), mf.lambda2.min())),
                                 float(max(mf.lambda1.max(), mf.lambda2.max()))))
    records = []
    for i in range(mf.n_modes):
        sub_hist = None
        if init_history is not None:
            def sub_hist(t, _i=i):
                return init_history(t)[_i * n:(_i + 1) * n]
        rec = simulate_lpv_closed_loop(
            lpv, gains, sw, delay,
            x0_modal[i * n:(i + 1) * n], xhat0_modal[i * n:(i + 1) * n],
            step, horizon, rho_map=lambda s, _i=i: mf.nu(_i, s),
            init_history=sub_hist, seed=seed, scenario=f"mode{i}")
        records.append(rec)
    return records


def consensus_gap(rec: TrajectoryRecord, agent_dim: int) -> np.ndarray:
    """Max over agent pairs of the Euclidean distance between agent
    substates, per sample."""
    nt, total = rec.x.shape
    if total % agent_dim != 0:
        raise ValueError("state length not divisible by agent dimension")
    n_agents = total // agent_dim
    agents = rec.x.reshape(nt, n_agents, agent_dim)
    gap = np.zeros(nt)
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            gap = np.maximum(gap,
                             np.linalg.norm(agents[:, i] - agents[:, j], axis=1))
    return gap
