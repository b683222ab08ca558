"""Admissible delay bound: s-constants, the closed-form bound, the 2x2
small-gain matrix, and the trajectory fan-out checker.

With fading-memory constants (a, b) for the controller loop and (c, d) for
the observer loop, and the gain suprema s1 = sup|B K|, s2 = sup|L C|,
s3 = sup|A + B K|, the plant/error norm envelopes obey

    Z(t) <= Upsilon(tau_bar) V_T(t),    Upsilon = [[a, b s1],
                                                   [d s2 s3 tau, d s1 s2 tau + c]]

and Schur stability of Upsilon is exactly tau_bar < tau_bound(...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomposition import MatrixPolyFamily
from .linalg import induced_norm2, schur_2x2_nonneg


class WindowTooShortError(ValueError):
    """Trajectory shorter than two fan-out windows."""


def sup_norm(family: MatrixPolyFamily, rho_interval: tuple[float, float],
             grid_size: int = 33) -> float:
    """Max spectral norm of the family over a uniform parameter grid.

    The norm of an affine family is convex in rho, so for degree <= 1 the
    max sits at an interval endpoint; gridding covers general families.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.linspace(rho_interval[0], rho_interval[1], grid_size)
    norms = [induced_norm2(family.at(r)) for r in grid]
    top = max(norms)
    if family.degree <= 1:
        assert max(norms[0], norms[-1]) >= top - 1e-12 * max(top, 1.0)
    return float(top)


def _check_constants(a: float, b: float, c: float, d: float,
                     s1: float, s2: float, s3: float) -> None:
    if not (0.0 <= a < 1.0 and 0.0 <= c < 1.0):
        raise ValueError("contraction gains a, c must lie in [0, 1)")
    if b < 0 or d < 0 or s1 < 0 or s2 < 0 or s3 < 0:
        raise ValueError("gains b, d and s-constants must be nonnegative")


def tau_bound(a: float, b: float, c: float, d: float,
              s1: float, s2: float, s3: float) -> float:
    """Closed-form admissible delay bound.

    Returns +inf when d * s1 * s2 == 0: the delay perturbation then never
    feeds back into the loop, so no delay constraint arises.
    """
    _check_constants(a, b, c, d, s1, s2, s3)
    denom = d * s1 * s2 * ((1.0 - a) + b * s3)
    if denom == 0.0:
        return math.inf
    return (1.0 - a) * (1.0 - c) / denom


def small_gain_matrix(a: float, b: float, c: float, d: float,
                      s1: float, s2: float, s3: float,
                      tau_bar: float) -> np.ndarray:
    """The nonnegative 2x2 envelope-coupling matrix at a candidate delay."""
    _check_constants(a, b, c, d, s1, s2, s3)
    if tau_bar < 0:
        raise ValueError("tau_bar must be nonnegative")
    return np.array([[a, b * s1],
                     [d * s2 * s3 * tau_bar, d * s1 * s2 * tau_bar + c]])


@dataclass(frozen=True)
class DelayMargin:
    """s-constants, the admissible bound, and the small-gain verdict at the
    delay actually configured (tau_bar)."""

    s1: float
    s2: float
    s3: float
    tau_bar_u: float
    tau_bar: float
    upsilon: np.ndarray
    schur_ok: bool
    spectral_radius: float

    def to_dict(self) -> dict:
        return {"s1": self.s1, "s2": self.s2, "s3": self.s3,
                "tau_bar_u": self.tau_bar_u, "tau_bar": self.tau_bar,
                "upsilon": self.upsilon.tolist(), "schur_ok": self.schur_ok,
                "spectral_radius": self.spectral_radius}


def delay_margin(a: float, b: float, c: float, d: float,
                 bk_family: MatrixPolyFamily, lc_family: MatrixPolyFamily,
                 loop_family: MatrixPolyFamily,
                 rho_interval: tuple[float, float],
                 tau_bar: float, grid_size: int = 33) -> DelayMargin:
    """Assemble the full delay-margin report for one design."""
    s1 = sup_norm(bk_family, rho_interval, grid_size)
    s2 = sup_norm(lc_family, rho_interval, grid_size)
    s3 = sup_norm(loop_family, rho_interval, grid_size)
    bound = tau_bound(a, b, c, d, s1, s2, s3)
    ups = small_gain_matrix(a, b, c, d, s1, s2, s3, tau_bar)
    ok, radius = schur_2x2_nonneg(ups)
    return DelayMargin(s1=s1, s2=s2, s3=s3, tau_bar_u=bound, tau_bar=tau_bar,
                       upsilon=ups, schur_ok=ok, spectral_radius=radius)


@dataclass(frozen=True)
class FanOutWitness:
    """Sampled nonnegative envelope trajectories to test against Upsilon.

    z has one row per sample and one column per envelope component;
    samples are uniformly spaced. Scoring starts at ``score_from`` (the
    pre-window transient carries no guarantee).
    """

    times: np.ndarray
    z: np.ndarray
    window: float
    upsilon: np.ndarray
    score_from: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, float))
        object.__setattr__(self, "z", np.asarray(self.z, float))
        object.__setattr__(self, "upsilon", np.asarray(self.upsilon, float))
        if self.z.ndim != 2 or self.z.shape[0] != len(self.times):
            raise ValueError("z must be (n_samples, n_components)")
        if np.any(self.z < 0):
            raise ValueError("envelope samples must be nonnegative")
        if np.any(self.upsilon < 0):
            raise ValueError("Upsilon must be entrywise nonnegative")
        if self.window <= 0:
            raise ValueError("window must be positive")


@dataclass(frozen=True)
class FanOutReport:
    passed: bool
    first_violation: float | None
    worst_slack: float
    decay_ok: bool
    decay_factors: tuple[float, ...]
    decay_budget: float
    note: str = ("decay check is a finite-horizon proxy: trailing-window max "
                 "must shrink by at most spectral_radius(Upsilon) + 0.05 per "
                 "window")


def check_fanout(w: FanOutWitness, rtol: float = 1e-9) -> FanOutReport:
    """Verify Z(t) <= Upsilon * windowed-running-max(Z)(t) samplewise.

    Also reports whether the trailing-window max of the largest component
    decays geometrically at rate <= spectral_radius(Upsilon) + 0.05.
    """
    times = w.times
    if len(times) < 3:
        raise WindowTooShortError("need at least three samples")
    dt = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("samples must be uniformly spaced")
    k = int(round(w.window / dt))
    if abs(k * dt - w.window) > 1e-9 * max(w.window, 1.0):
        raise ValueError("sampling step must divide the window")
    if times[-1] - times[0] < 2.0 * w.window:
        raise WindowTooShortError("trajectory shorter than two windows")

    n, ncomp = w.z.shape
    # running max over [t - window, t]: k+1 samples ending at each index
    padded = np.vstack([np.repeat(w.z[:1], k, axis=0), w.z])
    sw = np.lib.stride_tricks.sliding_window_view(padded, k + 1, axis=0)
    vmax = sw.max(axis=-1)  # (n, ncomp)
    rhs = vmax @ w.upsilon.T

    start = max(w.score_from, times[0] + w.window)
    mask = times >= start - 1e-12
    scale = max(float(w.z.max()), 1e-300)
    slack = rhs[mask] - w.z[mask]
    worst = float(slack.min() / scale) if slack.size else math.inf
    violations = np.where(np.any(w.z[mask] > rhs[mask] + rtol * scale, axis=1))[0]
    first = float(times[mask][violations[0]]) if len(violations) else None

    _, radius = schur_2x2_nonneg(w.upsilon) if w.upsilon.shape == (2, 2) else \
        (None, float(np.max(np.abs(np.linalg.eigvals(w.upsilon)))))
    budget = radius + 0.05
    env = w.z.max(axis=1)
    i0 = int(np.searchsorted(times, start))
    factors = []
    decay_ok = True
    prev = None
    j = i0
    while j + k <= n:
        m = float(env[j:j + k].max())
        if prev is not None and prev > rtol * scale:
            f = m / prev
            factors.append(f)
            if f > budget + 1e-12:
                decay_ok = False
        prev = m
        j += k
    return FanOutReport(passed=first is None, first_violation=first,
                        worst_slack=worst, decay_ok=decay_ok,
                        decay_factors=tuple(factors), decay_budget=budget)
