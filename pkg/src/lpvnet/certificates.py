"""Gridded LMI certificates and the fading-memory constants they induce.

A certificate consists of an affine symmetric matrix function
Q(rho) = Q0 + rho Q1 together with scalars (d1, d2, mu, gamma) satisfying,
at every grid point rho (and every ordered grid pair (rho, theta)):

    d1 I <= Q(rho) <= d2 I
    Q(rho) <= mu Q(theta)
    Omega(rho)^T Q(rho) + Q(rho) Omega(rho) <= -gamma Q(rho)

Feasibility on a grid is necessary, not sufficient, for the underlying
parameter-continuum constraints; every report carries that caveat and the
search re-checks on a doubled grid as mitigation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .decomposition import MatrixPolyFamily
from .linalg import _as_matrix, sym_eig

GRID_CAVEAT = ("grid feasibility is a necessary but not sufficient check of the "
               "parameter-continuum constraints; re-verified on a 2x refined grid")


class MuDeltaNotContractiveError(ValueError):
    """mu * exp(-gamma * delta_min) >= 1, so no window count can contract."""


class InfeasibleError(RuntimeError):
    """Certificate search failed; carries the best margins found."""

    def __init__(self, message: str, margins: dict[str, float]):
        super().__init__(message)
        self.margins = margins


@dataclass(frozen=True)
class DwellSpec:
    """Range dwell-time bounds on consecutive switching instants."""

    delta_min: float
    delta_max: float

    def __post_init__(self):
        if not (0.0 < self.delta_min <= self.delta_max):
            raise ValueError("need 0 < delta_min <= delta_max")


def uniform_grid(rho_interval: tuple[float, float], grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    return np.linspace(rho_interval[0], rho_interval[1], grid_size)


@dataclass(frozen=True)
class LmiCertificate:
    q0: np.ndarray
    q1: np.ndarray
    d1: float
    d2: float
    mu: float
    gamma: float
    grid: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q0", _as_matrix(self.q0))
        object.__setattr__(self, "q1", _as_matrix(self.q1))
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        if self.q0.shape != self.q1.shape or self.q0.shape[0] != self.q0.shape[1]:
            raise ValueError("Q0 and Q1 must be square with equal shape")
        if not self.d1 > 0:
            raise ValueError("d1 must be positive")
        if self.d2 < self.d1:
            raise ValueError("d2 must be at least d1")
        if self.mu < 1.0:
            raise ValueError("mu must be at least 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if len(self.grid) < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be ascending with at least two points")

    def q_at(self, rho: float) -> np.ndarray:
        return self.q0 + rho * self.q1

    def scaled(self, kappa: float) -> "LmiCertificate":
        """kappa Q is feasible whenever Q is, with (kappa d1, kappa d2)."""
        return LmiCertificate(q0=kappa * self.q0, q1=kappa * self.q1,
                              d1=kappa * self.d1, d2=kappa * self.d2,
                              mu=self.mu, gamma=self.gamma, grid=self.grid)

    def to_dict(self) -> dict:
        return {"q0": self.q0.tolist(), "q1": self.q1.tolist(),
                "d1": self.d1, "d2": self.d2, "mu": self.mu,
                "gamma": self.gamma, "grid": self.grid.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LmiCertificate":
        return cls(q0=np.array(d["q0"], float), q1=np.array(d["q1"], float),
                   d1=float(d["d1"]), d2=float(d["d2"]), mu=float(d["mu"]),
                   gamma=float(d["gamma"]), grid=np.array(d["grid"], float))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "LmiCertificate":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class CertificateReport:
    """Worst eigenvalue margins of the three certificate constraints.

    Margins are minimum eigenvalues of the slack matrices; nonnegative
    (within ``tol``) means the constraint holds at every checked point.
    """

    bounds_margin: float
    cross_margin: float
    decay_margin: float
    feasible: bool
    grid_size: int
    tol: float
    caveat: str = GRID_CAVEAT

    def worst(self) -> float:
        return min(self.bounds_margin, self.cross_margin, self.decay_margin)

    def margins(self) -> dict[str, float]:
        return {"bounds": self.bounds_margin, "cross": self.cross_margin,
                "decay": self.decay_margin}


def _min_eig(m: np.ndarray) -> float:
    return float(sym_eig(0.5 * (m + m.T)).values[0])


def verify_certificate(family: MatrixPolyFamily, cert: LmiCertificate,
                       grid: np.ndarray | None = None,
                       tol: float = 1e-9) -> CertificateReport:
    """Check the three certificate LMIs at every grid point / pair."""
    if grid is None:
        grid = cert.grid
    qs = [cert.q_at(r) for r in grid]
    eye = np.eye(cert.q0.shape[0])

    bounds = min(min(_min_eig(q - cert.d1 * eye), _min_eig(cert.d2 * eye - q))
                 for q in qs)
    cross = min(_min_eig(cert.mu * qt - qr) for qr in qs for qt in qs)
    decay = math.inf
    for rho, q in zip(grid, qs):
        omega = family.at(rho)
        decay = min(decay, _min_eig(-(omega.T @ q + q @ omega) - cert.gamma * q))

    scale = max(1.0, cert.d2)
    feasible = min(bounds, cross, decay) >= -tol * scale
    return CertificateReport(bounds_margin=bounds, cross_margin=cross,
                             decay_margin=float(decay), feasible=feasible,
                             grid_size=len(grid), tol=tol * scale)


def _refined(grid: np.ndarray) -> np.ndarray:
    """Grid with doubled density (midpoints inserted)."""
    mids = 0.5 * (grid[:-1] + grid[1:])
    return np.sort(np.concatenate([grid, mids]))


def _top_eig(sym: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(sym)
    return float(vals[-1]), vecs[:, -1]


def _violation(family, grid, q0, q1, mu, gamma, floor):
    """Max constraint violation (positive means infeasible) and one
    subgradient pair (g0, g1) for the attaining constraint.

    Uses the LAPACK symmetric solver for speed; the final acceptance gate
    is still verify_certificate with the in-house eigensolver.
    """
    worst = -math.inf
    grad = None
    for rho in grid:
        q = q0 + rho * q1
        # positivity floor: floor*I - Q <= 0
        val, v = _top_eig(floor * np.eye(q.shape[0]) - 0.5 * (q + q.T))
        if val > worst:
            worst = val
            g = -np.outer(v, v)
            grad = (g, rho * g)
        # decay: Omega^T Q + Q Omega + gamma Q <= 0
        omega = family.at(rho)
        slack = omega.T @ q + q @ omega + gamma * q
        val, v = _top_eig(0.5 * (slack + slack.T))
        if val > worst:
            worst = val
            base = np.outer(omega @ v, v)
            g = base + base.T + gamma * np.outer(v, v)
            g = 0.5 * (g + g.T)
            grad = (g, rho * g)
    if mu > 1.0:
        # rho == theta pairs hold trivially (non-strict); for mu == 1 the
        # cross constraint forces a constant Q, which the caller enforces by
        # fixing Q1 = 0, so no term is needed here. For affine Q the slack
        # (1 - mu) Q0 + (rho - mu theta) Q1 has max eigenvalue convex in the
        # scalar coefficient, so only the extreme (rho, theta) corners of
        # the grid square can attain the maximum.
        lo, hi = grid[0], grid[-1]
        for rho, theta in ((lo, hi), (hi, lo), (lo, grid[1]), (hi, grid[-2])):
            q_r = q0 + rho * q1
            q_t = q0 + theta * q1
            val, v = _top_eig(0.5 * ((q_r - mu * q_t) + (q_r - mu * q_t).T))
            if val > worst:
                worst = val
                vv = np.outer(v, v)
                grad = ((1.0 - mu) * vv, (rho - mu * theta) * vv)
    return worst, grad


def search_certificate(family: MatrixPolyFamily,
                       rho_interval: tuple[float, float],
                       grid_size: int = 33,
                       gamma_menu: tuple[float, ...] = (1.0, 0.5, 0.3, 0.2,
                                                        0.1, 0.05, 0.02),
                       mu_menu: tuple[float, ...] = (1.0, 1.2, 1.5),
                       max_iter: int = 3000,
                       seed: int = 0) -> LmiCertificate:
    """Feasibility search for an affine certificate Q(rho) = Q0 + rho Q1.

    Projected subgradient descent on the maximum constraint-violation
    eigenvalue over the grid, with (mu, gamma) swept over a small menu
    (largest gamma first). (d1, d2) are read off afterward from extremal
    eigenvalues of Q over the grid. Raises InfeasibleError with the best
    margins found when no menu entry succeeds.
    """
    grid = uniform_grid(rho_interval, grid_size)
    n = family.at(grid[0]).shape[0]
    floor = 1e-2
    best = math.inf
    rng = np.random.default_rng(seed)

    # necessary condition: the decay LMI forces every eigenvalue of the
    # family to have real part <= -gamma / 2, so prune hopeless gammas
    abscissa = max(float(np.max(np.real(np.linalg.eigvals(family.at(r)))))
                   for r in grid)
    admissible = [g for g in gamma_menu if g <= -2.0 * abscissa]
    if not admissible:
        raise InfeasibleError(
            f"spectral abscissa {abscissa:.6f} over the grid rules out every "
            f"gamma in the menu", {"best_violation": math.inf,
                                   "spectral_abscissa": abscissa})

    for gamma in admissible:
        for mu in mu_menu:
            affine = mu > 1.0  # mu == 1 forces a constant Q
            for attempt in range(2):
                if attempt == 0:
                    q0 = np.eye(n)
                else:
                    w = rng.standard_normal((n, n))
                    q0 = np.eye(n) + 0.1 * (w + w.T)
                q1 = np.zeros((n, n))
                worst, grad = _violation(family, grid, q0, q1, mu, gamma, floor)
                best_attempt = worst
                since_improved = 0
                for it in range(max_iter):
                    if worst < -1e-9:
                        break
                    step = 0.5 / math.sqrt(it + 1.0)
                    q0 = q0 - step * grad[0]
                    if affine:
                        q1 = q1 - step * grad[1]
                    q0 = 0.5 * (q0 + q0.T)
                    q1 = 0.5 * (q1 + q1.T)
                    worst, grad = _violation(family, grid, q0, q1, mu, gamma,
                                             floor)
                    # give up on a plateau: subgradient descent on a feasible
                    # instance keeps improving; stagnation signals infeasible
                    if worst < best_attempt - 1e-8:
                        best_attempt = worst
                        since_improved = 0
                    else:
                        since_improved += 1
                        if since_improved >= 200:
                            break
                best = min(best, worst)
                if worst < -1e-9:
                    break
            if worst >= -1e-9:
                continue
            lo = min(_min_eig(q0 + r * q1) for r in grid)
            hi = max(-_min_eig(-(q0 + r * q1)) for r in grid)
            cert = LmiCertificate(q0=q0, q1=q1, d1=lo, d2=hi, mu=mu,
                                  gamma=gamma, grid=grid)
            ok_grid = verify_certificate(family, cert)
            ok_fine = verify_certificate(family, cert, grid=_refined(grid))
            if ok_grid.feasible and ok_fine.feasible:
                return cert
    raise InfeasibleError(f"no feasible certificate found (best violation "
                          f"{best:.3e})", {"best_violation": best})


def min_eta(cert: LmiCertificate, dwell: DwellSpec) -> int:
    """Smallest integer window count making the contraction gain < 1."""
    mu_delta = cert.mu * math.exp(-cert.gamma * dwell.delta_min)
    if mu_delta >= 1.0:
        raise MuDeltaNotContractiveError(
            f"mu * exp(-gamma delta_min) = {mu_delta:.6f} >= 1")
    threshold = ((math.log(cert.d1 / (cert.d2 * cert.mu))
                  - cert.gamma * dwell.delta_max) / math.log(mu_delta))
    # nudge before flooring so near-integer thresholds round up strictly
    eta = math.floor(threshold + 1e-9) + 1
    return max(eta, 1)


@dataclass(frozen=True)
class FadingMemoryConstants:
    """Contraction / input-gain pair bounding solutions over a horizon T.

    gain_contraction is the factor multiplying |state(t - T)|; gain_isse
    multiplies the sup of the disturbance over the window. ``contractive``
    flags gain_contraction < 1 (required for the small-gain step).
    """

    gain_contraction: float
    gain_isse: float
    horizon: float
    eta: int
    mu_delta: float

    @property
    def contractive(self) -> bool:
        return self.gain_contraction < 1.0


def fading_constants(cert: LmiCertificate, dwell: DwellSpec, eta: int,
                     horizon: float) -> FadingMemoryConstants:
    """Evaluate the fading-memory constants for a certificate.

    gain_contraction = sqrt((d2/d1) mu mu_delta^eta exp(gamma delta_max)),
    gain_isse        = sqrt(mu d2 T / (gamma d1)).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    mu_delta = cert.mu * math.exp(-cert.gamma * dwell.delta_min)
    contraction = math.sqrt((cert.d2 / cert.d1) * cert.mu * mu_delta ** eta
                            * math.exp(cert.gamma * dwell.delta_max))
    isse = math.sqrt(cert.mu * cert.d2 * horizon / (cert.gamma * cert.d1))
    return FadingMemoryConstants(gain_contraction=contraction, gain_isse=isse,
                                 horizon=horizon, eta=int(eta),
                                 mu_delta=mu_delta)


def suggest_horizon(eta: int, dwell: DwellSpec) -> float:
    """Window length pairing eta complete dwell intervals at the fastest
    admissible switching rate (the optimistic count eta = T / delta_min)."""
    return eta * dwell.delta_min


def conservative_eta(horizon: float, dwell: DwellSpec) -> int:
    """Guaranteed count of complete dwell intervals inside any window of
    the given length under arbitrary admissible switching."""
    return max(int(math.floor(horizon / dwell.delta_max)) - 1, 0)
