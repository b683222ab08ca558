"""Decomposable networked plants, switching pattern evaluation, and the
modal / LPV reductions.

A decomposable matrix splits as I_N (x) M_a + P(t) (x) M_b over a shared
pattern matrix P(t) = sigma(t) P1 + (1 - sigma(t)) P2 with P1, P2 symmetric
and commuting. Conjugating with U (x) I, where U jointly diagonalizes the
pair, turns the N n-order network into N independent n-order subsystems
whose matrices are affine in the scalar nu_i(sigma); enlarging the nu
intervals to one interval yields the LPV reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    NotCommutingError,
    SimDiagResult,
    _as_matrix,
    commute_defect,
    default_commute_tol,
    kron,
    simultaneous_diagonalize,
)


class SigmaOutOfRangeError(ValueError):
    """Switching value outside the declared sigma range."""


def midpoint_sigma_to_endpoint(sigma: float) -> float:
    """Map the midpoint convention (P1+P2+sigma(P2-P1))/2, sigma in [-1,1],
    onto the endpoint convention sigma' P1 + (1-sigma') P2, sigma' in [0,1]."""
    return 0.5 * (1.0 - sigma)


@dataclass(frozen=True)
class DecomposableMatrixSpec:
    """Decentralized / interconnected part pair of one decomposable matrix."""

    decentralized: np.ndarray
    interconnected: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "decentralized", _as_matrix(self.decentralized))
        object.__setattr__(self, "interconnected", _as_matrix(self.interconnected))
        if self.decentralized.shape != self.interconnected.shape:
            raise ValueError("decentralized and interconnected parts must have "
                             f"equal shape, got {self.decentralized.shape} vs "
                             f"{self.interconnected.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.decentralized.shape

    def at(self, nu: float) -> np.ndarray:
        """Affine evaluation M_a + nu M_b."""
        return self.decentralized + nu * self.interconnected


@dataclass(frozen=True)
class PatternPair:
    """Two commuting symmetric pattern vertices plus the sigma range."""

    p1: np.ndarray
    p2: np.ndarray
    sigma_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        p1 = _as_matrix(self.p1)
        p2 = _as_matrix(self.p2)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)
        object.__setattr__(self, "sigma_range",
                           (float(self.sigma_range[0]), float(self.sigma_range[1])))
        if p1.shape != p2.shape or p1.shape[0] != p1.shape[1]:
            raise ValueError("pattern vertices must be square and equally sized")
        for name, p in (("p1", p1), ("p2", p2)):
            if np.max(np.abs(p - p.T)) > 1e-10 * max(1.0, np.max(np.abs(p))):
                raise ValueError(f"pattern vertex {name} is not symmetric")
        tol = default_commute_tol(p1, p2)
        defect = commute_defect(p1, p2)
        if defect > tol:
            raise NotCommutingError(
                f"pattern vertices do not commute (defect {defect:.3e} > {tol:.1e})")
        lo, hi = self.sigma_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("sigma_range must be contained in [0, 1]")

    @property
    def n_agents(self) -> int:
        return self.p1.shape[0]


def pattern_eval(pp: PatternPair, sigma: float) -> np.ndarray:
    """sigma P1 + (1 - sigma) P2."""
    lo, hi = pp.sigma_range
    if not (lo - 1e-12 <= sigma <= hi + 1e-12):
        raise SigmaOutOfRangeError(f"sigma={sigma} outside [{lo}, {hi}]")
    return sigma * pp.p1 + (1.0 - sigma) * pp.p2


@dataclass(frozen=True)
class DecomposablePlant:
    """The N n-order networked plant with decomposable A, B, C."""

    a_spec: DecomposableMatrixSpec
    b_spec: DecomposableMatrixSpec
    c_spec: DecomposableMatrixSpec
    pattern: PatternPair

    def __post_init__(self):
        n = self.a_spec.shape[0]
        if self.a_spec.shape != (n, n):
            raise ValueError("A parts must be square")
        if self.b_spec.shape[0] != n:
            raise ValueError("B parts must have as many rows as A")
        if self.c_spec.shape[1] != n:
            raise ValueError("C parts must have as many columns as A")

    @property
    def n_agents(self) -> int:
        return self.pattern.n_agents

    @property
    def state_dim(self) -> int:
        return self.a_spec.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b_spec.shape[1]

    @property
    def output_dim(self) -> int:
        return self.c_spec.shape[0]


def assemble_full(spec: DecomposableMatrixSpec, pp: PatternPair,
                  sigma: float) -> np.ndarray:
    """I_N (x) M_a + P(sigma) (x) M_b."""
    n = pp.n_agents
    return kron(np.eye(n), spec.decentralized) + kron(pattern_eval(pp, sigma),
                                                      spec.interconnected)


@dataclass(frozen=True)
class ModalFamily:
    """The N independent modal subsystems produced by the joint diagonalizer.

    Mode i has matrices spec.at(nu_i) with nu_i(sigma) =
    sigma * lambda1[i] + (1 - sigma) * lambda2[i]. Column i of u_basis is
    the shared eigenvector for mode i; ordering is ascending by lambda1
    with ties broken by lambda2.
    """

    u_basis: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    a_spec: DecomposableMatrixSpec
    b_spec: DecomposableMatrixSpec
    c_spec: DecomposableMatrixSpec
    sigma_range: tuple[float, float] = (0.0, 1.0)
    diag_theta: float | None = None

    @property
    def n_modes(self) -> int:
        return len(self.lambda1)

    def nu(self, i: int, sigma: float) -> float:
        return float(sigma * self.lambda1[i] + (1.0 - sigma) * self.lambda2[i])

    def nu_intervals(self) -> list[tuple[float, float]]:
        """Per-mode convex hull of {lambda1[i], lambda2[i]}."""
        return [(float(min(a, b)), float(max(a, b)))
                for a, b in zip(self.lambda1, self.lambda2)]

    def subsystem(self, i: int, sigma: float) -> tuple[np.ndarray, np.ndarray,
                                                       np.ndarray]:
        nu = self.nu(i, sigma)
        return self.a_spec.at(nu), self.b_spec.at(nu), self.c_spec.at(nu)


def decompose(plant: DecomposablePlant, tol: float | None = None) -> ModalFamily:
    """Modal reduction of a decomposable plant (joint diagonalization of the
    pattern pair plus affine per-mode matrices)."""
    sim: SimDiagResult = simultaneous_diagonalize(plant.pattern.p1,
                                                  plant.pattern.p2, tol=tol)
    return ModalFamily(u_basis=sim.u, lambda1=sim.lambda1, lambda2=sim.lambda2,
                       a_spec=plant.a_spec, b_spec=plant.b_spec,
                       c_spec=plant.c_spec,
                       sigma_range=plant.pattern.sigma_range,
                       diag_theta=sim.theta)


@dataclass(frozen=True)
class LpvPlant:
    """Single n-order plant affine in the scalar parameter rho."""

    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    rho_interval: tuple[float, float]

    def a_at(self, rho: float) -> np.ndarray:
        return self.a0 + rho * self.a1

    def b_at(self, rho: float) -> np.ndarray:
        return self.b0 + rho * self.b1

    def c_at(self, rho: float) -> np.ndarray:
        return self.c0 + rho * self.c1

    @property
    def state_dim(self) -> int:
        return self.a0.shape[0]


def to_lpv(mf: ModalFamily) -> LpvPlant:
    """Enlarge the per-mode nu intervals to the single LPV parameter
    interval [min(lambda), max(lambda)] over both pattern vertices."""
    lo = float(min(mf.lambda1.min(), mf.lambda2.min()))
    hi = float(max(mf.lambda1.max(), mf.lambda2.max()))
    return LpvPlant(a0=mf.a_spec.decentralized, a1=mf.a_spec.interconnected,
                    b0=mf.b_spec.decentralized, b1=mf.b_spec.interconnected,
                    c0=mf.c_spec.decentralized, c1=mf.c_spec.interconnected,
                    rho_interval=(lo, hi))


@dataclass(frozen=True)
class GainSchedule:
    """Affine controller and observer gain schedules K(rho), L(rho)."""

    k_a: np.ndarray
    k_b: np.ndarray
    l_a: np.ndarray
    l_b: np.ndarray

    def __post_init__(self):
        for name in ("k_a", "k_b", "l_a", "l_b"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name)))
        if self.k_a.shape != self.k_b.shape:
            raise ValueError("controller gain parts must match in shape")
        if self.l_a.shape != self.l_b.shape:
            raise ValueError("observer gain parts must match in shape")

    def k_at(self, rho: float) -> np.ndarray:
        return self.k_a + rho * self.k_b

    def l_at(self, rho: float) -> np.ndarray:
        return self.l_a + rho * self.l_b


def lift_gains(gs: GainSchedule, pp: PatternPair,
               sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Network-level distributed gains I_N (x) G_a + P(sigma) (x) G_b."""
    p = pattern_eval(pp, sigma)
    eye = np.eye(pp.n_agents)
    k_full = kron(eye, gs.k_a) + kron(p, gs.k_b)
    l_full = kron(eye, gs.l_a) + kron(p, gs.l_b)
    return k_full, l_full


def coords_to_modal(x: np.ndarray, u_basis: np.ndarray, block: int) -> np.ndarray:
    """Network -> modal coordinates: xhat = (U^T (x) I_block) x."""
    x = np.asarray(x, dtype=float)
    n_agents = u_basis.shape[0]
    if x.shape[-1] != n_agents * block:
        raise ValueError(f"state length {x.shape[-1]} != {n_agents} * {block}")
    stacked = x.reshape(x.shape[:-1] + (n_agents, block))
    out = np.einsum("ji,...jk->...ik", u_basis, stacked)
    return out.reshape(x.shape)


def coords_to_network(xm: np.ndarray, u_basis: np.ndarray, block: int) -> np.ndarray:
    """Modal -> network coordinates: x = (U (x) I_block) xhat."""
    xm = np.asarray(xm, dtype=float)
    n_agents = u_basis.shape[0]
    if xm.shape[-1] != n_agents * block:
        raise ValueError(f"state length {xm.shape[-1]} != {n_agents} * {block}")
    stacked = xm.reshape(xm.shape[:-1] + (n_agents, block))
    out = np.einsum("ij,...jk->...ik", u_basis, stacked)
    return out.reshape(xm.shape)


@dataclass(frozen=True)
class MatrixPolyFamily:
    """Matrix-valued polynomial in the scalar parameter rho."""

    coeffs: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           tuple(_as_matrix(c) for c in self.coeffs))

    def at(self, rho: float) -> np.ndarray:
        out = self.coeffs[-1].copy()
        for c in reversed(self.coeffs[:-1]):
            out = rho * out + c
        return out

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def _poly_mul(a: tuple[np.ndarray, ...], b: tuple[np.ndarray, ...]):
    out = [np.zeros((a[0].shape[0], b[0].shape[1]))
           for _ in range(len(a) + len(b) - 1)]
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] = out[i + j] + ca @ cb
    # drop identically-zero leading coefficients
    while len(out) > 1 and np.all(out[-1] == 0.0):
        out.pop()
    return tuple(out)


def closed_loop_families(lpv: LpvPlant, gains: GainSchedule) -> dict[str, MatrixPolyFamily]:
    """Closed-loop parameter families for the design pipeline.

    Returns families for the controller loop A + B K, the observer loop
    A + L C, and the coupling products B K and L C.
    """
    a = (lpv.a0, lpv.a1)
    bk = _poly_mul((lpv.b0, lpv.b1), (gains.k_a, gains.k_b))
    lc = _poly_mul((gains.l_a, gains.l_b), (lpv.c0, lpv.c1))

    def _add(p, q):
        n = max(len(p), len(q))
        out = []
        for k in range(n):
            ck = np.zeros_like(p[0])
            if k < len(p):
                ck = ck + p[k]
            if k < len(q):
                ck = ck + q[k]
            out.append(ck)
        return tuple(out)

    return {
        "controller": MatrixPolyFamily(_add(a, bk)),
        "observer": MatrixPolyFamily(_add(a, lc)),
        "bk": MatrixPolyFamily(bk),
        "lc": MatrixPolyFamily(lc),
    }
