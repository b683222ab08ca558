"""End-to-end orchestration: decompose -> certify -> bound -> simulate.

These helpers back both the CLI verbs and the verification suite; each
returns plain data (dataclasses / dicts) so reports can be serialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import (
    FadingMemoryConstants,
    LmiCertificate,
    MuDeltaNotContractiveError,
    fading_constants,
    min_eta,
    uniform_grid,
    verify_certificate,
)
from .config import ScenarioConfig
from .decomposition import (
    ModalFamily,
    LpvPlant,
    closed_loop_families,
    coords_to_modal,
    decompose,
    to_lpv,
)
from .delay_bound import (
    DelayMargin,
    FanOutReport,
    FanOutWitness,
    check_fanout,
    delay_margin,
    small_gain_matrix,
)
from .simulate import (
    TrajectoryRecord,
    consensus_gap,
    gen_switching,
    simulate_modal_stack,
    simulate_network,
)


def analyze(cfg: ScenarioConfig) -> tuple[ModalFamily, LpvPlant]:
    mf = decompose(cfg.plant)
    return mf, to_lpv(mf)


@dataclass(frozen=True)
class LoopCertResult:
    loop: str
    certificate: LmiCertificate
    report_grid: object
    report_refined: object
    eta_min: int | None
    eta_min_error: str | None
    constants: FadingMemoryConstants

    @property
    def feasible(self) -> bool:
        return bool(self.report_grid.feasible and self.report_refined.feasible)


def certify_loops(cfg: ScenarioConfig, lpv: LpvPlant,
                  grid_size: int | None = None,
                  eta_override: int | None = None) -> dict[str, LoopCertResult]:
    """Verify the configured per-loop certificates and evaluate the
    fading-memory constants they induce."""
    grid_size = grid_size or cfg.grid_size
    families = closed_loop_families(lpv, cfg.gains)
    grid = uniform_grid(lpv.rho_interval, grid_size)
    fine = uniform_grid(lpv.rho_interval, 2 * grid_size - 1)
    results = {}
    for loop, params in (("controller", cfg.controller_cert),
                         ("observer", cfg.observer_cert)):
        family = families[loop]
        dim = family.at(grid[0]).shape[0]
        scale = 0.5 * (params.d1 + params.d2)
        cert = LmiCertificate(q0=scale * np.eye(dim), q1=np.zeros((dim, dim)),
                              d1=params.d1, d2=params.d2, mu=params.mu,
                              gamma=params.gamma, grid=grid)
        rep = verify_certificate(family, cert)
        rep_fine = verify_certificate(family, cert, grid=fine)
        try:
            eta_floor: int | None = min_eta(cert, cfg.dwell)
            eta_err = None
        except MuDeltaNotContractiveError as exc:
            eta_floor, eta_err = None, str(exc)
        eta = eta_override if eta_override is not None else params.eta
        consts = fading_constants(cert, cfg.dwell, eta, params.horizon)
        results[loop] = LoopCertResult(loop=loop, certificate=cert,
                                       report_grid=rep, report_refined=rep_fine,
                                       eta_min=eta_floor, eta_min_error=eta_err,
                                       constants=consts)
    return results


@dataclass(frozen=True)
class BoundResult:
    margin: DelayMargin
    profile_sup: float
    accepted: bool
    acceptance_margin: float

    def to_dict(self) -> dict:
        d = self.margin.to_dict()
        d.update({"profile_sup": self.profile_sup, "accepted": self.accepted,
                  "acceptance_margin": self.acceptance_margin})
        return d


def compute_bound(cfg: ScenarioConfig, lpv: LpvPlant,
                  loops: dict[str, LoopCertResult],
                  grid_size: int | None = None) -> BoundResult:
    """s-constants, the closed-form delay bound, and the profile verdict."""
    grid_size = grid_size or cfg.grid_size
    families = closed_loop_families(lpv, cfg.gains)
    ctrl = loops["controller"].constants
    obs = loops["observer"].constants
    margin = delay_margin(a=ctrl.gain_contraction, b=ctrl.gain_isse,
                          c=obs.gain_contraction, d=obs.gain_isse,
                          bk_family=families["bk"], lc_family=families["lc"],
                          loop_family=families["controller"],
                          rho_interval=lpv.rho_interval,
                          tau_bar=cfg.delay.tau_max, grid_size=grid_size)
    sup = cfg.delay.tau_max
    acc_margin = margin.tau_bar_u - sup
    return BoundResult(margin=margin, profile_sup=sup,
                       accepted=bool(acc_margin > 0.0),
                       acceptance_margin=acc_margin)


@dataclass(frozen=True)
class SimulationResult:
    network: TrajectoryRecord
    modal: list[TrajectoryRecord]
    gap: np.ndarray
    gap_ratio: float
    fanout: list[FanOutReport]
    fanout_window: float
    modal_agreement: float


def run_scenario(cfg: ScenarioConfig, mf: ModalFamily,
                 loops: dict[str, LoopCertResult], bound: BoundResult,
                 seed: int, horizon: float | None = None) -> SimulationResult:
    """One closed-loop run: network integration, matched modal stack,
    consensus gap, and the per-mode fan-out check."""
    horizon = horizon if horizon is not None else cfg.horizon
    sw = gen_switching(seed, cfg.dwell, horizon, cfg.plant.pattern.sigma_range)
    rng = np.random.default_rng(seed)
    dim = cfg.plant.n_agents * cfg.plant.state_dim
    x0 = rng.uniform(-1.0, 1.0, size=dim)
    xhat0 = np.zeros(dim)

    rec = simulate_network(cfg.plant, cfg.gains, sw, cfg.delay, x0, xhat0,
                           cfg.step, horizon, seed=seed, scenario=cfg.name)

    n = cfg.plant.state_dim
    x0m = coords_to_modal(x0, mf.u_basis, n)
    xh0m = coords_to_modal(xhat0, mf.u_basis, n)
    modal = simulate_modal_stack(mf, cfg.gains, sw, cfg.delay, x0m, xh0m,
                                 cfg.step, horizon, seed=seed)

    # agreement between the transformed network run and the modal stack
    xm = coords_to_modal(rec.x, mf.u_basis, n)
    xhm = coords_to_modal(rec.xhat, mf.u_basis, n)
    agreement = 0.0
    for i, m in enumerate(modal):
        agreement = max(agreement,
                        float(np.max(np.abs(xm[:, i * n:(i + 1) * n] - m.x))),
                        float(np.max(np.abs(xhm[:, i * n:(i + 1) * n] - m.xhat))))

    gap = consensus_gap(rec, cfg.plant.state_dim)
    gap_ratio = float(gap[-1] / gap[0]) if gap[0] > 0 else 0.0

    ctrl = loops["controller"].constants
    obs = loops["observer"].constants
    tau_bar = cfg.delay.tau_max
    ups = small_gain_matrix(a=ctrl.gain_contraction, b=ctrl.gain_isse,
                            c=obs.gain_contraction, d=obs.gain_isse,
                            s1=bound.margin.s1, s2=bound.margin.s2,
                            s3=bound.margin.s3, tau_bar=tau_bar)
    window = max(ctrl.horizon, obs.horizon) + tau_bar
    fanouts = []
    for i, m in enumerate(modal):
        z = np.column_stack([np.linalg.norm(m.x, axis=1),
                             np.linalg.norm(m.error, axis=1)])
        witness = FanOutWitness(times=m.t, z=z, window=window, upsilon=ups,
                                score_from=window)
        fanouts.append(check_fanout(witness))

    return SimulationResult(network=rec, modal=modal, gap=gap,
                            gap_ratio=gap_ratio, fanout=fanouts,
                            fanout_window=window, modal_agreement=agreement)
