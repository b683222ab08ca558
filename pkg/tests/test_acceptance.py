"""Acceptance gate for the design pipeline on the six-agent consensus
benchmark. One test per criterion; each prints a single PASS/FAIL line."""

import numpy as np
import pytest

from lpvnet import pipeline
from lpvnet.certificates import (
    LmiCertificate,
    fading_constants,
    uniform_grid,
    verify_certificate,
)
from lpvnet.decomposition import (
    closed_loop_families,
    coords_to_modal,
    coords_to_network,
)
from lpvnet.delay_bound import small_gain_matrix, tau_bound
from lpvnet.linalg import schur_2x2_nonneg
from lpvnet.simulate import DelayProfile, gen_switching, simulate_lpv_closed_loop


def _line(cid: str, ok: bool) -> None:
    print(f"\n[acceptance] {cid}: {'PASS' if ok else 'FAIL'}")


def test_a1_eigen_structure(modal_family, lpv):
    """Pattern spectra and the enlarged parameter interval."""
    lam1_ok = np.allclose(np.sort(modal_family.lambda1),
                          [0.0, 0.5, 0.5, 1.5, 1.5, 2.0], atol=1e-9)
    lam2_ok = np.allclose(np.sort(modal_family.lambda2),
                          [0.0, 1.0, 1.0, 1.0, 1.5, 1.5], atol=1e-9)
    rho_ok = (abs(lpv.rho_interval[0] - 0.0) <= 1e-9
              and abs(lpv.rho_interval[1] - 2.0) <= 1e-9)
    ok = lam1_ok and lam2_ok and rho_ok
    _line("A1 eigen-structure", ok)
    assert ok


def test_a2_fading_constants(loops):
    """Fading-memory constants of both loops at the configured scalars."""
    ctrl = loops["controller"].constants
    obs = loops["observer"].constants
    checks = {
        "a": (ctrl.gain_contraction, 0.1054),
        "b": (ctrl.gain_isse, 2.2361),
        "c": (obs.gain_contraction, 0.0302),
        "d": (obs.gain_isse, 2.7386),
    }
    ok = all(abs(got - ref) <= 1e-3 for got, ref in checks.values())
    _line("A2 fading constants", ok)
    for name, (got, ref) in checks.items():
        assert abs(got - ref) <= 1e-3, f"{name}: {got} vs {ref}"


def test_a3_delay_bound(bound):
    """s-constants, the admissible bound, and the profile verdict."""
    m = bound.margin
    ok = (abs(m.s1 - 0.5) <= 1e-3 and abs(m.s2 - 0.5) <= 1e-3
          and abs(m.s3 - 1.177) <= 1e-3
          and abs(m.tau_bar_u - 0.3593) <= 1e-3
          and bound.accepted and bound.profile_sup == pytest.approx(0.35))
    _line("A3 delay bound", ok)
    assert abs(m.s1 - 0.5) <= 1e-3
    assert abs(m.s2 - 0.5) <= 1e-3
    assert abs(m.s3 - 1.177) <= 1e-3
    assert abs(m.tau_bar_u - 0.3593) <= 1e-3
    assert bound.accepted


def test_a4_schur_closed_form_equivalence():
    """Spectral radius of the coupling matrix is < 1 exactly below the
    closed-form bound, with radius 1 at the boundary."""
    rng = np.random.default_rng(2024)
    ok = True
    count = 0
    while count < 1000:
        a, c = rng.uniform(0.0, 1.0, 2) * 0.999
        b, d = rng.uniform(0.0, 3.0, 2)
        s1, s2, s3 = rng.uniform(1e-6, 2.0, 3)
        bound = tau_bound(a, b, c, d, s1, s2, s3)
        if not np.isfinite(bound):
            # no feedback channel: any delay must be Schur-stable
            stable, _ = schur_2x2_nonneg(
                small_gain_matrix(a, b, c, d, s1, s2, s3, 1e6))
            ok = ok and stable
            count += 1
            continue
        below, _ = schur_2x2_nonneg(
            small_gain_matrix(a, b, c, d, s1, s2, s3, bound * (1 - 1e-6)))
        above, _ = schur_2x2_nonneg(
            small_gain_matrix(a, b, c, d, s1, s2, s3, bound * (1 + 1e-6)))
        _, radius = schur_2x2_nonneg(
            small_gain_matrix(a, b, c, d, s1, s2, s3, bound))
        ok = ok and below and not above and abs(radius - 1.0) <= 1e-9
        count += 1
    _line("A4 Schur equivalence", ok)
    assert ok


def test_a5_network_modal_agreement(cfg, modal_family, loops, bound):
    """Full network run vs the stack of modal subsystem runs."""
    worst = 0.0
    for seed in (11, 12, 13, 14, 15):
        sim = pipeline.run_scenario(cfg, modal_family, loops, bound, seed,
                                    horizon=16.0)
        worst = max(worst, sim.modal_agreement)
    # the comparison spans the whole 16-unit horizon, which is stricter
    # than the required first 10 time units
    ok = worst <= 1e-6
    _line("A5 network/modal agreement", ok)
    assert ok, f"worst agreement {worst}"


def test_a6_convergence_and_fanout(cfg, modal_family, loops, bound):
    """Reproduction scenario: 1% consensus contraction at the final time
    and the envelope inequality at every scored sample, for all seeds."""
    ok = True
    details = []
    for seed in cfg.seeds:
        sim = pipeline.run_scenario(cfg, modal_family, loops, bound, seed)
        fan = all(rep.passed for rep in sim.fanout)
        details.append((seed, sim.gap_ratio, fan))
        ok = ok and sim.gap_ratio <= 0.01 and fan
    _line("A6 convergence + fan-out", ok)
    for seed, ratio, fan in details:
        assert ratio <= 0.01, f"seed {seed}: gap ratio {ratio}"
        assert fan, f"seed {seed}: fan-out violated"


def test_a7_reference_certificate(cfg, lpv):
    """The hand-specified scaled-identity certificate must pass all three
    LMIs on the 33-point grid and the 65-point refinement, for both loops."""
    fams = closed_loop_families(lpv, cfg.gains)
    grid = uniform_grid(lpv.rho_interval, 33)
    fine = uniform_grid(lpv.rho_interval, 65)
    cert = LmiCertificate(q0=0.01 * np.eye(2), q1=np.zeros((2, 2)),
                          d1=0.01, d2=0.01, mu=1.0, gamma=1.0, grid=grid)
    reports = {}
    for loop in ("controller", "observer"):
        reports[loop] = (verify_certificate(fams[loop], cert),
                         verify_certificate(fams[loop], cert, grid=fine))
    ok = all(r.feasible and rf.feasible for r, rf in reports.values())
    _line("A7 reference certificate", ok)
    for loop, (r, rf) in reports.items():
        assert r.feasible, (f"{loop}: infeasible on 33-point grid, margins "
                            f"{r.margins()}")
        assert rf.feasible, f"{loop}: infeasible on refinement"


class TestA8Properties:
    """Module-invariant spot checks promoted to the acceptance gate."""

    def test_fading_constant_monotonicity(self, cfg):
        grid = uniform_grid((0.0, 2.0), 5)
        cert = LmiCertificate(q0=0.01 * np.eye(2), q1=np.zeros((2, 2)),
                              d1=0.01, d2=0.01, mu=1.0, gamma=1.0, grid=grid)
        ok = True
        prev = None
        for eta in range(1, 120, 7):
            c = fading_constants(cert, cfg.dwell, eta, 5.0)
            if prev is not None:
                ok = ok and c.gain_contraction < prev
            prev = c.gain_contraction
        prev = None
        for horizon in np.linspace(0.5, 20.0, 15):
            c = fading_constants(cert, cfg.dwell, 50, float(horizon))
            if prev is not None:
                ok = ok and c.gain_isse > prev
            prev = c.gain_isse
        _line("A8 fading-constant monotonicity", ok)
        assert ok

    def test_lmi_homogeneity(self, cfg, lpv):
        fams = closed_loop_families(lpv, cfg.gains)
        grid = uniform_grid(lpv.rho_interval, 33)
        cert = LmiCertificate(q0=0.01 * np.eye(2), q1=np.zeros((2, 2)),
                              d1=0.01, d2=0.01, mu=1.0, gamma=1.0, grid=grid)
        rep = verify_certificate(fams["controller"], cert)
        ok = True
        for kappa in (0.5, 2.0, 10.0):
            scaled = cert.scaled(kappa)
            rep_s = verify_certificate(fams["controller"], scaled)
            for key, val in rep.margins().items():
                ok = ok and abs(rep_s.margins()[key] - kappa * val) <= 1e-10
            ok = ok and scaled.mu == cert.mu and scaled.gamma == cert.gamma
        _line("A8 LMI homogeneity", ok)
        assert ok

    def test_coordinate_round_trip(self, modal_family):
        rng = np.random.default_rng(77)
        u = modal_family.u_basis
        ok = True
        for _ in range(50):
            x = rng.standard_normal(12)
            back = coords_to_network(coords_to_modal(x, u, 2), u, 2)
            fwd = coords_to_modal(coords_to_network(x, u, 2), u, 2)
            ok = ok and np.max(np.abs(back - x)) <= 1e-9
            ok = ok and np.max(np.abs(fwd - x)) <= 1e-9
        _line("A8 coordinate round trip", ok)
        assert ok

    def test_rk4_step_refinement(self, cfg, lpv):
        sw = gen_switching(21, cfg.dwell, 5.0)
        delay = DelayProfile.sinusoid(0.05, 4.0, 0.3)
        kw = dict(x0=[1.0, -0.5], xhat0=[0.0, 0.0], horizon=5.0)
        coarse = simulate_lpv_closed_loop(lpv, cfg.gains, sw, delay,
                                          step=0.01, **kw)
        fine = simulate_lpv_closed_loop(lpv, cfg.gains, sw, delay,
                                        step=0.005, **kw)
        diff = max(float(np.max(np.abs(coarse.x - fine.x[::2]))),
                   float(np.max(np.abs(coarse.xhat - fine.xhat[::2]))))
        ok = diff <= 1e-5
        _line("A8 integrator step refinement", ok)
        assert ok, f"refinement gap {diff}"
