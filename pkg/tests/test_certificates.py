"""Gridded LMI certificates, the feasibility search, and the fading-memory
constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpvnet.certificates import (
    DwellSpec,
    InfeasibleError,
    LmiCertificate,
    MuDeltaNotContractiveError,
    conservative_eta,
    fading_constants,
    min_eta,
    search_certificate,
    suggest_horizon,
    uniform_grid,
    verify_certificate,
)
from lpvnet.decomposition import MatrixPolyFamily, closed_loop_families

GRID = uniform_grid((0.0, 2.0), 33)
EXAMPLE_DWELL = DwellSpec(0.1, 0.5)


def constant_family(m):
    return MatrixPolyFamily((np.asarray(m, float),))


def example_cert(dim=2):
    """The hand-specified scaled-identity certificate of the worked example."""
    return LmiCertificate(q0=0.01 * np.eye(dim), q1=np.zeros((dim, dim)),
                          d1=0.01, d2=0.01, mu=1.0, gamma=1.0, grid=GRID)


class TestDwellSpec:
    def test_valid(self):
        d = DwellSpec(0.1, 0.5)
        assert d.delta_min == 0.1

    def test_rejects_zero_min(self):
        with pytest.raises(ValueError):
            DwellSpec(0.0, 0.5)

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            DwellSpec(0.5, 0.1)


class TestCertificateValidation:
    def test_rejects_nonpositive_d1(self):
        with pytest.raises(ValueError):
            LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=0.0, d2=1.0,
                           mu=1.0, gamma=1.0, grid=GRID)

    def test_rejects_mu_below_one(self):
        with pytest.raises(ValueError):
            LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0, d2=1.0,
                           mu=0.9, gamma=1.0, grid=GRID)

    def test_round_trip_serialization(self, tmp_path):
        cert = example_cert()
        path = tmp_path / "cert.json"
        cert.save(path)
        back = LmiCertificate.load(path)
        assert np.array_equal(back.q0, cert.q0)
        assert back.mu == cert.mu and back.gamma == cert.gamma
        assert np.array_equal(back.grid, cert.grid)


class TestVerify:
    def test_stable_constant_family_feasible(self):
        cert = LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0,
                              d2=1.0, mu=1.0, gamma=1.0, grid=GRID)
        rep = verify_certificate(constant_family(-np.eye(2)), cert)
        assert rep.feasible
        # -(Omega^T Q + Q Omega) - gamma Q = 2Q - Q = Q, smallest eig 1
        assert rep.decay_margin == pytest.approx(1.0, abs=1e-12)
        assert rep.bounds_margin == pytest.approx(0.0, abs=1e-12)

    def test_unstable_constant_family_infeasible(self):
        cert = LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0,
                              d2=1.0, mu=1.0, gamma=1.0, grid=GRID)
        rep = verify_certificate(constant_family(np.eye(2)), cert)
        assert not rep.feasible
        assert rep.decay_margin < 0

    def test_cross_margin_zero_for_constant_q_mu_one(self):
        # with mu = 1 and a constant Q the pair constraint Q <= mu Q is
        # tight: the report must mark it with margin exactly 0
        cert = example_cert()
        rep = verify_certificate(constant_family(-np.eye(2)), cert)
        assert rep.cross_margin == pytest.approx(0.0, abs=1e-15)

    def test_example_certificate_margins(self, cfg, lpv):
        # independent oracle for the scaled-identity certificate on the
        # controller loop: the decay margin equals
        # 0.01 * (-1 - max_rho max_eig(M + M^T)) = 0.01 * (-1 + 0.36)
        fams = closed_loop_families(lpv, cfg.gains)
        rep = verify_certificate(fams["controller"], example_cert())
        assert rep.bounds_margin == pytest.approx(0.0, abs=1e-15)
        assert rep.cross_margin == pytest.approx(0.0, abs=1e-15)
        assert rep.decay_margin == pytest.approx(-0.0064, abs=1e-9)
        rep_obs = verify_certificate(fams["observer"], example_cert())
        assert rep_obs.decay_margin == pytest.approx(-0.004, abs=1e-9)

    def test_report_carries_grid_caveat(self):
        rep = verify_certificate(constant_family(-np.eye(2)), example_cert())
        assert "grid" in rep.caveat

    def test_homogeneity(self, cfg, lpv):
        # scaling Q by kappa scales every margin by kappa and preserves the
        # verdict; mu and gamma are untouched
        fams = closed_loop_families(lpv, cfg.gains)
        cert = example_cert()
        kappa = 7.5
        rep = verify_certificate(fams["controller"], cert)
        rep_s = verify_certificate(fams["controller"], cert.scaled(kappa))
        for key in ("bounds", "cross", "decay"):
            assert rep_s.margins()[key] == pytest.approx(
                kappa * rep.margins()[key], abs=1e-12)
        assert cert.scaled(kappa).mu == cert.mu
        assert cert.scaled(kappa).gamma == cert.gamma


class TestSearch:
    def test_finds_certificate_for_example_controller_loop(self, cfg, lpv):
        fams = closed_loop_families(lpv, cfg.gains)
        cert = search_certificate(fams["controller"], lpv.rho_interval)
        rep = verify_certificate(fams["controller"], cert)
        fine = uniform_grid(lpv.rho_interval, 65)
        rep_fine = verify_certificate(fams["controller"], cert, grid=fine)
        assert rep.feasible and rep_fine.feasible
        assert cert.mu == 1.0  # a constant-Q certificate suffices here
        assert cert.d1 > 0 and cert.d2 >= cert.d1

    def test_infeasible_for_unstable_family(self):
        with pytest.raises(InfeasibleError) as exc:
            search_certificate(constant_family(np.eye(2)), (0.0, 1.0),
                               grid_size=5, max_iter=50,
                               gamma_menu=(1.0,), mu_menu=(1.0,))
        assert "best_violation" in exc.value.margins

    def test_scaled_search_result_still_feasible(self, cfg, lpv):
        fams = closed_loop_families(lpv, cfg.gains)
        cert = search_certificate(fams["controller"], lpv.rho_interval)
        rep = verify_certificate(fams["controller"], cert.scaled(3.0))
        assert rep.feasible


class TestMinEta:
    def test_example_values(self):
        assert min_eta(example_cert(), EXAMPLE_DWELL) == 6

    def test_equal_dwell_unit_scalars(self):
        cert = LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0,
                              d2=1.0, mu=1.0, gamma=1.0, grid=GRID)
        # threshold is exactly 1; eta = 1 would give contraction exactly 1
        assert min_eta(cert, DwellSpec(1.0, 1.0)) == 2
        assert fading_constants(cert, DwellSpec(1.0, 1.0), 2,
                                1.0).contractive

    def test_not_contractive_raises(self):
        cert = LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0,
                              d2=1.0, mu=1.2, gamma=1.0, grid=GRID)
        with pytest.raises(MuDeltaNotContractiveError):
            min_eta(cert, DwellSpec(0.1, 0.5))

    def test_returned_eta_is_minimal(self):
        cert = example_cert()
        eta = min_eta(cert, EXAMPLE_DWELL)
        assert fading_constants(cert, EXAMPLE_DWELL, eta, 1.0).contractive
        # one fewer interval sits exactly on the boundary gain 1 for these
        # scalars, so only require it not to be strictly contractive
        below = fading_constants(cert, EXAMPLE_DWELL, eta - 1, 1.0)
        assert below.gain_contraction >= 1.0 - 1e-9


class TestFadingConstants:
    def test_controller_loop_values(self):
        c = fading_constants(example_cert(), EXAMPLE_DWELL, eta=50,
                             horizon=5.0)
        assert c.gain_contraction == pytest.approx(0.1054, abs=1e-3)
        assert c.gain_isse == pytest.approx(2.2361, abs=1e-3)
        assert c.contractive

    def test_observer_loop_values(self):
        c = fading_constants(example_cert(), EXAMPLE_DWELL, eta=75,
                             horizon=7.5)
        assert c.gain_contraction == pytest.approx(0.0302, abs=1e-3)
        assert c.gain_isse == pytest.approx(2.7386, abs=1e-3)

    def test_sqrt_e_flagged_not_contractive(self):
        cert = LmiCertificate(q0=np.eye(2), q1=np.zeros((2, 2)), d1=1.0,
                              d2=1.0, mu=1.0, gamma=1.0, grid=GRID)
        c = fading_constants(cert, DwellSpec(1.0, 1.0), eta=0, horizon=1.0)
        assert c.gain_contraction == pytest.approx(math.sqrt(math.e), abs=1e-4)
        assert not c.contractive

    def test_rejects_nonpositive_horizon(self):
        with pytest.raises(ValueError):
            fading_constants(example_cert(), EXAMPLE_DWELL, 50, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=1, max_value=100),
           st.floats(min_value=0.1, max_value=20.0))
    def test_monotonicity(self, eta, horizon):
        cert = example_cert()
        c0 = fading_constants(cert, EXAMPLE_DWELL, eta, horizon)
        c1 = fading_constants(cert, EXAMPLE_DWELL, eta + 1, horizon)
        c2 = fading_constants(cert, EXAMPLE_DWELL, eta, horizon * 1.5)
        assert c1.gain_contraction < c0.gain_contraction
        assert c2.gain_isse > c0.gain_isse


class TestWindowPairings:
    def test_suggest_horizon_matches_example(self):
        assert suggest_horizon(50, EXAMPLE_DWELL) == pytest.approx(5.0)
        assert suggest_horizon(75, EXAMPLE_DWELL) == pytest.approx(7.5)

    def test_conservative_eta(self):
        assert conservative_eta(5.0, EXAMPLE_DWELL) == 9
        assert conservative_eta(0.4, EXAMPLE_DWELL) == 0
