import math
import random

import numpy as np
import pytest

from ofo.certificate import (
    CONSTANT_FIELDS,
    SimplifyingConstants,
    assemble_constants,
    certify,
    check_mu_bound,
    decay_rate,
    derive_dominance_params,
    derive_plant_constants,
    feasible_xi,
    required_regularization,
)
from ofo.costs import QuadraticCost, RegularizedCost
from ofo.errors import ConvexityGapError, InputError, NotStabilizedError
from ofo.linalg import Matrix
from ofo.plants import LinearPlant

from conftest import random_hurwitz_rows


def all_ones(**overrides) -> SimplifyingConstants:
    values = dict(ell_f=1.0, ell_g=1.0, c3=1.0, d3=1.0, mu3=1.0, zeta3=1.0,
                  mu_phi=1.0, ell_phi_u=0.0, ell_phi_y=1.0, lip_grad_u=1.0)
    values.update(overrides)
    return SimplifyingConstants(**values)


class TestDerivePlantConstants:
    def test_resonant_plant(self, fast_plant):
        pc = derive_plant_constants(fast_plant)
        assert pc.c3 == pytest.approx(0.5, abs=1e-11)
        assert pc.d3 == pytest.approx(0.5, abs=1e-11)
        assert pc.mu3 == 1.0
        assert pc.zeta3 == pytest.approx(1.0, abs=1e-10)
        assert pc.ell_f == pytest.approx(1.0, abs=1e-10)
        assert pc.ell_g == pytest.approx(1.0, abs=1e-10)
        assert pc.ell_h == pytest.approx(10.0 / 101.0, abs=1e-10)
        assert pc.ell_grad_h == 0.0

    def test_slow_sine_plant(self, slow_sine_plant):
        pc = derive_plant_constants(slow_sine_plant)
        lam = np.linalg.eigvalsh(np.array(pc.p.to_rows()))
        assert pc.c3 == pytest.approx(lam[0], abs=1e-10)
        assert pc.d3 == pytest.approx(lam[-1], abs=1e-10)
        assert pc.zeta3 == pytest.approx(2.0 * lam[-1], abs=1e-10)
        assert pc.ell_f == pytest.approx(0.2, abs=1e-12)
        assert pc.ell_g == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert pc.ell_h == pytest.approx(2.0, abs=1e-10)
        assert pc.ell_grad_h == pytest.approx(1.0, abs=1e-10)

    def test_isotropic_plant(self):
        plant = LinearPlant(a=Matrix.identity(2).scale(-1.0),
                            b=Matrix.from_rows([[1.0], [0.0]]),
                            bw=Matrix.from_rows([[1.0], [1.0]]),
                            c=Matrix.from_rows([[1.0, 0.0]]), w=(0.0,))
        pc = derive_plant_constants(plant)
        assert pc.c3 == pytest.approx(0.5, abs=1e-12)
        assert pc.d3 == pytest.approx(0.5, abs=1e-12)
        assert pc.zeta3 == pytest.approx(1.0, abs=1e-12)

    def test_decay_orientation(self, slow_sine_plant):
        # W(x, u) built on P must actually decay at unit rate along the
        # frozen-input dynamics: A^T P + P A = -I.
        p = np.array(derive_plant_constants(slow_sine_plant).p.to_rows())
        a = np.array(slow_sine_plant.a.to_rows())
        residual = a.T @ p + p @ a + np.eye(2)
        assert np.max(np.abs(residual)) <= 1e-10
        rng = random.Random(3)
        for _ in range(20):
            dx = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2)])
            decay = 2.0 * dx @ p @ (a @ dx)
            assert decay <= -np.dot(dx, dx) * (1.0 - 1e-9)


class TestDominanceParams:
    def test_unit_plug_in(self):
        p = derive_dominance_params(all_ones())
        assert (p.mu1, p.theta1, p.mu2, p.theta2) == (0.5, 0.5, 0.5, 0.5)
        assert (p.c1, p.d1, p.c2, p.d2) == (1.0, 1.0, 0.5, 0.5)

    def test_quadratic_example_arithmetic(self):
        k = all_ones(mu_phi=0.02, ell_phi_y=0.19802, lip_grad_u=0.02)
        p = derive_dominance_params(k)
        assert p.mu1 == pytest.approx(0.5)
        assert p.theta1 == pytest.approx(0.5)
        assert p.mu2 == pytest.approx(0.01)
        assert p.theta2 == pytest.approx(0.19802 ** 2 / 0.04, rel=1e-12)

    def test_doubling_d3_halves_mu1_only(self):
        k1, k2 = all_ones(), all_ones(d3=2.0)
        p1, p2 = derive_dominance_params(k1), derive_dominance_params(k2)
        assert p2.mu1 == pytest.approx(0.5 * p1.mu1)
        assert p2.mu2 == p1.mu2
        assert p2.theta2 == p1.theta2
        assert p2.theta1 == p1.theta1

    def test_gap_violation(self):
        with pytest.raises(ConvexityGapError):
            derive_dominance_params(all_ones(ell_phi_u=1.0, lip_grad_u=2.0))


class TestFeasibleXi:
    def test_symmetric_interval(self):
        p = derive_dominance_params(all_ones(mu_phi=2.0, lip_grad_u=2.0))
        # mu1 = 0.5, theta1 = 0.5, mu2 = 1, theta2 = 0.25
        xi = feasible_xi(p)
        assert xi is not None
        assert (xi.lo, xi.hi) == pytest.approx((0.25, 1.0))
        assert xi.chosen == pytest.approx(0.5)

    def test_boundary_is_infeasible(self):
        from ofo.certificate import DominanceParams

        p = DominanceParams(mu1=1.0, theta1=1.0, mu2=1.0, theta2=1.0, c1=1.0, d1=1.0)
        assert feasible_xi(p) is None

    def test_conservative_resonant_example_infeasible(self, fast_plant, quad_cost):
        k, _, _ = assemble_constants(fast_plant, quad_cost)
        p = derive_dominance_params(k)
        assert p.theta2 / p.mu2 > p.mu1 / p.theta1
        assert feasible_xi(p) is None


class TestMuBound:
    def test_unit_plug_in(self):
        certified, rhs = check_mu_bound(all_ones(mu_phi=2.0, lip_grad_u=2.0))
        assert rhs == pytest.approx(1.0)
        assert certified
        certified, _ = check_mu_bound(all_ones(mu_phi=0.5))
        assert not certified

    def test_resonant_example_rhs(self, fast_plant, quad_cost):
        k, _, _ = assemble_constants(fast_plant, quad_cost)
        _, rhs = check_mu_bound(k)
        # independent recomputation with numpy
        ref = k.ell_phi_u + float(np.sqrt(
            k.ell_g ** 2 * k.ell_phi_y ** 2 * k.d3 * k.zeta3 ** 2 * k.ell_f ** 2
            / (k.c3 * k.mu3 ** 2)))
        assert rhs == pytest.approx(ref, rel=1e-14)
        assert rhs == pytest.approx(0.19802, abs=1e-4)
        assert rhs > k.mu_phi  # not certified without regularization


class TestDecayRate:
    def test_min_structure(self):
        from ofo.certificate import DominanceParams

        p = DominanceParams(mu1=1.0, theta1=0.5, mu2=1.0, theta2=0.5, c1=1.0, d1=1.0)
        assert decay_rate(p, 1.0, 2.0) == pytest.approx(0.5)
        assert decay_rate(p, 1.0, 0.1) == pytest.approx(0.05)
        assert decay_rate(p, 1.0, 1e9) == pytest.approx(0.5)

    def test_infeasible_xi_rejected(self):
        from ofo.certificate import DominanceParams

        p = DominanceParams(mu1=1.0, theta1=0.5, mu2=1.0, theta2=0.5, c1=1.0, d1=1.0)
        with pytest.raises(InputError, match="dominance"):
            decay_rate(p, 3.0, 1.0)
        with pytest.raises(InputError, match="dominance"):
            decay_rate(p, 0.2, 1.0)


class TestRequiredRegularization:
    def test_already_certified(self):
        k = all_ones(mu_phi=2.0, lip_grad_u=2.0)
        assert required_regularization(k) == 0.0

    def test_unit_gap(self):
        k = all_ones(mu_phi=0.5)
        assert required_regularization(k, margin=1e-6) == pytest.approx(0.5 + 1e-6, rel=1e-9)

    def test_round_trip_flips_verdict(self, fast_plant, quad_cost):
        k, _, _ = assemble_constants(fast_plant, quad_cost)
        assert not check_mu_bound(k)[0]
        mu4 = required_regularization(k)
        reg = RegularizedCost(base=quad_cost, mu4=mu4)
        k2, _, _ = assemble_constants(fast_plant, reg)
        assert check_mu_bound(k2)[0]
        assert feasible_xi(derive_dominance_params(k2)) is not None


class TestCertify:
    def test_alpha_independence(self, slow_sine_plant, sqrt_cost):
        overrides = {"c3": 0.33, "d3": 0.99, "mu3": 0.1485, "zeta3": 0.99}
        reports = [certify(slow_sine_plant, sqrt_cost, a, overrides)
                   for a in (1e-2, 1.0, 1e3)]
        assert len({r.certified for r in reports}) == 1
        assert len({(r.xi.lo, r.xi.hi) for r in reports}) == 1
        for r in reports:
            assert r.tau_at_alpha > 0.0

    def test_overrides_merge_and_flag(self, slow_sine_plant, sqrt_cost):
        report = certify(slow_sine_plant, sqrt_cost, 1.0,
                         {"c3": 0.33, "d3": 0.99, "mu3": 0.1485, "zeta3": 0.99})
        assert report.constants.c3 == 0.33
        assert report.constants.mu3 == 0.1485
        assert report.overridden == ("c3", "d3", "mu3", "zeta3")
        assert report.certified
        assert report.mu_bound_rhs == pytest.approx(7.532, abs=1e-3)

    def test_systematic_derivation_is_more_conservative(self, slow_sine_plant, sqrt_cost):
        report = certify(slow_sine_plant, sqrt_cost, 1.0)
        assert not report.certified
        assert report.mu_bound_rhs > report.constants.mu_phi

    def test_unknown_override_rejected(self, fast_plant, quad_cost):
        with pytest.raises(InputError, match="unknown certificate constant"):
            certify(fast_plant, quad_cost, 1.0, {"bogus": 1.0})

    def test_report_text_keys(self, slow_sine_plant, sqrt_cost):
        report = certify(slow_sine_plant, sqrt_cost, 10.0,
                         {"c3": 0.33, "d3": 0.99, "mu3": 0.1485, "zeta3": 0.99},
                         claimed_mu_bound_rhs=7.5)
        text = report.to_text()
        for name in CONSTANT_FIELDS + ("mu1", "theta1", "mu2", "theta2",
                                       "certified", "mu_bound_rhs",
                                       "claimed_mu_bound_rhs", "required_mu4",
                                       "tau_at_alpha", "xi_lo", "xi_hi", "xi_chosen"):
            assert f"{name} = " in text, name
        assert "c3 = 0.33  (override)" in text

    def test_scaling_covariance_of_verdict(self):
        # speeding the plant up or slowing it down must not change the verdict
        rng = random.Random(2024)
        for _ in range(30):
            a_rows = random_hurwitz_rows(rng, 2)
            b_rows = [[rng.uniform(-2, 2)] for _ in range(2)]
            bw_rows = [[rng.uniform(-2, 2)] for _ in range(2)]
            c_rows = [[rng.uniform(-2, 2), rng.uniform(-2, 2)]]
            cost = QuadraticCost(q_u=10 ** rng.uniform(-3, 1), q_y=10 ** rng.uniform(-1, 1))
            verdicts = []
            for scale in (1.0, 0.1, 10.0):
                plant = LinearPlant(
                    a=Matrix.from_rows([[v * scale for v in row] for row in a_rows]),
                    b=Matrix.from_rows([[v * scale for v in row] for row in b_rows]),
                    bw=Matrix.from_rows([[v * scale for v in row] for row in bw_rows]),
                    c=Matrix.from_rows(c_rows),
                    w=(0.0,))
                k, _, _ = assemble_constants(plant, cost)
                verdicts.append(check_mu_bound(k)[0])
            assert len(set(verdicts)) == 1, (a_rows, verdicts)

    def test_non_hurwitz_plant_not_certifiable(self):
        with pytest.raises(NotStabilizedError):
            LinearPlant(a=Matrix.from_rows([[0.0, 1.0], [0.0, 0.0]]),
                        b=Matrix.from_rows([[0.0], [1.0]]),
                        bw=Matrix.from_rows([[0.0], [1.0]]),
                        c=Matrix.from_rows([[1.0, 0.0]]),
                        w=(0.0,))
