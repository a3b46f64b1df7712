import math
import random

import pytest

from ofo.costs import QuadraticCost, RegularizedCost, SqrtPlusCost, reduced_gradient
from ofo.errors import InputError
from ofo.linalg import Matrix


def fd_u(phi, u, y, step=1e-6):
    return (phi((u + step,), (y,)) - phi((u - step,), (y,))) / (2.0 * step)


def fd_y(phi, u, y, step=1e-6):
    return (phi((u,), (y + step,)) - phi((u,), (y - step,))) / (2.0 * step)


class TestGradients:
    def test_quadratic_origin(self):
        cost = QuadraticCost(q_u=0.01, q_y=1.0)
        assert cost.grad_u((0.0,), (0.0,)) == (0.0,)
        assert cost.grad_y((0.0,), (0.0,)) == (0.0,)

    def test_sqrtplus_values(self):
        cost = SqrtPlusCost(a=11.0)
        assert cost.grad_u((1.0,), (0.0,)) == (22.0,)
        assert cost.grad_y((1.0,), (0.0,)) == (0.0,)
        assert cost.grad_y((0.0,), (1.0,))[0] == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)

    @pytest.mark.parametrize("make_cost", [
        lambda: QuadraticCost(q_u=0.01, q_y=1.0),
        lambda: SqrtPlusCost(a=11.0),
        lambda: RegularizedCost(base=QuadraticCost(q_u=0.01, q_y=1.0), mu4=0.37),
        lambda: RegularizedCost(base=SqrtPlusCost(a=2.0), mu4=1.5),
    ])
    def test_gradients_match_finite_differences(self, make_cost):
        cost = make_cost()
        rng = random.Random(42)
        for _ in range(50):
            u = rng.uniform(-3.0, 3.0)
            y = rng.uniform(-3.0, 3.0)
            gu = cost.grad_u((u,), (y,))[0]
            gy = cost.grad_y((u,), (y,))[0]
            assert gu == pytest.approx(fd_u(cost.phi, u, y), rel=1e-6, abs=1e-7)
            assert gy == pytest.approx(fd_y(cost.phi, u, y), rel=1e-6, abs=1e-7)

    def test_strong_convexity_inequality(self):
        rng = random.Random(4242)
        costs = [
            (QuadraticCost(q_u=0.01, q_y=1.0), 0.02),
            (SqrtPlusCost(a=11.0), 22.0),
            (RegularizedCost(base=QuadraticCost(q_u=0.01, q_y=1.0), mu4=0.5), 0.52),
        ]
        for cost, mu in costs:
            for _ in range(50):
                u1 = (rng.uniform(-4.0, 4.0),)
                u2 = (rng.uniform(-4.0, 4.0),)
                if u1 == u2:
                    continue
                y = (rng.uniform(-4.0, 4.0),)
                lhs = (cost.grad_u(u1, y)[0] - cost.grad_u(u2, y)[0]) * (u1[0] - u2[0])
                assert lhs >= mu * (u1[0] - u2[0]) ** 2 * (1.0 - 1e-12)

    def test_sqrtplus_scalar_only(self):
        cost = SqrtPlusCost(a=1.0)
        with pytest.raises(InputError):
            cost.phi((1.0, 2.0), (0.0,))


class TestReducedGradient:
    def test_zero_at_decoupled_critical_point(self):
        cost = QuadraticCost(q_u=0.01, q_y=1.0)
        sens = Matrix.from_rows([[0.3]])
        assert reduced_gradient(cost, sens, (0.0,), (0.0,)) == (0.0,)

    def test_linear_example_value(self):
        cost = QuadraticCost(q_u=0.01, q_y=1.0)
        sens = Matrix.from_rows([[10.0 / 101.0]])
        rg = reduced_gradient(cost, sens, (0.0,), (1.0,))
        assert rg[0] == pytest.approx(20.0 / 101.0, abs=1e-12)

    def test_sine_example_value(self):
        cost = SqrtPlusCost(a=11.0)
        sens = Matrix.from_rows([[-2.0]])
        rg = reduced_gradient(cost, sens, (0.0,), (0.001,))
        assert rg[0] == pytest.approx(-0.002, abs=2e-9)

    def test_shape_mismatch(self):
        cost = QuadraticCost(q_u=1.0, q_y=1.0)
        with pytest.raises(InputError):
            reduced_gradient(cost, Matrix.from_rows([[1.0, 0.0]]), (1.0,), (1.0,))


class TestDescriptor:
    def test_quadratic_example(self):
        cost = QuadraticCost(q_u=0.01, q_y=1.0)
        d = cost.descriptor(ell_h=10.0 / 101.0)
        assert d.mu_phi == pytest.approx(0.02)
        assert d.lip_grad_u == pytest.approx(0.02)
        assert d.ell_phi_u == 0.0
        assert d.ell_phi_y == pytest.approx(20.0 / 101.0, abs=1e-12)
        assert d.y_factor == pytest.approx(2.0)

    def test_sqrtplus_example(self):
        cost = SqrtPlusCost(a=11.0)
        d = cost.descriptor(ell_h=2.0, ell_grad_h=1.0)
        assert d.mu_phi == pytest.approx(22.0)
        assert d.ell_phi_y == pytest.approx(2.0)
        assert d.ell_phi_u == pytest.approx(1.0)
        assert d.y_factor == pytest.approx(1.0)

    def test_regularization_adds_exactly(self):
        base = QuadraticCost(q_u=0.01, q_y=1.0)
        reg = RegularizedCost(base=base, mu4=0.5)
        d_base = base.descriptor(ell_h=0.3)
        d_reg = reg.descriptor(ell_h=0.3)
        assert d_reg.mu_phi == d_base.mu_phi + 0.5
        assert d_reg.lip_grad_u == d_base.lip_grad_u + 0.5
        assert d_reg.ell_phi_y == d_base.ell_phi_y
        assert d_reg.ell_phi_u == d_base.ell_phi_u

    def test_negative_moduli_rejected(self):
        with pytest.raises(InputError):
            QuadraticCost(q_u=1.0).descriptor(ell_h=-1.0)


class TestValidation:
    def test_weights(self):
        with pytest.raises(InputError):
            QuadraticCost(q_u=0.0)
        with pytest.raises(InputError):
            SqrtPlusCost(a=-1.0)
        with pytest.raises(InputError):
            RegularizedCost(base=QuadraticCost(q_u=1.0), mu4=-0.1)

    def test_regularized_kind_follows_base(self):
        assert RegularizedCost(base=SqrtPlusCost(a=1.0), mu4=0.1).kind == "sqrtplus"
