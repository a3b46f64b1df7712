import math
import random

import numpy as np
import pytest
import scipy.linalg

from ofo.errors import InputError, NotStabilizedError, SingularMatrixError
from ofo.linalg import (
    Matrix,
    inverse,
    solve_lyapunov,
    spectral_norm,
    sym_eigenvalues,
)

from conftest import random_hurwitz_rows, random_spd_rows


def as_np(m: Matrix) -> np.ndarray:
    return np.array(m.to_rows())


class TestSolveLyapunov:
    def test_negative_identity(self):
        p = solve_lyapunov(Matrix.identity(2).scale(-1.0), Matrix.identity(2))
        assert as_np(p) == pytest.approx(0.5 * np.eye(2), abs=1e-12)

    def test_resonant_example(self):
        a = Matrix.from_rows([[-1.0, 10.0], [-10.0, -1.0]])
        p = solve_lyapunov(a, Matrix.identity(2))
        assert as_np(p) == pytest.approx(0.5 * np.eye(2), abs=1e-11)
        residual = as_np(a) @ as_np(p) + as_np(p) @ as_np(a).T + np.eye(2)
        assert np.max(np.abs(residual)) <= 1e-10

    def test_round_trip_recovers_known_solution(self):
        # Q is chosen as -(A P0 + P0 A^T) for a given positive-definite P0;
        # the solver must recover P0.
        a = np.array([[0.0, -0.1], [0.1, -0.1]])
        p0 = np.array([[0.66, 0.33], [0.33, 0.66]])
        q = -(a @ p0 + p0 @ a.T)
        assert np.min(np.linalg.eigvalsh(q)) > 0.0
        p = solve_lyapunov(Matrix.from_rows(a.tolist()), Matrix.from_rows(q.tolist()))
        assert as_np(p) == pytest.approx(p0, abs=1e-10)

    def test_random_hurwitz_matches_scipy(self):
        rng = random.Random(20250809)
        for _ in range(25):
            n = rng.choice((2, 3, 4))
            a_rows = random_hurwitz_rows(rng, n)
            q_rows = random_spd_rows(rng, n)
            p = solve_lyapunov(Matrix.from_rows(a_rows), Matrix.from_rows(q_rows))
            a_np, q_np = np.array(a_rows), np.array(q_rows)
            residual = a_np @ as_np(p) + as_np(p) @ a_np.T + q_np
            assert np.max(np.abs(residual)) <= 1e-10 * max(1.0, np.max(np.abs(q_np)))
            assert p.symmetry_defect() <= 1e-12
            assert min(sym_eigenvalues(p)) > 0.0
            ref = scipy.linalg.solve_continuous_lyapunov(a_np, -q_np)
            assert as_np(p) == pytest.approx(ref, rel=1e-8, abs=1e-10)

    def test_non_hurwitz_rejected(self):
        with pytest.raises(NotStabilizedError, match="not pre-stabilized"):
            solve_lyapunov(Matrix.from_rows([[0.0, 1.0], [0.0, 0.0]]), Matrix.identity(2))
        # purely imaginary eigenvalues make the vectorized system singular
        with pytest.raises(NotStabilizedError):
            solve_lyapunov(Matrix.from_rows([[0.0, -1.0], [1.0, 0.0]]), Matrix.identity(2))
        # Hurwitz fails even if the solve is regular: P must be indefinite
        with pytest.raises(NotStabilizedError):
            solve_lyapunov(Matrix.from_rows([[1.0, 0.0], [0.0, -2.0]]), Matrix.identity(2))

    def test_input_validation(self):
        with pytest.raises(InputError):
            solve_lyapunov(Matrix.from_rows([[1.0, 2.0]]), Matrix.identity(2))
        with pytest.raises(InputError):
            solve_lyapunov(Matrix.identity(2).scale(-1.0), Matrix.identity(3))
        with pytest.raises(InputError, match="symmetric"):
            solve_lyapunov(Matrix.identity(2).scale(-1.0),
                           Matrix.from_rows([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(InputError, match="positive-definite"):
            solve_lyapunov(Matrix.identity(2).scale(-1.0),
                           Matrix.from_rows([[1.0, 0.0], [0.0, -1.0]]))


class TestSymEigenvalues:
    def test_identity(self):
        assert sym_eigenvalues(Matrix.identity(2)) == (1.0, 1.0)

    def test_two_by_two_closed_form(self):
        # eigenvalues of [[a, b], [b, a]] are a -+ b
        m = Matrix.from_rows([[0.66, 0.33], [0.33, 0.66]])
        assert sym_eigenvalues(m) == pytest.approx((0.33, 0.99), abs=1e-10)

    def test_diagonal(self):
        m = Matrix.from_rows([[3.0, 0.0], [0.0, -1.0]])
        assert sym_eigenvalues(m) == pytest.approx((-1.0, 3.0), abs=1e-14)

    def test_random_matches_numpy_and_charpoly(self):
        rng = random.Random(7)
        for _ in range(30):
            n = rng.choice((2, 3, 4, 5, 6))
            rows = random_spd_rows(rng, n)
            shift = rng.uniform(-2.0, 2.0)
            for i in range(n):
                rows[i][i] += shift
            m = Matrix.from_rows(rows)
            ours = sym_eigenvalues(m)
            ref = np.linalg.eigvalsh(np.array(rows))
            assert ours == pytest.approx(ref, rel=1e-10, abs=1e-10)
            scale = max(1.0, m.max_norm()) ** n
            for lam in ours:
                charpoly = abs(np.linalg.det(np.array(rows) - lam * np.eye(n)))
                assert charpoly <= 1e-8 * scale

    def test_asymmetric_rejected(self):
        with pytest.raises(InputError, match="symmetric"):
            sym_eigenvalues(Matrix.from_rows([[1.0, 2.0], [0.0, 1.0]]))


class TestSpectralNorm:
    def test_unit_column(self):
        assert spectral_norm(Matrix.from_rows([[0.0], [1.0]])) == pytest.approx(1.0, abs=1e-12)

    def test_identity(self):
        assert spectral_norm(Matrix.identity(2)) == pytest.approx(1.0, abs=1e-12)

    def test_scalar_gain(self):
        assert spectral_norm(Matrix.from_rows([[-10.0 / 101.0]])) == pytest.approx(10.0 / 101.0, abs=1e-12)

    def test_random_matches_numpy(self):
        rng = random.Random(11)
        for _ in range(30):
            r, c = rng.choice(((2, 2), (3, 2), (2, 4), (1, 3), (4, 1)))
            rows = [[rng.uniform(-3.0, 3.0) for _ in range(c)] for _ in range(r)]
            ours = spectral_norm(Matrix.from_rows(rows))
            ref = float(np.linalg.norm(np.array(rows), 2))
            assert ours == pytest.approx(ref, rel=1e-8, abs=1e-8)


class TestInverse:
    def test_identity(self):
        assert as_np(inverse(Matrix.identity(3))) == pytest.approx(np.eye(3), abs=1e-14)

    def test_resonant_example(self):
        m = Matrix.from_rows([[-1.0, 10.0], [-10.0, -1.0]])
        expected = np.array([[-1.0, -10.0], [10.0, -1.0]]) / 101.0
        assert as_np(inverse(m)) == pytest.approx(expected, abs=1e-14)

    def test_slow_plant_matrix(self):
        m = Matrix.from_rows([[0.0, -0.1], [0.1, -0.1]])
        expected = np.array([[-10.0, 10.0], [-10.0, 0.0]])
        assert as_np(inverse(m)) == pytest.approx(expected, abs=1e-12)

    def test_random_product_is_identity(self):
        rng = random.Random(13)
        for _ in range(25):
            n = rng.choice((2, 3, 4))
            rows = [[rng.uniform(-3.0, 3.0) for _ in range(n)] for _ in range(n)]
            if abs(np.linalg.det(np.array(rows))) < 1e-3:
                continue
            m = Matrix.from_rows(rows)
            prod = as_np(m.matmul(inverse(m)))
            assert np.max(np.abs(prod - np.eye(n))) <= 1e-10 * max(1.0, m.max_norm())

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrixError, match="singular plant matrix"):
            inverse(Matrix.from_rows([[1.0, 2.0], [2.0, 4.0]]))


class TestMatrixBasics:
    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            Matrix.from_rows([[math.inf, 0.0], [0.0, 1.0]])

    def test_ragged_rejected(self):
        with pytest.raises(InputError):
            Matrix.from_rows([[1.0, 2.0], [3.0]])

    def test_matvec_mismatch(self):
        with pytest.raises(InputError):
            Matrix.identity(2).matvec((1.0, 2.0, 3.0))
