"""Small dense linear algebra on plain Python floats.

Everything here is sized for desk-scale control problems (a handful of states),
so the algorithms favour exactness and testability over asymptotic speed:
Lyapunov equations are solved by vectorizing the n^2 x n^2 linear system,
symmetric eigenvalues come from cyclic Jacobi sweeps, and matrices are
immutable tuples safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError, NotStabilizedError, SingularMatrixError

Vector = tuple[float, ...]

#: Residual bound every successful Lyapunov solve must meet.
LYAPUNOV_RESIDUAL_TOL = 1e-10

_JACOBI_SWEEP_LIMIT = 100
_JACOBI_OFFDIAG_TOL = 1e-14
_SINGULARITY_TOL = 1e-12


def as_vector(values: Iterable[float], name: str = "vector") -> Vector:
    """Coerce an iterable of numbers to an immutable, all-finite vector."""
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise InputError(f"{name} contains a non-finite entry")
    return out


@dataclass(frozen=True)
class Matrix:
    """Immutable dense matrix stored row-major."""

    rows: int
    cols: int
    data: Vector

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise InputError("matrix dimensions must be positive")
        if len(self.data) != self.rows * self.cols:
            raise InputError("matrix data length does not match its dimensions")
        for v in self.data:
            if not math.isfinite(v):
                raise InputError("matrix contains a non-finite entry")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "Matrix":
        if not rows:
            raise InputError("matrix must have at least one row")
        width = len(rows[0])
        flat: list[float] = []
        for r in rows:
            if len(r) != width:
                raise InputError("matrix rows have inconsistent widths")
            flat.extend(float(v) for v in r)
        return cls(len(rows), width, tuple(flat))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(n, n, tuple(1.0 if i == j else 0.0 for i in range(n) for j in range(n)))

    def entry(self, i: int, j: int) -> float:
        return self.data[i * self.cols + j]

    def row(self, i: int) -> Vector:
        return self.data[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list[list[float]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "Matrix":
        return Matrix(self.cols, self.rows,
                      tuple(self.entry(i, j) for j in range(self.cols) for i in range(self.rows)))

    def matvec(self, v: Sequence[float]) -> Vector:
        if len(v) != self.cols:
            raise InputError(f"matvec dimension mismatch: {self.rows}x{self.cols} with vector of length {len(v)}")
        out = []
        for i in range(self.rows):
            acc = 0.0
            base = i * self.cols
            for j in range(self.cols):
                acc += self.data[base + j] * v[j]
            out.append(acc)
        return tuple(out)

    def matmul(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise InputError("matmul dimension mismatch")
        out = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = 0.0
                for k in range(self.cols):
                    acc += self.entry(i, k) * other.entry(k, j)
                out.append(acc)
        return Matrix(self.rows, other.cols, tuple(out))

    def add(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise InputError("matrix addition dimension mismatch")
        return Matrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.data, other.data)))

    def scale(self, factor: float) -> "Matrix":
        return Matrix(self.rows, self.cols, tuple(factor * v for v in self.data))

    def neg(self) -> "Matrix":
        return self.scale(-1.0)

    def max_norm(self) -> float:
        return max(abs(v) for v in self.data)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def symmetry_defect(self) -> float:
        if not self.is_square():
            raise InputError("symmetry defect needs a square matrix")
        return max(
            (abs(self.entry(i, j) - self.entry(j, i)) for i in range(self.rows) for j in range(i)),
            default=0.0,
        )


def _solve_dense(a: list[list[float]], b: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting; raises on singular systems."""
    n = len(a)
    scale = max((max(abs(v) for v in row) for row in a), default=0.0)
    piv_tol = _SINGULARITY_TOL * max(1.0, scale)
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[pivot_row][col]) <= piv_tol:
            raise SingularMatrixError("linear system is singular")
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
            b[col], b[pivot_row] = b[pivot_row], b[col]
        inv_pivot = 1.0 / a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] * inv_pivot
            if factor == 0.0:
                continue
            for c in range(col, n):
                a[r][c] -= factor * a[col][c]
            b[r] -= factor * b[col]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc -= a[i][j] * x[j]
        x[i] = acc / a[i][i]
    return x


def solve_lyapunov(a: Matrix, q: Matrix) -> Matrix:
    """Solve A P + P A^T = -Q for symmetric positive-definite P.

    Q must be symmetric positive-definite; a positive-definite solution exists
    exactly when A is Hurwitz, so failure (singular system or an indefinite P)
    is reported as "plant not pre-stabilized".
    """
    if not a.is_square():
        raise InputError("Lyapunov solve needs a square A")
    n = a.rows
    if q.rows != n or q.cols != n:
        raise InputError("Lyapunov solve dimension mismatch between A and Q")
    if q.symmetry_defect() > 1e-12 * max(1.0, q.max_norm()):
        raise InputError("Q must be symmetric")
    if min(sym_eigenvalues(q)) <= 0.0:
        raise InputError("Q must be positive-definite")

    # Row-major vectorization: vec(A P) = (A (x) I) vec(P), vec(P A^T) = (I (x) A) vec(P).
    size = n * n
    k = [[0.0] * size for _ in range(size)]
    rhs = [0.0] * size
    for i in range(n):
        for j in range(n):
            r = i * n + j
            rhs[r] = -q.entry(i, j)
            for l in range(n):
                k[r][i * n + l] += a.entry(j, l)
                k[r][l * n + j] += a.entry(i, l)
    try:
        vec_p = _solve_dense(k, rhs)
    except SingularMatrixError as exc:
        raise NotStabilizedError("plant not pre-stabilized: Lyapunov system is singular") from exc

    # Exact symmetrization; the equation is symmetric in exact arithmetic.
    sym = tuple(0.5 * (vec_p[i * n + j] + vec_p[j * n + i]) for i in range(n) for j in range(n))
    p = Matrix(n, n, sym)

    residual = a.matmul(p).add(p.matmul(a.transpose())).add(q).max_norm()
    if residual > LYAPUNOV_RESIDUAL_TOL * max(1.0, q.max_norm()):
        raise NotStabilizedError(
            f"plant not pre-stabilized: Lyapunov residual {residual:.3e} exceeds tolerance")
    if min(sym_eigenvalues(p)) <= 0.0:
        raise NotStabilizedError("plant not pre-stabilized: Lyapunov solution is not positive-definite")
    return p


def sym_eigenvalues(m: Matrix) -> Vector:
    """Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi rotations."""
    if not m.is_square():
        raise InputError("eigenvalues need a square matrix")
    scale = max(1.0, m.max_norm())
    if m.symmetry_defect() > 1e-12 * scale:
        raise InputError("matrix is not symmetric")
    n = m.rows
    a = [list(m.row(i)) for i in range(n)]
    if n == 1:
        return (a[0][0],)
    tol = _JACOBI_OFFDIAG_TOL * scale
    for _ in range(_JACOBI_SWEEP_LIMIT):
        off = max(abs(a[i][j]) for i in range(n) for j in range(n) if i != j)
        if off <= tol:
            break
        for p_idx in range(n - 1):
            for q_idx in range(p_idx + 1, n):
                apq = a[p_idx][q_idx]
                if abs(apq) <= tol:
                    continue
                tau = (a[q_idx][q_idx] - a[p_idx][p_idx]) / (2.0 * apq)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k in (p_idx, q_idx):
                        continue
                    akp, akq = a[k][p_idx], a[k][q_idx]
                    a[k][p_idx] = c * akp - s * akq
                    a[p_idx][k] = a[k][p_idx]
                    a[k][q_idx] = s * akp + c * akq
                    a[q_idx][k] = a[k][q_idx]
                app, aqq = a[p_idx][p_idx], a[q_idx][q_idx]
                a[p_idx][p_idx] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q_idx][q_idx] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p_idx][q_idx] = 0.0
                a[q_idx][p_idx] = 0.0
    return tuple(sorted(a[i][i] for i in range(n)))


def spectral_norm(m: Matrix) -> float:
    """Largest singular value, computed as sqrt(lambda_max(M^T M))."""
    gram = m.transpose().matmul(m)
    return math.sqrt(max(0.0, max(sym_eigenvalues(gram))))


def inverse(m: Matrix) -> Matrix:
    """Dense inverse by Gauss-Jordan elimination with partial pivoting."""
    if not m.is_square():
        raise InputError("inverse needs a square matrix")
    n = m.rows
    a = [list(m.row(i)) + [1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    piv_tol = _SINGULARITY_TOL * max(1.0, m.max_norm())
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[pivot_row][col]) <= piv_tol:
            raise SingularMatrixError("singular plant matrix")
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
        inv_pivot = 1.0 / a[col][col]
        for c in range(2 * n):
            a[col][c] *= inv_pivot
        for r in range(n):
            if r == col:
                continue
            factor = a[r][col]
            if factor == 0.0:
                continue
            for c in range(2 * n):
                a[r][c] -= factor * a[col][c]
    inv = Matrix(n, n, tuple(a[i][n + j] for i in range(n) for j in range(n)))
    check = m.matmul(inv).add(Matrix.identity(n).neg()).max_norm()
    if check > 1e-10 * max(1.0, m.max_norm()):
        raise SingularMatrixError("singular plant matrix")
    return inv


def vec_add(a: Sequence[float], b: Sequence[float]) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence[float], b: Sequence[float]) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(a: Sequence[float], factor: float) -> Vector:
    return tuple(factor * x for x in a)


def vec_norm(a: Sequence[float]) -> float:
    return math.sqrt(sum(x * x for x in a))


def quad_form(p: Matrix, v: Sequence[float]) -> float:
    """v^T P v."""
    pv = p.matvec(v)
    return sum(x * y for x, y in zip(v, pv))
