"""Structured linear solves for the bordered CCPB Newton system.

The Newton matrix has the block form

    [ T + a a^T alpha + b b^T beta   w ] [dU]   [f]
    [ w^T                            0 ] [dl] = [g]

with T tridiagonal and nonsingular.  :func:`solve_bordered` factors T
once and eliminates the two rank-one terms and the border together
through a 3x3 capacitance system.  :func:`dense_bordered` builds the same
matrix explicitly and is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import SingularLinearSystem


@dataclass(frozen=True)
class BorderedJacobian:
    lower: np.ndarray  # T[i+1, i], length n-1
    diag: np.ndarray  # T[i, i], length n
    upper: np.ndarray  # T[i, i+1], length n-1
    a: np.ndarray
    alpha: float
    b: np.ndarray
    beta: float
    w: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def banded(self) -> np.ndarray:
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.upper
        ab[1, :] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def tridiagonal_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)
        )

    def dense(self) -> np.ndarray:
        """Full (n+1) x (n+1) bordered matrix."""
        n = self.n
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = (
            self.tridiagonal_dense()
            + self.alpha * np.outer(self.a, self.a)
            + self.beta * np.outer(self.b, self.b)
        )
        K[:n, n] = self.w
        K[n, :n] = self.w
        return K

    def matvec(self, x: np.ndarray, lam: float = 0.0) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        y += self.alpha * self.a * np.dot(self.a, x) + self.beta * self.b * np.dot(self.b, x)
        return y + self.w * lam


def solve_bordered(jac: BorderedJacobian, f: np.ndarray, g: float):
    """Solve the bordered system by tridiagonal factorisation plus block elimination.

    Returns ``(x, lam)``.
    """
    rhs = np.column_stack([f, jac.a, jac.b, jac.w])
    try:
        Z = solve_banded((1, 1), jac.banded(), rhs, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularLinearSystem(f"tridiagonal factorisation failed: {exc}") from exc
    zf, za, zb, zw = Z.T
    a, b, w = jac.a, jac.b, jac.w
    al, be = jac.alpha, jac.beta
    # unknowns s1 = a.x, s2 = b.x, lam
    C = np.array(
        [
            [1.0 + al * a @ za, be * a @ zb, a @ zw],
            [al * b @ za, 1.0 + be * b @ zb, b @ zw],
            [al * w @ za, be * w @ zb, w @ zw],
        ]
    )
    d = np.array([a @ zf, b @ zf, w @ zf - g])
    try:
        s1, s2, lam = np.linalg.solve(C, d)
    except np.linalg.LinAlgError as exc:
        raise SingularLinearSystem(f"capacitance system is singular: {exc}") from exc
    x = zf - al * s1 * za - be * s2 * zb - lam * zw
    if not np.all(np.isfinite(x)) or not np.isfinite(lam):
        raise SingularLinearSystem("non-finite solution of the bordered system")
    return x, float(lam)


def dense_bordered(jac: BorderedJacobian, f: np.ndarray, g: float):
    """Dense LU solve of the same bordered system (oracle path)."""
    K = jac.dense()
    rhs = np.append(f, g)
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularLinearSystem(str(exc)) from exc
    return sol[:-1], float(sol[-1])
