import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccpb.errors import SingularLinearSystem
from ccpb.linalg import BorderedJacobian, dense_bordered, solve_bordered
from ccpb.mesh import UniformSpec, build_mesh
from ccpb.model import p0
from ccpb.solver import assemble_system


def random_jacobian(rng, n):
    # diagonally dominant negative tridiagonal part, like the discrete Laplacian
    lower = rng.uniform(0.1, 1.0, n - 1)
    upper = lower.copy()
    diag = -np.concatenate([[0], lower]) - np.concatenate([upper, [0]]) - rng.uniform(0.01, 1.0, n)
    return BorderedJacobian(
        lower=lower,
        diag=diag,
        upper=upper,
        a=rng.uniform(0, 1, n),
        alpha=rng.uniform(0, 2),
        b=rng.uniform(0, 1, n),
        beta=rng.uniform(0, 2),
        w=rng.uniform(0.01, 1, n),
    )


class TestBorderedSolve:
    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(3, 64), seed=st.integers(0, 2**31 - 1))
    def test_matches_dense(self, n, seed):
        rng = np.random.default_rng(seed)
        jac = random_jacobian(rng, n)
        f = rng.normal(size=n)
        g = rng.normal()
        x, lam = solve_bordered(jac, f, g)
        xd, lamd = dense_bordered(jac, f, g)
        scale = max(1.0, np.max(np.abs(xd)))
        assert np.max(np.abs(x - xd)) <= 1e-10 * scale
        assert abs(lam - lamd) <= 1e-10 * max(1.0, abs(lamd))

    def test_residual_of_solution(self):
        rng = np.random.default_rng(3)
        jac = random_jacobian(rng, 20)
        f = rng.normal(size=20)
        x, lam = solve_bordered(jac, f, 0.7)
        assert np.allclose(jac.matvec(x, lam), f, atol=1e-12)
        assert jac.w @ x == pytest.approx(0.7, abs=1e-12)

    @pytest.mark.parametrize("M", [8, 31, 63])
    def test_assembled_jacobian_matches_dense(self, M):
        params = p0(0.1)
        mesh = build_mesh(params, UniformSpec(M))
        U = 0.3 * np.cos(3 * mesh.nodes)
        jac = assemble_system(params, mesh, U).jacobian
        f = np.sin(np.arange(M + 1.0))
        x, lam = solve_bordered(jac, f, 0.0)
        xd, lamd = dense_bordered(jac, f, 0.0)
        assert np.max(np.abs(x - xd)) <= 1e-10 * max(1.0, np.max(np.abs(xd)))

    def test_singular_tridiagonal(self):
        n = 4
        jac = BorderedJacobian(
            np.zeros(n - 1), np.zeros(n), np.zeros(n - 1), np.zeros(n), 0.0, np.zeros(n), 0.0, np.ones(n)
        )
        with pytest.raises(SingularLinearSystem):
            solve_bordered(jac, np.ones(n), 0.0)
