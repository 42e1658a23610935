import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsgpe import ModelParams, Nonlinearity, Potential, WaveField, bright_soliton, build_grid
from nlsgpe.linsolve import (FixedPointError, FixedPointPolicy, ResonanceError, Tridiag, TridiagFactor,
                             ZeroPivotError, fast_poisson_dst, fd_laplacian_eigenvalues, fixed_point_solve,
                             thomas_solve)
from nlsgpe.operators import FDSpace, fd_laplacian_1d
from nlsgpe.schemes import cnfd_step, make_state

from conftest import random_dirichlet


def _tri(n, lo, di, up, cyclic=False):
    return Tridiag(np.full(n, lo, complex), np.full(n, di, complex), np.full(n, up, complex), cyclic)


class TestThomas:
    def test_identity(self, rng):
        rhs = rng.standard_normal(7) + 1j
        np.testing.assert_array_equal(thomas_solve(_tri(7, 0, 1, 0), rhs), rhs)

    def test_small_system_vs_dense(self):
        m = _tri(3, 1.0, 4.0, 1.0)
        rhs = np.array([6.0, 12.0, 6.0])
        np.testing.assert_allclose(thomas_solve(m, rhs), np.linalg.solve(m.to_dense(), rhs), atol=1e-15)
        np.testing.assert_allclose(thomas_solve(m, rhs), [6 / 7, 18 / 7, 6 / 7], atol=1e-14)

    @given(n=st.integers(3, 40), seed=st.integers(0, 2**16), cyclic=st.booleans())
    def test_dense_oracle(self, n, seed, cyclic):
        rng = np.random.default_rng(seed)
        lo, up = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
        di = 4.0 + np.abs(lo) + np.abs(up) + rng.standard_normal(n) * 1j
        m = Tridiag(lo, di, up, cyclic)
        rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        np.testing.assert_allclose(thomas_solve(m, rhs), np.linalg.solve(m.to_dense(), rhs), atol=1e-12)
        np.testing.assert_allclose(m.matvec(rhs), m.to_dense() @ rhs, atol=1e-12)

    def test_cn_operator_round_trip(self, rng):
        g = build_grid(0.0, 4.0, 40)  # h = 0.1
        tau, eps = 0.1, 1.0
        L = fd_laplacian_1d(g)
        M = Tridiag(-0.25j * tau * eps * L.lower, 1.0 - 0.25j * tau * eps * L.diag, -0.25j * tau * eps * L.upper)
        x = rng.standard_normal(M.n) + 1j * rng.standard_normal(M.n)
        np.testing.assert_allclose(TridiagFactor(M).solve(M.matvec(x)), x, atol=1e-12)

    def test_zero_pivot(self):
        with pytest.raises(ZeroPivotError):
            thomas_solve(_tri(3, 1.0, 0.0, 1.0), np.ones(3))

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            Tridiag(np.ones(2), np.ones(3), np.ones(3))
        with pytest.raises(ValueError):
            _tri(2, 1, 2, 1, cyclic=True)


class TestFixedPoint:
    def test_argument_free_map_is_one_sweep(self):
        x, k = fixed_point_solve(lambda x: np.array([2.0]), np.array([0.0]))
        assert k == 1 and x[0] == 2.0

    def test_contraction(self):
        x, k = fixed_point_solve(lambda x: np.cos(x), np.array([1.0]), FixedPointPolicy(tol=1e-14, max_iter=200))
        assert x[0] == pytest.approx(0.7390851332151607, abs=1e-13)

    def test_max_iter(self):
        with pytest.raises(FixedPointError) as exc:
            fixed_point_solve(lambda x: np.cos(x), np.array([1.0]), FixedPointPolicy(max_iter=1))
        assert exc.value.iterations == 1

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            FixedPointPolicy(tol=0.0)
        with pytest.raises(ValueError):
            FixedPointPolicy(max_iter=0)
        with pytest.raises(ValueError):
            FixedPointPolicy(mode="anderson")

    def test_cnfd_step_against_tight_tolerance(self, soliton_grid, soliton_field, focusing):
        nl = Nonlinearity.cubic(-1.0)
        out = {}
        for tol in (1e-12, 1e-15):
            st_ = make_state("CNFD", soliton_grid, policy=FixedPointPolicy(tol=tol, max_iter=200))
            out[tol] = cnfd_step(st_, soliton_field, focusing, Potential.zero(), nl, 1e-3).values
        assert np.max(np.abs(out[1e-12] - out[1e-15])) <= 1e-11

    def test_strong_nonlinearity_one_sweep_fails(self, soliton_grid):
        f = WaveField.sample(soliton_grid, lambda x: 10 * bright_soliton(0.0, x, A=5.0))
        st_ = make_state("CNFD", soliton_grid, policy=FixedPointPolicy(max_iter=1))
        with pytest.raises(FixedPointError):
            cnfd_step(st_, f, ModelParams(beta=-1.0), Potential.zero(), Nonlinearity.cubic(-1.0), 0.1)

    def test_newton_mode_agrees(self, soliton_grid, soliton_field, focusing):
        nl = Nonlinearity.cubic(-1.0)
        a = cnfd_step(make_state("CNFD", soliton_grid, policy=FixedPointPolicy(1e-14)), soliton_field,
                      focusing, Potential.zero(), nl, 1e-2)
        b = cnfd_step(make_state("CNFD", soliton_grid, policy=FixedPointPolicy(1e-14, mode="newton")),
                      soliton_field, focusing, Potential.zero(), nl, 1e-2)
        assert np.max(np.abs(a.values - b.values)) <= 1e-12


def _dense_laplacian_2d(g):
    (hx, hy), (Jx, Jy) = g.h, (g.axes[0].J, g.axes[1].J)
    def d2(n, h):
        return (np.diag(-2 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2
    return np.kron(d2(Jx - 1, hx), np.eye(Jy - 1)) + np.kron(np.eye(Jx - 1), d2(Jy - 1, hy))


class TestFastPoisson:
    def test_eigenmode(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], [16, 16])
        X, Y = g.mesh
        mode = np.sin(np.pi * X) * np.sin(np.pi * Y)
        shift = 2.0 + 1j
        lam = fd_laplacian_eigenvalues(g)[0, 0]
        assert lam == pytest.approx(-2 * 4 * 16**2 * np.sin(np.pi / 32) ** 2)
        u = fast_poisson_dst(g, shift, mode)
        np.testing.assert_allclose(u, mode / (shift - 0.5 * lam), atol=1e-13)

    def test_dense_oracle(self, rng):
        g = build_grid([0.0, -1.0], [1.0, 2.0], [16, 16])
        rhs = random_dirichlet(rng, g.shape)
        shift, eps = 0.3 - 0.7j, 0.8
        A = shift * np.eye(15 * 15) - 0.5 * eps**2 * _dense_laplacian_2d(g)
        want = np.linalg.solve(A, rhs[1:-1, 1:-1].ravel()).reshape(15, 15)
        got = fast_poisson_dst(g, shift, rhs, epsilon=eps)
        np.testing.assert_allclose(got[1:-1, 1:-1], want, atol=1e-11)
        assert not np.any(got[0]) and not np.any(got[:, -1])

    def test_resonance(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], [8, 8])
        lam = fd_laplacian_eigenvalues(g)
        with pytest.raises(ResonanceError):
            fast_poisson_dst(g, 0.5 * lam[1, 2], np.ones(g.shape))

    def test_needs_dirichlet(self):
        with pytest.raises(ValueError):
            fd_laplacian_eigenvalues(build_grid(0.0, 1.0, 8, "periodic"))


class TestFDSpace:
    @pytest.mark.parametrize("bc,n", [("dirichlet", 7), ("periodic", 8), ("neumann", 9)])
    def test_active_sizes(self, bc, n):
        sp = FDSpace(build_grid(0.0, 1.0, 8, bc))
        assert sp.L.n == n

    def test_neumann_mirror_ghosts(self):
        g = build_grid(0.0, 1.0, 8, "neumann")
        x = g.x
        sp = FDSpace(g)
        # cos(pi x) has zero slope at both ends; the mirror stencil is exact up to O(h^2)
        lap = sp.lap(np.cos(np.pi * x).astype(complex))
        np.testing.assert_allclose(lap.real, -np.pi**2 * np.cos(np.pi * x), atol=0.2)

    def test_2d_solver_round_trip(self, rng):
        g = build_grid([0.0, 0.0], [1.0, 1.0], [8, 8])
        sp = FDSpace(g)
        u = rng.standard_normal((7, 7)) + 0j
        solve = sp.solver(1.0 + 0.5j, 0.1j)
        np.testing.assert_allclose(solve(sp.apply(1.0 + 0.5j, 0.1j, u)), u, atol=1e-13)

    def test_2d_periodic_unsupported(self):
        with pytest.raises(NotImplementedError):
            FDSpace(build_grid([0.0, 0.0], [1.0, 1.0], [8, 8], "periodic"))
