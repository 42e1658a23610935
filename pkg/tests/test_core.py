import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from nlsgpe import (BC, Damping, ModelParams, Nonlinearity, Potential, WaveField, bright_soliton,
                    build_grid, dispersion_omega, eval_G, soliton_energy, soliton_mass)
from nlsgpe.core import Axis, enforce_bc


class TestGrid:
    def test_unit_interval_nodes_and_first_wavenumber(self):
        g = build_grid(0.0, 1.0, 4)
        np.testing.assert_array_equal(g.x, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert g.axes[0].wavenumbers[0] == pytest.approx(np.pi)

    def test_soliton_domain_spacing(self):
        g = build_grid(-15.0, 20.0, 10000)
        assert g.h[0] == pytest.approx(3.5e-3, rel=1e-14)
        assert g.x[-1] == 20.0

    @pytest.mark.parametrize("J", [5, 3, 2, 0, -4, 4.5])
    def test_bad_cell_counts(self, J):
        with pytest.raises(ValueError):
            build_grid(0.0, 1.0, J)

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            build_grid(1.0, 0.0, 4)

    def test_two_dimensional(self):
        g = build_grid([-1.0, 0.0], [1.0, 2.0], [4, 8], ["periodic", "dirichlet"])
        assert g.shape == (5, 9)
        assert g.axes[0].bc is BC.PERIODIC
        X, Y = g.mesh
        assert X.shape == Y.shape == (5, 9)
        assert g.cell_volume == pytest.approx(0.5 * 0.25)
        with pytest.raises(ValueError):
            g.bc

    def test_wavenumbers_per_basis(self):
        assert len(Axis(0, 2, 8).wavenumbers) == 7
        assert len(Axis(0, 2, 8, BC.NEUMANN).wavenumbers) == 9
        k = Axis(0, 2 * np.pi, 8, BC.PERIODIC).wavenumbers
        np.testing.assert_allclose(k, np.fft.fftfreq(8, 1 / 8))

    def test_enforce_bc(self):
        g = build_grid(0.0, 1.0, 4, "periodic")
        v = enforce_bc(g, np.arange(5.0))
        assert v[-1] == v[0] == 0.0
        gd = build_grid(0.0, 1.0, 4)
        assert np.all(enforce_bc(gd, np.ones(5))[[0, -1]] == 0)

    def test_field_shape_checked(self):
        with pytest.raises(ValueError):
            WaveField(build_grid(0.0, 1.0, 4), np.zeros(4))


class TestNonlinearity:
    def test_cubic_quotient_example(self):
        assert eval_G(Nonlinearity.cubic(1.0), 2.0, 0.0) == pytest.approx(1.0)

    def test_quintic_part_example(self):
        # F(rho) = rho^3 / 3 for f = rho^2, so (F(1) - F(0)) / 1 is int_0^1 theta^2 dtheta
        oracle, _ = integrate.quad(lambda th: th**2, 0.0, 1.0)
        assert eval_G(Nonlinearity.cubic_quintic(0.0, 1.0), 1.0, 0.0) == pytest.approx(oracle, abs=1e-15)

    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            eval_G(Nonlinearity.cubic(1.0), -1.0, 0.0)

    def test_saturating_needs_positive_c0(self):
        with pytest.raises(ValueError):
            Nonlinearity.saturating(1.0, 0.0)

    @pytest.mark.parametrize("nl", [
        Nonlinearity.cubic(-1.3),
        Nonlinearity.cubic_quintic(0.7, -0.4),
        Nonlinearity.saturating(2.0, 0.5),
        Nonlinearity.custom(lambda r: np.sin(r) + r**2),
    ])
    @given(r1=st.floats(0.0, 10.0), r2=st.floats(0.0, 10.0))
    def test_quotient_properties(self, nl, r1, r2):
        g = eval_G(nl, r1, r2)
        assert g == pytest.approx(eval_G(nl, r2, r1), rel=1e-12, abs=1e-12)
        if abs(r1 - r2) > 1e-3:
            want = (float(nl.F(r1)) - float(nl.F(r2))) / (r1 - r2)
            assert g == pytest.approx(want, rel=1e-9, abs=1e-9)
        else:
            assert g == pytest.approx(float(nl.f(0.5 * (r1 + r2))), rel=1e-5, abs=1e-5)

    @given(r=st.floats(0.0, 20.0))
    def test_equal_densities_give_f(self, r):
        for nl in (Nonlinearity.cubic(2.0), Nonlinearity.cubic_quintic(1.0, 0.5), Nonlinearity.saturating(1.0, 2.0)):
            assert eval_G(nl, r, r) == pytest.approx(float(nl.f(r)), rel=1e-12, abs=1e-14)

    @given(r=st.floats(0.0, 5.0))
    def test_primitives_against_quadrature(self, r):
        for nl in (Nonlinearity.cubic_quintic(1.0, -0.5), Nonlinearity.saturating(3.0, 0.7)):
            oracle, _ = integrate.quad(lambda s: float(nl.f(s)), 0.0, r, epsabs=1e-14)
            assert float(nl.F(r)) == pytest.approx(oracle, rel=1e-10, abs=1e-13)

    def test_custom_matches_closed_form(self):
        r = np.linspace(0.0, 4.0, 9)
        cq = Nonlinearity.cubic_quintic(0.3, 0.2)
        custom = Nonlinearity.custom(lambda s: 0.3 * s + 0.2 * s**2)
        np.testing.assert_allclose(custom.F(r), cq.F(r), rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(custom.G(r, r[::-1]), cq.G(r, r[::-1]), rtol=1e-13, atol=1e-15)

    def test_cubic_coefficient(self):
        assert Nonlinearity.cubic(-2.0).beta == -2.0
        assert Nonlinearity.zero().is_zero
        with pytest.raises(ValueError):
            Nonlinearity.saturating(1.0, 1.0).beta


class TestSoliton:
    def test_peak_value(self):
        assert bright_soliton(0.0, 0.0) == 2.0 + 0.0j

    def test_mass(self):
        assert soliton_mass(2.0, -1.0) == 4.0

    def test_mass_and_energy_against_quadrature(self):
        def rho(x):
            return abs(bright_soliton(0.0, x, A=2.0, v=1.0)) ** 2

        def energy_density(x, dx=1e-5):
            d = (bright_soliton(0.0, x + dx, A=2.0, v=1.0) - bright_soliton(0.0, x - dx, A=2.0, v=1.0)) / (2 * dx)
            return 0.5 * abs(d) ** 2 - 0.5 * rho(x) ** 2

        n, _ = integrate.quad(rho, -40, 40, limit=200)
        e, _ = integrate.quad(energy_density, -40, 40, limit=200)
        assert n == pytest.approx(soliton_mass(2.0, -1.0), rel=1e-10)
        assert e == pytest.approx(soliton_energy(2.0, 1.0, -1.0), abs=1e-7)

    def test_energy_value(self):
        assert soliton_energy(2.0, 1.0, -1.0) == pytest.approx(-2.0 / 3.0)

    def test_travels(self):
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(abs(bright_soliton(2.0, x + 2.0)), abs(bright_soliton(0.0, x)), rtol=1e-14)

    def test_defocusing_rejected(self):
        with pytest.raises(ValueError):
            bright_soliton(0.0, 0.0, beta=1.0)
        with pytest.raises(ValueError):
            soliton_mass(2.0, 0.0)


class TestDispersion:
    def test_rest_frame(self):
        assert dispersion_omega(ModelParams(beta=3.0), Nonlinearity.cubic(3.0), 1.0, 0.0) == 3.0

    def test_free(self):
        assert dispersion_omega(ModelParams(), Nonlinearity.zero(), 1.0, 2.0) == 2.0

    def test_semiclassical_substitution(self):
        w = dispersion_omega(ModelParams(epsilon=0.5, beta=1.0), Nonlinearity.cubic(1.0), 1.0, 1.0)
        assert w == pytest.approx(2.25)

    def test_vector_wavenumber(self):
        w = dispersion_omega(ModelParams(), Nonlinearity.zero(), 1.0, (3.0, 4.0))
        assert w == pytest.approx(12.5)


class TestParamsAndPotentials:
    @pytest.mark.parametrize("eps", [0.0, -1.0, 1.5])
    def test_epsilon_range(self, eps):
        with pytest.raises(ValueError):
            ModelParams(epsilon=eps)

    def test_coupling_symmetry(self):
        assert ModelParams(beta12=2.0).beta21 == 2.0
        with pytest.raises(ValueError):
            ModelParams(beta12=2.0, beta21=1.0)

    def test_damping_validation(self):
        with pytest.raises(ValueError):
            Damping("cubic", -1.0)
        with pytest.raises(ValueError):
            Damping("sextic", 1.0)
        assert not Damping("linear", 0.0).active
        np.testing.assert_allclose(Damping("quintic", 2.0).g([1.0, 2.0]), [2.0, 8.0])

    def test_harmonic(self):
        V = Potential.harmonic((1.0, 2.0))
        assert V.evaluate(np.array(1.0), np.array(1.0)) == pytest.approx(2.5)
        assert V.is_harmonic
        assert Potential.attractive(1.0).evaluate(np.array(2.0)) == pytest.approx(-2.0)

    def test_shift_and_constant(self):
        g = build_grid(0.0, 1.0, 4)
        np.testing.assert_allclose(Potential.zero().shifted(0.5).on(g), 0.5)
        np.testing.assert_allclose(Potential.constant(2.0).on(g), 2.0)

    def test_lattice(self):
        V = Potential.lattice([2.0], [np.pi])
        assert V.evaluate(np.array(1.0)) == pytest.approx(-2.0)

    def test_tabulated_only_on_its_grid(self):
        g = build_grid(0.0, 1.0, 4)
        V = Potential.tabulated(g, np.arange(5.0))
        np.testing.assert_array_equal(V.on(g), np.arange(5.0))
        with pytest.raises(ValueError):
            V.on(build_grid(0.0, 2.0, 4))
        with pytest.raises(ValueError):
            Potential.tabulated(g, np.arange(4.0))

    def test_quench_is_time_dependent(self):
        V = Potential.quench(lambda t: 1.0 + t, lambda t: 1.0)
        assert V.time_dependent and not V.is_harmonic
        assert V.evaluate(np.array(1.0), np.array(0.0), t=1.0) == pytest.approx(2.0)
