import math
from fractions import Fraction

import numpy as np
import pytest

from diamond_cavity.errors import ParameterError
from diamond_cavity.physics.cavity_params import (
    AtomPreset,
    CavityGeometry,
    MirrorSpec,
    coupling_g,
    damping_rates,
    kappa_gamma,
    mode_volume,
    round_trip_rate,
    to_ppm,
)

TWO_PI = 2.0 * math.pi
MHZ = 1e6


class TestMirrorSpec:
    def test_ppm_are_exact(self):
        assert to_ppm(3.15) == Fraction(315, 100)
        assert to_ppm("1.8") == Fraction(9, 5)
        assert to_ppm(Fraction(1, 3)) == Fraction(1, 3)

    def test_non_finite_ppm_rejected(self):
        with pytest.raises(ParameterError):
            to_ppm(math.nan)
        with pytest.raises(ParameterError):
            to_ppm(np.float64(math.inf))

    def test_numpy_scalars(self):
        assert to_ppm(np.float64(100.0)) == 100
        assert to_ppm(np.float64(3.15)) == Fraction(315, 100)
        assert to_ppm(np.float32(2.5)) == Fraction(5, 2)
        assert to_ppm(np.int64(7)) == 7

    def test_numpy_transmission_axis(self):
        """Test that T′₂ values taken from a numpy grid build mirrors"""
        axis = np.array([100.0, 800.0])
        base = MirrorSpec.symmetric(3.15, 1.8, axis[1], 0.05)
        assert base.t2_prime_ppm == 800
        assert base.with_t2_prime(axis[0]).t2_prime_ppm == 100

    def test_reflectivity_is_rational(self):
        mirrors = MirrorSpec.symmetric(3.15, 1.8, 800.0, 0.05)
        assert mirrors.r1 == 1 - Fraction(495, 100_000_000)
        assert mirrors.r2 == mirrors.r1 == mirrors.r1_prime
        assert mirrors.r2_prime == 1 - Fraction(80315, 100_000_000)

    def test_with_t2_prime(self):
        mirrors = MirrorSpec.symmetric(3.15, 1.8, 800.0, 0.05).with_t2_prime(2000)
        assert mirrors.t2_prime_ppm == 2000
        assert mirrors.t1_ppm == Fraction(9, 5)

    def test_out_of_range_transmission(self):
        with pytest.raises(ParameterError):
            MirrorSpec.symmetric(3.15, 1.8, 2_000_000, 0.05)

    def test_non_positive_radius(self):
        with pytest.raises(ParameterError):
            MirrorSpec.symmetric(3.15, 1.8, 800.0, 0.0)


class TestFormulas:
    def test_mode_volume_confocal(self):
        """Test V = πcl²/(4ω) when l = r"""
        omega = TWO_PI * 384.23e12
        v = mode_volume(0.05, 0.05, omega)
        assert v == pytest.approx(math.pi * 299792458.0 * 0.05 ** 2 / (4.0 * omega), rel=1e-12)

    def test_mode_volume_unstable_resonator(self):
        with pytest.raises(ParameterError):
            mode_volume(0.1, 0.05, 1.0)

    def test_coupling_scales_with_volume(self):
        g1 = coupling_g(1e15, 1e7, 1e-12)
        g4 = coupling_g(1e15, 1e7, 4e-12)
        assert g1 == pytest.approx(2.0 * g4)

    def test_coupling_validation(self):
        with pytest.raises(ParameterError):
            coupling_g(1e15, 0.0, 1e-12)

    def test_symmetric_round_trip(self):
        """Test c(1−R)/(l√R) for two identical mirrors"""
        r = 1 - Fraction(495, 100_000_000)
        expected = 299792458.0 * 4.95e-6 / (0.05 * math.sqrt(float(r)))
        assert round_trip_rate(r, r, 0.05) == pytest.approx(expected, rel=1e-9)

    def test_round_trip_validation(self):
        with pytest.raises(ParameterError):
            round_trip_rate(Fraction(1), Fraction(1), 0.05)

    def test_damping_split(self):
        mirrors = MirrorSpec.symmetric(3.15, 1.8, 800.0, 0.05)
        rates = damping_rates(mirrors, 0.05)
        assert rates.eta + rates.eta_prime == pytest.approx(rates.eta_tot)
        assert rates.eta / rates.eta_tot == pytest.approx(800.0 / (2 * 3.15 + 1.8 + 800.0))

    def test_kappa_gamma(self):
        assert kappa_gamma(1000, 2.0, 1.0, 700.0) == pytest.approx(2000.0 / 490000.0)
        with pytest.raises(ParameterError):
            kappa_gamma(1, 1.0, 1.0, 0.0)

    def test_geometry_validation(self):
        assert CavityGeometry.from_mm(50.0).length_m == pytest.approx(0.05)
        with pytest.raises(ParameterError):
            CavityGeometry(-1.0)

    def test_atom_preset_validation(self):
        with pytest.raises(ParameterError):
            AtomPreset("bad", omega=1.0, omega_prime=1.0, gamma=0.0, gamma_prime=1.0, gamma_dprime=0.0)


class TestDerivedSystem:
    """共焦腔 l = r = 50 mm，T′₂ = 800 ppm，n = 1000"""

    @pytest.fixture
    def system(self, manager, confocal_block):
        return manager.cavity_system(confocal_block)

    def test_summary_over_2pi(self, system):
        summary = system.summary_over_2pi()
        expected_mhz = {
            "g": 0.1, "g_prime": 0.29, "delta": 72.8, "omega": 364.0, "omega_prime": 989.0,
            "gamma": 1.4, "gamma_prime": 6.06, "gamma_dprime": 0.6, "eta_tot": 0.4, "kappa": 4.7e-3,
        }
        for key, value in expected_mhz.items():
            assert summary[key] / MHZ == pytest.approx(value, rel=0.05), key

    def test_zero_delta1(self, system):
        assert abs(system.coeffs.delta1) <= 1e-9 * abs(system.coeffs.delta2)

    def test_effective_coupling(self, system):
        assert system.coeffs.delta2 / TWO_PI / MHZ == pytest.approx(0.14, rel=0.05)
        assert system.kappa_gamma / TWO_PI / MHZ == pytest.approx(2.9e-3, rel=0.05)

    def test_langevin_rates(self, system):
        """Test the atomic loss rates ζ, θ in kHz"""
        rates = system.langevin().rates()
        expected_khz = {"zeta1": 1.3, "theta1": 1.2, "zeta2": 2.3, "theta2": 2.5}
        for key, value in expected_khz.items():
            assert rates[key] / TWO_PI / 1e3 == pytest.approx(value, rel=0.1), key

    def test_kappa_gamma_included_on_request(self, manager, confocal_block):
        plain = manager.cavity_system(confocal_block)
        closed = manager.cavity_system(dict(confocal_block, include_kappa_gamma=True))
        assert plain.kappa_effective == pytest.approx(plain.damping.kappa)
        assert closed.kappa_effective == pytest.approx(plain.damping.kappa + plain.kappa_gamma)

    def test_physical_params_are_consistent(self, system):
        p = system.params
        assert p.delta == pytest.approx(700.0 * p.g)
        assert p.omega == pytest.approx(5.0 * p.delta)
        assert p.gamma_dprime == pytest.approx(TWO_PI * 0.6217e6)
        assert p.n_atoms == 1000
