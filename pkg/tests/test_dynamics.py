import math

import numpy as np
import pytest

from diamond_cavity.errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    ParameterError,
    WindowTooSmallError,
)
from diamond_cavity.physics.diamond_model import (
    FrameChoice,
    build_effective_hamiltonian,
    build_effective_lindblads,
    build_effective_nonhermitian,
    build_full_hamiltonian,
    build_lindblads,
    build_nonhermitian,
    effective_coefficients,
)
from diamond_cavity.physics.dynamics import (
    MappingOptions,
    NoJumpPropagator,
    Tolerances,
    evolve_lindblad,
    evolve_nonhermitian,
    find_t_pi_numeric,
    mapping_phase,
    no_jump_hamiltonian,
    mean_photon_b_analytic,
    photon_transfer_curve,
    state_mapping_report,
    t_pi_analytic,
    tpi_scan,
)
from diamond_cavity.physics.operator_core import HilbertSpace, Operator, destroy, embed

from conftest import G_10MHZ, params_in_g


class TestAnalyticFormulas:
    def test_mean_photon_formula(self):
        t = np.array([0.0, math.pi / 4.0, math.pi / 2.0])
        values = mean_photon_b_analytic(2.0, 0.0, 1.0, t)
        np.testing.assert_allclose(values, [0.0, 1.0, 2.0], atol=1e-14)

    def test_mean_photon_formula_detuned(self):
        """Test that δ₁ ≠ 0 caps the transferred fraction at 4δ₂²/δ_r²"""
        value = mean_photon_b_analytic(1.0, 2.0, 1.0, math.pi / math.sqrt(8.0))
        assert value == pytest.approx(0.5)

    def test_mean_photon_formula_uncoupled(self):
        with pytest.raises(ParameterError):
            mean_photon_b_analytic(1.0, 0.0, 0.0, 1.0)

    def test_t_pi_is_half_period(self, two_photon_params):
        coeffs = effective_coefficients(two_photon_params)
        assert t_pi_analytic(coeffs) == pytest.approx(math.pi / (2.0 * coeffs.delta2))
        assert t_pi_analytic(coeffs) * G_10MHZ == pytest.approx(33.18, rel=1e-3)

    def test_t_pi_uncoupled(self):
        coeffs = effective_coefficients(params_in_g(0.0, 11.0, 55.0, 55.0).replace(g=0.0))
        with pytest.raises(ParameterError):
            t_pi_analytic(coeffs)

    def test_mapping_phase(self):
        assert mapping_phase(1, 2.0, -2.0) == 0.0
        assert mapping_phase(3, 2.0, 0.0) == pytest.approx(-1.5 * math.pi)
        with pytest.raises(ParameterError):
            mapping_phase(1, 0.0, 1.0)


class TestEvolution:
    def test_no_jump_hamiltonian_matches_model(self):
        p = params_in_g(1.0, 11.0, 55.0, 55.0, 1.0, 0.5, 0.6, g=1.0, cutoff=1)
        space = HilbertSpace.cavity_atoms(1, 1)
        built = no_jump_hamiltonian(build_full_hamiltonian(p, space), build_lindblads(p, space))
        np.testing.assert_allclose(built.toarray(), build_nonhermitian(p, space).toarray(), atol=1e-12)

    def test_no_jump_hamiltonian_space_check(self):
        p = params_in_g(1.0, 11.0, 55.0, 55.0, 1.0, 1.0, 1.0, g=1.0, cutoff=1)
        h = build_full_hamiltonian(p, HilbertSpace.cavity_atoms(1, 1))
        with pytest.raises(DimensionMismatchError):
            no_jump_hamiltonian(h, build_lindblads(p, HilbertSpace.cavity_atoms(1, 2)))

    def test_lindblad_trace_and_positivity(self):
        p = params_in_g(1.0, 11.0, 55.0, 55.0, 1.0, 1.0, 1.0, g=1.0, cutoff=1)
        space = HilbertSpace.cavity_atoms(1, 1, sector=(0, 1))
        h = build_full_hamiltonian(p, space)
        ops = build_lindblads(p, space)
        rho0 = space.basis_ket((1, 0, 0)).to_density()
        result = evolve_lindblad(h, ops, rho0, np.linspace(0.0, 20.0, 21), Tolerances(rtol=1e-10, atol=1e-12))
        np.testing.assert_allclose(result["trace"], 1.0, atol=1e-8)
        assert min(state.min_eigenvalue() for state in result.states) >= -1e-8

    def test_cavity_decay(self):
        """Test H = 0, L = √κ a: ⟨a†a⟩ = e^{−κt} for |1>"""
        kappa = 0.7
        space = HilbertSpace.single_mode(1)
        a = Operator(space, destroy(1))
        times = np.linspace(0.0, 5.0, 11)
        result = evolve_lindblad(Operator(space, np.zeros((2, 2))), [math.sqrt(kappa) * a],
                                 space.basis_ket((1,)).to_density(), times, observables={"n": a.dag() @ a})
        np.testing.assert_allclose(result["n"], np.exp(-kappa * times), atol=1e-8)
        np.testing.assert_allclose(result["trace"], 1.0, atol=1e-8)

    def test_no_jump_norm_decay(self):
        """Test H̃ = −(iκ/2) a†a: ‖ψ‖² = e^{−κt} for |1>"""
        kappa = 0.7
        space = HilbertSpace.single_mode(1)
        a = Operator(space, destroy(1))
        h_tilde = no_jump_hamiltonian(Operator(space, np.zeros((2, 2))), [math.sqrt(kappa) * a])
        np.testing.assert_allclose(h_tilde.toarray(), -0.5j * kappa * (a.dag() @ a).toarray(), atol=1e-15)
        times = np.linspace(0.0, 5.0, 11)
        result = evolve_nonhermitian(h_tilde, space.basis_ket((1,)), times)
        np.testing.assert_allclose(result["norm_sq"], np.exp(-kappa * times), atol=1e-8)

    def test_effective_lindblad_follows_full_model(self):
        """Test ⟨b†b⟩ of the open effective master equation against the full model over one transfer"""
        p = params_in_g(1.0, 35.0, 175.0, 175.0, 2.0, 2.0, 0.0, g=1.0, cutoff=1)
        coeffs = effective_coefficients(p)
        times = np.linspace(0.0, t_pi_analytic(coeffs), 11)

        full_space = HilbertSpace.cavity_atoms(1, 1, sector=(0, 1))
        n_b_full = embed(destroy(1).conj().T @ destroy(1), "b", full_space)
        full = evolve_lindblad(build_full_hamiltonian(p, full_space), build_lindblads(p, full_space),
                               full_space.basis_ket((1, 0, 0)).to_density(), times,
                               observables={"n_b": n_b_full}, store_states=False)

        space = HilbertSpace.two_modes(1, sector=(0, 1))
        n_b = embed(destroy(1).conj().T @ destroy(1), "b", space)
        effective = evolve_lindblad(build_effective_hamiltonian(coeffs, space, FrameChoice.lab()),
                                    build_effective_lindblads(p, coeffs, space, "open"),
                                    space.basis_ket((1, 0)).to_density(), times,
                                    observables={"n_b": n_b}, store_states=False)
        np.testing.assert_allclose(effective["n_b"], full["n_b"], atol=0.03)
        assert effective["n_b"][-1] > 0.8
        np.testing.assert_allclose(effective["trace"], 1.0, atol=1e-8)

    def test_lindblad_matches_qutip(self):
        """Test ⟨b†b⟩ from the master equation against qutip.mesolve"""
        qutip = pytest.importorskip("qutip")
        p = params_in_g(1.0, 5.0, 12.0, 12.0, 0.5, 0.5, 0.2, g=1.0, cutoff=1)
        space = HilbertSpace.cavity_atoms(1, 1)
        h = build_full_hamiltonian(p, space)
        ops = build_lindblads(p, space)
        number_b = embed(destroy(1).conj().T @ destroy(1), "b", space)
        rho0 = space.basis_ket((1, 0, 0)).to_density()
        times = np.linspace(0.0, 10.0, 41)
        ours = evolve_lindblad(h, ops, rho0, times, observables={"n_b": number_b})

        dims = [list(space.dims), list(space.dims)]
        q_h = qutip.Qobj(h.toarray(), dims=dims)
        q_ops = [qutip.Qobj(op.toarray(), dims=dims) for op in ops]
        q_rho = qutip.Qobj(rho0.matrix, dims=dims)
        q_nb = qutip.Qobj(number_b.toarray(), dims=dims)
        theirs = qutip.mesolve(q_h, q_rho, times, q_ops, [q_nb])
        np.testing.assert_allclose(ours["n_b"], np.real(theirs.expect[0]), atol=1e-4)

    def test_nonhermitian_matches_propagator(self, two_photon_params):
        space = HilbertSpace.cavity_atoms(1, 2, sector=2)
        h_tilde = build_nonhermitian(two_photon_params, space)
        psi0 = space.basis_ket((2, 0, 0))
        t_end = 2.0e-7
        result = evolve_nonhermitian(h_tilde, psi0, [0.0, t_end])
        exact = NoJumpPropagator(h_tilde, psi0)(t_end)
        np.testing.assert_allclose(result.states[-1].amplitudes, exact, atol=1e-6)
        assert result["norm_sq"][-1] < 1.0

    def test_unnormalized_initial_ket_rejected(self, two_photon_params):
        space = HilbertSpace.cavity_atoms(1, 2, sector=2)
        h_tilde = build_nonhermitian(two_photon_params, space)
        psi0 = space.basis_ket((2, 0, 0)) * 2.0
        with pytest.raises(ParameterError):
            evolve_nonhermitian(h_tilde, psi0, [0.0, 1e-8])

    def test_space_mismatch_rejected(self, two_photon_params):
        h_tilde = build_nonhermitian(two_photon_params, HilbertSpace.cavity_atoms(1, 2, sector=2))
        psi0 = HilbertSpace.cavity_atoms(1, 2, sector=1).basis_ket((1, 0, 0))
        with pytest.raises(DimensionMismatchError):
            evolve_nonhermitian(h_tilde, psi0, [0.0, 1e-8])

    def test_decreasing_grid_rejected(self, two_photon_params):
        space = HilbertSpace.cavity_atoms(1, 2, sector=2)
        h_tilde = build_nonhermitian(two_photon_params, space)
        with pytest.raises(ParameterError):
            evolve_nonhermitian(h_tilde, space.basis_ket((2, 0, 0)), [1e-8, 0.0])

    def test_tolerance_validation(self):
        with pytest.raises(ParameterError):
            Tolerances(method="LSODA")
        with pytest.raises(ParameterError):
            Tolerances(rtol=0.0)


class TestPhotonTransfer:
    def test_two_photon_transfer_follows_analytic_curve(self, two_photon_params):
        """Test conditional ⟨b†b⟩ for |2>_A against 2 sin²(δ₂t) over two transfer times"""
        coeffs = effective_coefficients(two_photon_params)
        t_pi = math.pi / (2.0 * coeffs.delta2)
        times = np.linspace(0.0, 2.0 * t_pi, 201)
        curve = photon_transfer_curve(two_photon_params, 2, times)
        assert curve.n_ph == 2.0
        assert np.max(np.abs(curve.n_b_numeric - curve.n_b_analytic)) <= 0.15
        peak = int(np.argmax(curve.n_b_numeric))
        assert curve.n_b_numeric[peak] >= 1.8
        assert curve.times[peak] == pytest.approx(t_pi, rel=0.03)
        assert np.all(np.diff(curve.norm_sq) <= 1e-10)

    def test_zero_coupling_never_reaches_b(self):
        params = params_in_g(0.0, 11.0, 55.0, 55.0)
        curve = photon_transfer_curve(params, [0.0, 0.0, 1.0], np.linspace(0.0, 1e-6, 51))
        assert np.max(np.abs(curve.n_b_numeric)) <= 1e-12
        np.testing.assert_array_equal(curve.n_b_analytic, 0.0)
        np.testing.assert_allclose(curve.norm_sq, 1.0, atol=1e-7)

    def test_cutoff_too_small(self, two_photon_params):
        with pytest.raises(CutoffTooSmallError):
            photon_transfer_curve(two_photon_params.replace(cutoff=1), 2, [0.0, 1e-8])

    def test_vacuum_input_rejected(self, two_photon_params):
        with pytest.raises(ParameterError):
            photon_transfer_curve(two_photon_params, [1.0, 0.0], [0.0, 1e-8])


class TestTPiSearch:
    @pytest.fixture
    def lossless_transfer(self):
        coeffs = effective_coefficients(params_in_g(1.0, 11.0, 55.0, 55.0))
        space = HilbertSpace.two_modes(1, sector=1)
        h = build_effective_nonhermitian(coeffs, space)
        return coeffs, h, space.basis_ket((1, 0)), space.basis_ket((0, 1))

    def test_effective_model_peak(self, lossless_transfer):
        coeffs, h, psi0, target = lossless_transfer
        t_est = t_pi_analytic(coeffs)
        search = find_t_pi_numeric(h, psi0, target, (0.8 * t_est, 1.2 * t_est))
        assert search.t_pi == pytest.approx(t_est, rel=1e-6)
        assert search.population == pytest.approx(1.0, abs=1e-9)
        assert len(search.local_maxima) == 1

    def test_maximum_at_upper_edge(self, lossless_transfer):
        coeffs, h, psi0, target = lossless_transfer
        t_est = t_pi_analytic(coeffs)
        with pytest.raises(WindowTooSmallError) as info:
            find_t_pi_numeric(h, psi0, target, (0.1 * t_est, 0.5 * t_est))
        assert info.value.edge == "high"

    def test_maximum_at_lower_edge(self, lossless_transfer):
        coeffs, h, psi0, target = lossless_transfer
        t_est = t_pi_analytic(coeffs)
        with pytest.raises(WindowTooSmallError) as info:
            find_t_pi_numeric(h, psi0, target, (1.2 * t_est, 1.6 * t_est))
        assert info.value.edge == "low"

    def test_invalid_window(self, lossless_transfer):
        _, h, psi0, target = lossless_transfer
        with pytest.raises(ParameterError):
            find_t_pi_numeric(h, psi0, target, (2.0, 1.0))


class TestStateMapping:
    """叠加态 (|0>+|1>+|2>+|3>)/2 从 A 模映射到 B 模"""

    AMPLITUDES = [0.5, 0.5, 0.5, 0.5]

    def test_single_atom(self):
        params = params_in_g(1.0, 35.0, 175.0, 175.0, 2.0, 2.0, 1.0, n_atoms=1, cutoff=3)
        report = state_mapping_report(params, self.AMPLITUDES)
        assert report.fidelity == pytest.approx(0.995, abs=0.005)
        assert report.success_probability == pytest.approx(0.886, abs=0.01)
        assert report.t_pi * G_10MHZ == pytest.approx(105.6, rel=0.02)
        assert report.unconditional_fidelity == pytest.approx(report.fidelity * report.success_probability)
        assert report.phase_frame == "lab"

    @pytest.mark.slow
    def test_four_atoms(self):
        params = params_in_g(1.0, 35.0, 175.0, 175.0, 2.0, 2.0, 1.0, n_atoms=4, cutoff=3)
        report = state_mapping_report(params, self.AMPLITUDES)
        assert report.fidelity == pytest.approx(0.993, abs=0.005)
        assert report.success_probability == pytest.approx(0.885, abs=0.01)
        assert report.t_pi * G_10MHZ == pytest.approx(26.5, rel=0.02)

    def test_smaller_detuning(self):
        params = params_in_g(1.0, 17.0, 85.0, 85.0, 2.0, 2.0, 1.0, n_atoms=1, cutoff=3)
        report = state_mapping_report(params, self.AMPLITUDES)
        assert report.fidelity == pytest.approx(0.979, abs=0.005)
        assert report.success_probability == pytest.approx(0.795, abs=0.015)
        assert report.t_pi * G_10MHZ == pytest.approx(51.6, rel=0.02)

    def test_curve_attached(self, two_photon_params):
        report = state_mapping_report(two_photon_params, [0.0, 0.0, 1.0], MappingOptions(curve_points=11))
        assert report.curve is not None
        assert report.curve.times.size == 11
        assert report.curve.times[-1] == pytest.approx(2.0 * report.t_pi)
        assert len(report.warnings) == 2

    def test_unnormalized_input_rejected(self, two_photon_params):
        with pytest.raises(ParameterError):
            state_mapping_report(two_photon_params, [0.5, 0.5])

    def test_cutoff_too_small(self, two_photon_params):
        with pytest.raises(CutoffTooSmallError):
            state_mapping_report(two_photon_params, self.AMPLITUDES)

    def test_option_validation(self):
        with pytest.raises(ParameterError):
            MappingOptions(window_low=1.2, window_high=0.8)
        with pytest.raises(ParameterError):
            MappingOptions(phase_frame="rotating")
        with pytest.raises(ParameterError):
            MappingOptions(steps_per_tpi=5)


class TestTpiScan:
    @pytest.fixture(scope="class")
    def rows(self):
        sets = [
            ("delta10", params_in_g(1.0, 10.0, 33.0, 33.0)),
            ("delta20", params_in_g(1.0, 20.0, 66.0, 66.0)),
            ("delta30", params_in_g(1.0, 30.0, 100.0, 100.0)),
        ]
        return tpi_scan(sets, 9)

    def test_reference_point(self, rows):
        firsts = [r for r in rows if r.n_ph == 1]
        assert [r.label for r in firsts] == ["delta10", "delta20", "delta30"]
        assert all(r.deviation_percent == 0.0 and not r.jump for r in firsts)

    def test_well_detuned_set_stays_close(self, rows):
        deviations = [r.deviation_percent for r in rows if r.label == "delta30"]
        assert len(deviations) == 9
        assert max(abs(d) for d in deviations) < 3.0

    def test_marginal_set_drifts(self, rows):
        marginal = [r for r in rows if r.label == "delta10"]
        assert max(abs(r.deviation_percent) for r in marginal) > 3.0
        assert any(r.jump for r in marginal)

    def test_deviation_shrinks_with_detuning(self, rows):
        worst = [max(abs(r.deviation_percent) for r in rows if r.label == label)
                 for label in ("delta10", "delta20", "delta30")]
        assert worst[0] > worst[1] > worst[2]

    def test_custom_mapper_is_used(self):
        calls = []

        def mapper(fn, tasks):
            tasks = list(tasks)
            calls.append(len(tasks))
            return map(fn, tasks)

        rows = tpi_scan([("only", params_in_g(1.0, 30.0, 100.0, 100.0))], 2, mapper=mapper)
        assert calls == [2]
        assert [r.n_ph for r in rows] == [1, 2]

    def test_invalid_photon_range(self):
        with pytest.raises(ParameterError):
            tpi_scan([("only", params_in_g(1.0, 30.0, 100.0, 100.0))], 0)
