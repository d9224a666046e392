import numpy as np
import pytest

from itvolt import bandmat, expm, models, propagator, refsolvers

from conftest import random_complex


def small_oscillator(states=50, t_final=10.0):
    return models.OscillatorModel(e0=1.0, t_final=t_final, omega0=1.0, states=states)


class TestShortTimeStep:
    def test_constant_pulse_exact(self, rng):
        lam = np.array([0.3, 1.1, 2.9])
        ham = propagator.HamiltonianModel(
            h0=bandmat.SymBanded(lam[None, :].copy()),
            w=bandmat.SymBanded(np.zeros((1, 3))),
            pulse=lambda t: 0.0,
        )
        psi = random_complex(rng, 3)
        out = refsolvers.short_time_step(ham, psi, 0.0, 0.5, expm.Diagonalization())
        assert np.allclose(out, np.exp(-1j * lam * 0.5) * psi, atol=1e-13)

    def test_two_level_rotation(self):
        model = models.TwoLevelModel(e0=1.0, t_final=10.0)
        ham = model.hamiltonian()
        psi = np.array([1.0 + 0j, 0.0])
        out = refsolvers.short_time_step(ham, psi, 0.0, 2.0, expm.AnalyticTwoLevel())
        theta = ham.pulse(1.0) * 2.0
        assert np.allclose(out, [np.cos(theta), -1j * np.sin(theta)], atol=1e-14)

    def test_norm_preserved(self, rng):
        model = small_oscillator()
        ham = model.hamiltonian()
        psi = random_complex(rng, 50)
        psi /= np.linalg.norm(psi)
        out = refsolvers.short_time_step(ham, psi, 1.0, 1.5, expm.Chebyshev())
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12


class TestRk4Step:
    def test_phase_accuracy_small_step(self):
        lam = np.array([0.5, 1.5])
        ham = propagator.HamiltonianModel(
            h0=bandmat.SymBanded(lam[None, :].copy()),
            w=bandmat.SymBanded(np.zeros((1, 2))),
            pulse=lambda t: 0.0,
        )
        psi = np.array([1.0 + 0j, 1.0 + 0j]) / np.sqrt(2)
        h = 1e-3
        out = refsolvers.rk4_step(ham, psi, 0.0, h)
        want = np.exp(-1j * lam * h) * psi
        assert np.abs(out - want).max() < 1e-15

    def test_fourth_order_convergence(self, rng):
        # autonomous diagonal case with the exact phase oracle
        lam = np.array([2.0, 5.0, 9.0])
        ham = propagator.HamiltonianModel(
            h0=bandmat.SymBanded(lam[None, :].copy()),
            w=bandmat.SymBanded(np.zeros((1, 3))),
            pulse=lambda t: 0.0,
        )
        psi0 = np.ones(3, dtype=complex) / np.sqrt(3)

        def error(dt):
            traj, _ = refsolvers.reference_propagate(
                refsolvers.RK4(dt=dt), ham, psi0, 0.0, 2.0
            )
            return np.linalg.norm(traj.states[-1] - np.exp(-2j * lam) * psi0)

        ratio = error(0.02) / error(0.01)
        assert 13.0 <= ratio <= 19.0


class TestReferencePropagate:
    def test_zero_steps_rejected_fractional(self):
        model = small_oscillator()
        with pytest.raises(ValueError):
            refsolvers.reference_propagate(
                refsolvers.RK4(dt=0.3), model.hamiltonian(), model.initial_state(), 0.0, 1.0
            )

    def test_identity_when_interval_empty(self):
        model = small_oscillator()
        psi0 = model.initial_state()
        traj, report = refsolvers.reference_propagate(
            refsolvers.RK4(dt=0.5), model.hamiltonian(), psi0, 0.0, 0.0
        )
        assert len(traj.times) == 1
        assert np.array_equal(traj.states[0], psi0)

    def test_sil_chebyshev_same_short_time_limit(self):
        # with tight inner tolerances both evaluate the same map
        model = small_oscillator(states=40, t_final=4.0)
        psi0 = model.initial_state()
        ham = model.hamiltonian()
        sil, _ = refsolvers.reference_propagate(
            refsolvers.SIL(dt=0.05, tol=1e-14, max_iters=40), ham, psi0, 0.0, 4.0
        )
        cheb, _ = refsolvers.reference_propagate(
            refsolvers.ChebyshevProp(dt=0.05), ham, psi0, 0.0, 4.0
        )
        assert np.abs(sil.states[-1] - cheb.states[-1]).max() < 1e-9

    def test_short_time_norm_preservation_any_dt(self):
        model = small_oscillator(states=30, t_final=3.0)
        psi0 = model.initial_state()
        traj, _ = refsolvers.reference_propagate(
            refsolvers.SIL(dt=0.5, tol=1e-12), model.hamiltonian(), psi0, 0.0, 3.0
        )
        norms = np.linalg.norm(traj.states, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-11

    def test_second_order_error_halving(self):
        model = small_oscillator(states=50, t_final=10.0)
        psi0 = model.initial_state()

        def eps_sol(dt):
            traj, _ = refsolvers.reference_propagate(
                refsolvers.SIL(dt=dt, tol=1e-13, max_iters=40), model.hamiltonian(), psi0, 0.0, 10.0
            )
            return models.compute_metrics(traj, model).eps_sol

        ratio = eps_sol(0.02) / eps_sol(0.01)
        assert 3.5 <= ratio <= 4.5

    def test_rk4_divergence_aborts(self):
        # start in the highest state so the unstable modes are populated
        model = small_oscillator(states=120, t_final=5.0)
        psi0 = np.zeros(120, dtype=complex)
        psi0[-1] = 1.0
        traj, report = refsolvers.reference_propagate(
            refsolvers.RK4(dt=0.5), model.hamiltonian(), psi0, 0.0, 5.0
        )
        assert report.status == "diverged"
        assert traj.times[-1] < 5.0

    def test_checkpoint_stride(self):
        model = small_oscillator(states=10, t_final=1.0)
        traj, _ = refsolvers.reference_propagate(
            refsolvers.SIL(dt=0.1), model.hamiltonian(), model.initial_state(), 0.0, 1.0,
            checkpoint_stride=5,
        )
        assert np.allclose(traj.times, [0.0, 0.5, 1.0])
