"""Benchmark systems with analytic oracles and error metrics.

Two-level atom: anti-diagonal Hamiltonian driven by a sin^2 pulse, solved in
closed form by the pulse integral.  Driven harmonic oscillator: expansion in
the unforced eigenbasis gives a tridiagonal ladder coupling; the exact
population probabilities follow from the classical forced-oscillator
trajectory, which we obtain by compounded Gauss panels on the Duhamel
integrals (cross-checked in the tests by an independent quadrature).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from itvolt import bandmat
from itvolt.propagator import HamiltonianModel
from itvolt.quadrature import gauss_legendre_rule

_PANEL_LENGTH = np.pi / 4
_PANEL_ORDER = 20


@dataclass(frozen=True)
class TwoLevelModel:
    """Resonantly driven two-level atom: H(t) = E(t) * swap,
    E(t) = (E0/2) sin^2(pi t / T)."""

    e0: float
    t_final: float

    def __post_init__(self):
        if self.e0 <= 0 or self.t_final <= 0:
            raise ValueError("amplitude and final time must be positive")

    @property
    def dim(self):
        return 2

    def pulse(self, t):
        s = math.sin(math.pi * t / self.t_final)
        return 0.5 * self.e0 * s * s

    def hamiltonian(self):
        h0 = bandmat.SymBanded(np.zeros((2, 2)))
        w = bandmat.SymBanded(np.array([[0.0, 0.0], [1.0, 0.0]]))
        return HamiltonianModel(h0=h0, w=w, pulse=self.pulse, analytic_expm_available=True)

    def initial_state(self):
        return np.array([1.0 + 0.0j, 0.0 + 0.0j])

    def oracle(self, times):
        return two_level_analytic(times, self.e0, self.t_final)


def two_level_analytic(t, e0, t_final):
    """Exact (ground, excited) amplitudes of the driven two-level atom.

    The phase is the integrated pulse area
    (E0/4) * (t - (T/2pi) sin(2 pi t / T)); normalization holds exactly.
    """
    t = np.asarray(t, dtype=float)
    phi = 0.25 * e0 * (t - (t_final / (2.0 * np.pi)) * np.sin(2.0 * np.pi * t / t_final))
    return np.cos(phi), -1j * np.sin(phi)


@dataclass(frozen=True)
class OscillatorModel:
    """Linearly driven harmonic oscillator in the unforced eigenbasis.

    H0 = diag(n + 1/2), ladder coupling sqrt(n/2) between states n-1 and n,
    pulse E0 sin^2(pi t / T) cos(omega0 t).  ``states`` truncates the basis.
    """

    e0: float
    t_final: float
    omega0: float
    states: int

    def __post_init__(self):
        if self.states < 2:
            raise ValueError("need at least two basis states")
        if self.e0 <= 0 or self.t_final <= 0:
            raise ValueError("amplitude and final time must be positive")

    @property
    def dim(self):
        return self.states

    def pulse(self, t):
        s = math.sin(math.pi * t / self.t_final)
        return self.e0 * s * s * math.cos(self.omega0 * t)

    def hamiltonian(self):
        m = self.states
        h0 = bandmat.SymBanded((np.arange(m) + 0.5)[None, :].copy())
        w_bands = np.zeros((2, m))
        w_bands[1, : m - 1] = np.sqrt(np.arange(1, m) / 2.0)
        w = bandmat.SymBanded(w_bands)
        return HamiltonianModel(h0=h0, w=w, pulse=self.pulse)

    def initial_state(self):
        psi = np.zeros(self.states, dtype=complex)
        psi[0] = 1.0
        return psi

    def trajectory(self, times):
        return classical_trajectory(times, self.e0, self.t_final, self.omega0)


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Position and momentum of the classical forced oscillator, starting
    from rest at the origin."""

    t: np.ndarray
    x0: np.ndarray
    p0: np.ndarray


def classical_trajectory(t, e0, t_final, omega0):
    """Duhamel solution of x'' + x = -E(t) at the requested times.

    x0(t) = -int_0^t sin(t-s) E(s) ds and p0 = x0', evaluated through the
    cumulative integrals of cos(s)E(s) and sin(s)E(s) on compounded
    Gauss-Legendre panels (order 20, panel length <= pi/4), good to about
    1e-12 absolute.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if times.size and (times.min() < -1e-12 or times.max() > t_final * (1 + 1e-12)):
        raise ValueError("trajectory times must lie in [0, t_final]")

    def pulse(s):
        return e0 * np.sin(np.pi * s / t_final) ** 2 * np.cos(omega0 * s)

    gx, gw = gauss_legendre_rule(_PANEL_ORDER, -1.0, 1.0)
    edges = np.unique(np.concatenate([[0.0], times]))
    cum_c = {0.0: 0.0}
    cum_s = {0.0: 0.0}
    c_acc = 0.0
    s_acc = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        n_panels = max(1, int(np.ceil((b - a) / _PANEL_LENGTH)))
        bounds = np.linspace(a, b, n_panels + 1)
        half = 0.5 * (bounds[1:] - bounds[:-1])
        mid = 0.5 * (bounds[1:] + bounds[:-1])
        pts = mid[:, None] + half[:, None] * gx[None, :]
        wts = half[:, None] * gw[None, :]
        e_vals = pulse(pts)
        c_acc += float(np.sum(wts * np.cos(pts) * e_vals))
        s_acc += float(np.sum(wts * np.sin(pts) * e_vals))
        cum_c[b] = c_acc
        cum_s[b] = s_acc
    c_at = np.array([cum_c[tt] for tt in times])
    s_at = np.array([cum_s[tt] for tt in times])
    x0 = -(np.sin(times) * c_at - np.cos(times) * s_at)
    p0 = -(np.cos(times) * c_at + np.sin(times) * s_at)
    if np.ndim(t) == 0:
        return ClassicalTrajectory(t=times[0], x0=x0[0], p0=p0[0])
    return ClassicalTrajectory(t=times, x0=x0, p0=p0)


def population_probabilities(traj, n_max):
    """P_0..P_n_max for the analytic oscillator solution started in the
    ground state.

    P_0 = exp(-(x0^2 + p0^2)/2), then the stable recurrence
    P_n = P_{n-1} * (2/n) * |h|^2 with h = (x0 + i p0)/2, which avoids the
    2^n/n! overflow of the closed form.
    """
    x0 = np.atleast_1d(np.asarray(traj.x0, dtype=float))
    p0 = np.atleast_1d(np.asarray(traj.p0, dtype=float))
    habs2 = 0.25 * (x0 * x0 + p0 * p0)
    out = np.empty((len(x0), n_max + 1))
    out[:, 0] = np.exp(-2.0 * habs2)
    for n in range(1, n_max + 1):
        out[:, n] = out[:, n - 1] * (2.0 / n) * habs2
    if np.ndim(traj.x0) == 0:
        return out[0]
    return out


def energy_expectation(traj):
    """<H0> along the trajectory: |x0 + i p0|^2 / 2 + 1/2."""
    x0 = np.asarray(traj.x0, dtype=float)
    p0 = np.asarray(traj.p0, dtype=float)
    return 0.5 * (x0 * x0 + p0 * p0) + 0.5


def energy_variance_check(traj, tail=1e-12):
    """(series variance, expectation - 1/2) for the analytic populations.

    The series side sums P_n E_n^2 - (P_n E_n)^2 with the truncation chosen
    so the neglected tail is below ``tail``; the identity of the two values
    is the energy-variance relation of the analytic solution.
    """
    x0 = np.atleast_1d(np.asarray(traj.x0, dtype=float))
    p0 = np.atleast_1d(np.asarray(traj.p0, dtype=float))
    lam = 0.5 * (x0 * x0 + p0 * p0)  # Poisson-like mean of the populations
    lam_max = float(np.max(lam)) if lam.size else 0.0
    n_max = int(np.ceil(lam_max + 14.0 * np.sqrt(lam_max + 1.0) + 40.0))
    probs = population_probabilities(
        ClassicalTrajectory(t=np.atleast_1d(traj.t), x0=x0, p0=p0), n_max
    )
    probs = np.atleast_2d(probs)
    energies = np.arange(n_max + 1) + 0.5
    tail_term = probs[:, -1] * energies[-1] ** 2
    if np.any(tail_term > tail):
        raise RuntimeError("population tail not converged below the requested bound")
    mean = probs @ energies
    # the shifted form of sum P_n E_n^2 - (sum P_n E_n)^2; the unshifted
    # difference loses ~6 digits to cancellation once the mean is large
    centered = energies[None, :] - mean[:, None]
    lhs = np.einsum("ij,ij->i", probs, centered * centered)
    rhs = energy_expectation(traj) - 0.5
    if np.ndim(traj.x0) == 0:
        return float(lhs[0]), float(np.atleast_1d(rhs)[0])
    return lhs, rhs


@dataclass
class ErrorMetrics:
    eps_sol: float
    eps_norm: float
    eps_sol_1: Optional[float] = None
    eps_sol_2: Optional[float] = None
    k_max: Optional[int] = None


def compute_metrics(trajectory, model):
    """Worst-case population error and norm deviation at the checkpoints.

    Two-level runs report the per-state worst cases (and their max as
    eps_sol); oscillator runs compare the ground-state probability against
    the classical-trajectory oracle.  Any non-finite checkpoint turns the
    metrics into inf.
    """
    times = np.asarray(trajectory.times, dtype=float)
    states = np.asarray(trajectory.states)
    if times.size == 0 or states.shape[0] != times.size:
        raise ValueError("trajectory checkpoints misaligned")
    if times.max() > model.t_final * (1 + 1e-12):
        raise ValueError("checkpoints extend past the model's final time")
    if not np.all(np.isfinite(states)):
        return ErrorMetrics(eps_sol=np.inf, eps_norm=np.inf, eps_sol_1=np.inf, eps_sol_2=np.inf)
    norms2 = np.sum(np.abs(states) ** 2, axis=1)
    eps_norm = float(np.max(np.abs(1.0 - norms2)))
    if isinstance(model, TwoLevelModel):
        cg, ce = model.oracle(times)
        eps1 = float(np.max(np.abs(np.abs(states[:, 0]) ** 2 - np.abs(cg) ** 2)))
        eps2 = float(np.max(np.abs(np.abs(states[:, 1]) ** 2 - np.abs(ce) ** 2)))
        return ErrorMetrics(eps_sol=max(eps1, eps2), eps_norm=eps_norm,
                            eps_sol_1=eps1, eps_sol_2=eps2)
    if isinstance(model, OscillatorModel):
        traj = model.trajectory(times)
        p0 = population_probabilities(traj, 0)[:, 0]
        eps_sol = float(np.max(np.abs(np.abs(states[:, 0]) ** 2 - p0)))
        return ErrorMetrics(eps_sol=eps_sol, eps_norm=eps_norm)
    raise TypeError(f"unknown model {model!r}")


def per_state_error(trajectory, model, n_states):
    """Mean over states 1..n_states of the worst-case probability error."""
    if not isinstance(model, OscillatorModel):
        raise TypeError("per-state errors are defined for the oscillator model")
    if n_states > model.states:
        raise ValueError("n_states exceeds the basis truncation")
    times = np.asarray(trajectory.times, dtype=float)
    states = np.asarray(trajectory.states)
    if not np.all(np.isfinite(states)):
        return np.inf
    probs = population_probabilities(model.trajectory(times), n_states)
    computed = np.abs(states[:, 1 : n_states + 1]) ** 2
    worst = np.max(np.abs(computed - probs[:, 1 : n_states + 1]), axis=0)
    return float(np.mean(worst))
