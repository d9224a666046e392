"""Reference propagators for comparison runs.

Short Iterative Lanczos and the Chebyshev propagator both advance the state
with a single midpoint-frozen matrix exponential per step (second order in
the step size and exactly unitary up to the inner tolerance); classical RK4
integrates psi' = -i H(t) psi directly and conserves nothing by
construction.
"""

import time
from dataclasses import dataclass
from typing import Union

import numpy as np

from itvolt import bandmat, expm
from itvolt.propagator import DIVERGENCE_FACTOR, Trajectory


@dataclass(frozen=True)
class SIL:
    dt: float
    tol: float = 1e-12
    max_iters: int = 30
    reorth_depth: int = 5

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("step size must be positive")

    def backend(self):
        return expm.Lanczos(tol=self.tol, max_iters=self.max_iters,
                            reorth_depth=self.reorth_depth)


@dataclass(frozen=True)
class ChebyshevProp:
    dt: float
    coeff_tol: float = 1e-15
    max_terms: int = 1000

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("step size must be positive")

    def backend(self):
        return expm.Chebyshev(coeff_tol=self.coeff_tol, max_terms=self.max_terms)


@dataclass(frozen=True)
class RK4:
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("step size must be positive")


ReferenceMethod = Union[SIL, ChebyshevProp, RK4]


def short_time_step(model, psi, t_a, t_b, backend):
    """One step of the short-time approximation: freeze H at the midpoint of
    [t_a, t_b] and apply its exponential."""
    if not t_a < t_b:
        raise ValueError("step must advance in time")
    h_mid = model.hamiltonian_at(0.5 * (t_a + t_b))
    prep = expm.prepare(h_mid, backend)
    return prep.apply(t_b - t_a, np.ascontiguousarray(psi, dtype=complex))


def rk4_step(model, psi, t_a, t_b):
    """Classical four-stage Runge-Kutta on psi' = -i H(t) psi."""
    h = t_b - t_a

    def rhs(t, y):
        return -1j * (bandmat.matvec(model.h0, y) + model.pulse(t) * bandmat.matvec(model.w, y))

    psi = np.ascontiguousarray(psi, dtype=complex)
    k1 = rhs(t_a, psi)
    k2 = rhs(t_a + 0.5 * h, psi + 0.5 * h * k1)
    k3 = rhs(t_a + 0.5 * h, psi + 0.5 * h * k2)
    k4 = rhs(t_b, psi + h * k3)
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class ReferenceReport:
    steps: int
    wall_time: float
    status: str  # converged | diverged


def reference_propagate(method, model, psi0, t0, t_final, backend=None,
                        checkpoint_stride=1):
    """Step uniformly from t0 to t_final, recording every
    ``checkpoint_stride``-th state (plus the endpoints).

    Norm blow-up or non-finite values abort the run with the partial
    trajectory and a diverged status.
    """
    steps_real = (t_final - t0) / method.dt
    steps = int(round(steps_real))
    if abs(steps_real - steps) > 1e-9 * max(1.0, abs(steps_real)):
        raise ValueError("(t_final - t0) / dt must be an integer")
    if backend is None and not isinstance(method, RK4):
        backend = method.backend()

    psi = np.ascontiguousarray(psi0, dtype=complex)
    limit = DIVERGENCE_FACTOR * max(np.linalg.norm(psi), 1e-30)
    times = [t0]
    states = [psi.copy()]
    status = "converged"
    clock = time.perf_counter()
    for j in range(steps):
        t_a = t0 + j * method.dt
        t_b = t0 + (j + 1) * method.dt
        if isinstance(method, RK4):
            psi = rk4_step(model, psi, t_a, t_b)
        else:
            psi = short_time_step(model, psi, t_a, t_b, backend)
        bad = not np.all(np.isfinite(psi)) or np.linalg.norm(psi) > limit
        if bad or (j + 1) % checkpoint_stride == 0 or j + 1 == steps:
            times.append(t_b)
            states.append(psi.copy())
        if bad:
            status = "diverged"
            break
    report = ReferenceReport(steps=len(times) - 1, wall_time=time.perf_counter() - clock,
                             status=status)
    return Trajectory(times=np.array(times), states=np.array(states)), report
