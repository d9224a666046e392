"""Strategies for applying exp(-i*H*dt) to a vector, H real symmetric banded.

Four interchangeable backends:

* ``Diagonalization`` -- exact Q exp(-i D dt) Q^T, limited to small orders.
* ``Lanczos`` -- Krylov projection with partial reorthogonalization; the
  small tridiagonal exponential is done by dense diagonalization.
* ``Chebyshev`` -- polynomial expansion of the spectrum-normalized operator
  with Bessel-function coefficients, matvec-only.
* ``AnalyticTwoLevel`` -- closed form for 2x2 anti-diagonal Hamiltonians.

``prepare`` caches whatever the backend can reuse across many dt values for
one fixed H (an interval's midpoint Hamiltonian); ``apply`` is reentrant and
a PreparedExponential may be shared across threads.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from itvolt import _kernels, bandmat


@dataclass(frozen=True)
class Diagonalization:
    dense_threshold: int = bandmat.DENSE_EIG_THRESHOLD


@dataclass(frozen=True)
class Lanczos:
    tol: float = 1e-12
    max_iters: int = 30
    reorth_depth: int = 5

    def __post_init__(self):
        if self.tol <= 0 or self.max_iters <= 0 or self.reorth_depth < 0:
            raise ValueError("Lanczos parameters must be positive")


@dataclass(frozen=True)
class Chebyshev:
    coeff_tol: float = 1e-15
    max_terms: int = 1000

    def __post_init__(self):
        if self.coeff_tol <= 0 or self.max_terms <= 0:
            raise ValueError("Chebyshev parameters must be positive")


@dataclass(frozen=True)
class AnalyticTwoLevel:
    pass


ExpmBackend = Union[Diagonalization, Lanczos, Chebyshev, AnalyticTwoLevel]

_DEGENERATE_SPAN = 1e-12


@dataclass(frozen=True)
class PreparedExponential:
    """Backend-specific cache bound to a single Hamiltonian."""

    h: bandmat.SymBanded
    backend: ExpmBackend
    eig: Optional[bandmat.EigenDecomposition] = None
    bounds: Optional[tuple] = None
    bands_norm: Optional[np.ndarray] = None
    coupling: float = 0.0  # anti-diagonal entry for the analytic 2x2 case

    def spectral_pair(self):
        """(eigenvalues, eigenvectors) when the backend is spectral, else None.

        The propagator batches exponential applies through this pair for the
        Diagonalization and AnalyticTwoLevel backends.
        """
        if self.eig is not None:
            return self.eig.eigenvalues, self.eig.eigenvectors
        if isinstance(self.backend, AnalyticTwoLevel):
            c = self.coupling
            lam = np.array([-c, c])
            q = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2.0)
            return lam, q
        return None

    def apply(self, dt, v):
        return apply(self, dt, v)


def prepare(h, backend):
    """Build the per-Hamiltonian cache for the chosen backend."""
    if isinstance(backend, Diagonalization):
        eig = bandmat.eigendecompose(h, dense_threshold=backend.dense_threshold)
        return PreparedExponential(h=h, backend=backend, eig=eig)
    if isinstance(backend, Chebyshev):
        lo, hi = bandmat.eigen_extent(h)
        span = hi - lo
        bands_norm = None
        if span >= _DEGENERATE_SPAN:
            bands_norm = (2.0 / span) * h.bands
            bands_norm = np.ascontiguousarray(bands_norm)
            bands_norm[0] -= 2.0 * lo / span + 1.0
        return PreparedExponential(
            h=h, backend=backend, bounds=(lo, hi), bands_norm=bands_norm
        )
    if isinstance(backend, AnalyticTwoLevel):
        if h.order != 2 or h.half_bandwidth != 1:
            raise ValueError("analytic backend requires a 2x2 anti-diagonal matrix")
        if np.any(h.bands[0] != 0.0):
            raise ValueError("analytic backend requires zero diagonal")
        return PreparedExponential(h=h, backend=backend, coupling=float(h.bands[1, 0]))
    if isinstance(backend, Lanczos):
        return PreparedExponential(h=h, backend=backend)
    raise TypeError(f"unknown backend {backend!r}")


def apply(prep, dt, v):
    """exp(-i*H*dt) @ v; dt of either sign, dt == 0 returns v bit-exactly."""
    v = np.ascontiguousarray(v, dtype=complex)
    if v.shape != (prep.h.order,):
        raise ValueError("vector length does not match the prepared Hamiltonian")
    if dt == 0.0:
        return v.copy()
    backend = prep.backend
    if isinstance(backend, Diagonalization):
        q = prep.eig.eigenvectors
        phase = np.exp(-1j * prep.eig.eigenvalues * dt)
        return q @ (phase * (q.T @ v))
    if isinstance(backend, AnalyticTwoLevel):
        theta = prep.coupling * dt
        c, s = math.cos(theta), math.sin(theta)
        return np.array([c * v[0] - 1j * s * v[1], -1j * s * v[0] + c * v[1]])
    if isinstance(backend, Chebyshev):
        return _apply_chebyshev(prep, dt, v)
    if isinstance(backend, Lanczos):
        return _apply_lanczos(prep, dt, v)
    raise TypeError(f"unknown backend {backend!r}")


def _chebyshev_coefficients(x, phase, coeff_tol, max_terms):
    """Coefficient table (2 - delta_0n) * phase * J_n(x), truncated at the first
    coefficient below coeff_tol; falls back to max_terms with a warning.

    The sub-threshold test is restricted to orders n >= x, where J_n(x)
    decays monotonically: in the oscillatory region a coefficient can dip
    through an isolated Bessel zero without the tail being small.
    """
    guess = int(math.ceil(x)) + 20 + int(math.ceil(10.0 * math.log1p(x)))
    n_table = min(max(guess, 8), max_terms)
    while True:
        table = _kernels.bessel_j_table(x, n_table - 1)
        mags = 2.0 * np.abs(table)
        mags[0] *= 0.5
        below = np.nonzero((mags < coeff_tol) & (np.arange(n_table) >= x))[0]
        if below.size:
            cut = below[0] + 1  # keep the first sub-threshold coefficient
            break
        if n_table >= max_terms:
            warnings.warn(
                "Chebyshev expansion truncated at max_terms with coefficients "
                "still above coeff_tol",
                RuntimeWarning,
            )
            cut = max_terms
            break
        n_table = min(2 * n_table, max_terms)
    coeffs = (2.0 * phase) * table[:cut].astype(complex)
    coeffs[0] *= 0.5
    return coeffs


def _apply_chebyshev(prep, dt, v):
    lo, hi = prep.bounds
    span = hi - lo
    if span < _DEGENERATE_SPAN:
        return np.exp(-1j * 0.5 * (lo + hi) * dt) * v
    backend = prep.backend
    x = 0.5 * span * abs(dt)
    phase = np.exp(-1j * (0.5 * span + lo) * dt)
    coeffs = _chebyshev_coefficients(x, phase, backend.coeff_tol, backend.max_terms)
    sigma = 1.0 if dt > 0 else -1.0
    return _kernels.cheb_apply(prep.bands_norm, coeffs, sigma, v)


def _apply_lanczos(prep, dt, v):
    """Krylov-subspace exponential with per-step convergence monitoring.

    Stops when the coefficient-space difference between the k- and
    (k-1)-vector reconstructions drops below tol*||v||, on breakdown (the
    Krylov space is then invariant and the result exact), or at max_iters.
    """
    backend = prep.backend
    h = prep.h
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return v.copy()
    m_max = min(backend.max_iters, h.order)
    basis = [v / norm_v]
    alphas = []
    betas = []
    u_prev = None
    for k in range(1, m_max + 1):
        w = _kernels.sb_matvec(h.bands, basis[-1])
        alphas.append(float(np.real(np.vdot(basis[-1], w))))
        w = w - alphas[-1] * basis[-1]
        if len(basis) > 1:
            w = w - betas[-1] * basis[-2]
        if backend.reorth_depth > 0:
            for q in basis[-backend.reorth_depth:]:
                w = w - np.vdot(q, w) * q
        beta = float(np.linalg.norm(w))
        u = _tridiag_expm_e1(alphas, betas, dt) * norm_v
        if u_prev is not None:
            diff = u.copy()
            diff[: len(u_prev)] -= u_prev
            if np.linalg.norm(diff) <= backend.tol * norm_v:
                u_prev = u
                break
        u_prev = u
        if beta < 1e-14 * norm_v or k == m_max:
            break
        betas.append(beta)
        basis.append(w / beta)
    m = len(u_prev)
    out = np.zeros_like(v)
    for i in range(m):
        out += u_prev[i] * basis[i]
    return out


def _tridiag_expm_e1(alphas, betas, dt):
    """exp(-i*T*dt) e_1 for the Lanczos tridiagonal T via dense eigensolve."""
    m = len(alphas)
    bands = np.zeros((2 if m > 1 else 1, m))
    bands[0] = alphas
    if m > 1:
        bands[1, : m - 1] = betas[: m - 1]
    eig = bandmat.eigendecompose(bandmat.SymBanded(bands))
    q = eig.eigenvectors
    return q @ (np.exp(-1j * eig.eigenvalues * dt) * q[0])
