"""Iterative Volterra propagator.

Each propagation interval freezes the Hamiltonian at its midpoint, turns the
remaining time dependence into a Volterra integral term, discretizes that
term on Gauss-Lobatto nodes with the semi-global weight matrix, and solves
the resulting linear system for the wavefunction at all nodes by Jacobi,
Gauss-Seidel, or GMRES iteration.  The last node seeds the next interval.

Exponential applies are batched through the eigenbasis when the backend is
spectral (Diagonalization, AnalyticTwoLevel); the iterative backends
(Lanczos, Chebyshev) recompute each apply.
"""

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from itvolt import bandmat, expm
from itvolt.quadrature import gauss_lobatto_nodes, lagrange_weight_matrix

DIVERGENCE_FACTOR = 1e6
ITERATION_MATRIX_CAP = 4096


@dataclass(frozen=True)
class HamiltonianModel:
    """H(t) = h0 + pulse(t) * w with h0, w real symmetric banded."""

    h0: bandmat.SymBanded
    w: bandmat.SymBanded
    pulse: Callable[[float], float]
    analytic_expm_available: bool = False

    def __post_init__(self):
        if self.h0.order != self.w.order:
            raise ValueError("h0 and w orders differ")

    @property
    def dim(self):
        return self.h0.order

    def hamiltonian_at(self, t):
        return bandmat.combine(self.h0, self.w, self.pulse(t))


@dataclass(frozen=True)
class IntervalOperators:
    """Frozen per-interval data: midpoint Hamiltonian, its prepared
    exponential, and the scalar kernel values pulse(t_i) - pulse(midpoint)."""

    t_start: float
    t_end: float
    f_mid: float
    h_j: bandmat.SymBanded
    w: bandmat.SymBanded
    node_times: np.ndarray
    rel_times: np.ndarray
    v_scalars: np.ndarray
    prep: expm.PreparedExponential

    @property
    def n(self):
        return len(self.node_times)

    @property
    def dim(self):
        return self.h_j.order


@dataclass
class IterateSet:
    """Wavefunction values at the interval nodes; row 0 stays pinned to the
    incoming boundary value throughout the iteration."""

    values: np.ndarray
    iteration: int = 0
    diverged: bool = False


@dataclass(frozen=True)
class SolverSettings:
    scheme: str = "jacobi"  # jacobi | gauss-seidel | gmres
    tol: float = 1e-10
    max_iters: Optional[int] = None  # default 2n-2; GMRES hard-capped at d(n-1)
    diagnostics: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("jacobi", "gauss-seidel", "gmres"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class IntervalReport:
    iterations_used: int
    converged: bool
    diverged: bool
    final_update_norm: float
    residual_norm: Optional[float] = None
    residual_history: Optional[list] = None
    rho_estimate: Optional[float] = None
    wall_time: float = 0.0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray


@dataclass
class PropagationReport:
    intervals: list = field(default_factory=list)
    k_max: int = 0
    rho_max: Optional[float] = None
    wall_time: float = 0.0
    status: str = "converged"  # converged | max-iter | diverged


def build_interval_operators(model, nodes, backend):
    """Assemble the frozen operators for one interval from its node set."""
    f_mid = model.pulse(0.5 * (nodes.a + nodes.b))
    h_j = bandmat.combine(model.h0, model.w, f_mid)
    v = np.array([model.pulse(t) - f_mid for t in nodes.nodes])
    return IntervalOperators(
        t_start=nodes.a,
        t_end=nodes.b,
        f_mid=f_mid,
        h_j=h_j,
        w=model.w,
        node_times=nodes.nodes.copy(),
        rel_times=nodes.nodes - nodes.a,
        v_scalars=v,
        prep=expm.prepare(h_j, backend),
    )


def _coupled_rows(ops, values):
    """Rows v_l * (W @ psi_l) for all nodes; the per-sweep matvec cost."""
    out = np.zeros_like(values)
    for l in range(ops.n):
        if ops.v_scalars[l] != 0.0:
            out[l] = ops.v_scalars[l] * bandmat.matvec(ops.w, values[l])
    return out


def _inhom_values(ops, psi_start):
    """exp(-i H_j (t_i - tau_j)) psi_start at every node; node 0 exact."""
    psi_start = np.ascontiguousarray(psi_start, dtype=complex)
    spectral = ops.prep.spectral_pair()
    if spectral is not None:
        lam, q = spectral
        phases = np.exp(-1j * np.outer(ops.rel_times, lam))
        out = (phases * (q.T @ psi_start)[None, :]) @ q.T
    else:
        out = np.empty((ops.n, ops.dim), dtype=complex)
        for i in range(ops.n):
            out[i] = ops.prep.apply(ops.rel_times[i], psi_start)
    out[0] = psi_start
    return out


def inhomogeneous_term(ops, psi_start):
    """Initial iterate: the midpoint-frozen short-time evolution of psi_start."""
    return IterateSet(values=_inhom_values(ops, psi_start), iteration=0)


def volterra_rhs_apply(ops, weights, iterate, p):
    """Right-hand side of the discretized Volterra system at node p (0-based),
    evaluated on the supplied iterate values."""
    w = weights.w
    rhs = ops.prep.apply(ops.rel_times[p], np.ascontiguousarray(iterate.values[0], dtype=complex))
    for l in range(ops.n):
        if w[p, l] == 0.0 or ops.v_scalars[l] == 0.0:
            continue
        u = ops.v_scalars[l] * bandmat.matvec(ops.w, iterate.values[l])
        rhs = rhs - 1j * w[p, l] * ops.prep.apply(ops.rel_times[p] - ops.rel_times[l], u)
    return rhs


def _sweep_jacobi(ops, weights, cur, inhom):
    spectral = ops.prep.spectral_pair()
    w = weights.w
    if spectral is not None:
        lam, q = spectral
        coupled = _coupled_rows(ops, cur)
        r = np.exp(1j * np.outer(ops.rel_times, lam)) * (coupled @ q)
        inner = w @ r
        corr = (np.exp(-1j * np.outer(ops.rel_times, lam)) * inner) @ q.T
        new = inhom - 1j * corr
    else:
        coupled = _coupled_rows(ops, cur)
        new = inhom.copy()
        for p in range(1, ops.n):
            acc = new[p]
            for l in range(ops.n):
                if w[p, l] == 0.0 or ops.v_scalars[l] == 0.0:
                    continue
                acc = acc - 1j * w[p, l] * ops.prep.apply(
                    ops.rel_times[p] - ops.rel_times[l], coupled[l]
                )
            new[p] = acc
    new[0] = cur[0]
    return new


def _sweep_gauss_seidel(ops, weights, cur, inhom):
    w = weights.w
    new = cur.copy()
    spectral = ops.prep.spectral_pair()
    if spectral is not None:
        lam, q = spectral
        up_phase = np.exp(1j * np.outer(ops.rel_times, lam))
        r = up_phase * (_coupled_rows(ops, cur) @ q)
        for p in range(1, ops.n):
            inner = w[p] @ r - w[p, p] * r[p]
            corr = q @ (np.exp(-1j * lam * ops.rel_times[p]) * inner)
            rhs = inhom[p] - 1j * corr
            alpha = 1j * w[p, p] * ops.v_scalars[p]
            new[p] = rhs if alpha == 0.0 else bandmat.solve_shifted(ops.w, alpha, rhs)
            if ops.v_scalars[p] != 0.0:
                r[p] = up_phase[p] * (q.T @ (ops.v_scalars[p] * bandmat.matvec(ops.w, new[p])))
    else:
        coupled = _coupled_rows(ops, cur)
        for p in range(1, ops.n):
            acc = inhom[p].copy()
            for l in range(ops.n):
                if l == p or w[p, l] == 0.0 or ops.v_scalars[l] == 0.0:
                    continue
                acc = acc - 1j * w[p, l] * ops.prep.apply(
                    ops.rel_times[p] - ops.rel_times[l], coupled[l]
                )
            alpha = 1j * w[p, p] * ops.v_scalars[p]
            new[p] = acc if alpha == 0.0 else bandmat.solve_shifted(ops.w, alpha, acc)
            if ops.v_scalars[p] != 0.0:
                coupled[p] = ops.v_scalars[p] * bandmat.matvec(ops.w, new[p])
    return new


def _flag_divergence(ops, iterate):
    limit = DIVERGENCE_FACTOR * np.linalg.norm(iterate.values[0])
    node_norms = np.linalg.norm(iterate.values, axis=1)
    if not np.all(np.isfinite(node_norms)) or np.any(node_norms > limit):
        iterate.diverged = True
    return iterate


def jacobi_step(ops, weights, iterate):
    """One Jacobi sweep: every node rebuilt from the previous iterate alone."""
    inhom = _inhom_values(ops, iterate.values[0])
    new = _sweep_jacobi(ops, weights, iterate.values, inhom)
    return _flag_divergence(ops, IterateSet(values=new, iteration=iterate.iteration + 1))


def gauss_seidel_step(ops, weights, iterate):
    """One Gauss-Seidel sweep in ascending node order; node p is obtained by
    a shifted banded solve with already-updated nodes l < p on the right."""
    inhom = _inhom_values(ops, iterate.values[0])
    new = _sweep_gauss_seidel(ops, weights, iterate.values, inhom)
    return _flag_divergence(ops, IterateSet(values=new, iteration=iterate.iteration + 1))


def _gmres_operator(ops, weights):
    """Matrix-free action of (I - A_j) on the stacked nodes 2..n."""
    w = weights.w
    n, d = ops.n, ops.dim
    spectral = ops.prep.spectral_pair()

    if spectral is not None:
        lam, q = spectral
        up = np.exp(1j * np.outer(ops.rel_times, lam))
        down = np.exp(-1j * np.outer(ops.rel_times, lam))

        def op(x):
            xs = x.reshape(n - 1, d)
            full = np.zeros((n, d), dtype=complex)
            full[1:] = xs
            r = up * (_coupled_rows(ops, full) @ q)
            corr = (down * (w @ r)) @ q.T
            return (xs + 1j * corr[1:]).ravel()

    else:

        def op(x):
            xs = x.reshape(n - 1, d)
            full = np.zeros((n, d), dtype=complex)
            full[1:] = xs
            coupled = _coupled_rows(ops, full)
            out = xs.copy()
            for p in range(1, n):
                acc = np.zeros(d, dtype=complex)
                for l in range(1, n):
                    if w[p, l] == 0.0 or ops.v_scalars[l] == 0.0:
                        continue
                    acc = acc + 1j * w[p, l] * ops.prep.apply(
                        ops.rel_times[p] - ops.rel_times[l], coupled[l]
                    )
                out[p - 1] += acc
            return out.ravel()

    return op


def gmres_solve(ops, weights, psi_start, settings):
    """Solve (I - A_j) x = b for the stacked unknown nodes by full GMRES.

    Modified Gram-Schmidt Arnoldi with Givens-rotation least squares, zero
    initial guess, stopping on the relative residual.  No restarts and no
    preconditioning.
    """
    start_clock = time.perf_counter()
    n, d = ops.n, ops.dim
    w = weights.w
    psi_start = np.ascontiguousarray(psi_start, dtype=complex)

    inhom = _inhom_values(ops, psi_start)
    b = inhom[1:].copy()
    if ops.v_scalars[0] != 0.0:
        u0 = ops.v_scalars[0] * bandmat.matvec(ops.w, psi_start)
        for p in range(1, n):
            if w[p, 0] != 0.0:
                b[p - 1] -= 1j * w[p, 0] * ops.prep.apply(
                    ops.rel_times[p] - ops.rel_times[0], u0
                )
    b = b.ravel()

    dim = d * (n - 1)
    cap = dim if settings.max_iters is None else min(settings.max_iters, dim)
    op = _gmres_operator(ops, weights)

    norm_b = np.linalg.norm(b)
    history = []
    if norm_b == 0.0:
        values = np.vstack([psi_start[None, :], np.zeros((n - 1, d), dtype=complex)])
        report = IntervalReport(
            iterations_used=0, converged=True, diverged=False,
            final_update_norm=0.0, residual_norm=0.0, residual_history=history,
            wall_time=time.perf_counter() - start_clock,
        )
        return IterateSet(values=values), report

    basis = [b / norm_b]
    h = np.zeros((cap + 1, cap), dtype=complex)
    cs = np.zeros(cap, dtype=complex)
    sn = np.zeros(cap, dtype=complex)
    g = np.zeros(cap + 1, dtype=complex)
    g[0] = norm_b
    converged = False
    k_used = 0
    for k in range(cap):
        k_used = k + 1
        vec = op(basis[k])
        for i in range(k + 1):
            h[i, k] = np.vdot(basis[i], vec)
            vec = vec - h[i, k] * basis[i]
        h[k + 1, k] = np.linalg.norm(vec)
        if h[k + 1, k].real > 1e-300:
            basis.append(vec / h[k + 1, k].real)
        else:
            basis.append(np.zeros_like(vec))
        for i in range(k):
            t1 = cs[i] * h[i, k] + sn[i] * h[i + 1, k]
            t2 = -np.conj(sn[i]) * h[i, k] + np.conj(cs[i]) * h[i + 1, k]
            h[i, k], h[i + 1, k] = t1, t2
        denom = np.hypot(abs(h[k, k]), abs(h[k + 1, k]))
        if denom == 0.0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = np.conj(h[k, k]) / denom
            sn[k] = np.conj(h[k + 1, k]) / denom
        h[k, k] = cs[k] * h[k, k] + sn[k] * h[k + 1, k]
        h[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        history.append(abs(g[k + 1]) / norm_b)
        if history[-1] < settings.tol:
            converged = True
            break

    m = k_used
    y = sla.solve_triangular(h[:m, :m], g[:m])
    x = np.zeros(dim, dtype=complex)
    for i in range(m):
        x += y[i] * basis[i]
    values = np.vstack([psi_start[None, :], x.reshape(n - 1, d)])
    report = IntervalReport(
        iterations_used=m,
        converged=converged,
        diverged=False,
        final_update_norm=0.0,
        residual_norm=history[-1] * norm_b if history else 0.0,
        residual_history=history,
        wall_time=time.perf_counter() - start_clock,
    )
    return IterateSet(values=values, iteration=m), report


def converge_interval(ops, weights, psi_start, settings):
    """Iterate one interval to convergence with the configured scheme.

    Jacobi and Gauss-Seidel start from the inhomogeneous term and stop when
    the maximum node update norm drops below tol, the iteration cap is hit,
    or the iterate is flagged diverged.  GMRES delegates to gmres_solve.
    """
    if settings.scheme == "gmres":
        return gmres_solve(ops, weights, psi_start, settings)

    start_clock = time.perf_counter()
    psi_start = np.ascontiguousarray(psi_start, dtype=complex)
    cap = settings.max_iters if settings.max_iters is not None else max(2 * ops.n - 2, 1)
    sweep = _sweep_jacobi if settings.scheme == "jacobi" else _sweep_gauss_seidel

    inhom = _inhom_values(ops, psi_start)
    cur = inhom.copy()
    limit = DIVERGENCE_FACTOR * np.linalg.norm(psi_start)
    converged = False
    diverged = False
    update = np.inf
    k_used = 0
    for k in range(1, cap + 1):
        k_used = k
        new = sweep(ops, weights, cur, inhom)
        update = float(np.max(np.linalg.norm(new[1:] - cur[1:], axis=1))) if ops.n > 1 else 0.0
        cur = new
        node_norms = np.linalg.norm(cur, axis=1)
        if not np.all(np.isfinite(node_norms)) or np.any(node_norms > limit):
            diverged = True
            break
        if update < settings.tol:
            converged = True
            break

    report = IntervalReport(
        iterations_used=k_used,
        converged=converged,
        diverged=diverged,
        final_update_norm=update,
        wall_time=time.perf_counter() - start_clock,
    )
    return IterateSet(values=cur, iteration=k_used, diverged=diverged), report


def propagate(model, psi0, t0, t_final, dt, n, settings, backend):
    """Propagate psi0 from t0 to t_final on equal intervals of length dt.

    Nodes and weights are built once on the first interval and translated
    (the weight matrix is translation invariant).  Returns the trajectory at
    the interval endpoints and an aggregate report; a diverged interval
    aborts with the partial trajectory.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps_real = (t_final - t0) / dt
    steps = int(round(steps_real))
    if steps < 1 or abs(steps_real - steps) > 1e-9 * max(1.0, abs(steps_real)):
        raise ValueError("(t_final - t0) / dt must be a positive integer")

    ref_nodes = gauss_lobatto_nodes(n, t0, t0 + dt)
    weights = lagrange_weight_matrix(ref_nodes)

    psi = np.ascontiguousarray(psi0, dtype=complex)
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, model.dim), dtype=complex)
    times[0] = t0
    states[0] = psi

    report = PropagationReport()
    clock = time.perf_counter()
    status = "converged"
    recorded = 1
    run_limit = DIVERGENCE_FACTOR * np.linalg.norm(psi)  # the true norm is conserved
    for j in range(steps):
        nodes_j = ref_nodes.translated(j * dt)
        ops = build_interval_operators(model, nodes_j, backend)
        iterate, interval_report = converge_interval(ops, weights, psi, settings)
        if settings.diagnostics:
            a_j = jacobi_iteration_matrix(ops, weights)
            interval_report.rho_estimate = spectral_radius(a_j, seed=settings.seed)
            report.rho_max = (
                interval_report.rho_estimate
                if report.rho_max is None
                else max(report.rho_max, interval_report.rho_estimate)
            )
        report.intervals.append(interval_report)
        report.k_max = max(report.k_max, interval_report.iterations_used)
        end_norm = np.linalg.norm(iterate.values[-1])
        if not np.isfinite(end_norm) or end_norm > run_limit:
            interval_report.diverged = True
            interval_report.converged = False
        if interval_report.diverged:
            status = "diverged"
            break
        if not interval_report.converged:
            status = "max-iter"
        psi = iterate.values[-1].copy()
        times[recorded] = t0 + (j + 1) * dt
        states[recorded] = psi
        recorded += 1

    report.wall_time = time.perf_counter() - clock
    report.status = status
    return Trajectory(times=times[:recorded], states=states[:recorded]), report


def jacobi_iteration_matrix(ops, weights):
    """Dense iteration matrix on the stacked nodes 2..n (diagnostic scale).

    Block (p, l) is -i w_{p,l} exp(-i H_j (t_p - t_l)) V_j(t_l); exponentials
    go through the interval's configured backend.
    """
    n, d = ops.n, ops.dim
    dim = d * (n - 1)
    if dim > ITERATION_MATRIX_CAP:
        raise ValueError(f"iteration matrix dimension {dim} exceeds {ITERATION_MATRIX_CAP}")
    w = weights.w
    w_dense = ops.w.to_dense()
    spectral = ops.prep.spectral_pair()
    a = np.zeros((dim, dim), dtype=complex)
    for l in range(1, n):
        if ops.v_scalars[l] == 0.0:
            continue
        v_block = ops.v_scalars[l] * w_dense
        if spectral is not None:
            lam, q = spectral
            qt_v = q.T @ v_block
        for p in range(1, n):
            if w[p, l] == 0.0:
                continue
            dt_pl = ops.rel_times[p] - ops.rel_times[l]
            if spectral is not None:
                block = q @ (np.exp(-1j * lam * dt_pl)[:, None] * qt_v)
            else:
                block = np.column_stack(
                    [ops.prep.apply(dt_pl, np.ascontiguousarray(col)) for col in v_block.T]
                )
            a[(p - 1) * d : p * d, (l - 1) * d : l * d] = -1j * w[p, l] * block
    return a


_POWER_BLOCK = 6


def _power_radius(apply_fn, dim, tol, max_steps, seed):
    """Largest eigenvalue modulus by block power iteration.

    The stacked iteration matrix carries a conjugation symmetry that makes
    its dominant eigenvalues come in equal-modulus conjugate pairs, where a
    single power vector oscillates forever.  Iterating a small orthonormal
    block and reading the largest Ritz value restores convergence without
    deflating anything.
    """
    rng = np.random.default_rng(seed)
    block = min(_POWER_BLOCK, dim)
    x = rng.standard_normal((dim, block)) + 1j * rng.standard_normal((dim, block))
    q, _ = np.linalg.qr(x)
    estimate = None
    hits = 0
    for _ in range(max_steps):
        z = np.column_stack([apply_fn(np.ascontiguousarray(q[:, k])) for k in range(block)])
        if not np.any(z):
            return 0.0
        small = np.conj(q.T) @ z
        new_est = float(np.max(np.abs(np.linalg.eigvals(small))))
        if estimate is not None and abs(new_est - estimate) <= tol * max(new_est, 1e-300):
            hits += 1
            if hits >= 3:  # a single small step can be a slow-convergence plateau
                return new_est
        else:
            hits = 0
        estimate = new_est
        q, _ = np.linalg.qr(z)
    warnings.warn("power iteration stagnated; returning best estimate", RuntimeWarning)
    return estimate


def spectral_radius(a, tol=1e-6, max_steps=10000, seed=0):
    """Spectral radius of a dense complex matrix by power iteration."""
    a = np.asarray(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] == 0:
        return 0.0
    return _power_radius(lambda x: a @ x, a.shape[0], tol, max_steps, seed)


def gershgorin_bound(a):
    """Row-sum upper bound for the spectral radius."""
    return float(np.max(np.sum(np.abs(np.asarray(a)), axis=1)))


def gs_spectral_radius(a, block_dim, tol=1e-6, max_steps=10000, seed=0):
    """Spectral radius of (I - L)^-1 U for the block lower/upper split of a.

    L keeps the diagonal blocks (of size block_dim), so one application is
    an upper-triangular block product followed by block forward
    substitution.
    """
    a = np.asarray(a)
    dim = a.shape[0]
    if dim % block_dim != 0:
        raise ValueError("matrix dimension is not a multiple of the block size")
    nb = dim // block_dim
    diag_factors = []
    for p in range(nb):
        sl = slice(p * block_dim, (p + 1) * block_dim)
        diag_factors.append(sla.lu_factor(np.eye(block_dim) - a[sl, sl]))

    def apply_fn(x):
        xs = x.reshape(nb, block_dim)
        y = np.zeros_like(xs)
        for p in range(nb):
            for l in range(p + 1, nb):
                y[p] += a[p * block_dim : (p + 1) * block_dim, l * block_dim : (l + 1) * block_dim] @ xs[l]
        z = np.zeros_like(xs)
        for p in range(nb):
            rhs = y[p].copy()
            for qd in range(p):
                rhs += a[p * block_dim : (p + 1) * block_dim, qd * block_dim : (qd + 1) * block_dim] @ z[qd]
            z[p] = sla.lu_solve(diag_factors[p], rhs)
        return z.ravel()

    return _power_radius(apply_fn, dim, tol, max_steps, seed)
