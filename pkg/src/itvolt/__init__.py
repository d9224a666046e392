"""ITVOLT: iterative Volterra propagator for the time-dependent Schrodinger
equation, with reference solvers and the two analytic benchmarks."""

from itvolt._kernels import BACKEND as KERNEL_BACKEND
from itvolt.bandmat import (
    EigenDecomposition,
    SingularMatrixError,
    SymBanded,
    eigen_extent,
    eigendecompose,
    matvec,
    solve_shifted,
)
from itvolt.expm import (
    AnalyticTwoLevel,
    Chebyshev,
    Diagonalization,
    Lanczos,
    PreparedExponential,
    apply,
    prepare,
)
from itvolt.models import (
    ClassicalTrajectory,
    ErrorMetrics,
    OscillatorModel,
    TwoLevelModel,
    classical_trajectory,
    compute_metrics,
    energy_expectation,
    energy_variance_check,
    per_state_error,
    population_probabilities,
    two_level_analytic,
)
from itvolt.propagator import (
    HamiltonianModel,
    IntervalOperators,
    IntervalReport,
    IterateSet,
    PropagationReport,
    SolverSettings,
    Trajectory,
    build_interval_operators,
    converge_interval,
    gauss_seidel_step,
    gershgorin_bound,
    gmres_solve,
    gs_spectral_radius,
    inhomogeneous_term,
    jacobi_iteration_matrix,
    jacobi_step,
    propagate,
    spectral_radius,
    volterra_rhs_apply,
)
from itvolt.quadrature import (
    NodeSet,
    WeightMatrix,
    barycentric_eval,
    gauss_legendre_rule,
    gauss_lobatto_nodes,
    lagrange_weight_matrix,
)
from itvolt.refsolvers import (
    RK4,
    SIL,
    ChebyshevProp,
    reference_propagate,
    rk4_step,
    short_time_step,
)
from itvolt.specfun import BesselTable, bessel_jn_table

__version__ = "0.1.0"
