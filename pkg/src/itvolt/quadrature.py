"""Gauss-Legendre rules, Gauss-Lobatto nodes, barycentric interpolation, and
the semi-global weight matrix.

The weight matrix row i carries the weights for integrating each Lagrange
basis polynomial from the interval's left endpoint to node t_i, so row 1 is
identically zero and row n reproduces the classical Gauss-Lobatto rule.
Everything here is pure construction on immutable data.
"""

from dataclasses import dataclass

import numpy as np


class RootFindingError(RuntimeError):
    pass


def _legendre_and_derivative(order, x):
    """P_order(x) and P'_order(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = np.asarray(x, dtype=float)
    if order == 0:
        return p_prev, np.zeros_like(p_prev)
    for k in range(2, order + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = order * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre_rule(order, a, b):
    """Gauss-Legendre nodes/weights on [a, b], exact through degree 2*order-1.

    Nodes come from Newton iteration on P_order with the standard cosine
    initial guesses; failure to converge within 100 steps raises.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    i = np.arange(order)
    x = np.cos(np.pi * (4 * i + 3) / (4 * order + 2))
    for step in range(100):
        p, dp = _legendre_and_derivative(order, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise RootFindingError("Newton iteration for Legendre roots did not converge")
    x = np.sort(x)
    _, dp = _legendre_and_derivative(order, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


@dataclass(frozen=True)
class NodeSet:
    """Strictly ascending interpolation nodes including both endpoints.

    ``bary_weights`` are the barycentric weights computed on the reference
    coordinates 2(t-a)/(b-a) - 1; the second-form barycentric formula is
    invariant under that affine map.
    """

    a: float
    b: float
    nodes: np.ndarray
    bary_weights: np.ndarray

    @property
    def n(self):
        return len(self.nodes)

    def reference_coords(self):
        return 2.0 * (self.nodes - self.a) / (self.b - self.a) - 1.0

    def translated(self, offset):
        return NodeSet(
            a=self.a + offset,
            b=self.b + offset,
            nodes=self.nodes + offset,
            bary_weights=self.bary_weights,
        )


def _bary_weights(ref):
    n = len(ref)
    w = np.empty(n)
    for k in range(n):
        w[k] = 1.0 / np.prod(ref[k] - np.delete(ref, k))
    return w


def _lobatto_interior(n):
    """Interior Lobatto nodes: roots of P'_{n-1} on (-1, 1).

    Bisection between Chebyshev-Lobatto brackets followed by a fixed budget
    of Newton steps; robust well past the n <= 64 range used here.
    """
    m = n - 1
    cheb = -np.cos(np.pi * np.arange(n) / m)

    def dp(x):
        return _legendre_and_derivative(m, np.atleast_1d(x))[1]

    roots = []
    for k in range(1, m):
        lo, hi = cheb[k] - 0.5 * (cheb[k] - cheb[k - 1]), cheb[k] + 0.5 * (cheb[k + 1] - cheb[k])
        flo, fhi = dp(lo)[0], dp(hi)[0]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi > 0:
            raise RootFindingError(f"no sign change bracketing interior node {k}")
        for _ in range(60):
            midp = 0.5 * (lo + hi)
            fm = dp(midp)[0]
            if fm == 0.0:
                break
            if flo * fm < 0:
                hi = midp
            else:
                lo, flo = midp, fm
        x = 0.5 * (lo + hi)
        for _ in range(5):
            p, d = _legendre_and_derivative(m, np.atleast_1d(x))
            # Newton on g = P'_m; g' from the Legendre ODE:
            # (1-x^2) P''_m = 2x P'_m - m(m+1) P_m
            g = d[0]
            gp = (2.0 * x * d[0] - m * (m + 1) * p[0]) / (1.0 - x * x)
            x = x - g / gp
        roots.append(x)
    interior = np.array(roots)
    interior = 0.5 * (interior - interior[::-1])  # enforce exact symmetry
    return interior


def gauss_lobatto_nodes(n, a, b, spacing="lobatto"):
    """NodeSet of n points on [a, b] including both endpoints.

    ``spacing`` is "lobatto" (default) or "uniform"; uniform spacing is an
    explicit opt-in for experiments since it is prone to Runge oscillation.
    """
    if n < 2:
        raise ValueError("need at least the two endpoints")
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    if spacing == "uniform":
        ref = np.linspace(-1.0, 1.0, n)
    elif spacing == "lobatto":
        if n == 2:
            ref = np.array([-1.0, 1.0])
        else:
            ref = np.concatenate(([-1.0], _lobatto_interior(n), [1.0]))
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return NodeSet(a=a, b=b, nodes=mid + half * ref, bary_weights=_bary_weights(ref))


def _basis_matrix(nodes, ts):
    """Rows: all n Lagrange basis polynomials evaluated at each t in ts."""
    ref = nodes.reference_coords()
    xi = 2.0 * (np.asarray(ts) - nodes.a) / (nodes.b - nodes.a) - 1.0
    out = np.empty((len(xi), nodes.n))
    for row, x in enumerate(xi):
        diff = x - ref
        hit = np.nonzero(diff == 0.0)[0]
        if hit.size:
            out[row] = 0.0
            out[row, hit[0]] = 1.0
        else:
            terms = nodes.bary_weights / diff
            out[row] = terms / np.sum(terms)
    return out


@dataclass(frozen=True)
class WeightMatrix:
    """w[i, k] = integral of Lagrange basis k from the left endpoint to node i."""

    w: np.ndarray

    @property
    def n(self):
        return self.w.shape[0]


def lagrange_weight_matrix(nodes, quad_order=None):
    """Integrate each Lagrange basis polynomial over [a, t_i] for every node.

    The inner Gauss-Legendre rule defaults to order n, exact for the
    degree-(n-1) basis; anything below ceil(n/2) would not be and is
    rejected.
    """
    n = nodes.n
    if quad_order is None:
        quad_order = n
    if quad_order < (n + 1) // 2:
        raise ValueError("inner quadrature order too low for exact integration")
    w = np.zeros((n, n))
    for i in range(1, n):
        gx, gw = gauss_legendre_rule(quad_order, nodes.a, nodes.nodes[i])
        w[i] = gw @ _basis_matrix(nodes, gx)
    return WeightMatrix(w=w)


def barycentric_eval(nodes, values, t):
    """Second-form barycentric interpolation; exact at the nodes."""
    values = np.asarray(values)
    xi = 2.0 * (t - nodes.a) / (nodes.b - nodes.a) - 1.0
    diff = xi - nodes.reference_coords()
    hit = np.nonzero(diff == 0.0)[0]
    if hit.size:
        return values[hit[0]]
    terms = nodes.bary_weights / diff
    return (terms @ values) / np.sum(terms)
