"""Bessel functions of the first kind, integer order, nonnegative argument.

These feed the Chebyshev expansion coefficients of the matrix exponential;
the expansion always calls with x = (spectral span / 2) * |dt| >= 0, so
negative arguments are rejected rather than reflected.
"""

import math
from dataclasses import dataclass

import numpy as np

from itvolt import _kernels


@dataclass(frozen=True)
class BesselTable:
    """Values J_0(x)..J_N(x) for one argument x."""

    x: float
    values: np.ndarray

    @property
    def max_order(self):
        return len(self.values) - 1


def bessel_jn_table(x, max_order):
    """Tabulate J_n(x) for n = 0..max_order to 1e-13 absolute accuracy.

    Uses Miller's backward recurrence normalized with
    J_0(x) + 2*sum_k J_{2k}(x) = 1, starting the unnormalized recurrence at
    max(max_order, ceil(x)) + 15 + ceil(10*ln(1+x)) so its spurious
    component has decayed.
    """
    if not math.isfinite(x) or x < 0:
        raise ValueError("argument must be finite and nonnegative")
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    values = _kernels.bessel_j_table(float(x), int(max_order))
    return BesselTable(x=float(x), values=values)
