"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or forced via
ITVOLT_KERNELS=numpy).  Semantics match ``itvolt._kernels._ext`` to
floating-point roundoff.
"""

import math

import numpy as np


def sb_matvec(bands, x):
    """Multiply a real symmetric banded matrix by a complex vector.

    ``bands`` has shape (b+1, d) in lower band storage: bands[k, j] holds
    entry (j+k, j).  Each stored off-diagonal entry is used for both (i, j)
    and (j, i), so the product costs O(d*b).
    """
    d = bands.shape[1]
    y = bands[0] * x
    for k in range(1, bands.shape[0]):
        e = bands[k, : d - k]
        y[k:] += e * x[: d - k]
        y[: d - k] += e * x[k:]
    return y


def cheb_apply(bands_norm, coeffs, sigma, v):
    """Accumulate sum_k coeffs[k] * phi_k(v) for the complex Chebyshev recurrence.

    phi_0 = v, phi_1 = -i*sigma*H*v, phi_{k+1} = -2i*sigma*H*phi_k + phi_{k-1},
    where H is the normalized operator given in band storage.  ``sigma`` is
    +-1 and selects the recurrence for forward or backward time.
    """
    K = len(coeffs)
    out = coeffs[0] * v
    if K == 1:
        return out
    s = -1j * sigma
    prev = v
    cur = s * sb_matvec(bands_norm, v)
    out += coeffs[1] * cur
    for k in range(2, K):
        nxt = (2.0 * s) * sb_matvec(bands_norm, cur) + prev
        out += coeffs[k] * nxt
        prev = cur
        cur = nxt
    return out


def bessel_j_table(x, max_order):
    """J_0(x) .. J_max_order(x) by Miller's backward recurrence.

    The unnormalized downward recurrence starts well above both max_order
    and x so the spurious solution has decayed; the result is normalized
    with J_0 + 2*sum J_{2k} = 1.  Tiny arguments use the leading series term.
    """
    n_out = max_order + 1
    out = np.zeros(n_out)
    if x < 1e-8:
        out[0] = 1.0 - 0.25 * x * x
        if n_out > 1:
            out[1] = 0.5 * x
        return out
    start = max(max_order, int(math.ceil(x))) + 15 + int(math.ceil(10.0 * math.log1p(x)))
    jp = 0.0
    j = 1e-300
    norm = 0.0
    for n in range(start, 0, -1):
        jm = (2.0 * n / x) * j - jp
        jp = j
        j = jm
        if n - 1 < n_out:
            out[n - 1] = j
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j
        # rescale to dodge overflow of the unnormalized recurrence
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            norm *= 1e-250
            out *= 1e-250
    norm += j  # J_0 contribution
    out /= norm
    return out
