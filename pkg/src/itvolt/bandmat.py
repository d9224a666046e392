"""Real symmetric banded matrices and the small dense linear algebra on them.

Storage is lower band, column major: ``bands[k, j]`` holds entry (j+k, j)
for k = 0..b, matching the LAPACK/scipy symmetric-band convention.  Matrices
are immutable after construction; every operation allocates its output, so
instances are safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from itvolt import _kernels

DENSE_EIG_THRESHOLD = 512


class SingularMatrixError(ValueError):
    """Shifted banded factorization hit a zero (or negligible) pivot."""

    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"singular factor at pivot index {pivot}")


@dataclass(frozen=True)
class SymBanded:
    """Symmetric banded matrix of order d with half bandwidth b."""

    bands: np.ndarray

    def __post_init__(self):
        bands = np.ascontiguousarray(self.bands, dtype=float)
        if bands.ndim != 2:
            raise ValueError("band storage must be 2-d")
        if bands.shape[0] > bands.shape[1]:
            raise ValueError("half bandwidth must be smaller than the order")
        if not np.all(np.isfinite(bands)):
            raise ValueError("band storage must be finite")
        bands = bands.copy()
        # entries (j+k, j) with j+k >= d do not exist; keep them exactly zero
        for k in range(1, bands.shape[0]):
            bands[k, bands.shape[1] - k:] = 0.0
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @property
    def order(self):
        return self.bands.shape[1]

    @property
    def half_bandwidth(self):
        return self.bands.shape[0] - 1

    @classmethod
    def from_dense(cls, a, half_bandwidth=None):
        a = np.asarray(a, dtype=float)
        d = a.shape[0]
        if a.shape != (d, d) or not np.allclose(a, a.T):
            raise ValueError("expected a square symmetric matrix")
        if half_bandwidth is None:
            half_bandwidth = 0
            for k in range(1, d):
                if np.any(np.diagonal(a, -k) != 0.0):
                    half_bandwidth = k
        bands = np.zeros((half_bandwidth + 1, d))
        for k in range(half_bandwidth + 1):
            bands[k, : d - k] = np.diagonal(a, -k)
        return cls(bands)

    def to_dense(self):
        d = self.order
        a = np.zeros((d, d))
        for k in range(self.half_bandwidth + 1):
            idx = np.arange(d - k)
            a[idx + k, idx] = self.bands[k, : d - k]
            a[idx, idx + k] = self.bands[k, : d - k]
        return a

    def scaled(self, c):
        return SymBanded(c * self.bands)

    def widened(self, half_bandwidth):
        """Copy with extra zero bands so two matrices can share storage shape."""
        if half_bandwidth < self.half_bandwidth:
            raise ValueError("cannot shrink the bandwidth")
        bands = np.zeros((half_bandwidth + 1, self.order))
        bands[: self.half_bandwidth + 1] = self.bands
        return SymBanded(bands)

    def trace(self):
        return float(np.sum(self.bands[0]))


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def combine(a, b, coeff):
    """Return a + coeff*b as a SymBanded of the wider bandwidth."""
    if a.order != b.order:
        raise ValueError("matrix orders differ")
    width = max(a.half_bandwidth, b.half_bandwidth)
    bands = np.zeros((width + 1, a.order))
    bands[: a.half_bandwidth + 1] = a.bands
    bands[: b.half_bandwidth + 1] += coeff * b.bands
    return SymBanded(bands)


def matvec(m, v):
    """Product M @ v for complex v, in O(d*b) using band symmetry."""
    v = np.asarray(v)
    if v.shape != (m.order,):
        raise ValueError(f"vector length {v.shape} does not match order {m.order}")
    return _kernels.sb_matvec(m.bands, np.ascontiguousarray(v, dtype=complex))


def solve_shifted(m, alpha, rhs):
    """Solve (I + alpha*M) x = rhs by complex banded LU with partial pivoting.

    Raises SingularMatrixError (carrying the pivot index) when the factor is
    singular to working precision.
    """
    rhs = np.ascontiguousarray(rhs, dtype=complex)
    d = m.order
    if rhs.shape != (d,):
        raise ValueError("right-hand side length does not match order")
    b = m.half_bandwidth
    if b == 0:
        diag = 1.0 + alpha * m.bands[0]
        bad = np.abs(diag) <= d * np.finfo(float).eps * np.max(np.abs(diag))
        if np.any(bad):
            raise SingularMatrixError(int(np.argmax(bad)))
        return rhs / diag
    # LAPACK general-band layout with b extra rows for pivot fill-in
    ab = np.zeros((2 * b + b + 1, d), dtype=complex)
    for k in range(b + 1):
        idx = np.arange(d - k)
        vals = alpha * m.bands[k, : d - k]
        ab[2 * b + k, idx] = vals          # subdiagonal k at row kl+ku+k
        ab[2 * b - k, idx + k] = vals      # superdiagonal k (symmetry)
    ab[2 * b] += 1.0                       # the identity shift
    lu, ipiv, info = lapack.zgbtrf(ab, kl=b, ku=b)
    if info > 0:
        raise SingularMatrixError(info - 1)
    u_diag = np.abs(lu[2 * b, :])
    tiny = u_diag <= d * np.finfo(float).eps * np.max(u_diag)
    if np.any(tiny):
        raise SingularMatrixError(int(np.argmax(tiny)))
    x, info = lapack.zgbtrs(lu, b, b, rhs, ipiv)
    if info != 0:
        raise SingularMatrixError(abs(int(info)))
    return x


def eigendecompose(m, dense_threshold=DENSE_EIG_THRESHOLD):
    """Full eigendecomposition (band reduction + implicit QL via LAPACK)."""
    if m.order > dense_threshold:
        raise ValueError(
            f"order {m.order} exceeds the dense eigendecomposition threshold "
            f"{dense_threshold}"
        )
    vals, vecs = sla.eig_banded(m.bands, lower=True)
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def eigen_extent(m):
    """Gershgorin interval [lo, hi] guaranteed to enclose the spectrum."""
    d = m.order
    centers = m.bands[0]
    radius = np.zeros(d)
    for k in range(1, m.half_bandwidth + 1):
        mag = np.abs(m.bands[k, : d - k])
        radius[k:] += mag      # entry (i, i-k) seen from row i
        radius[: d - k] += mag  # entry (i, i+k)
    return float(np.min(centers - radius)), float(np.max(centers + radius))
