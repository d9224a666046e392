import numpy as np
import pytest

from itvolt import bandmat, expm

from conftest import random_banded, random_complex

BACKENDS = [
    expm.Diagonalization(),
    expm.Lanczos(tol=1e-12, max_iters=40, reorth_depth=5),
    expm.Chebyshev(coeff_tol=1e-15, max_terms=1000),
]


def backend_id(backend):
    return type(backend).__name__


def swap_matrix():
    return bandmat.SymBanded(np.array([[0.0, 0.0], [1.0, 0.0]]))


class TestPrepare:
    def test_diagonalization_caches_eigenpairs(self):
        prep = expm.prepare(bandmat.SymBanded(np.array([[1.0, 2.0]])), expm.Diagonalization())
        assert np.allclose(prep.eig.eigenvalues, [1.0, 2.0])
        assert np.allclose(np.abs(prep.eig.eigenvectors), np.eye(2))

    def test_chebyshev_caches_bounds(self):
        prep = expm.prepare(swap_matrix(), expm.Chebyshev())
        assert prep.bounds == (-1.0, 1.0)

    def test_lanczos_prepare_stores_reference(self):
        h = swap_matrix()
        prep = expm.prepare(h, expm.Lanczos())
        assert prep.h is h

    def test_analytic_requires_antidiagonal(self):
        with pytest.raises(ValueError):
            expm.prepare(bandmat.SymBanded(np.array([[1.0, 1.0], [0.5, 0.0]])),
                         expm.AnalyticTwoLevel())


class TestApply:
    @pytest.mark.parametrize("backend", BACKENDS, ids=backend_id)
    def test_dt_zero_is_identity(self, rng, backend):
        h = random_banded(rng, 12, 2)
        v = random_complex(rng, 12)
        out = expm.apply(expm.prepare(h, backend), 0.0, v)
        assert np.array_equal(out, v)

    def test_analytic_rotation(self, rng):
        c = 0.37
        h = bandmat.SymBanded(np.array([[0.0, 0.0], [c, 0.0]]))
        prep = expm.prepare(h, expm.AnalyticTwoLevel())
        v = random_complex(rng, 2)
        dt = 0.9
        theta = c * dt
        rot = np.array([[np.cos(theta), -1j * np.sin(theta)],
                        [-1j * np.sin(theta), np.cos(theta)]])
        assert np.allclose(prep.apply(dt, v), rot @ v, atol=1e-15)

    def test_lanczos_matches_diagonalization(self, rng):
        h = random_banded(rng, 50, 2)
        v = random_complex(rng, 50)
        exact = expm.apply(expm.prepare(h, expm.Diagonalization()), 0.7, v)
        lan = expm.apply(
            expm.prepare(h, expm.Lanczos(tol=1e-12, max_iters=30, reorth_depth=5)), 0.7, v
        )
        assert np.linalg.norm(lan - exact) <= 1e-10 * np.linalg.norm(v)

    def test_chebyshev_matches_diagonalization(self, rng):
        h = random_banded(rng, 50, 2)
        v = random_complex(rng, 50)
        exact = expm.apply(expm.prepare(h, expm.Diagonalization()), 0.7, v)
        cheb = expm.apply(expm.prepare(h, expm.Chebyshev()), 0.7, v)
        assert np.linalg.norm(cheb - exact) <= 1e-12 * np.linalg.norm(v)

    @pytest.mark.parametrize("dt", [0.4, -0.4, 2.3, -2.3])
    def test_chebyshev_negative_dt(self, rng, dt):
        h = random_banded(rng, 24, 1)
        v = random_complex(rng, 24)
        exact = expm.apply(expm.prepare(h, expm.Diagonalization()), dt, v)
        cheb = expm.apply(expm.prepare(h, expm.Chebyshev()), dt, v)
        assert np.linalg.norm(cheb - exact) <= 1e-12 * np.linalg.norm(v)

    def test_chebyshev_degenerate_spectrum(self, rng):
        h = bandmat.SymBanded(np.full((1, 8), 2.5))
        v = random_complex(rng, 8)
        out = expm.apply(expm.prepare(h, expm.Chebyshev()), 1.3, v)
        assert np.allclose(out, np.exp(-1j * 2.5 * 1.3) * v, atol=1e-14)

    def test_chebyshev_max_terms_warning(self, rng):
        h = random_banded(rng, 16, 1, scale=30.0)
        v = random_complex(rng, 16)
        prep = expm.prepare(h, expm.Chebyshev(coeff_tol=1e-15, max_terms=5))
        with pytest.warns(RuntimeWarning):
            expm.apply(prep, 1.0, v)

    def test_lanczos_breakdown_invariant_subspace(self):
        # start from an exact eigenvector: the Krylov space is 1-d
        h = bandmat.SymBanded(np.array([[2.0, 3.0, 5.0]]))
        v = np.array([0.0, 1.0 + 0j, 0.0])
        out = expm.apply(expm.prepare(h, expm.Lanczos()), 1.1, v)
        assert np.allclose(out, np.exp(-1j * 3.0 * 1.1) * v, atol=1e-13)


class TestProperties:
    @pytest.mark.parametrize("backend", BACKENDS, ids=backend_id)
    def test_unitarity(self, rng, backend):
        h = random_banded(rng, 30, 2)
        v = random_complex(rng, 30)
        out = expm.apply(expm.prepare(h, backend), 1.7, v)
        tol = getattr(backend, "tol", getattr(backend, "coeff_tol", 1e-14))
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) <= 10 * max(tol, 1e-14) * np.linalg.norm(v)

    @pytest.mark.parametrize("backend", BACKENDS, ids=backend_id)
    def test_group_property(self, rng, backend):
        h = random_banded(rng, 20, 1)
        v = random_complex(rng, 20)
        prep = expm.prepare(h, backend)
        two_step = expm.apply(prep, 0.35, expm.apply(prep, 0.55, v))
        one_step = expm.apply(prep, 0.9, v)
        assert np.linalg.norm(two_step - one_step) <= 1e-10 * np.linalg.norm(v)

    @pytest.mark.parametrize("backend", BACKENDS, ids=backend_id)
    def test_inverse_property(self, rng, backend):
        h = random_banded(rng, 20, 2)
        v = random_complex(rng, 20)
        prep = expm.prepare(h, backend)
        back = expm.apply(prep, -0.8, expm.apply(prep, 0.8, v))
        assert np.linalg.norm(back - v) <= 1e-10 * np.linalg.norm(v)

    @pytest.mark.parametrize("backend", BACKENDS, ids=backend_id)
    def test_eigenvector_action(self, rng, backend):
        h = random_banded(rng, 16, 2)
        eig = bandmat.eigendecompose(h)
        k = 7
        v = eig.eigenvectors[:, k].astype(complex)
        out = expm.apply(expm.prepare(h, backend), 1.2, v)
        assert np.linalg.norm(out - np.exp(-1j * eig.eigenvalues[k] * 1.2) * v) <= 1e-10

    def test_backend_cross_agreement_small(self, rng):
        for d, b in [(8, 1), (40, 3), (64, 2)]:
            h = random_banded(rng, d, b)
            v = random_complex(rng, d)
            outs = [expm.apply(expm.prepare(h, be), 0.6, v) for be in BACKENDS]
            for other in outs[1:]:
                assert np.linalg.norm(other - outs[0]) <= 1e-10 * np.linalg.norm(v)
