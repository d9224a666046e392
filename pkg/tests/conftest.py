import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_banded(rng, d, b, scale=1.0):
    """Random SymBanded with the unused tail entries already zeroed."""
    from itvolt import bandmat

    bands = scale * rng.standard_normal((b + 1, d))
    for k in range(1, b + 1):
        bands[k, d - k :] = 0.0
    return bandmat.SymBanded(bands)


def random_complex(rng, d):
    return rng.standard_normal(d) + 1j * rng.standard_normal(d)
