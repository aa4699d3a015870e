import numpy as np
import pytest

import offgridcov as oc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, n, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (X + X.conj().T)


def random_psd(rng, n, rank=None, scale=1.0):
    rank = rank or n
    B = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return scale * (B @ B.conj().T) / rank


def analytic_measurement_covariance(sensing, angle_pairs, weights, n_rx, n_tx):
    """Noise-free R_y for independent paths with the given powers."""
    A = oc.atoms_matrix(np.asarray(angle_pairs, dtype=float), n_rx, n_tx)
    R_h = (A * np.asarray(weights)) @ A.conj().T
    phi = sensing.phi
    R = phi @ R_h @ phi.conj().T
    return 0.5 * (R + R.conj().T)
