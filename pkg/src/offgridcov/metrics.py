"""Quality metrics for estimated channel covariances."""

from dataclasses import dataclass

import numpy as np

from .channel import vectorize_channels
from .dictionary import atoms_matrix
from .validation import hermitian_part

_SOURCES = ("sample", "ensemble")
_EXPANSION_TOL = 1e-10


@dataclass(frozen=True)
class GroundTruthCovariance:
    """Reference channel covariance and how it was formed."""

    matrix: np.ndarray
    source: str


def true_covariance(chan, mode="sample"):
    """Ground-truth covariance of the vectorized channel.

    "sample" averages the realized snapshots, (1/T) sum vec(H_t) vec(H_t)^H,
    and cross-checks it against the equivalent atom expansion
    sum_{l,q} gamma[l,q] a_l a_q^H built from the realized gains.
    "ensemble" takes the expectation over the i.i.d. unit-variance gain
    distribution, (1/beta^2) sum_l a_l a_l^H.
    """
    if mode not in _SOURCES:
        raise ValueError(f"mode must be one of {_SOURCES}")
    mpcs = chan.mpcs
    angles = np.column_stack([mpcs.aoa, mpcs.aod])
    A = atoms_matrix(angles, chan.n_rx, chan.n_tx)
    if mode == "ensemble":
        R = (A @ A.conj().T) / (mpcs.beta**2)
        return GroundTruthCovariance(matrix=hermitian_part(R), source=mode)

    vecs = vectorize_channels(chan)
    T = vecs.shape[0]
    R = hermitian_part((vecs.T @ vecs.conj()) / T)
    effective = chan.gains / mpcs.beta
    gamma = (effective @ effective.conj().T) / T
    R_expanded = A @ gamma @ A.conj().T
    mismatch = np.linalg.norm(R - R_expanded) / max(1.0, np.linalg.norm(R))
    if mismatch > _EXPANSION_TOL:
        raise RuntimeError(
            f"sample covariance and atom expansion disagree ({mismatch:.3e})"
        )
    return GroundTruthCovariance(matrix=R, source=mode)


def _top_singular_subspace(R, r):
    U, _, _ = np.linalg.svd(R)
    return U[:, :r]


def relative_efficiency(R_hat, R_true, r):
    """Fraction of dominant-subspace signal power captured by the estimate.

    Projects the true covariance onto the top-r singular subspaces of
    the estimate and of itself and returns the trace ratio, a value in
    [0, 1] where 1 means the estimated subspace loses no signal power.
    """
    R_true = getattr(R_true, "matrix", R_true)
    R_hat = np.asarray(R_hat, dtype=np.complex128)
    R_true = np.asarray(R_true, dtype=np.complex128)
    n = R_true.shape[0]
    if not (1 <= r <= n):
        raise ValueError(f"rank must be in [1, {n}]")
    denom_norm = np.linalg.norm(R_true)
    if denom_norm == 0:
        raise ValueError("true covariance is zero; metric undefined")
    U_hat = _top_singular_subspace(R_hat, r)
    U = _top_singular_subspace(R_true, r)
    num = float(np.real(np.trace(U_hat.conj().T @ R_true @ U_hat)))
    den = float(np.real(np.trace(U.conj().T @ R_true @ U)))
    if den <= 0:
        raise ValueError("true covariance has no positive dominant power")
    eta = num / den
    if eta > 1.0 + 1e-10 or eta < -1e-10:
        raise RuntimeError(f"relative efficiency {eta} outside [0, 1] beyond roundoff")
    return float(min(max(eta, 0.0), 1.0))


def nmse(R_hat, R_true):
    """Normalized squared reconstruction error, ||R_hat - R_true||_F^2 / ||R_true||_F^2."""
    R_true = getattr(R_true, "matrix", R_true)
    R_hat = np.asarray(R_hat, dtype=np.complex128)
    R_true = np.asarray(R_true, dtype=np.complex128)
    denom = float(np.linalg.norm(R_true) ** 2)
    if denom == 0:
        raise ValueError("true covariance is zero; metric undefined")
    return float(np.linalg.norm(R_hat - R_true) ** 2 / denom)
