"""Input validation helpers shared across the package."""

import numpy as np


def as_complex_matrix(X, name="X"):
    """Coerce to a 2-D complex ndarray."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    return X


def as_snapshots(Y):
    """Coerce a snapshot batch to a (T, m) complex ndarray with T >= 1."""
    if hasattr(Y, "measurements"):
        Y = Y.measurements
    Y = as_complex_matrix(Y, name="snapshots")
    if Y.shape[0] < 1:
        raise ValueError("snapshot set is empty")
    return Y


def hermitian_part(X):
    """Project onto the Hermitian part, (X + X^H) / 2."""
    return 0.5 * (X + X.conj().T)


def check_hermitian(R, tol=1e-8, name="R"):
    """Validate Hermitian symmetry and return the symmetrized matrix.

    Asymmetry is measured relative to max(1, ||R||_F); anything above
    `tol` is rejected.
    """
    R = as_complex_matrix(R, name=name)
    if R.shape[0] != R.shape[1]:
        raise ValueError(f"{name} must be square, got shape {R.shape}")
    scale = max(1.0, float(np.linalg.norm(R)))
    asym = float(np.linalg.norm(R - R.conj().T)) / scale
    if asym > tol:
        raise ValueError(f"{name} is not Hermitian (relative asymmetry {asym:.3e})")
    return hermitian_part(R)


def as_phi_matrix(phi):
    """Accept a SensingOperator or a raw measurement matrix."""
    mat = getattr(phi, "phi", phi)
    return as_complex_matrix(mat, name="phi")
