"""Hybrid analog precoder/combiner banks and the composed measurement operator.

A training frame applies M_RF precoder columns at the transmit side and
combines through N_RF columns at the receive side, all entries living on
the unit-modulus phase-shifter manifold. Stacking the per-precoder
combiner outputs gives the m = M_RF * N_RF measurement operator
phi = F^T kron W^H acting on vectorized channels.
"""

from dataclasses import dataclass

import numpy as np

_MAGNITUDE_TOL = 1e-9


@dataclass(frozen=True)
class SensingOperator:
    """Precoder bank F (M x M_RF), combiner bank W (N x N_RF), and phi."""

    F: np.ndarray
    W: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        M = self.F.shape[0]
        N = self.W.shape[0]
        if not np.allclose(np.abs(self.F), 1.0 / np.sqrt(M), atol=_MAGNITUDE_TOL):
            raise ValueError("precoder entries must have magnitude 1/sqrt(M)")
        if not np.allclose(np.abs(self.W), 1.0 / np.sqrt(N), atol=_MAGNITUDE_TOL):
            raise ValueError("combiner entries must have magnitude 1/sqrt(N)")
        expected = (self.F.shape[1] * self.W.shape[1], M * N)
        if self.phi.shape != expected:
            raise ValueError(f"phi must have shape {expected}, got {self.phi.shape}")

    @property
    def n_measurements(self):
        return self.phi.shape[0]

    def full_row_rank(self):
        return np.linalg.matrix_rank(self.phi) == self.phi.shape[0]


def from_banks(F, W):
    """Compose a SensingOperator from explicit banks."""
    F = np.asarray(F, dtype=np.complex128)
    W = np.asarray(W, dtype=np.complex128)
    phi = np.kron(F.T, W.conj().T)
    return SensingOperator(F=F, W=W, phi=phi)


def build_sensing(M, M_RF, N, N_RF, rng):
    """Draw random unit-modulus phase banks and compose the operator.

    Phases are i.i.d. uniform on [0, 2*pi); the operator is almost
    surely full row rank but rank is not enforced here.
    """
    if not (1 <= M_RF <= M and 1 <= N_RF <= N):
        raise ValueError("need 1 <= M_RF <= M and 1 <= N_RF <= N")
    rng = np.random.default_rng(rng)
    F = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(M, M_RF))) / np.sqrt(M)
    W = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(N, N_RF))) / np.sqrt(N)
    return from_banks(F, W)


def dft_sensing(M, M_RF, N, N_RF):
    """Deterministic banks from the first columns of unitary DFT matrices.

    Gives orthonormal phi rows; with M_RF = M and N_RF = N the operator
    is square and unitary, which is convenient for exact-recovery tests.
    """
    if not (1 <= M_RF <= M and 1 <= N_RF <= N):
        raise ValueError("need 1 <= M_RF <= M and 1 <= N_RF <= N")
    F = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(M_RF)) / M) / np.sqrt(M)
    W = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(N_RF)) / N) / np.sqrt(N)
    return from_banks(F, W)
