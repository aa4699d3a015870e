"""Ground-truth cluster channel model and compressed snapshot generation.

The propagation model is a sum of K clusters with L multipath components
each, every component carrying an (AoA, AoD) pair that stays fixed over
the T snapshots while its complex gain fades independently per snapshot.
Both ends use half-wavelength uniform linear arrays.
"""

from dataclasses import dataclass

import numpy as np

from .validation import as_phi_matrix

_ARRAY_ROLES = ("BS", "UE")


@dataclass(frozen=True)
class ArrayGeometry:
    """Half-wavelength uniform linear array at one end of the link."""

    n_antennas: int
    role: str

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        if self.role not in _ARRAY_ROLES:
            raise ValueError(f"role must be one of {_ARRAY_ROLES}")


@dataclass(frozen=True)
class MpcSet:
    """Angles and normalization of the K*L multipath components."""

    n_clusters: int
    paths_per_cluster: int
    aoa: np.ndarray
    aod: np.ndarray
    beta: float

    def __post_init__(self):
        if self.n_clusters < 1 or self.paths_per_cluster < 1:
            raise ValueError("cluster structure must be positive")
        n = self.n_clusters * self.paths_per_cluster
        aoa = np.asarray(self.aoa, dtype=float)
        aod = np.asarray(self.aod, dtype=float)
        if aoa.shape != (n,) or aod.shape != (n,):
            raise ValueError(f"need {n} AoA and AoD values")
        for name, ang in (("aoa", aoa), ("aod", aod)):
            if np.any(ang < 0.0) or np.any(ang >= np.pi):
                raise ValueError(f"{name} values must lie in [0, pi)")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "aoa", aoa)
        object.__setattr__(self, "aod", aod)

    @property
    def n_paths(self):
        return self.n_clusters * self.paths_per_cluster


@dataclass(frozen=True)
class ChannelRealization:
    """Per-snapshot channel matrices together with the gains that built them."""

    mpcs: MpcSet
    n_rx: int
    n_tx: int
    gains: np.ndarray
    channel_matrices: np.ndarray

    @property
    def snapshots(self):
        return self.channel_matrices.shape[0]


@dataclass(frozen=True)
class SnapshotSet:
    """Compressed measurement vectors, one row per snapshot."""

    measurements: np.ndarray
    noise_variance: float

    def __post_init__(self):
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")


def steering_vector(theta, n):
    """Array response of an n-element half-wavelength ULA.

    Element m (0-based) is exp(j*pi*m*cos(theta)) / sqrt(n); the vector
    has unit Euclidean norm for every theta.
    """
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    m = np.arange(n)
    return np.exp(1j * np.pi * m * np.cos(theta)) / np.sqrt(n)


def steering_derivative(theta, n):
    """Elementwise derivative of steering_vector with respect to theta."""
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    m = np.arange(n)
    return -1j * np.pi * m * np.sin(theta) * steering_vector(theta, n)


def steering_matrix(thetas, n):
    """Stack steering vectors for several angles as columns, shape (n, len(thetas))."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    m = np.arange(n)[:, None]
    return np.exp(1j * np.pi * m * np.cos(thetas)[None, :]) / np.sqrt(n)


def steering_matrix_derivative(thetas, n):
    """Columnwise theta-derivatives matching steering_matrix."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    m = np.arange(n)[:, None]
    return (-1j * np.pi * m * np.sin(thetas)[None, :]) * steering_matrix(thetas, n)


def complex_normal(rng, shape, var=1.0):
    """Draw circularly symmetric complex Gaussians, CN(0, var) per entry."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_mpcs(K, L, rng, beta=None):
    """Draw K*L multipath components with angles i.i.d. uniform on [0, pi).

    Parameters
    ----------
    K, L : int
        Clusters and paths per cluster.
    rng : numpy.random.Generator or int
        Random source (or a seed).
    beta : float, optional
        Normalization factor; defaults to sqrt(K*L) so the expected
        squared Frobenius norm of each channel matrix is 1.
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be >= 1")
    rng = np.random.default_rng(rng)
    n = K * L
    aoa = rng.uniform(0.0, np.pi, size=n)
    aod = rng.uniform(0.0, np.pi, size=n)
    if beta is None:
        beta = float(np.sqrt(n))
    return MpcSet(n_clusters=K, paths_per_cluster=L, aoa=aoa, aod=aod, beta=beta)


def channel_from_gains(mpcs, n_rx, n_tx, gains):
    """Assemble channel matrices from explicit per-snapshot path gains.

    H_t = (1/beta) * sum_l gains[l, t] * a_rx(aoa_l) a_tx(aod_l)^H,
    with shape (T, n_rx, n_tx).
    """
    gains = np.asarray(gains, dtype=np.complex128)
    if gains.ndim != 2 or gains.shape[0] != mpcs.n_paths:
        raise ValueError(f"gains must have shape ({mpcs.n_paths}, T)")
    A_rx = steering_matrix(mpcs.aoa, n_rx)
    A_tx = steering_matrix(mpcs.aod, n_tx)
    H = np.einsum("nk,kt,mk->tnm", A_rx, gains, A_tx.conj()) / mpcs.beta
    return ChannelRealization(
        mpcs=mpcs, n_rx=n_rx, n_tx=n_tx, gains=gains, channel_matrices=H
    )


def realize_channel(mpcs, n_rx, n_tx, T, rng):
    """Draw i.i.d. CN(0, 1) path gains for T snapshots and build the channel."""
    if T < 1:
        raise ValueError("snapshot count must be >= 1")
    rng = np.random.default_rng(rng)
    gains = complex_normal(rng, (mpcs.n_paths, T), var=1.0)
    return channel_from_gains(mpcs, n_rx, n_tx, gains)


def vectorize_channels(chan):
    """Column-major vectorizations of channel matrices, shape (T, n_rx*n_tx)."""
    H = chan.channel_matrices
    return H.transpose(0, 2, 1).reshape(H.shape[0], -1)


def generate_snapshots(chan, sensing, sigma2, rng):
    """Compress each channel snapshot through the sensing operator and add noise.

    y_t = Phi vec(H_t) + (I kron W^H) n_t with n_t i.i.d. CN(0, sigma2)
    per complex dimension; sigma2 = 0 gives exact noiseless measurements.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    phi = as_phi_matrix(sensing)
    mn = chan.n_rx * chan.n_tx
    if phi.shape[1] != mn:
        raise ValueError(
            f"sensing operator expects {phi.shape[1]} channel entries, channel has {mn}"
        )
    rng = np.random.default_rng(rng)
    vecs = vectorize_channels(chan)
    Y = vecs @ phi.T
    if sigma2 > 0:
        if not hasattr(sensing, "W"):
            raise ValueError("noise combining requires a SensingOperator, not a bare matrix")
        W = sensing.W
        m_rf = sensing.F.shape[1]
        noise = complex_normal(rng, (chan.snapshots, chan.n_rx, m_rf), var=sigma2)
        combined = np.einsum("rn,tnp->tpr", W.conj().T, noise)
        Y = Y + combined.reshape(chan.snapshots, -1)
    return SnapshotSet(measurements=Y, noise_variance=float(sigma2))
