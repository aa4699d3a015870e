"""Cosine-uniform angular grids, the virtual-channel dictionary, and cell bounds.

Grid angles are spaced uniformly in cos(theta) from 1 down to just above
-1, which keeps the resulting steering dictionary orthogonal when the
grid size matches the antenna count. Dictionary columns are vectorized
outer products of receive and transmit steering vectors; the column for
grid pair (i_rx, i_tx) sits at index i_tx * G_rx + i_rx (0-based).
"""

from dataclasses import dataclass

import numpy as np

from .channel import (
    steering_matrix,
    steering_matrix_derivative,
    steering_vector,
)


@dataclass(frozen=True)
class AngularGrid:
    """Grid of size G with cos(angles[i]) = 1 - 2i/G, i = 0..G-1."""

    size: int
    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float))

    @property
    def cos_values(self):
        return np.cos(self.angles)


@dataclass(frozen=True)
class PerturbationBounds:
    """Feasible perturbation distances below/above a grid point, both >= 0."""

    lower: float
    upper: float


def build_grid(G):
    """Build the cosine-uniform angular grid of size G (G >= 2)."""
    if G < 2:
        raise ValueError("grid size must be >= 2")
    cos_vals = 1.0 - 2.0 * np.arange(G) / G
    return AngularGrid(size=G, angles=np.arccos(cos_vals))


def atom(theta_rx, theta_tx, n_rx, n_tx):
    """Vectorized rank-one array response for one (AoA, AoD) pair.

    Equals conj(a_tx) kron a_rx, i.e. vec(a_rx a_tx^H) in column-major
    order; always unit norm.
    """
    return np.kron(steering_vector(theta_tx, n_tx).conj(), steering_vector(theta_rx, n_rx))


def atoms_matrix(angles, n_rx, n_tx):
    """Atoms for a (k, 2) array of (AoA, AoD) rows, stacked as columns."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    A_rx = steering_matrix(angles[:, 0], n_rx)
    A_tx = steering_matrix(angles[:, 1], n_tx)
    return (A_tx.conj()[:, None, :] * A_rx[None, :, :]).reshape(n_rx * n_tx, -1)


def atom_derivatives(angles, n_rx, n_tx):
    """Partial derivatives of each atom w.r.t. its AoA and its AoD.

    Returns (d_rx, d_tx), each of shape (n_rx*n_tx, k) matching
    atoms_matrix column order.
    """
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    A_rx = steering_matrix(angles[:, 0], n_rx)
    A_tx = steering_matrix(angles[:, 1], n_tx)
    D_rx = steering_matrix_derivative(angles[:, 0], n_rx)
    D_tx = steering_matrix_derivative(angles[:, 1], n_tx)
    d_rx = (A_tx.conj()[:, None, :] * D_rx[None, :, :]).reshape(n_rx * n_tx, -1)
    d_tx = (D_tx.conj()[:, None, :] * A_rx[None, :, :]).reshape(n_rx * n_tx, -1)
    return d_rx, d_tx


@dataclass(frozen=True)
class Dictionary:
    """Steering dictionary over a receive grid and a transmit grid."""

    grid_rx: AngularGrid
    grid_tx: AngularGrid
    n_rx: int
    n_tx: int
    atoms: np.ndarray

    @property
    def n_atoms(self):
        return self.atoms.shape[1]

    def index_of(self, i_rx, i_tx):
        """Column index of grid pair (i_rx, i_tx), both 0-based."""
        if not (0 <= i_rx < self.grid_rx.size and 0 <= i_tx < self.grid_tx.size):
            raise IndexError("grid index out of range")
        return i_tx * self.grid_rx.size + i_rx

    def index_pair(self, j):
        """Inverse of index_of."""
        if not (0 <= j < self.n_atoms):
            raise IndexError("atom index out of range")
        return j % self.grid_rx.size, j // self.grid_rx.size

    def base_angles(self, j):
        """(AoA, AoD) grid angles of atom j."""
        i_rx, i_tx = self.index_pair(j)
        return float(self.grid_rx.angles[i_rx]), float(self.grid_tx.angles[i_tx])


def build_dictionary(grid_rx, grid_tx, n_rx, n_tx):
    """Assemble the full dictionary; column j = conj(a_tx[i_tx]) kron a_rx[i_rx]."""
    if grid_rx.size < 2 or grid_tx.size < 2:
        raise ValueError("grid sizes must be >= 2")
    A_rx = steering_matrix(grid_rx.angles, n_rx)
    A_tx = steering_matrix(grid_tx.angles, n_tx)
    atoms = np.kron(A_tx.conj(), A_rx)
    return Dictionary(grid_rx=grid_rx, grid_tx=grid_tx, n_rx=n_rx, n_tx=n_tx, atoms=atoms)


def perturbation_bounds(grid, i):
    """Perturbation bounds for grid point i (0-based).

    Interior points get half the angular distance to each neighbor; the
    first point has lower = 0 and the last reaches halfway to pi, so the
    perturbed angle always stays in [0, pi] and adjacent cells tile the
    axis without overlapping interiors.
    """
    if not (0 <= i < grid.size):
        raise IndexError("grid index out of range")
    ang = grid.angles
    lower = 0.0 if i == 0 else 0.5 * (ang[i] - ang[i - 1])
    upper = 0.5 * (np.pi - ang[i]) if i == grid.size - 1 else 0.5 * (ang[i + 1] - ang[i])
    return PerturbationBounds(lower=float(lower), upper=float(upper))


def containing_cell(grid, theta):
    """Index of the grid cell whose perturbation interval holds theta.

    Angles exactly on a shared cell edge resolve to the lower index.
    Angles above the last cell's upper edge have no cell and raise.
    """
    ang = grid.angles
    if theta < 0:
        raise ValueError("theta must be >= 0")
    edges = 0.5 * (ang[1:] + ang[:-1])
    i = int(np.searchsorted(edges, theta, side="left"))
    b = perturbation_bounds(grid, i)
    if theta > ang[i] + b.upper:
        raise ValueError("theta lies above the last grid cell")
    return i
