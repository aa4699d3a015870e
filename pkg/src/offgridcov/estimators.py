"""Greedy covariance estimators over the steering dictionary.

Two algorithms share one outer loop. COMP greedily selects dictionary
atoms by the quadratic projection of the residual covariance and fits
their Hermitian cross-gain matrix by least squares at the fixed grid
angles. PPCOMP additionally refines the selected angle pairs inside
their grid cells with a projected-gradient perturbation solver, so the
fit tracks the continuous angles instead of the nearest grid points.

The cross-gain matrix (gamma) has two fitting modes: "joint" solves the
Frobenius-optimal least-squares problem over all selected atoms at
once, while "pairwise" applies independent per-pair single-vector
pseudo-inverses. Both coincide when the compressed atoms are
orthonormal; the joint mode never has a larger residual and is the
default. Outer residuals are non-increasing in joint mode only; the
per-pair mode carries no such guarantee.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .dictionary import atom_derivatives, atoms_matrix, perturbation_bounds
from .validation import as_phi_matrix, as_snapshots, check_hermitian, hermitian_part

_RESIDUAL_DECREASE_TOL = 1e-8
_MAX_BACKTRACKS = 20
_COLLAPSE_CORRELATION = 0.999
_GAMMA_MODES = ("joint", "pairwise")


@dataclass
class SolverOptions:
    """Tuning knobs shared by the outer loop and the perturbation solver.

    epsilon_rel     stop the outer loop once the residual energy falls
                    below this fraction of ||R_y||_F^2
    k_max           maximum support size; set it to about twice the
                    expected path count to absorb off-grid leakage
    p_max           maximum perturbation iterations per outer step
    step_init       initial step as a fraction of the cell width
    step_shrink     backtracking factor in (0, 1)
    grad_tol        stop once the largest angle update is below this
    gamma_mode      "joint" (least squares) or "pairwise" (per-pair)
    """

    epsilon_rel: float = 1e-3
    k_max: int = 8
    p_max: int = 50
    step_init: float = 0.25
    step_shrink: float = 0.5
    grad_tol: float = 1e-6
    gamma_mode: str = "joint"

    def __post_init__(self):
        if min(self.epsilon_rel, self.k_max, self.p_max, self.step_init,
               self.step_shrink, self.grad_tol) <= 0:
            raise ValueError("all solver options must be positive")
        if self.step_shrink >= 1:
            raise ValueError("step_shrink must be < 1")
        if self.gamma_mode not in _GAMMA_MODES:
            raise ValueError(f"gamma_mode must be one of {_GAMMA_MODES}")


@dataclass
class SupportState:
    """Selected atoms, their grid cells, and the current perturbed angles.

    Angle rows are (AoA, AoD); bounds hold (lower, upper) perturbation
    distances per atom for the corresponding axis.
    """

    n_rx: int
    n_tx: int
    indices: list = field(default_factory=list)
    base_angles: np.ndarray = None
    current_angles: np.ndarray = None
    bounds_rx: np.ndarray = None
    bounds_tx: np.ndarray = None
    gamma: np.ndarray = None

    def __post_init__(self):
        if self.base_angles is None:
            self.base_angles = np.zeros((0, 2))
        if self.current_angles is None:
            self.current_angles = self.base_angles.copy()
        if self.bounds_rx is None:
            self.bounds_rx = np.zeros((0, 2))
        if self.bounds_tx is None:
            self.bounds_tx = np.zeros((0, 2))
        if self.gamma is None:
            self.gamma = np.zeros((0, 0), dtype=np.complex128)

    @property
    def k(self):
        return len(self.indices)

    def add(self, index, base_rx, base_tx, bounds_rx, bounds_tx):
        """Append an atom at its grid point; gamma grows by a zero row/column."""
        if index in self.indices:
            raise ValueError(f"atom {index} already selected")
        self.indices.append(int(index))
        row = np.array([[base_rx, base_tx]])
        self.base_angles = np.vstack([self.base_angles, row])
        self.current_angles = np.vstack([self.current_angles, row])
        self.bounds_rx = np.vstack([self.bounds_rx, [[bounds_rx.lower, bounds_rx.upper]]])
        self.bounds_tx = np.vstack([self.bounds_tx, [[bounds_tx.lower, bounds_tx.upper]]])
        g = np.zeros((self.k, self.k), dtype=np.complex128)
        g[:-1, :-1] = self.gamma
        self.gamma = g

    def lower_edges(self):
        """Absolute lower angle limits, shape (k, 2)."""
        lo = self.base_angles.copy()
        lo[:, 0] -= self.bounds_rx[:, 0]
        lo[:, 1] -= self.bounds_tx[:, 0]
        return lo

    def upper_edges(self):
        """Absolute upper angle limits, shape (k, 2)."""
        hi = self.base_angles.copy()
        hi[:, 0] += self.bounds_rx[:, 1]
        hi[:, 1] += self.bounds_tx[:, 1]
        return hi

    def cell_widths(self):
        """Feasible interval lengths per atom and axis, shape (k, 2)."""
        return np.column_stack([
            self.bounds_rx[:, 0] + self.bounds_rx[:, 1],
            self.bounds_tx[:, 0] + self.bounds_tx[:, 1],
        ])

    def atoms(self):
        """Dictionary atoms at the current angles, shape (n_rx*n_tx, k)."""
        return atoms_matrix(self.current_angles, self.n_rx, self.n_tx)

    def compressed(self, phi):
        """Atoms pushed through the measurement operator, shape (m, k)."""
        return as_phi_matrix(phi) @ self.atoms()


@dataclass
class SolverReport:
    """Per-call diagnostics from the perturbation solver."""

    iterations: int
    residuals: list
    frozen: list
    rank_deficient: bool
    backtracks: int


@dataclass
class CovarianceEstimate:
    """Reconstructed channel covariance plus fit diagnostics."""

    covariance: np.ndarray
    support: SupportState
    residual_history: list
    solver_iterations: list
    diagnostics: dict


def sample_covariance(snapshots):
    """Average outer product of the measurement vectors, (1/T) sum y_t y_t^H."""
    Y = as_snapshots(snapshots)
    R = (Y.T @ Y.conj()) / Y.shape[0]
    return hermitian_part(R)


def project_select(R_res, D, excluded=()):
    """Pick the dictionary column maximizing |d_j^H R_res d_j| / ||d_j||^2.

    The quadratic form is normalized by the squared column norm, so the
    winner is the atom whose optimal rank-one fit removes the most
    residual energy; compressed columns have very uneven norms and the
    unnormalized form degenerates into selecting the largest ones.
    Ties break toward the lowest index; columns in `excluded` are
    skipped and selecting from an empty candidate set raises.
    """
    excluded = list(excluded)
    if len(excluded) >= D.shape[1]:
        raise ValueError("all dictionary columns are excluded")
    quad = np.abs(np.einsum("ij,ij->j", D.conj(), R_res @ D))
    norms2 = np.sum(np.abs(D) ** 2, axis=0)
    vals = np.divide(quad, norms2, out=np.full_like(quad, -1.0), where=norms2 > 0)
    if excluded:
        vals[excluded] = -1.0
    return int(np.argmax(vals))


def _pinv_with_rank(V):
    """Moore-Penrose pseudo-inverse plus the numerical rank of V."""
    u, s, vh = np.linalg.svd(V, full_matrices=False)
    tol = max(V.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    inv_s = np.zeros_like(s)
    inv_s[:rank] = 1.0 / s[:rank]
    return (vh.conj().T * inv_s) @ u.conj().T, rank


def _gamma_fit(R_y, V, mode):
    """Gamma matrix plus a rank-deficiency flag for the joint mode."""
    norms2 = np.sum(np.abs(V) ** 2, axis=0)
    if np.any(norms2 == 0):
        raise ValueError("compressed atoms must be nonzero")
    if mode == "joint":
        pinv, rank = _pinv_with_rank(V)
        gamma = pinv @ R_y @ pinv.conj().T
        return hermitian_part(gamma), rank < V.shape[1]
    quad = V.conj().T @ R_y @ V
    gamma = quad / np.outer(norms2, norms2)
    return hermitian_part(gamma), False


def gamma_ls(R_y, V, mode="joint"):
    """Hermitian cross-gain matrix fitting R_y ~ V gamma V^H.

    V holds the k compressed atoms as columns (a single vector is
    promoted). "joint" returns the least-squares minimizer through the
    joint pseudo-inverse; "pairwise" applies the per-pair single-vector
    pseudo-inverse rule gamma[l, q] = v_l^H R_y v_q / (|v_l|^2 |v_q|^2).
    """
    if mode not in _GAMMA_MODES:
        raise ValueError(f"mode must be one of {_GAMMA_MODES}")
    V = np.asarray(V, dtype=np.complex128)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[1] < 1:
        raise ValueError("need at least one atom")
    gamma, _ = _gamma_fit(np.asarray(R_y, dtype=np.complex128), V, mode)
    return gamma


def residual_covariance(R_y, support, phi):
    """Measurement covariance left unexplained by the current support."""
    R_y = np.asarray(R_y, dtype=np.complex128)
    if support.k == 0:
        return hermitian_part(R_y.copy())
    V = support.compressed(phi)
    return hermitian_part(R_y - V @ support.gamma @ V.conj().T)


def _gradients(angles, gamma, R_res, phi_mat, n_rx, n_tx):
    """Descent directions of the residual energy at fixed gamma.

    Entry l is -1/2 d/d(theta_l) of ||R_res||_F^2, so stepping
    positively along it decreases the residual.
    """
    A = atoms_matrix(angles, n_rx, n_tx)
    dA_rx, dA_tx = atom_derivatives(angles, n_rx, n_tx)
    V = phi_mat @ A
    core = gamma @ (V.conj().T @ R_res @ phi_mat)
    d_rx = 2.0 * np.real(np.einsum("ij,ji->i", core, dA_rx))
    d_tx = 2.0 * np.real(np.einsum("ij,ji->i", core, dA_tx))
    return d_rx, d_tx


def gradient_directions(support, R_res, phi):
    """Descent directions at the support's current angles and gamma."""
    if support.k < 1:
        raise ValueError("support is empty")
    return _gradients(
        support.current_angles, support.gamma, R_res,
        as_phi_matrix(phi), support.n_rx, support.n_tx,
    )


def _collapse_mask(V):
    """Flag the later of any atom pair with near-identical compressed response."""
    k = V.shape[1]
    frozen = np.zeros(k, dtype=bool)
    norms = np.linalg.norm(V, axis=0)
    norms[norms == 0] = 1.0
    corr = np.abs((V / norms).conj().T @ (V / norms))
    for l in range(k):
        if frozen[l]:
            continue
        for q in range(l + 1, k):
            if corr[l, q] > _COLLAPSE_CORRELATION:
                frozen[q] = True
    return frozen


_STEP_GROW = 2.0
_STEP_MAX = 4.0
_POLISH_SCAN = 9
_POLISH_PASSES = 3
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def perturbation_solver(R_y, support, phi, opts=None):
    """Refine the support's angles inside their cells to shrink the residual.

    Alternates a gamma refit at the current angles with a clamped step
    along the normalized gradient direction of every (AoA, AoD) pair.
    The step length starts at step_init * cell width per atom and axis,
    grows after accepted moves, and is backtracked (multiplied by
    step_shrink, up to 20 times) whenever a move would increase the
    residual, so the per-iteration residual sequence is non-increasing.
    The joint iteration stops at p_max iterations, when the largest
    angle update drops below grad_tol, or when the relative residual
    decrease falls below 1e-8; the newest atom's cell is then swept with
    a per-axis line search, which also rescues cells anchored at
    theta = 0 where the array response is stationary and the gradient
    vanishes identically. The final gamma is recomputed at the final
    angles from the unscaled input covariance.

    Returns the updated SupportState and a SolverReport.
    """
    opts = opts or SolverOptions()
    if support.k < 1:
        raise ValueError("support is empty")
    phi_mat = as_phi_matrix(phi)
    R_y = np.asarray(R_y, dtype=np.complex128)
    n_rx, n_tx = support.n_rx, support.n_tx
    scale = float(np.linalg.norm(R_y))
    if scale == 0.0:
        support.gamma = np.zeros((support.k, support.k), dtype=np.complex128)
        return support, SolverReport(0, [0.0], [], False, 0)
    # Iterate on the unit-norm covariance so step sizes behave the same
    # at every data scale; gamma_ls is linear in R_y, so only the final
    # refit below needs the original scale.
    Rn = R_y / scale
    e_scale = scale * scale

    lo = support.lower_edges()
    hi = support.upper_edges()
    theta = support.current_angles.copy()
    base_step = opts.step_init * support.cell_widths()

    def evaluate(angles):
        V = phi_mat @ atoms_matrix(angles, n_rx, n_tx)
        gamma, rank_def = _gamma_fit(Rn, V, opts.gamma_mode)
        R_res = hermitian_part(Rn - V @ gamma @ V.conj().T)
        return gamma, R_res, float(np.linalg.norm(R_res) ** 2), rank_def

    frozen = _collapse_mask(phi_mat @ atoms_matrix(theta, n_rx, n_tx))
    gamma, R_res, e, rank_def_any = evaluate(theta)
    residuals = [e * e_scale]
    backtracks = 0
    t = 1.0

    def axis_value_at(theta_c, l, axis, x):
        cand = theta_c.copy()
        cand[l, axis] = x
        return cand, evaluate(cand)

    def axis_search(theta_c, l, axis, e_now):
        """1-D scan plus golden-section refinement of one coordinate.

        Returns the improved (x, gamma, R_res, e) or None. Rescues
        directions with vanishing gradient and finishes off the flat
        valleys the joint gradient step crawls along.
        """
        a, b = lo[l, axis], hi[l, axis]
        if b - a <= 0:
            return None
        xs = np.linspace(a, b, _POLISH_SCAN)
        evals = [(x,) + axis_value_at(theta_c, l, axis, x)[1] for x in xs]
        best = min(evals, key=lambda item: item[3])
        half = (b - a) / (_POLISH_SCAN - 1)
        x_lo = max(a, best[0] - half)
        x_hi = min(b, best[0] + half)
        x1 = x_hi - _GOLDEN * (x_hi - x_lo)
        x2 = x_lo + _GOLDEN * (x_hi - x_lo)
        g1, R1, e1, _ = axis_value_at(theta_c, l, axis, x1)[1]
        g2, R2, e2, _ = axis_value_at(theta_c, l, axis, x2)[1]
        while x_hi - x_lo > 1e-10:
            if e1 <= e2:
                x_hi, x2, e2 = x2, x1, e1
                x1 = x_hi - _GOLDEN * (x_hi - x_lo)
                g1, R1, e1, _ = axis_value_at(theta_c, l, axis, x1)[1]
            else:
                x_lo, x1, e1 = x1, x2, e2
                x2 = x_lo + _GOLDEN * (x_hi - x_lo)
                g2, R2, e2, _ = axis_value_at(theta_c, l, axis, x2)[1]
        x_b, g_b, R_b, e_b = min(
            [best[:4], (x1, g1, R1, e1), (x2, g2, R2, e2)],
            key=lambda item: item[3],
        )
        if e_b >= e_now:
            return None
        return x_b, g_b, R_b, e_b

    p = 0
    while p < opts.p_max:
        d_rx, d_tx = _gradients(theta, gamma, R_res, phi_mat, n_rx, n_tx)
        step = np.column_stack([d_rx, d_tx])
        step[frozen] = 0.0
        grad_max = float(np.max(np.abs(step)))
        accepted = False
        if grad_max > 0.0:
            direction = step / grad_max
            for _ in range(_MAX_BACKTRACKS + 1):
                proposal = np.clip(theta + t * base_step * direction, lo, hi)
                gamma_p, R_res_p, e_p, rank_def = evaluate(proposal)
                if e_p <= e:
                    accepted = True
                    break
                t *= opts.step_shrink
                backtracks += 1
        if not accepted:
            break
        delta = float(np.max(np.abs(proposal - theta)))
        rel_decrease = (e - e_p) / max(e, np.finfo(float).tiny)
        theta, gamma, R_res = proposal, gamma_p, R_res_p
        rank_def_any = rank_def_any or rank_def
        e = e_p
        residuals.append(e * e_scale)
        p += 1
        t = min(t * _STEP_GROW, _STEP_MAX)
        if delta < opts.grad_tol:
            break
        if rel_decrease < _RESIDUAL_DECREASE_TOL:
            break

    # Coordinate polish of the newest atom: the gradient carries no
    # information at the theta = 0 grid point and crawls along flat
    # valleys, so its cell is swept directly once the joint iteration
    # settles. Older atoms were polished when they were added.
    last = support.k - 1
    if not frozen[last] and e > 1e-28:
        for _ in range(_POLISH_PASSES):
            improved = False
            for axis in (0, 1):
                found = axis_search(theta, last, axis, e)
                if found is not None:
                    theta = theta.copy()
                    theta[last, axis], gamma, R_res, e = found
                    residuals.append(e * e_scale)
                    improved = True
            if not improved:
                break

    support.current_angles = theta
    V_final = phi_mat @ atoms_matrix(theta, n_rx, n_tx)
    support.gamma, rank_def = _gamma_fit(R_y, V_final, opts.gamma_mode)
    rank_def_any = rank_def_any or rank_def
    report = SolverReport(
        iterations=p,
        residuals=residuals,
        frozen=list(np.flatnonzero(frozen)),
        rank_deficient=rank_def_any,
        backtracks=backtracks,
    )
    return support, report


def _greedy_fit(R_y, dictionary, phi, opts, perturb):
    """Shared outer loop behind comp() and ppcomp()."""
    opts = opts or SolverOptions()
    phi_mat = as_phi_matrix(phi)
    R_y = check_hermitian(R_y, tol=1e-8, name="R_y")
    if R_y.shape[0] != phi_mat.shape[0]:
        raise ValueError(
            f"R_y has {R_y.shape[0]} rows but the operator yields {phi_mat.shape[0]} measurements"
        )
    if phi_mat.shape[1] != dictionary.atoms.shape[0]:
        raise ValueError("sensing operator and dictionary disagree on channel size")

    D = phi_mat @ dictionary.atoms
    norm2 = float(np.linalg.norm(R_y) ** 2)
    support = SupportState(n_rx=dictionary.n_rx, n_tx=dictionary.n_tx)
    diagnostics = {"frozen_events": [], "rank_deficient": False, "backtracks": 0}
    residual_history = []
    solver_iterations = []
    R_res = R_y.copy()
    e = norm2

    while e > opts.epsilon_rel * norm2 and support.k < min(opts.k_max, dictionary.n_atoms):
        j = project_select(R_res, D, excluded=support.indices)
        i_rx, i_tx = dictionary.index_pair(j)
        support.add(
            j,
            base_rx=dictionary.grid_rx.angles[i_rx],
            base_tx=dictionary.grid_tx.angles[i_tx],
            bounds_rx=perturbation_bounds(dictionary.grid_rx, i_rx),
            bounds_tx=perturbation_bounds(dictionary.grid_tx, i_tx),
        )
        if perturb:
            support, report = perturbation_solver(R_y, support, phi_mat, opts)
            solver_iterations.append(report.iterations)
            diagnostics["backtracks"] += report.backtracks
            diagnostics["rank_deficient"] |= report.rank_deficient
            if report.frozen:
                diagnostics["frozen_events"].append((support.k, report.frozen))
        else:
            V = support.compressed(phi_mat)
            support.gamma, rank_def = _gamma_fit(R_y, V, opts.gamma_mode)
            diagnostics["rank_deficient"] |= rank_def
            solver_iterations.append(0)
        R_res = residual_covariance(R_y, support, phi_mat)
        e = float(np.linalg.norm(R_res) ** 2)
        residual_history.append(e)

    if support.k:
        A = support.atoms()
        R_hat = hermitian_part(A @ support.gamma @ A.conj().T)
    else:
        mn = dictionary.atoms.shape[0]
        R_hat = np.zeros((mn, mn), dtype=np.complex128)
    return CovarianceEstimate(
        covariance=R_hat,
        support=support,
        residual_history=residual_history,
        solver_iterations=solver_iterations,
        diagnostics=diagnostics,
    )


def ppcomp(R_y, dictionary, phi, opts=None):
    """Parameter-perturbed greedy covariance fit (PPCOMP).

    Repeats quadratic atom selection, feeds the grown support through
    the perturbation solver, and subtracts the fitted contribution until
    the relative residual energy drops below epsilon_rel or k_max atoms
    are selected. The returned covariance is assembled at the final
    perturbed angles in the full channel space.
    """
    return _greedy_fit(R_y, dictionary, phi, opts, perturb=True)


def comp(R_y, dictionary, phi, opts=None):
    """Fixed-grid greedy covariance fit (COMP baseline).

    Identical to ppcomp() with all perturbations pinned to zero: atoms
    stay at their grid angles and only the cross-gain matrix is fitted.
    """
    return _greedy_fit(R_y, dictionary, phi, opts, perturb=False)


class _GreedyCovarianceBase(BaseEstimator):
    """Shared sklearn-style wrapper around the functional estimators."""

    _perturb = False

    def __init__(self, dictionary=None, sensing=None, epsilon_rel=1e-3, k_max=8,
                 p_max=50, step_init=0.25, step_shrink=0.5, grad_tol=1e-6,
                 gamma_mode="joint"):
        self.dictionary = dictionary
        self.sensing = sensing
        self.epsilon_rel = epsilon_rel
        self.k_max = k_max
        self.p_max = p_max
        self.step_init = step_init
        self.step_shrink = step_shrink
        self.grad_tol = grad_tol
        self.gamma_mode = gamma_mode

    def _options(self):
        return SolverOptions(
            epsilon_rel=self.epsilon_rel,
            k_max=self.k_max,
            p_max=self.p_max,
            step_init=self.step_init,
            step_shrink=self.step_shrink,
            grad_tol=self.grad_tol,
            gamma_mode=self.gamma_mode,
        )

    def fit(self, X, y=None):
        """Fit from measurement snapshots X of shape (T, m).

        Also accepts a SnapshotSet. Sets covariance_, support_,
        residual_history_, solver_iterations_ and n_iter_.
        """
        if self.dictionary is None or self.sensing is None:
            raise ValueError("dictionary and sensing must be set before fit")
        X = as_snapshots(X)
        self.sample_covariance_ = sample_covariance(X)
        estimate = _greedy_fit(
            self.sample_covariance_, self.dictionary, self.sensing,
            self._options(), self._perturb,
        )
        self.estimate_ = estimate
        self.covariance_ = estimate.covariance
        self.support_ = estimate.support
        self.residual_history_ = estimate.residual_history
        self.solver_iterations_ = estimate.solver_iterations
        self.n_iter_ = len(estimate.residual_history)
        return self


class CompCovariance(_GreedyCovarianceBase):
    """sklearn-style COMP estimator; fit(Y) exposes covariance_."""

    _perturb = False


class PpcompCovariance(_GreedyCovarianceBase):
    """sklearn-style PPCOMP estimator; fit(Y) exposes covariance_."""

    _perturb = True
