"""Off-grid aware spatial covariance estimation for hybrid mmWave MIMO.

Ground-truth cluster channels are observed through a hybrid
analog-beamforming front end that compresses each snapshot to a few
measurements. The measurement covariance is then fitted greedily over a
cosine-uniform steering dictionary: COMP keeps the selected atoms on the
grid, PPCOMP also perturbs their angles continuously inside each grid
cell to absorb basis mismatch.
"""

__version__ = "0.1.0"

from .channel import (
    ArrayGeometry,
    ChannelRealization,
    MpcSet,
    SnapshotSet,
    channel_from_gains,
    complex_normal,
    draw_mpcs,
    generate_snapshots,
    realize_channel,
    steering_derivative,
    steering_vector,
    vectorize_channels,
)
from .dictionary import (
    AngularGrid,
    Dictionary,
    PerturbationBounds,
    atom,
    atoms_matrix,
    build_dictionary,
    build_grid,
    containing_cell,
    perturbation_bounds,
)
from .estimators import (
    CompCovariance,
    CovarianceEstimate,
    PpcompCovariance,
    SolverOptions,
    SupportState,
    comp,
    gamma_ls,
    gradient_directions,
    perturbation_solver,
    ppcomp,
    project_select,
    residual_covariance,
    sample_covariance,
)
from .metrics import GroundTruthCovariance, nmse, relative_efficiency, true_covariance
from .sensing import SensingOperator, build_sensing, dft_sensing, from_banks

__all__ = [
    "ArrayGeometry",
    "AngularGrid",
    "ChannelRealization",
    "CompCovariance",
    "CovarianceEstimate",
    "Dictionary",
    "GroundTruthCovariance",
    "MpcSet",
    "PerturbationBounds",
    "PpcompCovariance",
    "SensingOperator",
    "SnapshotSet",
    "SolverOptions",
    "SupportState",
    "atom",
    "atoms_matrix",
    "build_dictionary",
    "build_grid",
    "build_sensing",
    "channel_from_gains",
    "comp",
    "complex_normal",
    "containing_cell",
    "dft_sensing",
    "draw_mpcs",
    "from_banks",
    "gamma_ls",
    "generate_snapshots",
    "gradient_directions",
    "nmse",
    "perturbation_bounds",
    "perturbation_solver",
    "ppcomp",
    "project_select",
    "realize_channel",
    "relative_efficiency",
    "residual_covariance",
    "sample_covariance",
    "steering_derivative",
    "steering_vector",
    "true_covariance",
    "vectorize_channels",
]
