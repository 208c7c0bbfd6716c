"""Gaussian-variational trajectory planning under uncertainty.

Computes Gaussian trajectory distributions by KL-proximal variational
inference over a sparse planning factor graph: belief propagation for
marginals, sparse Gauss-Hermite quadrature for expected collision costs,
and a statistical-linearization outer loop for nonlinear dynamics.
"""

from .backend import HAVE_EXTENSION, available_lanes
from .blocktri import (
    BlockTridiagonalMatrix,
    NotPositiveDefiniteError,
    logdet_block_tridiag,
)
from .dynamics import (
    LTVSystem,
    NonlinearSystem,
    euler_step,
    planar_quadrotor,
    point_robot_lti,
)
from .factors import (
    FactorGradient,
    MarginalMap,
    assemble_joint_gradients,
    collision_factor_gradients,
    evaluate_all_factors,
    extract_marginal,
)
from .gaussians import (
    GaussianCanonical,
    GaussianMoment,
    entropy,
    kl_divergence,
    to_canonical,
    to_moment,
)
from .gbp import gbp_marginals, gbp_mean_solve
from .optimizer import (
    CostBreakdown,
    Environment,
    JointGaussian,
    OptimizerConfig,
    RunResult,
    cost_breakdown,
    proximal_update,
    run_pgvimp,
    select_step_size,
)
from .prior import DiscretePrior, assemble_prior, grammian, transition_kernel
from .quadrature import (
    QuadratureRule,
    expect,
    hermite_rule_1d,
    smolyak_rule,
    tensor_rule,
)
from .sdf import (
    CollisionModel,
    SignedDistanceField,
    distance,
    hinge_cost,
    load_sdf,
    min_clearance,
    rasterize,
)
from .slr import NominalTrajectory, OuterConfig, run_ipgvimp, slr_linearize

__version__ = "0.1.0"
