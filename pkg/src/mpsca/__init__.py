"""Joint multicast beamforming and antenna selection with SCA + saddle-point Mirror-Prox."""

from mpsca.channelgen import ChannelModelConfig, draw_instance
from mpsca.oracle import OracleResult, oracle, single_user_optimum
from mpsca.problem import ProblemInstance, group_l12_norm, group_support, min_snr, regularized_objective
from mpsca.realcplx import embed_quadratic, embed_vector, extract_complex
from mpsca.selection import BisectionConfig, ScaConfig, SelectionResult, bisect_lambda, sca_solve, solve_joint
from mpsca.surrogate import SurrogateModel, linearize, surrogate_value
from mpsca.spmp import SaddleState, SolverReport, duality_gap, solve_subproblem

__version__ = "0.1.0"

__all__ = [
    "ProblemInstance",
    "SurrogateModel",
    "SaddleState",
    "SolverReport",
    "ScaConfig",
    "BisectionConfig",
    "SelectionResult",
    "embed_quadratic",
    "embed_vector",
    "extract_complex",
    "min_snr",
    "group_l12_norm",
    "group_support",
    "regularized_objective",
    "linearize",
    "surrogate_value",
    "duality_gap",
    "solve_subproblem",
    "sca_solve",
    "bisect_lambda",
    "solve_joint",
    "ChannelModelConfig",
    "draw_instance",
    "OracleResult",
    "oracle",
    "single_user_optimum",
]
