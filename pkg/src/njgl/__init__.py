"""Joint estimation of multiple sparse Gaussian graphical models.

Node-based penalties couple K precision matrices either through
perturbed nodes (whole rows/columns differing across classes) or common
hub nodes (dense rows/columns shared by all classes).  Both problems,
and the classical single-matrix / fused / group baselines, are solved by
ADMM with a shared penalty schedule; thresholded screening conditions
split large problems into independent blocks.
"""

from .admm import AdmmDiagnostics, AdmmOptions
from .baselines import solve_fgl, solve_ggl, solve_gl, solve_gl_model
from .cnjgl import CnjglState, solve_cnjgl, step_cnjgl
from .datagen import SyntheticDataset, SyntheticTruth, gen_community, gen_erdos, gen_scalefree
from .metrics import (
    CvRow,
    MetricConfig,
    MetricReport,
    cohub_node_scores,
    cross_validate,
    edge_metrics,
    evaluate,
    frobenius_error,
    perturbed_node_scores,
    positive_edge_count,
)
from .model import (
    BlockPartition,
    CouplingError,
    EmpiricalModel,
    PenaltyConfig,
    PrecisionSet,
    cnjgl_objective,
    fgl_objective,
    ggl_objective,
    gl_objective,
    neg_log_likelihood,
    pnjgl_objective,
)
from .pnjgl import PnjglState, solve_pnjgl, step_pnjgl
from .prox import (
    expand,
    project_l1_ball,
    prox_group_l2,
    prox_group_linf,
    prox_l1,
    prox_sparse_group,
)
from .rcon import RconCertificate, check_certificate, rcon_value
from .screening import (
    ScreenGraph,
    ScreenReport,
    build_screen_graph,
    check_necessary_cnjgl,
    check_necessary_pnjgl,
    check_sufficient,
    connected_components,
    solve_decomposed,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AdmmDiagnostics",
    "AdmmOptions",
    "BlockPartition",
    "CnjglState",
    "CouplingError",
    "CvRow",
    "EmpiricalModel",
    "MetricConfig",
    "MetricReport",
    "PenaltyConfig",
    "PnjglState",
    "PrecisionSet",
    "RconCertificate",
    "ScreenGraph",
    "ScreenReport",
    "SyntheticDataset",
    "SyntheticTruth",
    "build_screen_graph",
    "check_certificate",
    "check_necessary_cnjgl",
    "check_necessary_pnjgl",
    "check_sufficient",
    "cnjgl_objective",
    "cohub_node_scores",
    "connected_components",
    "cross_validate",
    "edge_metrics",
    "evaluate",
    "expand",
    "fgl_objective",
    "frobenius_error",
    "gen_community",
    "gen_erdos",
    "gen_scalefree",
    "ggl_objective",
    "gl_objective",
    "neg_log_likelihood",
    "perturbed_node_scores",
    "pnjgl_objective",
    "positive_edge_count",
    "project_l1_ball",
    "prox_group_l2",
    "prox_group_linf",
    "prox_l1",
    "prox_sparse_group",
    "rcon_value",
    "solve_cnjgl",
    "solve_decomposed",
    "solve_fgl",
    "solve_ggl",
    "solve_gl",
    "solve_gl_model",
    "solve_pnjgl",
    "step_cnjgl",
    "step_pnjgl",
]
