"""Inner approximations of reachable sets of linear time-invariant systems.

Sets are zonotopes; propagation uses truncated Taylor series of the matrix
exponential together with a deflation of the generators that keeps every
computed set inside the exact reachable set.
"""
from underreach.engine import (
    EngineConfig,
    ReachResult,
    Reduction,
    SystemSpec,
    backward_reach_under,
    deflation_lambda,
    eps_schedule,
    eta,
    image_under,
    k_min,
    kappa,
    op_H,
    op_I,
    reach_under,
)
from underreach.errors import (
    BoundViolated,
    ConfigError,
    DimensionMismatch,
    IndexOutOfRange,
    NotInInvertibilityDomain,
    RankDeficient,
    ReachError,
    SearchCapExceeded,
    TooLarge,
)
from underreach.zonotope import (
    Zonotope,
    contains_point,
    linear_map,
    minkowski_sum,
    project,
    reduce_sum,
    set_norm,
    support,
    vertices_2d,
    volume,
)

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "ReachResult",
    "Reduction",
    "SystemSpec",
    "backward_reach_under",
    "deflation_lambda",
    "eps_schedule",
    "eta",
    "image_under",
    "k_min",
    "kappa",
    "op_H",
    "op_I",
    "reach_under",
    "BoundViolated",
    "ConfigError",
    "DimensionMismatch",
    "IndexOutOfRange",
    "NotInInvertibilityDomain",
    "RankDeficient",
    "ReachError",
    "SearchCapExceeded",
    "TooLarge",
    "Zonotope",
    "contains_point",
    "linear_map",
    "minkowski_sum",
    "project",
    "reduce_sum",
    "set_norm",
    "support",
    "vertices_2d",
    "volume",
]
