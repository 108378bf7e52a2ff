"""Exact backward reachability and safety certification for ReLU neural
feedback systems, built on hybrid zonotopes."""

from .errors import (
    DimensionMismatchError,
    EnclosureError,
    HzReachError,
    InfeasibleFactorError,
    LeafCapError,
    NodeLimitError,
    SamplingError,
    SolverError,
)
from .hz import (
    FactorPoint,
    HybridZonotope,
    IntervalBox,
    cartesian_power,
    cartesian_product,
    contains_point,
    from_box,
    from_point,
    generalized_intersection,
    hz_from_dict,
    hz_to_dict,
    interval_enclosure,
    linear_map,
    make_hz,
    realize,
)
from .lp import LpProblem, SimplexOptions, SolveReport, solve_lp
from .milp import (
    AvoidanceReport,
    BranchAndBoundBackend,
    HorizonReport,
    MilpBackend,
    MilpProblem,
    is_empty,
    relax_to_lp,
    solve_milp_min_infnorm,
    verify_avoidance,
    verify_horizon,
)

__version__ = "0.1.0"
