"""slabperc: a Monte Carlo laboratory for anisotropic bond percolation on slabs.

The model lives on Z^2 x {0,...,k}: radial (in-layer) bonds open with
probability p, axial (between-layer) bonds with probability q. The package
provides exact closed forms and enumeration oracles on tiny instances,
reproducible coupled sampling, union-find cluster analysis, pivotal-edge
derivative estimation, renormalized block fields, and critical-curve
estimation by stochastic bisection, all behind one CLI (``slabperc``).
"""

from .bounds import (
    axial_closure_budget,
    axial_upper_bound,
    bounds_report,
    collapse_parameter,
    embedded_square_param,
    horizontal_threshold,
    split_bond_param,
)
from .cluster import (
    BlockReach,
    ClusterForest,
    ClusterSizeAtLeast,
    Connected,
    LeftRightCrossing,
    OriginToBoundary,
    ReachFromRect,
    build_forest,
    cluster_size,
    evaluate_event,
)
from .curve import diagnostics, pc_at, qc_at, sweep
from .estimators import Estimate, coupled_difference, estimate_event, fit_decay, tail_curve
from .lattice import CenteredBox, EdgeClass, LatticeBox, RectBox, SlabSpec, boundary, build_box
from .oracle import exact_probability, exact_russo, split_gadget_exact
from .pivotal import directional_probe, pivotal_set, russo_estimate
from .renorm import (
    block_probability,
    dependency_disjointness,
    independence_report,
    layer_union_bound_report,
    renormalized_sample,
)
from .sampler import (
    BondConfig,
    ParamPoint,
    SeedSpec,
    draw_uniform_block,
    draw_uniforms,
    dump_config,
    load_config,
    sample_config,
    threshold_config,
)

__version__ = "0.1.0"
