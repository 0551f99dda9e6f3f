"""Two-type first passage percolation with conversion: simulator and
statistical laboratory on d-ary trees and Z^d lattices."""

from .model import (
    ClockMode,
    ConfigurationError,
    LatticeTopology,
    ModelParams,
    PathError,
    Topology,
    TreeTopology,
    Truncation,
    make_topology,
)
from .field import ClockKey, ClockKind, RandomField, path_time, sample_clock
from .engine import (
    Caps,
    InternalInvariantError,
    TrialOutcome,
    Verdict,
    init_trial,
    process_next_event,
    progenitor_of,
    run_trial,
    run_trial_state,
)
from .stats import (
    PoissonBounds,
    WilsonInterval,
    ks_exponential,
    linear_fit,
    poisson_chernoff_bounds,
    two_proportion_z,
    wilson_interval,
)
from .treelab import (
    BrwStats,
    DstarEstimate,
    GoodBoxReport,
    SpineEstimate,
    SubBoxResult,
    brw_min_cloud,
    brw_min_exact,
    brw_stats,
    dstar_probability,
    estimate_subbox_good_prob,
    gamma_star,
    good_box_probability,
    highway_branching,
    spine_edge_count,
    spine_probability,
    subbox_is_good,
    tree_ball_size,
)
from .latticelab import (
    ClosedSiteField,
    EncapsulationResult,
    ShapeEstimate,
    SurvivalEstimate,
    TruncatedClockStats,
    closed_site_density,
    estimate_extinction,
    fpp_ball,
    origin_encapsulated,
    shape_estimate,
    truncated_clock_stats,
)
from .ssplab import (
    CouplingReport,
    RedClockSource,
    RedSurvivalCurve,
    SeedField,
    SeedSource,
    SspParams,
    SspState,
    SspVerdict,
    bernoulli_seeds,
    coupling_consistency,
    estimate_red_survival,
    label_type2_seeds,
    run_ssp,
    seed_density,
)
from .harness import (
    EXPERIMENTS,
    SweepSpec,
    derive_cell_seed,
    derive_trial_key,
    parse_caps,
    read_config,
    run_sweep,
    sweep_from_config,
)

__all__ = [
    "BrwStats",
    "Caps",
    "ClockKey",
    "ClockKind",
    "ClockMode",
    "ClosedSiteField",
    "ConfigurationError",
    "CouplingReport",
    "DstarEstimate",
    "EXPERIMENTS",
    "EncapsulationResult",
    "GoodBoxReport",
    "InternalInvariantError",
    "LatticeTopology",
    "ModelParams",
    "PathError",
    "PoissonBounds",
    "RandomField",
    "RedClockSource",
    "RedSurvivalCurve",
    "SeedField",
    "SeedSource",
    "ShapeEstimate",
    "SpineEstimate",
    "SspParams",
    "SspState",
    "SspVerdict",
    "SubBoxResult",
    "SurvivalEstimate",
    "SweepSpec",
    "Topology",
    "TreeTopology",
    "TrialOutcome",
    "TruncatedClockStats",
    "Truncation",
    "Verdict",
    "WilsonInterval",
    "bernoulli_seeds",
    "brw_min_cloud",
    "brw_min_exact",
    "brw_stats",
    "closed_site_density",
    "coupling_consistency",
    "derive_cell_seed",
    "derive_trial_key",
    "dstar_probability",
    "estimate_extinction",
    "estimate_red_survival",
    "estimate_subbox_good_prob",
    "fpp_ball",
    "gamma_star",
    "good_box_probability",
    "highway_branching",
    "init_trial",
    "ks_exponential",
    "label_type2_seeds",
    "linear_fit",
    "make_topology",
    "origin_encapsulated",
    "parse_caps",
    "path_time",
    "poisson_chernoff_bounds",
    "process_next_event",
    "progenitor_of",
    "read_config",
    "run_ssp",
    "run_sweep",
    "run_trial",
    "run_trial_state",
    "sample_clock",
    "seed_density",
    "shape_estimate",
    "spine_edge_count",
    "spine_probability",
    "subbox_is_good",
    "sweep_from_config",
    "tree_ball_size",
    "truncated_clock_stats",
    "two_proportion_z",
    "wilson_interval",
]

__version__ = "0.1.0"
