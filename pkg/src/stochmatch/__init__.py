"""Online stochastic matching: offline Monte-Carlo statistics turned into
online policies, with exact evaluators, ratio bounds, and hard instances.
"""

from .bounds import (
    BoundReport,
    adaptive_ratio,
    compute_qz,
    min_adaptive_ratio,
    min_nonadaptive_ratio,
    nonadaptive_ratio,
    qz_closed_form,
    qz_lower_bound,
    verify_edge_caps,
    worst_edge_profile,
)
from .decompose import (
    MatchingDistribution,
    decompose,
    load_distribution,
    sample_matching,
    save_distribution,
)
from .hardness import (
    C_STAR_DEFAULT,
    ProceduralCuckoo,
    gen_cuckoo_hard,
    gen_integral_hard,
    gen_small_rates,
    recurrence_cuckoo,
    recurrence_integral,
)
from .harness import (
    RatioEstimate,
    SimulationResult,
    TrialRow,
    bootstrap_ci,
    exact_value_adaptive,
    exact_value_nonadaptive,
    make_setup,
    rows_to_csv,
    simulate,
)
from .instance import (
    ArrivalSequence,
    BallType,
    Instance,
    RawInstance,
    generate_random_instance,
    load_instance,
    normalize_instance,
    sample_arrivals,
    save_instance,
)
from .matching import MatchingResult, max_matching, opt_value
from .offline_stats import (
    FractionalMatching,
    estimate_f,
    exact_f,
    load_fractional,
    repair_f,
    save_fractional,
)
from .policies import (
    AdaptiveSetup,
    GreedySetup,
    IntervalPartitions,
    NonAdaptiveSetup,
    TypePartition,
    build_partitions,
    overlap_measure,
    pair_distribution,
    run_policy,
)

__version__ = "0.1.0"
