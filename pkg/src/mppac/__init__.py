"""PAC mean-payoff bounds for blackbox/greybox MDPs and CTMDPs by simulation.

The learner never sees the transition matrix: it samples steps through an
oracle, certifies end components statistically, and reports anytime
lower/upper bounds on the maximum expected mean payoff that hold with
probability at least 1 - δ. A whitebox reference solver covers fully known
models for testing and comparison.
"""

from .graph import (
    MINUS,
    PLUS,
    STAY,
    UNKNOWN,
    ClosedMec,
    MecRecord,
    best_leaving_action,
    find_delta_sure_mecs,
    is_delta_sure_ec,
    mec_decomposition,
    model_graph,
)
from .learn_ctmdp import (
    RateTable,
    UniformizedMec,
    boundary_rate_assignment,
    ctmdp_mec_gain,
    find_mec_mp_bounds_exact,
    find_mec_mp_bounds_heuristic,
    on_demand_bvi_ctmdp,
    simulate_episode_ctmdp,
    simulate_mec_ctmdp,
    uniformize,
    update_mec_value_ctmdp,
)
from .learn_mdp import (
    BLACKBOX_UPDATES,
    GREYBOX_UPDATES,
    BoundsReport,
    LearnerConfig,
    PartialModel,
    bellman_blackbox,
    bellman_greybox,
    compute_n_samples,
    deflate,
    global_update,
    looping,
    mec_value_iteration,
    on_demand_bvi,
    simulate_episode,
    simulate_mec,
    stay_distribution,
    update_mec_value,
)
from .model import (
    BLACKBOX,
    CTMDP,
    GREYBOX,
    MDP,
    CapabilityError,
    ExplicitModel,
    ModelError,
    SampleOracle,
    StepSample,
    embedded_mdp,
    learner_rng,
    load_model,
    oracle_rng,
    parse_model,
)
from .stats import (
    InconfidenceBudget,
    RatePrecision,
    chernoff_minimizers,
    combined_alpha_hat,
    ctmdp_budget,
    ctmdp_value_bounds,
    ec_required_samples,
    estimate_rate,
    greybox_miss_probability,
    lower_tp_estimate,
    mdp_budget,
    rate_inconfidence,
    rate_inconfidence_parts,
    rate_interval,
    rate_samples,
    split_mp_inconfidence,
    tp_inconfidence,
    tp_width,
)
from .whitebox import (
    WeightedQuotient,
    build_weighted_quotient,
    enumerate_policies_gain,
    exact_mean_payoff,
    exact_mec_gain,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
