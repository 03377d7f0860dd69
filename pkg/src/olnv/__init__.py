"""Online newsvendor trading for stochastic energy producers.

Library surface: domain types and losses (`core`), projections
(`geometry`), the online learner (`learner`), batch/LP benchmarks
(`batch`), economic and regret metrics (`metrics`), data ingestion and
synthetic generators (`data`), and the experiment runner (`experiments`).
"""

from .core import (
    AnchorConfig,
    MarketPrices,
    PenaltyPair,
    Revenue,
    Sample,
    anchor_penalties,
    gradient_error,
    nv_loss,
    nv_subgradient,
    penalties_from_prices,
    settle_revenue,
    smooth_gradient,
    smooth_nv_loss,
)
from .geometry import Slab, box_offer, project_decision
from .learner import (
    OlnvConfig,
    OlnvState,
    StepRecord,
    accumulate_sq_grad,
    default_q_init,
    init,
    learning_rate,
    run_stream,
    step,
)
from .batch import (
    ErmProblem,
    ErmSolution,
    RollingWindowConfig,
    comparator_sequence,
    hindsight_fx,
    optimal_quantile_offer,
    rolling_window_run,
    solve_erm,
)
from .metrics import (
    EvaluationRun,
    deviation_cost,
    dynamic_regret,
    relative_improvement,
    static_regret,
    worst_case_regret,
)
from .data import (
    AlternatingPenalties,
    CsvPenalties,
    FeatureSpec,
    FixedPenalties,
    RawMarketRecord,
    SynthConfig,
    build_features,
    enhance_forecast,
    load_market_csv,
    normalize_capacity,
    synth_stream,
)
from .errors import ConfigError, DataError, OlnvError, SolverError

__version__ = "0.1.0"
