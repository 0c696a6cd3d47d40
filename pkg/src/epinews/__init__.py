"""Adaptive news spreading: epidemic-style recommendation on a
self-optimizing directed network of taste-similar readers."""

from .agents import (
    AgentParams,
    NewsItem,
    TasteVector,
    World,
    build_population,
    decide,
    make_news,
    satisfaction,
)
from .baselines import (
    PopularityTally,
    recommend_abs_popularity,
    recommend_random,
    recommend_rel_popularity,
)
from .engine import (
    AuthorityNetwork,
    DecayParams,
    DuplicateNewsError,
    DuplicateVoteError,
    EngineState,
    EvaluationLedger,
    RecommendationQueue,
    SimilarityParams,
    apply_decay,
    propagate_approval,
    rewire_bara,
    rewire_optimal,
    rewire_optimal_all,
    rewire_random,
    similarity,
    submit_news,
    top_news,
    top_similar,
)
from .harness import (
    ConfigError,
    InjectionSpec,
    RunRecord,
    ScenarioConfig,
    ScenarioResult,
    config_from_dict,
    derive_seed,
    run_injection,
    run_scenario,
    run_single,
    run_sweep,
)
from .metrics import (
    approval_fraction,
    excess_differences,
    expected_random_differences,
    track_readership,
    windowed_approval_fraction,
)

__version__ = "0.1.0"
