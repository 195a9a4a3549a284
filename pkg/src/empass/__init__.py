"""empass: scale collective entity matchers by passing messages between
overlapping neighborhoods of the data."""

from .model import (
    Entity,
    Evidence,
    Instance,
    MatchSet,
    Pair,
    RelationStore,
    ValidationError,
    canonical_pair,
    canonical_pairs,
    dumps_instance,
    induced_relations,
    loads_instance,
    make_instance,
)
from .contract import (
    AxiomReport,
    Matcher,
    MatcherError,
    ProbabilisticMatcher,
    check_idempotence,
    check_monotonicity,
    check_supermodularity,
    create_matcher,
    is_probabilistic,
    matcher_names,
    register_matcher,
    type2_match,
)
from .covering import (
    Cover,
    Neighborhood,
    boundary,
    canopy_cover,
    make_total,
    verify_total,
)
from .evaluation import (
    GroundTruth,
    MetricsReport,
    prf,
    soundness_completeness,
    ub_matches,
)
from .mln import (
    GlobalScorer,
    Grounding,
    MlnMatcher,
    RuleSet,
    WeightedRule,
    example_rules,
    ground,
    learned_rules,
    log_score,
    map_infer,
    parse_rules,
)
from .parallel import RoundStats, run_parallel
from .passing import (
    MaximalMessage,
    RunState,
    compute_maximal,
    mmp,
    neighbor_set,
    no_mp,
    normalize,
    run_scheme,
    smp,
)
from .rules import RulesMatcher, rules_match
from .similarity import (
    build_similar_tuples,
    discretize_similarity,
    jaro_winkler,
)
from .synth import GenConfig, generate, random_cover, random_instance

__version__ = "0.1.0"
