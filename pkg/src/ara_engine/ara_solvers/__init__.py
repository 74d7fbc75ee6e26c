"""Monte Carlo ARA solvers."""

from .concepts import (
    FictitiousPlay,
    LevelK,
    Mixture,
    NashSeeking,
    NonStrategic,
    SolutionConcept,
    concept_distribution,
    fictitious_play_predict,
    mixture_solve,
    nash_seeking_distribution,
    solve_concept,
)
from .engine import TIE_BREAKS
from .multi_agent import MultiAgentGame, multi_agent_ara
from .reports import ActionDistribution, ConditionalActionDistribution, DecisionReport
from .sequential import (
    ara_attack_defend,
    ara_defend_attack_defend,
    ara_private_info,
    ara_sequential,
    estimate_response_distribution,
)
from .simultaneous import (
    LevelKConfig,
    ara_simultaneous,
    best_response_to,
    estimate_attack_distribution,
    level_k_solve,
)

__all__ = [
    "ActionDistribution",
    "ConditionalActionDistribution",
    "DecisionReport",
    "FictitiousPlay",
    "LevelK",
    "LevelKConfig",
    "Mixture",
    "MultiAgentGame",
    "NashSeeking",
    "NonStrategic",
    "SolutionConcept",
    "TIE_BREAKS",
    "ara_attack_defend",
    "ara_defend_attack_defend",
    "ara_private_info",
    "ara_sequential",
    "ara_simultaneous",
    "best_response_to",
    "concept_distribution",
    "estimate_attack_distribution",
    "estimate_response_distribution",
    "fictitious_play_predict",
    "level_k_solve",
    "mixture_solve",
    "multi_agent_ara",
    "nash_seeking_distribution",
    "solve_concept",
]
