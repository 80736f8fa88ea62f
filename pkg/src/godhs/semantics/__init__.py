from godhs.semantics.kb import UNKNOWN_ROOM, KnowledgeBase, default_kb, load_kb
from godhs.semantics.llm import EndpointConfig, LLMClient, ReplayClient, Transcript, TransportError
from godhs.semantics.prompts import RankRequest, RankResponse, build_prompt, parse_and_correct
from godhs.semantics.ranker import (
    LLMRanker,
    MockRanker,
    classify_carriers,
    infer_room_type,
    rank_carriers,
    rank_features,
    rank_rooms,
)

__all__ = [
    "UNKNOWN_ROOM",
    "EndpointConfig",
    "KnowledgeBase",
    "LLMClient",
    "LLMRanker",
    "MockRanker",
    "RankRequest",
    "RankResponse",
    "ReplayClient",
    "Transcript",
    "TransportError",
    "build_prompt",
    "classify_carriers",
    "default_kb",
    "infer_room_type",
    "load_kb",
    "parse_and_correct",
    "rank_carriers",
    "rank_features",
    "rank_rooms",
]
