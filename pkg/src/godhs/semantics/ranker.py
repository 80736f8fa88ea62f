"""Room / carrier / feature decisions from a mock knowledge base or an LLM.

Both rankers answer the same five queries with a :class:`RankResponse`. The
LLM ranker validates every reply against the query's closed vocabulary and
falls back to the mock ranker when the endpoint fails or the retry budget is
exhausted, so every query yields a usable answer.
"""

from __future__ import annotations

from godhs.geometry import FEATURES
from godhs.semantics.kb import KnowledgeBase, default_kb
from godhs.semantics.llm import Transcript, TransportError
from godhs.semantics.prompts import (
    PromptSet,
    RankRequest,
    RankResponse,
    build_prompt,
    correction_prompt,
    default_prompts,
    filter_labels,
    parse_and_correct,
)


def _dedup(labels) -> list:
    return list(dict.fromkeys(labels))


class MockRanker:
    name = "mock"

    def __init__(self, kb: KnowledgeBase | None = None):
        self.kb = kb or default_kb()

    def infer_room(self, observed) -> RankResponse:
        observed = list(observed)
        if not observed:
            raise ValueError("cannot infer a room from no observations")
        return RankResponse([self.kb.infer_room(observed)])

    def rank_rooms(self, rooms, target: str) -> RankResponse:
        rooms = _dedup(rooms)
        return RankResponse(sorted(rooms, key=lambda r: -self.kb.room_score(target, r)))

    def classify_carriers(self, objects, target: str, context: str = "") -> RankResponse:
        return RankResponse([o for o in _dedup(objects) if self.kb.carrier_score(target, o) > 0])

    def rank_carriers(self, carriers, target: str, context: str = "") -> RankResponse:
        carriers = _dedup(carriers)
        return RankResponse(sorted(carriers, key=lambda c: -self.kb.carrier_score(target, c)))

    def rank_features(self, carrier_label: str, target: str) -> RankResponse:
        order = self.kb.features_for(carrier_label, target)
        if not order:
            return RankResponse(list(self.kb.default_feature_order), valid=False, fallback=True)
        return RankResponse(order)


class LLMRanker:
    """Ranker backed by a chat endpoint (``client.complete(prompt) -> str``)."""

    name = "llm"

    def __init__(
        self,
        client,
        kb: KnowledgeBase | None = None,
        retry_budget: int = 2,
        transcript: Transcript | None = None,
        prompts: PromptSet | None = None,
    ):
        self.client = client
        self.kb = kb or default_kb()
        self.retry_budget = retry_budget
        self.transcript = transcript if transcript is not None else Transcript()
        self.prompts = prompts or default_prompts()
        self.fallback = MockRanker(self.kb)

    def _ask(self, request: RankRequest) -> RankResponse | None:
        vocab = list(request.candidates)
        prompt = build_prompt(request, self.prompts)
        retry_prompt = correction_prompt(prompt, vocab, self.prompts)

        def send(p: str, attempt: int) -> str:
            raw = self.client.complete(p)
            self.transcript.append(request.level, p, raw, filter_labels(raw, vocab), attempt)
            return raw

        try:
            first = send(prompt, 0)
            result = parse_and_correct(first, vocab, self.retry_budget, lambda n: send(retry_prompt, n))
        except TransportError:
            return None
        if not result.valid:
            return RankResponse([], valid=False, retries=result.retries, transcript=result.raws)
        return RankResponse(result.labels, retries=result.retries, transcript=result.raws)

    @staticmethod
    def _with_fallback(resp: RankResponse | None, mock: RankResponse) -> RankResponse:
        mock.fallback = True
        mock.valid = False
        if resp is not None:
            mock.retries = resp.retries
            mock.transcript = resp.transcript
        return mock

    def _complete_permutation(self, resp: RankResponse, items: list) -> RankResponse:
        resp.labels = resp.labels + [x for x in items if x not in resp.labels]
        return resp

    def infer_room(self, observed) -> RankResponse:
        observed = list(observed)
        if not observed:
            raise ValueError("cannot infer a room from no observations")
        req = RankRequest("room-infer", "", tuple(self.kb.room_types), ", ".join(observed))
        resp = self._ask(req)
        if resp is None or not resp.valid:
            return self._with_fallback(resp, self.fallback.infer_room(observed))
        resp.labels = resp.labels[:1]
        return resp

    def rank_rooms(self, rooms, target: str) -> RankResponse:
        rooms = _dedup(rooms)
        if len(rooms) <= 1:
            return RankResponse(rooms)
        resp = self._ask(RankRequest("room", target, tuple(rooms)))
        if resp is None or not resp.valid:
            return self._with_fallback(resp, self.fallback.rank_rooms(rooms, target))
        return self._complete_permutation(resp, rooms)

    def classify_carriers(self, objects, target: str, context: str = "") -> RankResponse:
        objects = _dedup(objects)
        if not objects:
            return RankResponse([])
        resp = self._ask(RankRequest("carrier-classify", target, tuple(objects), context))
        if resp is None or not resp.valid:
            return self._with_fallback(resp, self.fallback.classify_carriers(objects, target, context))
        return resp

    def rank_carriers(self, carriers, target: str, context: str = "") -> RankResponse:
        carriers = _dedup(carriers)
        if len(carriers) <= 1:
            return RankResponse(carriers)
        resp = self._ask(RankRequest("carrier-rank", target, tuple(carriers), context))
        if resp is None or not resp.valid:
            return self._with_fallback(resp, self.fallback.rank_carriers(carriers, target, context))
        return self._complete_permutation(resp, carriers)

    def rank_features(self, carrier_label: str, target: str) -> RankResponse:
        resp = self._ask(RankRequest("feature", target, tuple(FEATURES), carrier_label))
        if resp is None or not resp.valid:
            return self._with_fallback(resp, self.fallback.rank_features(carrier_label, target))
        return resp


# plain-label helpers mirroring the hierarchy levels


def infer_room_type(observed, ranker) -> str:
    return ranker.infer_room(observed).labels[0]


def rank_rooms(rooms, target: str, ranker) -> list:
    return ranker.rank_rooms(rooms, target).labels


def classify_carriers(objects, target: str, ranker, context: str = "") -> list:
    return ranker.classify_carriers(objects, target, context).labels


def rank_carriers(carriers, target: str, ranker, context: str = "") -> list:
    return ranker.rank_carriers(carriers, target, context).labels


def rank_features(carrier_label: str, target: str, ranker) -> list:
    return ranker.rank_features(carrier_label, target).labels
