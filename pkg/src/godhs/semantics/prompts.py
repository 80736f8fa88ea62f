"""Structured prompts and output validation for ranking queries.

Every query constrains the answer to a closed vocabulary. Replies are
normalised, filtered to that vocabulary and deduplicated; an empty result
triggers a re-query with a fixed correction instruction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable

LEVELS = ("room-infer", "room", "carrier-classify", "carrier-rank", "feature")

_SPLIT = re.compile(r"[,\n;]")
_LEAD = re.compile(r"^[\s\-\*•\d\.\)\(\[\]'\"`]+")
_TRAIL = re.compile(r"[\s\.\)\(\[\]'\"`!?:]+$")


class PromptError(KeyError):
    pass


@dataclass(frozen=True)
class RankRequest:
    level: str
    target: str
    candidates: tuple
    context: str = ""


@dataclass
class RankResponse:
    labels: list
    valid: bool = True
    retries: int = 0
    fallback: bool = False
    transcript: list = field(default_factory=list)  # raw replies, in order

    def __post_init__(self):
        self.labels = list(self.labels)


@dataclass(frozen=True)
class PromptSet:
    version: int
    correction: str
    templates: dict


@lru_cache(maxsize=None)
def default_prompts() -> PromptSet:
    data = json.loads((resources.files("godhs") / "data" / "prompts.json").read_text())
    return PromptSet(data["version"], data["correction"], data["templates"])


def build_prompt(request: RankRequest, templates: PromptSet | None = None) -> str:
    templates = templates or default_prompts()
    tpl = templates.templates.get(request.level)
    if tpl is None:
        raise PromptError(f"no prompt template for level {request.level!r}")
    fields = {"target": request.target, "context": request.context}
    return "\n".join(
        [
            "Task: " + tpl["task"].format(**fields),
            "Options: " + ", ".join(request.candidates),
            tpl["example"].format(**fields),
            tpl["format"].format(**fields),
        ]
    )


def correction_prompt(prompt: str, vocabulary, templates: PromptSet | None = None) -> str:
    templates = templates or default_prompts()
    return prompt + "\n" + templates.correction.format(vocabulary=", ".join(vocabulary))


def tokenize(raw: str) -> list[str]:
    out = []
    for tok in _SPLIT.split(raw.casefold()):
        tok = _TRAIL.sub("", _LEAD.sub("", tok))
        tok = " ".join(tok.split())
        if tok:
            out.append(tok)
    return out


def filter_labels(raw: str, vocabulary) -> list[str]:
    """In-vocabulary labels from a raw reply, first occurrence wins."""
    lookup = {v.casefold(): v for v in vocabulary}
    seen, out = set(), []
    for tok in tokenize(raw):
        label = lookup.get(tok)
        if label is not None and label not in seen:
            seen.add(label)
            out.append(label)
    return out


@dataclass
class ParseResult:
    labels: list
    retries: int
    valid: bool
    raws: list


def parse_and_correct(
    raw: str,
    vocabulary,
    retry_budget: int,
    requery: Callable[[int], str],
) -> ParseResult:
    """Validate ``raw``; re-query up to ``retry_budget`` times while it yields nothing.

    ``requery(n)`` is called with the 1-based retry number and must return the
    next raw reply. Transport failures raised by it propagate unchanged.
    """
    if retry_budget < 0:
        raise ValueError("retry budget must be >= 0")
    raws = [raw]
    labels = filter_labels(raw, vocabulary)
    retries = 0
    while not labels and retries < retry_budget:
        retries += 1
        reply = requery(retries)
        raws.append(reply)
        labels = filter_labels(reply, vocabulary)
    return ParseResult(labels, retries, bool(labels), raws)
