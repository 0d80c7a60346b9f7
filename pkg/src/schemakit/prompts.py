"""Prompt templates and parsers for raw completions.

Templates ship as text assets next to this module (``templates/``) and can
be overridden with a directory of same-named files for experimentation.
Slots use ``{dotted.name}`` syntax, e.g. ``{evt.description}``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .gateway import CompletionRequest, CompletionResponse, Provider

TEMPLATE_IDS = (
    "skeleton",
    "expansion-during",
    "expansion-steps",
    "expansion-after",
    "expansion-before",
    "expansion-consequences",
    "expansion-causes",
    "naming",
    "specificity",
    "chapter-test",
    "rel-start",
    "rel-start-after",
    "rel-end",
    "rel-end-after",
    "rel-duration",
)

EXPANSION_IDS = (
    "expansion-during",
    "expansion-steps",
    "expansion-after",
    "expansion-before",
    "expansion-consequences",
    "expansion-causes",
)


class PromptError(Exception):
    pass


class MissingSlot(PromptError):
    def __init__(self, slot: str):
        super().__init__(f"template slot {slot!r} was not filled")
        self.slot = slot


class UnparseableAnswer(PromptError):
    """No yes/no/unknown candidate found in any token position."""


class TemplateLibrary:
    """Loads templates from the bundled assets, optionally overridden."""

    def __init__(self, override_dir: Optional[str | Path] = None):
        self._override = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def text(self, template_id: str) -> str:
        if template_id not in TEMPLATE_IDS:
            raise PromptError(f"unknown template id {template_id!r}")
        if template_id not in self._cache:
            if self._override is not None:
                candidate = self._override / f"{template_id}.txt"
                if candidate.exists():
                    self._cache[template_id] = candidate.read_text(encoding="utf-8")
                    return self._cache[template_id]
            ref = resources.files("schemakit").joinpath("templates", f"{template_id}.txt")
            self._cache[template_id] = ref.read_text(encoding="utf-8")
        return self._cache[template_id]

    def render(self, template_id: str, slots: Mapping[str, str]) -> str:
        return render(self.text(template_id), slots)


_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_.]*)\}")


def render(template: str, slots: Mapping[str, str]) -> str:
    def fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in slots:
            raise MissingSlot(name)
        return str(slots[name])

    return _SLOT_RE.sub(fill, template)


# -- list parsing -----------------------------------------------------

_MARKER_RE = re.compile(r"^\s*(?:\d+\s*[.)]|[-•*])\s*")
# split "A foo bar. The next thing." but not "e.g. x" style short fragments
_SENTENCE_SPLIT_RE = re.compile(r"(?<=\.)\s+")


@dataclass(frozen=True)
class ParsedList:
    items: tuple[str, ...]


def parse_event_list(text: str) -> ParsedList:
    """Turn a completion into candidate event sentences.

    Splits on newlines and on sentence boundaries inside a line, strips
    enumeration markers and whitespace, and drops empty entries.
    """
    items: list[str] = []
    for line in text.splitlines():
        line = _MARKER_RE.sub("", line).strip()
        if not line:
            continue
        for fragment in _split_sentences_in_line(line):
            fragment = fragment.strip()
            if fragment:
                items.append(fragment)
    return ParsedList(items=tuple(items))


def _split_sentences_in_line(line: str) -> list[str]:
    parts = _SENTENCE_SPLIT_RE.split(line)
    # only honor a split when every fragment has at least 3 words,
    # otherwise keep the line whole (avoids splitting on abbreviations)
    if len(parts) > 1 and all(len(p.split()) >= 3 for p in parts):
        return parts
    return [line]


# -- yes/no/unknown distributions ------------------------------------

@dataclass(frozen=True)
class AnswerDistribution:
    yes: float
    no: float
    unknown: float

    def __post_init__(self):
        total = self.yes + self.no + self.unknown
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"answer masses sum to {total}, expected 1")


def _variants(word: str) -> set[str]:
    forms = {word.lower(), word.title(), word.upper()}
    return forms | {" " + f for f in forms}


_ANSWER_VARIANTS = {
    "yes": _variants("yes"),
    "no": _variants("no"),
    "unknown": _variants("unknown"),
}


def parse_yes_no(resp: CompletionResponse) -> AnswerDistribution:
    """Extract a yes/no/unknown distribution from top-k token candidates.

    Uses the earliest token position whose candidates include any variant of
    the three answers; sums exp(logprob) per class and normalizes over the
    three classes.
    """
    for position in resp.token_logprobs:
        masses = {"yes": 0.0, "no": 0.0, "unknown": 0.0}
        hit = False
        for token, logprob in position.items():
            for cls, variants in _ANSWER_VARIANTS.items():
                if token in variants:
                    masses[cls] += math.exp(logprob)
                    hit = True
        if hit:
            total = sum(masses.values())
            return AnswerDistribution(
                yes=masses["yes"] / total,
                no=masses["no"] / total,
                unknown=masses["unknown"] / total,
            )
    raise UnparseableAnswer("no yes/no/unknown candidate in any token position")


# -- event naming ----------------------------------------------------

MAX_NAME_WORDS = 8


def assign_name(
    provider: Provider,
    description: str,
    templates: TemplateLibrary,
    max_tokens: int = 16,
) -> str:
    """Ask the model for a short event name given its description."""
    if not description:
        raise PromptError("cannot name an empty description")
    prompt = templates.render("naming", {"evt.description": description})
    resp = provider.complete(CompletionRequest(prompt=prompt, max_tokens=max_tokens))
    first_line = resp.text.strip().splitlines()
    name = first_line[0].strip() if first_line else ""
    words = name.split()
    if len(words) > MAX_NAME_WORDS:
        name = " ".join(words[:MAX_NAME_WORDS])
    return name
