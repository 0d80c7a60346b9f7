"""Deterministic offline completion provider.

Synthesizes plausible responses for every prompt shape the pipeline emits,
keyed entirely by hashes of the prompt text, so full runs work with no
network and reproduce bit-identically.  Useful for demos, fixture
recording, and tests; it is not a language model.
"""

from __future__ import annotations

import hashlib
import math
import re

from .gateway import CompletionRequest, CompletionResponse


def _digest(*parts: str) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def _unit(*parts: str) -> float:
    """Deterministic float in [0, 1) from the given strings."""
    return int.from_bytes(_digest(*parts)[:8], "big") / 2**64


def _pick(options: list[str], *parts: str) -> str:
    return options[int.from_bytes(_digest(*parts)[:4], "big") % len(options)]


_SUBJECTS = [
    "The authorities",
    "Local officials",
    "Community members",
    "The response team",
    "Affected residents",
    "The organization",
    "Experts",
    "Volunteers",
]
_VERBS = [
    "coordinate",
    "monitor",
    "announce",
    "prepare",
    "assess",
    "organize",
    "review",
    "address",
]
_OBJECTS = [
    "the immediate situation",
    "available resources",
    "safety procedures",
    "the affected area",
    "public communications",
    "recovery plans",
    "ongoing developments",
    "support services",
]

_QUOTED_RE = re.compile(r'"([^"]+)"')
_NAMING_RE = re.compile(r"Description:(?P<desc>[^\n]*?) Name: \s*$")
_SPECIFICITY_RE = re.compile(r"Text: (?P<text>[^\n]*?) Answer: \s*$")
_CHAPTER_RE = re.compile(r"Is (?P<evt>.+) a part of (?P<chapter>.+)\? Answer yes or no")
_SKELETON_RE = re.compile(
    r"List the major events that happen in the (?P<chapter>.+) of a (?P<scenario>.+):"
)
_DOT_RE = re.compile(r'List relevant events and edges in "(?P<scenario>[^"]+)":\s*$', re.MULTILINE)
_DURATION_RE = re.compile(
    r"Is the duration of (?P<a>.+) longer than (?P<b>.+)\? Answer yes or no"
)
_PROPER_RE = re.compile(r"(?<!^)(?<![.!?] )\b[A-Z][a-z]+")


def _sentence(*seed: str) -> str:
    subject = _pick(_SUBJECTS, "s", *seed)
    verb = _pick(_VERBS, "v", *seed)
    obj = _pick(_OBJECTS, "o", *seed)
    return f"{subject} {verb} {obj}."


def _answer_logprobs(yes: float, no: float, unknown: float = 0.0):
    floor = 1e-6
    entries = {" yes": max(yes, floor), " no": max(no, floor)}
    if unknown:
        entries[" unknown"] = max(unknown, floor)
    return ({tok: math.log(p) for tok, p in entries.items()},)


class ScriptedProvider:
    """Answers any pipeline prompt deterministically from its text."""

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        prompt = req.prompt
        handlers = (
            self._naming,
            self._specificity,
            self._chapter_test,
            self._duration,
            self._relation,
            self._dot,
            self._skeleton,
            self._expansion,
        )
        for handler in handlers:
            resp = handler(prompt, req)
            if resp is not None:
                return resp
        return CompletionResponse(text=_sentence("generic", prompt))

    # -- per-prompt-shape handlers -----------------------------------

    def _naming(self, prompt: str, req: CompletionRequest):
        match = _NAMING_RE.search(prompt)
        if not match or "Give names" not in prompt:
            return None
        words = re.findall(r"[A-Za-z]+", match.group("desc"))
        stop = {"the", "a", "an", "of", "to", "and", "is", "are", "in", "on", "for"}
        content = [w for w in words if w.lower() not in stop][:3] or words[:1]
        return CompletionResponse(text=" ".join(w.capitalize() for w in content))

    def _specificity(self, prompt: str, req: CompletionRequest):
        if "Does the text contain any specific names" not in prompt:
            return None
        match = _SPECIFICITY_RE.search(prompt)
        text = match.group("text") if match else ""
        specific = bool(re.search(r"\d", text)) or bool(_PROPER_RE.search(text))
        yes = 0.9 if specific else 0.08
        return CompletionResponse(
            text=" Yes" if specific else " No",
            token_logprobs=_answer_logprobs(yes, 1 - yes),
        )

    def _chapter_test(self, prompt: str, req: CompletionRequest):
        match = _CHAPTER_RE.search(prompt)
        if not match:
            return None
        u = _unit("chapter", match.group("evt"), match.group("chapter"))
        yes = 0.9 if u < 0.85 else 0.1
        return CompletionResponse(
            text=" Yes" if yes > 0.5 else " No",
            token_logprobs=_answer_logprobs(yes, 1 - yes),
        )

    def _duration(self, prompt: str, req: CompletionRequest):
        match = _DURATION_RE.search(prompt)
        if not match:
            return None
        longer = self._duration_of(match.group("a")) > self._duration_of(match.group("b"))
        yes = 0.85 if longer else 0.1
        return CompletionResponse(
            text=" Yes" if longer else " No",
            token_logprobs=_answer_logprobs(yes, 1 - yes),
        )

    def _relation(self, prompt: str, req: CompletionRequest):
        if "start before" in prompt or "start after" in prompt:
            attr, flip = self._start_of, "start after" in prompt
        elif "end before" in prompt or "end after" in prompt:
            attr, flip = self._end_of, "end after" in prompt
        else:
            return None
        quoted = _QUOTED_RE.findall(prompt)
        if len(quoted) < 2:
            return None
        a, b = quoted[-2], quoted[-1]
        before = attr(a) < attr(b)
        answer_yes = before != flip
        yes = 0.82 if answer_yes else 0.08
        return CompletionResponse(
            text=" Yes" if answer_yes else " No",
            token_logprobs=_answer_logprobs(yes, 0.9 - yes, 0.1),
        )

    def _skeleton(self, prompt: str, req: CompletionRequest):
        match = _SKELETON_RE.search(prompt)
        if not match:
            return None
        chapter = match.group("chapter")
        count = 4 + int.from_bytes(_digest("n", chapter)[:2], "big") % 3
        lines = [
            f"{i + 1}. {_sentence('skeleton', chapter, str(i), str(req.salt))}"
            for i in range(count)
        ]
        return CompletionResponse(text="\n".join(lines))

    def _expansion(self, prompt: str, req: CompletionRequest):
        if "List the answers" not in prompt and "List the consequences" not in prompt \
                and "List the possible causes" not in prompt:
            return None
        quoted = _QUOTED_RE.findall(prompt)
        seed = quoted[-1] if quoted else prompt
        count = 2 + int.from_bytes(_digest("xn", prompt)[:2], "big") % 2
        lines = [f"- {_sentence('expand', prompt, str(i))}" for i in range(count)]
        # occasionally emit an instance-specific line to exercise the filter
        if _unit("specific", seed) < 0.2:
            lines.append("- About 100 people were affected in Springfield.")
        return CompletionResponse(text="\n".join(lines))

    def _dot(self, prompt: str, req: CompletionRequest):
        matches = list(_DOT_RE.finditer(prompt))
        if not matches:
            return None
        # the last header is the query; earlier ones are in-context examples
        scenario = matches[-1].group("scenario")
        n = 5 + int.from_bytes(_digest("dotn", scenario)[:2], "big") % 3
        lines = ["events:", f"0: {scenario} news story."]
        for i in range(1, n + 1):
            lines.append(f"{i}: {_sentence('dot', scenario, str(i))}")
        lines.append("edges: ")
        for i in range(1, n):
            lines.append(f"{i}->{i + 1}[label='temporal']")
        for i in range(1, n + 1):
            if _unit("dothier", scenario, str(i)) < 0.5:
                lines.append(f"0->{i}[label='hierarchical']")
        return CompletionResponse(text="\n".join(lines))

    # -- the provider's hidden "world model" --------------------------

    @staticmethod
    def _start_of(description: str) -> float:
        return _unit("start", description.strip().lower())

    @staticmethod
    def _duration_of(description: str) -> float:
        return _unit("dur", description.strip().lower())

    @classmethod
    def _end_of(cls, description: str) -> float:
        return cls._start_of(description) + cls._duration_of(description)
