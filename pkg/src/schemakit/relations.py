"""Temporal/hierarchical relation decisions from three-question scores.

A pair's relation is decomposed into start-time, end-time, and duration
questions.  Each question is asked in several orderings/phrasings; the
averaged supporting mass feeds threshold predicates derived from interval
algebra, which jointly pick one of: before, after, child-of, parent-of,
overlap (no edge), or none.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .gateway import CompletionRequest, Provider
from .graph import Event
from .prompts import AnswerDistribution, TemplateLibrary, UnparseableAnswer, parse_yes_no


class ScoringError(Exception):
    """All instantiations of a relation question came back unparseable."""


class PairRelation(Enum):
    BEFORE = "before"        # e1 precedes e2
    AFTER = "after"          # e2 precedes e1
    CHILD_OF = "child-of"    # e1 is contained in e2
    PARENT_OF = "parent-of"  # e1 contains e2
    OVERLAP = "overlap"      # temporal overlap: no edge added
    NONE = "none"            # no predicate satisfied


@dataclass(frozen=True)
class RelationScores:
    """Averaged supporting masses for 'e1 <q> e2', plus raw answers for audit."""

    start_before: float
    end_before: float
    duration_longer: float
    audit: tuple = field(default=(), compare=False)

    def swapped(self) -> "RelationScores":
        return RelationScores(
            start_before=1.0 - self.start_before,
            end_before=1.0 - self.end_before,
            duration_longer=1.0 - self.duration_longer,
            audit=self.audit,
        )


# Question instantiations: (template_id, swap_events, aligned).
# 'aligned' means a yes answer supports "e1 <question> e2"; otherwise the
# no-mass is the supporting mass.
_START_FORMS = (
    ("rel-start", False, True),        # does e1 start before e2?
    ("rel-start", True, False),        # does e2 start before e1?
    ("rel-start-after", False, False), # does e1 start after e2?
    ("rel-start-after", True, True),   # does e2 start after e1?
)
_END_FORMS = (
    ("rel-end", False, True),
    ("rel-end", True, False),
    ("rel-end-after", False, False),
    ("rel-end-after", True, True),
)
_DURATION_FORMS = (
    ("rel-duration", False, True),     # is duration of e1 longer than e2?
    ("rel-duration", True, False),
)


def _ask(
    provider: Provider,
    templates: TemplateLibrary,
    template_id: str,
    first: Event,
    second: Event,
    max_tokens: int,
) -> AnswerDistribution:
    prompt = templates.render(
        template_id,
        {"e1.description": first.description, "e2.description": second.description},
    )
    resp = provider.complete(
        CompletionRequest(prompt=prompt, max_tokens=max_tokens, want_logprobs=5)
    )
    return parse_yes_no(resp)


def _question_score(
    provider: Provider,
    templates: TemplateLibrary,
    forms,
    e1: Event,
    e2: Event,
    max_tokens: int,
    audit: list,
    label: str,
) -> float:
    supports: list[float] = []
    for template_id, swap, aligned in forms:
        first, second = (e2, e1) if swap else (e1, e2)
        try:
            dist = _ask(provider, templates, template_id, first, second, max_tokens)
        except UnparseableAnswer:
            audit.append((label, template_id, swap, None))
            continue
        audit.append((label, template_id, swap, dist))
        supports.append(dist.yes if aligned else dist.no)
    if not supports:
        raise ScoringError(f"all {label} question instantiations were unparseable")
    return sum(supports) / len(supports)


def score_pair(
    provider: Provider,
    e1: Event,
    e2: Event,
    templates: Optional[TemplateLibrary] = None,
    max_tokens: int = 8,
) -> RelationScores:
    """Query all question instantiations for an ordered pair and average."""
    if e1.id == e2.id:
        raise ValueError("cannot score an event against itself")
    templates = templates or TemplateLibrary()
    audit: list = []
    start = _question_score(provider, templates, _START_FORMS, e1, e2, max_tokens, audit, "start")
    end = _question_score(provider, templates, _END_FORMS, e1, e2, max_tokens, audit, "end")
    duration = _question_score(
        provider, templates, _DURATION_FORMS, e1, e2, max_tokens, audit, "duration"
    )
    return RelationScores(
        start_before=start, end_before=end, duration_longer=duration, audit=tuple(audit)
    )


# Decision rows: relation plus supporting scores with their thresholds.
# Supports are expressed as (selector, uses_duration_threshold) where the
# selector pulls the supporting mass out of a RelationScores triple.
def _rows(s: RelationScores, th_se: float, th_dur: float):
    sb, eb, dl = s.start_before, s.end_before, s.duration_longer
    return (
        (PairRelation.BEFORE, ((sb, th_se), (eb, th_se))),
        (PairRelation.AFTER, ((1 - sb, th_se), (1 - eb, th_se))),
        (PairRelation.CHILD_OF, ((1 - sb, th_se), (eb, th_se), (1 - dl, th_dur))),
        (PairRelation.PARENT_OF, ((sb, th_se), (1 - eb, th_se), (dl, th_dur))),
        (PairRelation.OVERLAP, ((sb, th_se), (1 - eb, th_se), (1 - dl, th_dur))),
        (PairRelation.OVERLAP, ((1 - sb, th_se), (eb, th_se), (dl, th_dur))),
    )


_MIRROR_PAIRS = (
    {PairRelation.BEFORE, PairRelation.AFTER},
    {PairRelation.CHILD_OF, PairRelation.PARENT_OF},
)


def resolve(s: RelationScores, th_se: float = 0.2, th_dur: float = 0.7) -> PairRelation:
    """Pick the single relation for an ordered pair from its score triple.

    A row is satisfied when each of its supporting masses meets its
    threshold; among satisfied rows, the one with the maximum product of
    supporting masses wins.  When opposite directions tie exactly, no
    direction is trusted and NONE is returned (keeps the decision
    antisymmetric under swapping the pair).
    """
    if not (0 < th_se < 1 and 0 < th_dur < 1):
        raise ValueError("thresholds must be in (0, 1)")
    best: list[tuple[PairRelation, int]] = []
    best_product = None
    for idx, (relation, supports) in enumerate(_rows(s, th_se, th_dur)):
        # small epsilon so 1-(1-x) float wobble cannot flip a row on/off
        if all(value >= threshold - 1e-9 for value, threshold in supports):
            product = 1.0
            for value, _ in supports:
                product *= value
            if best_product is None or product > best_product + 1e-12:
                best = [(relation, idx)]
                best_product = product
            elif abs(product - best_product) <= 1e-12:
                best.append((relation, idx))
    if not best:
        return PairRelation.NONE
    tied = {relation for relation, _ in best}
    for mirror in _MIRROR_PAIRS:
        if mirror <= tied:
            return PairRelation.NONE
    return min(best, key=lambda ri: ri[1])[0]


def edge_weight(s: RelationScores, relation: PairRelation) -> float:
    """Confidence of a resolved edge: mean of the row's supporting masses."""
    sb, eb, dl = s.start_before, s.end_before, s.duration_longer
    supports = {
        PairRelation.BEFORE: (sb, eb),
        PairRelation.AFTER: (1 - sb, 1 - eb),
        PairRelation.CHILD_OF: (1 - sb, eb, 1 - dl),
        PairRelation.PARENT_OF: (sb, 1 - eb, dl),
    }.get(relation)
    if supports is None:
        raise ValueError(f"no edge weight for relation {relation}")
    return sum(supports) / len(supports)
