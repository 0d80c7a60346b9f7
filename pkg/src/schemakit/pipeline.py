"""Three-stage schema induction: skeleton, expansion, relation verification.

Stage 1 asks for the major events of each chapter and chains them in listed
order.  Stage 2 probes each event's neighborhood with six expansion prompts
and admits candidates that pass duplication, specificity, and chapter
membership tests.  Stage 3 rescores every same-chapter pair through the
relation questions and repairs the graph into a consistent schema.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .finalize import break_cycles, finalize_schema
from .gateway import CompletionRequest, GatewayError, Provider
from .graph import ChapterSpec, Edge, EdgeType, Event, SchemaGraph, new_schema
from .prompts import (
    TemplateLibrary,
    UnparseableAnswer,
    assign_name,
    parse_event_list,
    parse_yes_no,
    EXPANSION_IDS,
)
from .relations import PairRelation, ScoringError, edge_weight, resolve, score_pair
from .retrieval import PassageIndex, augment_prompt
from .similarity import DuplicateThresholds, EmbeddingProvider, TrigramEmbedder, duplicate_verdict


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    min_events_per_chapter: int = 3
    max_events_per_chapter: int = 10
    max_resamples: int = 5
    retrieval_skeleton: bool = True
    retrieval_expansion: bool = True
    retrieval_k: int = 3
    duplicate: DuplicateThresholds = field(default_factory=DuplicateThresholds)
    start_end_threshold: float = 0.2
    duration_threshold: float = 0.7
    max_tokens_list: int = 512
    max_tokens_name: int = 16
    max_tokens_answer: int = 8
    jobs: int = 1

    def __post_init__(self):
        if not 1 <= self.min_events_per_chapter <= self.max_events_per_chapter:
            raise ValueError("need 1 <= min_events_per_chapter <= max_events_per_chapter")


class StageTrace:
    """Append-only log of prompts, responses, verdicts, and scores."""

    def __init__(self):
        self.entries: list[dict] = []

    def record(self, stage: str, **data) -> None:
        self.entries.append({"stage": stage, **data})

    def for_stage(self, stage: str) -> list[dict]:
        return [e for e in self.entries if e["stage"] == stage]

    def dump_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(json.dumps(entry, ensure_ascii=False, default=str) + "\n")


# expansion prompt id -> provisional edge relative to the seed event
# (kind, seed_is_src)
_EXPANSION_EDGE = {
    "expansion-during": (EdgeType.HIERARCHICAL, True),
    "expansion-steps": (EdgeType.HIERARCHICAL, True),
    "expansion-after": (EdgeType.TEMPORAL, True),
    "expansion-consequences": (EdgeType.TEMPORAL, True),
    "expansion-before": (EdgeType.TEMPORAL, False),
    "expansion-causes": (EdgeType.TEMPORAL, False),
}

PROVISIONAL_WEIGHT = 0.5


def _augmented(
    prompt: str,
    query: str,
    retriever: Optional[PassageIndex],
    enabled: bool,
    k: int,
) -> str:
    if retriever is None or not enabled:
        return prompt
    passages = [p for p, _ in retriever.search(query, k=k)]
    return augment_prompt(passages, prompt)


def _name_for(provider, description: str, templates: TemplateLibrary, cfg: PipelineConfig) -> str:
    name = assign_name(provider, description, templates, max_tokens=cfg.max_tokens_name)
    if not name:
        name = " ".join(description.rstrip(".").split()[:4]) or "event"
    return name


def build_skeleton(
    g: SchemaGraph,
    chapter: Event,
    provider: Provider,
    retriever: Optional[PassageIndex],
    templates: TemplateLibrary,
    cfg: PipelineConfig,
    trace: StageTrace,
) -> list[Event]:
    """Populate a chapter with its major events as a temporal chain."""
    if chapter.id not in g.events:
        raise StageError("skeleton", f"chapter {chapter.id!r} not in schema")
    base_prompt = templates.render(
        "skeleton",
        {
            "evt.name": chapter.name,
            "evt.description": chapter.description,
            "scenario": g.scenario,
        },
    )
    prompt = _augmented(
        base_prompt, chapter.description, retriever, cfg.retrieval_skeleton, cfg.retrieval_k
    )
    sentences: list[str] = []
    for attempt in range(cfg.max_resamples + 1):
        req = CompletionRequest(
            prompt=prompt, max_tokens=cfg.max_tokens_list, salt=attempt
        )
        resp = provider.complete(req)
        sentences = list(parse_event_list(resp.text).items)
        trace.record(
            "skeleton",
            chapter=chapter.id,
            attempt=attempt,
            prompt=prompt,
            response=resp.text,
            parsed=sentences,
        )
        if len(sentences) >= cfg.min_events_per_chapter:
            break
    if len(sentences) < cfg.min_events_per_chapter:
        raise StageError(
            "skeleton",
            f"chapter {chapter.id!r} produced {len(sentences)} events after "
            f"{cfg.max_resamples} resamples (minimum {cfg.min_events_per_chapter})",
        )
    sentences = sentences[: cfg.max_events_per_chapter]

    added: list[Event] = []
    for sentence in sentences:
        name = _name_for(provider, sentence, templates, cfg)
        event = Event(
            id=g.fresh_id(name),
            name=name,
            description=sentence,
            chapter=chapter.id,
            provenance="skeleton",
        )
        g.add_event(event)
        added.append(event)
    for prev, nxt in zip(added, added[1:]):
        g.upsert_edge(Edge(prev.id, nxt.id, EdgeType.TEMPORAL, 1.0))
    return added


def run_specificity_test(
    provider: Provider,
    text: str,
    templates: TemplateLibrary,
    cfg: PipelineConfig = PipelineConfig(),
) -> bool:
    """True means the text is instance-specific and must be rejected."""
    if not text:
        raise ValueError("empty candidate text")
    prompt = templates.render("specificity", {"evt.description": text})
    resp = provider.complete(
        CompletionRequest(prompt=prompt, max_tokens=cfg.max_tokens_answer, want_logprobs=5)
    )
    try:
        dist = parse_yes_no(resp)
    except UnparseableAnswer:
        return True  # conservative: unparseable answers reject
    return dist.yes >= dist.no  # ties reject


def run_chapter_test(
    provider: Provider,
    chapter: Event,
    event_name: str,
    event_description: str,
    templates: TemplateLibrary,
    cfg: PipelineConfig = PipelineConfig(),
) -> bool:
    """True when the model says the event belongs to the chapter."""
    prompt = templates.render(
        "chapter-test",
        {
            "chapter_evt.name": chapter.name,
            "chapter_evt.description": chapter.description,
            "evt.name": event_name,
            "evt.description": event_description,
        },
    )
    resp = provider.complete(
        CompletionRequest(prompt=prompt, max_tokens=cfg.max_tokens_answer, want_logprobs=5)
    )
    try:
        dist = parse_yes_no(resp)
    except UnparseableAnswer:
        return False
    return dist.yes > dist.no


def expand_events(
    g: SchemaGraph,
    chapter: Event,
    provider: Provider,
    retriever: Optional[PassageIndex],
    templates: TemplateLibrary,
    embedder: EmbeddingProvider,
    cfg: PipelineConfig,
    trace: StageTrace,
) -> list[Event]:
    """Probe each chapter event's neighborhood and admit validated candidates.

    Candidates run through duplication, specificity, and chapter tests in
    that order (cheapest first); admission stops once the chapter reaches
    its event cap.
    """
    seeds = g.members(chapter.id)
    admitted: list[Event] = []
    for seed in seeds:
        for template_id in EXPANSION_IDS:
            if len(g.members(chapter.id)) >= cfg.max_events_per_chapter:
                trace.record("expansion", chapter=chapter.id, note="event cap reached")
                return admitted
            prompt = _augmented(
                templates.render(template_id, {"evt.description": seed.description}),
                seed.description,
                retriever,
                cfg.retrieval_expansion,
                cfg.retrieval_k,
            )
            try:
                resp = provider.complete(
                    CompletionRequest(prompt=prompt, max_tokens=cfg.max_tokens_list)
                )
            except GatewayError as exc:
                trace.record(
                    "expansion", chapter=chapter.id, seed=seed.id,
                    prompt_id=template_id, error=str(exc),
                )
                continue
            candidates = parse_event_list(resp.text).items
            trace.record(
                "expansion",
                chapter=chapter.id,
                seed=seed.id,
                prompt_id=template_id,
                prompt=prompt,
                response=resp.text,
                parsed=list(candidates),
            )
            for candidate in candidates:
                if len(g.members(chapter.id)) >= cfg.max_events_per_chapter:
                    trace.record("expansion", chapter=chapter.id, note="event cap reached")
                    return admitted
                verdict = _admit_candidate(
                    g, chapter, seed, template_id, candidate,
                    provider, templates, embedder, cfg, trace,
                )
                if verdict is not None:
                    admitted.append(verdict)
    return admitted


def _admit_candidate(
    g: SchemaGraph,
    chapter: Event,
    seed: Event,
    template_id: str,
    candidate: str,
    provider: Provider,
    templates: TemplateLibrary,
    embedder: EmbeddingProvider,
    cfg: PipelineConfig,
    trace: StageTrace,
) -> Optional[Event]:
    def log(verdict: str, **extra):
        trace.record(
            "validation",
            chapter=chapter.id,
            seed=seed.id,
            prompt_id=template_id,
            candidate=candidate,
            verdict=verdict,
            **extra,
        )

    # duplication (candidate is unnamed yet: its description stands in)
    for other in sorted(g.events.values(), key=lambda e: e.id):
        try:
            sim = duplicate_verdict(
                candidate, candidate, other.name, other.description, embedder, cfg.duplicate
            )
        except Exception as exc:
            log("error", reason=f"duplication check failed: {exc}")
            return None
        if sim.is_duplicate:
            log("rejected-duplicate", duplicate_of=other.id)
            return None
    try:
        if run_specificity_test(provider, candidate, templates, cfg):
            log("rejected-specificity")
            return None
        if not run_chapter_test(
            provider, chapter, candidate, candidate, templates, cfg
        ):
            log("rejected-chapter")
            return None
        name = _name_for(provider, candidate, templates, cfg)
    except GatewayError as exc:
        log("error", reason=str(exc))
        return None
    event = Event(
        id=g.fresh_id(name),
        name=name,
        description=candidate,
        chapter=chapter.id,
        provenance="expansion",
    )
    g.add_event(event)
    kind, seed_is_src = _EXPANSION_EDGE[template_id]
    src, dst = (seed.id, event.id) if seed_is_src else (event.id, seed.id)
    g.upsert_edge(Edge(src, dst, kind, PROVISIONAL_WEIGHT))
    log("admitted", event=event.id)
    return event


def verify_relations(
    g: SchemaGraph,
    chapter: Event,
    provider: Provider,
    templates: TemplateLibrary,
    cfg: PipelineConfig,
    trace: StageTrace,
) -> None:
    """Rescore every same-chapter pair and repair the chapter subgraph."""
    members = g.members(chapter.id)
    pairs = [
        (a, b) for i, a in enumerate(members) for b in members[i + 1:]
    ]

    def score(pair):
        a, b = pair
        try:
            return pair, score_pair(provider, a, b, templates, cfg.max_tokens_answer), None
        except (ScoringError, GatewayError) as exc:
            return pair, None, str(exc)

    if cfg.jobs > 1 and pairs:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(score, pairs))
    else:
        results = [score(pair) for pair in pairs]
    results.sort(key=lambda r: (r[0][0].id, r[0][1].id))

    for (a, b), scores, error in results:
        if scores is None:
            # provisional edges between the pair stay untouched
            trace.record("verification", chapter=chapter.id, pair=[a.id, b.id], error=error)
            continue
        relation = resolve(scores, cfg.start_end_threshold, cfg.duration_threshold)
        trace.record(
            "verification",
            chapter=chapter.id,
            pair=[a.id, b.id],
            start_before=scores.start_before,
            end_before=scores.end_before,
            duration_longer=scores.duration_longer,
            relation=relation.value,
        )
        for stale in g.edges_between(a.id, b.id):
            g.remove_edge(stale.src, stale.dst, stale.kind)
        if relation in (PairRelation.OVERLAP, PairRelation.NONE):
            continue
        weight = edge_weight(scores, relation)
        src, dst, kind = {
            PairRelation.BEFORE: (a.id, b.id, EdgeType.TEMPORAL),
            PairRelation.AFTER: (b.id, a.id, EdgeType.TEMPORAL),
            PairRelation.CHILD_OF: (b.id, a.id, EdgeType.HIERARCHICAL),
            PairRelation.PARENT_OF: (a.id, b.id, EdgeType.HIERARCHICAL),
        }[relation]
        g.upsert_edge(Edge(src, dst, kind, weight))

    member_ids = {e.id for e in g.members(chapter.id)}
    removed = break_cycles(g, EdgeType.TEMPORAL, member_ids)
    if removed:
        trace.record(
            "verification",
            chapter=chapter.id,
            removed_feedback_edges=sorted(removed),
        )


def induce(
    scenario: str,
    chapters: Optional[ChapterSpec],
    provider: Provider,
    retriever: Optional[PassageIndex] = None,
    embedder: Optional[EmbeddingProvider] = None,
    templates: Optional[TemplateLibrary] = None,
    cfg: Optional[PipelineConfig] = None,
) -> tuple[SchemaGraph, StageTrace]:
    """Run the full pipeline and return a finalized, integrity-clean schema."""
    cfg = cfg or PipelineConfig()
    templates = templates or TemplateLibrary()
    embedder = embedder or TrigramEmbedder()
    trace = StageTrace()
    g = new_schema(scenario, chapters)
    for chapter in sorted(g.chapter_events(), key=lambda e: e.id):
        build_skeleton(g, chapter, provider, retriever, templates, cfg, trace)
        expand_events(g, chapter, provider, retriever, templates, embedder, cfg, trace)
        verify_relations(g, chapter, provider, templates, cfg, trace)
    finalize_schema(g)
    violations = g.check_integrity()
    if violations:
        raise StageError(
            "finalize", "; ".join(v.message for v in violations)
        )
    return g, trace
