from __future__ import annotations

import json

import pytest

from schemakit.gateway import CompletionRequest, CompletionResponse
from schemakit.graph import ChapterSpec, EdgeType, Event, SchemaGraph, new_schema
from schemakit.offline import ScriptedProvider
from schemakit.pipeline import (
    PipelineConfig,
    StageError,
    StageTrace,
    build_skeleton,
    expand_events,
    induce,
    run_chapter_test,
    run_specificity_test,
    verify_relations,
)
from schemakit.prompts import TemplateLibrary
from schemakit.similarity import TrigramEmbedder

from conftest import DATA, TOY_CONFIG_KWARGS, TOY_SCENARIO


@pytest.fixture(scope="module")
def templates():
    return TemplateLibrary()


def toy_chapters():
    return ChapterSpec.from_json_file(DATA / "toy_chapters.json")


class ScriptByKind:
    """Routes prompts to canned responses by simple substring dispatch."""

    def __init__(self, skeleton_by_salt=None, default_list="- aa bb cc.\n",
                 answer=" no", name="A Name"):
        self.skeleton_by_salt = skeleton_by_salt or {}
        self.default_list = default_list
        self.answer = answer
        self.name = name

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        if req.want_logprobs:
            return CompletionResponse(text="", token_logprobs=({self.answer: 0.0},))
        if "Give names to the described event." in req.prompt:
            return CompletionResponse(text=self.name)
        if "List the major events" in req.prompt:
            text = self.skeleton_by_salt.get(req.salt, self.skeleton_by_salt.get("*", ""))
            return CompletionResponse(text=text)
        return CompletionResponse(text=self.default_list)


class TestBuildSkeleton:
    def chapter_graph(self):
        g = new_schema("outbreak story")
        return g, g.chapter_events()[0]

    def test_short_lists_resampled_until_long_enough(self, templates):
        provider = ScriptByKind(
            skeleton_by_salt={
                0: "1. Only one event here.",
                1: "1. Still one thing.",
                2: "1. First thing happens.\n2. Second thing happens.\n3. Third thing happens.",
            },
            name="Some Event",
        )
        g, chapter = self.chapter_graph()
        trace = StageTrace()
        added = build_skeleton(g, chapter, provider, None, templates, PipelineConfig(), trace)
        assert len(added) == 3
        attempts = [e["attempt"] for e in trace.for_stage("skeleton")]
        assert attempts == [0, 1, 2]

    def test_gives_up_after_max_resamples(self, templates):
        provider = ScriptByKind(skeleton_by_salt={"*": "1. Too few."})
        g, chapter = self.chapter_graph()
        cfg = PipelineConfig(max_resamples=2)
        with pytest.raises(StageError, match="skeleton"):
            build_skeleton(g, chapter, provider, None, templates, cfg, StageTrace())

    def test_overflow_truncated_at_cap(self, templates):
        listing = "\n".join(f"{i}. Numbered event {i} happens now." for i in range(1, 15))
        provider = ScriptByKind(skeleton_by_salt={0: listing}, name="Evt")
        g, chapter = self.chapter_graph()
        cfg = PipelineConfig(max_events_per_chapter=10)
        added = build_skeleton(g, chapter, provider, None, templates, cfg, StageTrace())
        assert len(added) == 10

    def test_events_chained_temporally(self, templates):
        provider = ScriptByKind(
            skeleton_by_salt={0: "1. Aa bb cc.\n2. Dd ee ff.\n3. Gg hh ii."},
            name="N",
        )
        g, chapter = self.chapter_graph()
        added = build_skeleton(
            g, chapter, provider, None, templates, PipelineConfig(), StageTrace()
        )
        temporal = {(e.src, e.dst) for e in g.edges_of_kind(EdgeType.TEMPORAL)}
        assert (added[0].id, added[1].id) in temporal
        assert (added[1].id, added[2].id) in temporal
        assert len(temporal) == 2


class TestValidators:
    def test_specificity_yes_rejects(self, templates):
        provider = ScriptByKind(answer=" yes")
        assert run_specificity_test(provider, "On June 5th it rained.", templates)

    def test_specificity_no_passes(self, templates):
        provider = ScriptByKind(answer=" no")
        assert not run_specificity_test(provider, "It rains.", templates)

    def test_specificity_unparseable_rejects(self, templates):
        provider = ScriptByKind(answer="?")
        assert run_specificity_test(provider, "It rains.", templates)

    def test_chapter_test_yes(self, templates):
        provider = ScriptByKind(answer=" yes")
        chapter = Event("ch", "ch", "things happen", is_chapter=True)
        assert run_chapter_test(provider, chapter, "e", "an event", templates)

    def test_chapter_test_unparseable_is_no(self, templates):
        provider = ScriptByKind(answer="!")
        chapter = Event("ch", "ch", "things happen", is_chapter=True)
        assert not run_chapter_test(provider, chapter, "e", "an event", templates)


class TestExpansion:
    def seeded_graph(self, templates, provider, n_seed=3):
        g = new_schema("outbreak story")
        chapter = g.chapter_events()[0]
        listing = "\n".join(
            f"{i}. Seed event number {i} happens." for i in range(1, n_seed + 1)
        )
        build_skeleton(
            g, chapter, ScriptByKind(skeleton_by_salt={0: listing}, name="Seed"),
            None, templates, PipelineConfig(), StageTrace(),
        )
        return g, chapter

    def test_candidates_admitted_with_provisional_edges(self, templates):
        provider = ScriptByKind(
            default_list="- A fresh candidate event occurs.\n", answer=" no", name="Fresh"
        )

        # chapter test must answer yes, specificity no: patch per prompt
        class Dual(ScriptByKind):
            def complete(self, req):
                if req.want_logprobs:
                    tok = " yes" if "a part of" in req.prompt else " no"
                    return CompletionResponse(text="", token_logprobs=({tok: 0.0},))
                return super().complete(req)

        g, chapter = self.seeded_graph(templates, provider)
        trace = StageTrace()
        admitted = expand_events(
            g, chapter, Dual(default_list="- A fresh candidate event occurs.\n", name="Fresh"),
            None, templates, TrigramEmbedder(), PipelineConfig(max_events_per_chapter=4), trace,
        )
        assert admitted  # at least one candidate got in
        verdicts = {e["verdict"] for e in trace.for_stage("validation")}
        assert "admitted" in verdicts

    def test_duplicates_rejected(self, templates):
        class Echo(ScriptByKind):
            def complete(self, req):
                if req.want_logprobs:
                    return CompletionResponse(text="", token_logprobs=({" no": 0.0},))
                if "Give names" in req.prompt:
                    return CompletionResponse(text="Seed")
                return CompletionResponse(text="- Seed event number 1 happens.\n")

        g, chapter = self.seeded_graph(templates, None)
        trace = StageTrace()
        admitted = expand_events(
            g, chapter, Echo(), None, templates, TrigramEmbedder(),
            PipelineConfig(max_events_per_chapter=10), trace,
        )
        assert admitted == []
        assert all(
            e["verdict"] == "rejected-duplicate" for e in trace.for_stage("validation")
        )

    def test_cap_stops_admission(self, templates):
        class Fountain(ScriptByKind):
            def __init__(self):
                super().__init__()
                self.n = 0

            def complete(self, req):
                if req.want_logprobs:
                    tok = " no" if "specific names" in req.prompt else " yes"
                    return CompletionResponse(text="", token_logprobs=({tok: 0.0},))
                if "Give names" in req.prompt:
                    self.n += 1
                    return CompletionResponse(text=f"Cand {self.n}")
                self.n += 1
                return CompletionResponse(
                    text=f"- Wholly distinct candidate narrative {self.n} unfolds gradually.\n"
                )

        g, chapter = self.seeded_graph(templates, None)
        cfg = PipelineConfig(max_events_per_chapter=3)
        trace = StageTrace()
        expand_events(g, chapter, Fountain(), None, templates, TrigramEmbedder(), cfg, trace)
        assert len(g.members(chapter.id)) == 3
        notes = [e.get("note") for e in trace.for_stage("expansion")]
        assert "event cap reached" in notes


class RelationWorld:
    """Relation answers from fixed intervals keyed by description."""

    def __init__(self, world):
        self.world = world

    def complete(self, req):
        if not req.want_logprobs:
            return CompletionResponse(text="")
        desc_pair = [d for d in self.world if d in req.prompt]
        first = min(desc_pair, key=req.prompt.index)
        second = max(desc_pair, key=req.prompt.index)
        (s1, e1), (s2, e2) = self.world[first], self.world[second]
        if "start before" in req.prompt:
            yes = s1 < s2
        elif "start after" in req.prompt:
            yes = s1 > s2
        elif "end before" in req.prompt:
            yes = e1 < e2
        elif "end after" in req.prompt:
            yes = e1 > e2
        else:
            yes = (e1 - s1) > (e2 - s2)
        return CompletionResponse(text="", token_logprobs=({" yes" if yes else " no": 0.0},))


class TestVerifyRelations:
    def test_scored_edges_replace_provisional_chain(self, templates):
        g = new_schema("x")
        chapter = g.chapter_events()[0]
        world = {
            "alpha unfolds.": (0.0, 10.0),
            "beta unfolds.": (2.0, 4.0),
            "gamma unfolds.": (12.0, 13.0),
        }
        for i, desc in enumerate(sorted(world)):
            g.add_event(Event(f"e{i}", f"E{i}", desc, chapter=chapter.id))
        trace = StageTrace()
        verify_relations(g, chapter, RelationWorld(world), templates, PipelineConfig(), trace)
        temporal = {(e.src, e.dst) for e in g.edges_of_kind(EdgeType.TEMPORAL)}
        hier = {(e.src, e.dst) for e in g.edges_of_kind(EdgeType.HIERARCHICAL) if e.src != chapter.id}
        # alpha (e0) contains beta (e1); alpha and beta precede gamma (e2)
        assert ("e0", "e1") in hier
        assert ("e0", "e2") in temporal and ("e1", "e2") in temporal
        relations = [e["relation"] for e in trace.for_stage("verification") if "relation" in e]
        assert sorted(relations) == ["before", "before", "parent-of"]

    def test_jobs_parallel_equals_serial(self, templates):
        world = {
            "alpha unfolds.": (0.0, 10.0),
            "beta unfolds.": (2.0, 4.0),
            "gamma unfolds.": (12.0, 13.0),
            "delta unfolds.": (11.0, 20.0),
        }

        def run(jobs):
            g = new_schema("x")
            chapter = g.chapter_events()[0]
            for i, desc in enumerate(sorted(world)):
                g.add_event(Event(f"e{i}", f"E{i}", desc, chapter=chapter.id))
            verify_relations(
                g, chapter, RelationWorld(world), templates,
                PipelineConfig(jobs=jobs), StageTrace(),
            )
            return g.to_json()

        assert run(1) == run(4)


class TestInduce:
    def test_offline_end_to_end_clean(self):
        schema, trace = induce(
            "earthquake drill",
            None,
            ScriptedProvider(),
            cfg=PipelineConfig(max_events_per_chapter=5),
        )
        assert schema.check_integrity() == []
        assert trace.for_stage("skeleton")
        assert trace.for_stage("verification")

    def test_fixture_replay_matches_golden(self, toy_fixtures, toy_corpus_index, toy_config):
        schema, trace = induce(
            TOY_SCENARIO,
            toy_chapters(),
            toy_fixtures,
            retriever=toy_corpus_index,
            cfg=toy_config,
        )
        golden = (DATA / "golden_schema.json").read_text()
        assert schema.to_json() == golden

    def test_deterministic_across_runs_and_jobs(self, toy_fixtures, toy_corpus_index):
        outputs = set()
        for jobs in (1, 4):
            cfg = PipelineConfig(jobs=jobs, **TOY_CONFIG_KWARGS)
            schema, _ = induce(
                TOY_SCENARIO, toy_chapters(), toy_fixtures,
                retriever=toy_corpus_index, cfg=cfg,
            )
            outputs.add(schema.to_json())
        assert len(outputs) == 1

    def test_trace_dump_round_trips(self, tmp_path, toy_fixtures, toy_corpus_index, toy_config):
        _, trace = induce(
            TOY_SCENARIO, toy_chapters(), toy_fixtures,
            retriever=toy_corpus_index, cfg=toy_config,
        )
        out = tmp_path / "trace.jsonl"
        trace.dump_jsonl(out)
        lines = out.read_text().splitlines()
        assert len(lines) == len(trace.entries)
        stages = {json.loads(l)["stage"] for l in lines}
        assert {"skeleton", "expansion", "validation", "verification"} <= stages


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(min_events_per_chapter=0)
    with pytest.raises(ValueError):
        PipelineConfig(min_events_per_chapter=5, max_events_per_chapter=4)
