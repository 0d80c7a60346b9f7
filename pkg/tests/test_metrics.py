from __future__ import annotations

import csv
import itertools
import json
import random

import numpy as np
import pytest

from schemakit.graph import ChapterSpec, Edge, EdgeType, Event, SchemaGraph, new_schema
from schemakit.metrics import (
    EventMatching,
    event_f1,
    evaluate,
    match_events,
    relation_f1,
    write_pairs_csv,
)
from schemakit.similarity import TrigramEmbedder

from conftest import gold_schema_paths


class ArrayEmbedder:
    """Embeds via a lookup table so similarity matrices are hand-pickable."""

    def __init__(self, table):
        self.table = table

    def embed(self, text):
        return np.asarray(self.table[text], dtype=float)


def schema_with(descriptions, temporal=(), hierarchical=(), chapter="ch"):
    g = new_schema("x", ChapterSpec(chapters=[(chapter, "the chapter")]))
    for i, desc in enumerate(descriptions):
        g.add_event(Event(f"e{i}", f"E{i}", desc, chapter=chapter))
    for u, v in temporal:
        g.upsert_edge(Edge(u, v, EdgeType.TEMPORAL, 0.9))
    for u, v in hierarchical:
        g.upsert_edge(Edge(u, v, EdgeType.HIERARCHICAL, 0.9))
    return g


def brute_force_best(sim):
    n, m = sim.shape
    k = min(n, m)
    best = -1.0
    rows = range(n)
    for rsub in itertools.combinations(rows, k):
        for csub in itertools.permutations(range(m), k):
            best = max(best, sum(sim[r, c] for r, c in zip(rsub, csub)))
    return best


class TestMatchEvents:
    def test_identity_match(self):
        g = schema_with(["the cases rise", "the hospitals fill"])
        matching = match_events(g, g)
        assert matching.mapping() == {"e0": "e0", "e1": "e1"}
        assert all(s == pytest.approx(1.0) for _, _, s in matching.pairs)

    def test_assignment_is_optimal_vs_brute_force(self):
        rng = random.Random(5)
        for _ in range(30):
            n, m = rng.randint(1, 5), rng.randint(1, 5)
            dim = 4
            table = {}
            for i in range(n):
                table[f"p{i}"] = [rng.uniform(-1, 1) for _ in range(dim)]
            for j in range(m):
                table[f"g{j}"] = [rng.uniform(-1, 1) for _ in range(dim)]
            pred = schema_with([f"p{i}" for i in range(n)])
            gold = schema_with([f"g{j}" for j in range(m)])
            emb = ArrayEmbedder(table)
            matching = match_events(pred, gold, emb)
            pv = np.stack([emb.embed(f"p{i}") for i in range(n)])
            gv = np.stack([emb.embed(f"g{j}") for j in range(m)])
            pv = pv / np.linalg.norm(pv, axis=1, keepdims=True)
            gv = gv / np.linalg.norm(gv, axis=1, keepdims=True)
            sim = pv @ gv.T
            got = sum(s for _, _, s in matching.pairs)
            assert got == pytest.approx(brute_force_best(sim), abs=1e-9)

    def test_chapter_events_excluded(self):
        g = schema_with(["only event here"])
        matching = match_events(g, g)
        assert len(matching.pairs) == 1

    def test_empty_side_rejected(self):
        g = schema_with(["an event"])
        empty = new_schema("x")
        with pytest.raises(ValueError):
            match_events(empty, g)


class TestEventF1:
    def test_perfect(self):
        m = EventMatching(pairs=(("a", "x", 1.0), ("b", "y", 1.0)))
        prf = event_f1(m, 2, 2)
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_soft_partial(self):
        m = EventMatching(pairs=(("a", "x", 0.5),))
        prf = event_f1(m, 2, 1)
        assert prf.precision == pytest.approx(0.25)
        assert prf.recall == pytest.approx(0.5)
        assert prf.f1 == pytest.approx(2 * 0.25 * 0.5 / 0.75)

    def test_negative_similarity_clamped(self):
        m = EventMatching(pairs=(("a", "x", -0.4),))
        prf = event_f1(m, 1, 1)
        assert prf.f1 == 0.0

    def test_threshold_drops_weak_pairs(self):
        m = EventMatching(pairs=(("a", "x", 0.3), ("b", "y", 0.9)))
        prf = event_f1(m, 2, 2, match_threshold=0.5)
        assert prf.precision == pytest.approx(0.45)

    def test_empty_schema_rejected(self):
        with pytest.raises(ValueError):
            event_f1(EventMatching(pairs=()), 0, 1)


class TestRelationF1:
    def pair(self):
        pred = schema_with(["aa", "bb", "cc"], temporal=[("e0", "e1"), ("e1", "e2")])
        gold = schema_with(["aa", "bb", "cc"], temporal=[("e0", "e1"), ("e2", "e1")])
        matching = match_events(pred, gold)
        return pred, gold, matching

    def test_direction_sensitive(self):
        pred, gold, matching = self.pair()
        prf = relation_f1(pred, gold, matching, EdgeType.TEMPORAL)
        # e0->e1 agrees; e1->e2 points the wrong way
        assert prf.precision == pytest.approx(0.5)
        assert prf.recall == pytest.approx(0.5)

    def test_both_empty_is_perfect(self):
        pred = schema_with(["aa", "bb"])
        gold = schema_with(["aa", "bb"])
        matching = match_events(pred, gold)
        prf = relation_f1(pred, gold, matching, EdgeType.TEMPORAL)
        assert (prf.precision, prf.recall, prf.f1) == (1.0, 1.0, 1.0)

    def test_pred_empty_gold_not(self):
        pred = schema_with(["aa", "bb"])
        gold = schema_with(["aa", "bb"], temporal=[("e0", "e1")])
        matching = match_events(pred, gold)
        prf = relation_f1(pred, gold, matching, EdgeType.TEMPORAL)
        # no predicted edges against a non-empty gold: nothing is credited
        assert prf.recall == 0.0 and prf.f1 == 0.0

    def test_unmatched_endpoints_excluded_from_denominators(self):
        pred = schema_with(["aa", "bb", "zz extra"], temporal=[("e0", "e2")])
        gold = schema_with(["aa", "bb"])
        matching = match_events(pred, gold)
        # e2 is unmatched (gold has only two events), so e0->e2 must not
        # count against precision
        prf = relation_f1(pred, gold, matching, EdgeType.TEMPORAL)
        assert prf.precision == 1.0

    def test_hierarchical_counted_separately(self):
        pred = schema_with(["aa", "bb"], hierarchical=[("e0", "e1")])
        gold = schema_with(["aa", "bb"], hierarchical=[("e0", "e1")])
        matching = match_events(pred, gold)
        prf = relation_f1(pred, gold, matching, EdgeType.HIERARCHICAL)
        assert prf.f1 == 1.0


class TestEvaluate:
    @pytest.mark.parametrize("path", gold_schema_paths(), ids=lambda p: p.stem)
    def test_gold_vs_itself_is_perfect(self, path):
        g = SchemaGraph.load(path)
        report, _ = evaluate(g, g)
        for prf in (report.event, report.temporal, report.hierarchical):
            assert prf.precision == pytest.approx(1.0, abs=1e-9)
            assert prf.recall == pytest.approx(1.0, abs=1e-9)
            assert prf.f1 == pytest.approx(1.0, abs=1e-9)

    def test_relabeling_ids_does_not_change_scores(self):
        gold = schema_with(
            ["the cases rise", "the hospitals fill", "the city recovers"],
            temporal=[("e0", "e1")],
            hierarchical=[("e1", "e2")],
        )
        relabeled = json.loads(gold.to_json())
        rename = lambda s: "x-" + s if s.startswith("e") else s
        for ev in relabeled["events"]:
            ev["id"] = rename(ev["id"])
            if ev.get("chapter"):
                ev["chapter"] = rename(ev["chapter"])
        for ed in relabeled["edges"]:
            ed["src"], ed["dst"] = rename(ed["src"]), rename(ed["dst"])
        pred = SchemaGraph.from_dict(relabeled)
        report, _ = evaluate(pred, gold)
        assert report.event.f1 == pytest.approx(1.0)
        assert report.temporal.f1 == pytest.approx(1.0)
        assert report.hierarchical.f1 == pytest.approx(1.0)

    def test_report_serializes(self):
        g = schema_with(["aa", "bb"])
        report, _ = evaluate(g, g)
        data = json.loads(report.to_json())
        assert set(data) == {"event", "temporal", "hierarchical", "matched_pair_count"}

    def test_pairs_csv(self, tmp_path):
        g = schema_with(["aa", "bb"])
        _, matching = evaluate(g, g)
        out = tmp_path / "pairs.csv"
        write_pairs_csv(matching, out)
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["pred_id", "gold_id", "similarity"]
        assert len(rows) == 3


def test_f1_formula_spot_check():
    m = EventMatching(pairs=(("a", "x", 0.8),))
    prf = event_f1(m, 2, 4)
    p, r = 0.4, 0.2
    assert prf.f1 == pytest.approx(2 * p * r / (p + r))
