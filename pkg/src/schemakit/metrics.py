"""Event F1 and Relation F1 between a predicted and a gold schema.

Events are matched one-to-one by maximizing total description-embedding
cosine similarity (an optimal rectangular assignment); relation scores then
count typed edges whose mapped endpoints carry the same edge in gold.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import EdgeType, SchemaGraph
from .similarity import EmbeddingProvider, TrigramEmbedder


@dataclass(frozen=True)
class EventMatching:
    """One-to-one assignment between predicted and gold events."""

    pairs: tuple[tuple[str, str, float], ...]  # (pred_id, gold_id, similarity)

    def mapping(self) -> dict[str, str]:
        return {p: g for p, g, _ in self.pairs}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricReport:
    event: PRF
    temporal: PRF
    hierarchical: PRF
    matched_pair_count: int

    def to_dict(self) -> dict:
        return {
            "event": vars(self.event),
            "temporal": vars(self.temporal),
            "hierarchical": vars(self.hierarchical),
            "matched_pair_count": self.matched_pair_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _scored_events(g: SchemaGraph) -> list:
    return sorted(
        (e for e in g.events.values() if not e.is_chapter), key=lambda e: e.id
    )


def match_events(
    pred: SchemaGraph,
    gold: SchemaGraph,
    embedder: EmbeddingProvider | None = None,
) -> EventMatching:
    """Optimal max-similarity assignment between non-chapter events."""
    embedder = embedder or TrigramEmbedder()
    pred_events = _scored_events(pred)
    gold_events = _scored_events(gold)
    if not pred_events or not gold_events:
        raise ValueError("both schemas must contain non-chapter events")
    pv = np.stack([embedder.embed(e.description) for e in pred_events])
    gv = np.stack([embedder.embed(e.description) for e in gold_events])
    pv = pv / np.linalg.norm(pv, axis=1, keepdims=True)
    gv = gv / np.linalg.norm(gv, axis=1, keepdims=True)
    sim = pv @ gv.T
    rows, cols = linear_sum_assignment(sim, maximize=True)
    pairs = tuple(
        (pred_events[i].id, gold_events[j].id, float(sim[i, j]))
        for i, j in sorted(zip(rows, cols))
    )
    return EventMatching(pairs=pairs)


def event_f1(
    matching: EventMatching, n_pred: int, n_gold: int, match_threshold: float = 0.0
) -> PRF:
    """Soft precision/recall: summed matched similarity over event counts.

    Negative similarities are clamped to zero; pairs below the optional
    threshold contribute nothing.
    """
    if n_pred <= 0 or n_gold <= 0:
        raise ValueError("schemas must be non-empty")
    total = sum(
        max(0.0, s) for _, _, s in matching.pairs if s >= match_threshold
    )
    p = total / n_pred
    r = total / n_gold
    return PRF(p, r, _harmonic(p, r))


def relation_f1(
    pred: SchemaGraph,
    gold: SchemaGraph,
    matching: EventMatching,
    kind: EdgeType,
) -> PRF:
    """Direction-sensitive typed-edge precision/recall under the event map.

    Only edges whose both endpoints are matched enter either denominator.
    """
    phi = matching.mapping()
    matched_pred = set(phi)
    matched_gold = set(phi.values())
    inv = {g: p for p, g in phi.items()}

    pred_edges = [
        e
        for e in pred.edges_of_kind(kind)
        if e.src in matched_pred and e.dst in matched_pred
    ]
    gold_edges = [
        e
        for e in gold.edges_of_kind(kind)
        if e.src in matched_gold and e.dst in matched_gold
    ]
    gold_set = {(e.src, e.dst) for e in gold_edges}
    tp = sum(1 for e in pred_edges if (phi[e.src], phi[e.dst]) in gold_set)

    if pred_edges:
        p = tp / len(pred_edges)
    else:
        p = 1.0 if not gold_edges else 0.0
    if gold_edges:
        r = tp / len(gold_edges)
    else:
        r = 1.0 if not pred_edges else 0.0
    return PRF(p, r, _harmonic(p, r))


def evaluate(
    pred: SchemaGraph,
    gold: SchemaGraph,
    embedder: EmbeddingProvider | None = None,
    match_threshold: float = 0.0,
) -> tuple[MetricReport, EventMatching]:
    matching = match_events(pred, gold, embedder)
    report = MetricReport(
        event=event_f1(
            matching,
            len(_scored_events(pred)),
            len(_scored_events(gold)),
            match_threshold,
        ),
        temporal=relation_f1(pred, gold, matching, EdgeType.TEMPORAL),
        hierarchical=relation_f1(pred, gold, matching, EdgeType.HIERARCHICAL),
        matched_pair_count=len(matching.pairs),
    )
    return report, matching


def write_pairs_csv(matching: EventMatching, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pred_id", "gold_id", "similarity"])
        for pred_id, gold_id, sim in matching.pairs:
            writer.writerow([pred_id, gold_id, f"{sim:.6f}"])


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if (p + r) > 0 else 0.0
