"""Scoring a predicted schema against a gold one.

Events are matched one-to-one by maximizing total description-similarity;
Event F1 is soft (partial credit for near-matches) while Relation F1
counts typed, directed edges under the induced event mapping.
"""

from schemakit import (
    ChapterSpec,
    Edge,
    EdgeType,
    Event,
    evaluate,
    new_schema,
)


def make(descriptions, temporal):
    g = new_schema("earthquake", ChapterSpec(chapters=[("main", "the main phase")]))
    for i, desc in enumerate(descriptions):
        g.add_event(Event(f"e{i}", f"E{i}", desc, chapter="main"))
    for u, v in temporal:
        g.upsert_edge(Edge(u, v, EdgeType.TEMPORAL, 1.0))
    return g


gold = make(
    [
        "The ground begins to shake violently.",
        "Buildings collapse in the affected area.",
        "Rescue teams search for survivors.",
    ],
    [("e0", "e1"), ("e1", "e2")],
)

# The prediction paraphrases two events, misses one, and gets one of the
# two temporal edges right.
pred = make(
    [
        "The ground shakes violently.",
        "Rescue crews search for survivors.",
    ],
    [("e0", "e1")],
)

report, matching = evaluate(pred, gold)

print("matched pairs:")
for pred_id, gold_id, sim in matching.pairs:
    print(f"  {pred_id} <-> {gold_id}  (similarity {sim:.3f})")

print()
for label, prf in (
    ("event", report.event),
    ("temporal", report.temporal),
    ("hierarchical", report.hierarchical),
):
    print(f"{label:12s} P={prf.precision:.3f}  R={prf.recall:.3f}  F1={prf.f1:.3f}")
