"""Single-pass DOT baseline: prompt rendering, dialect parsing, export.

The baseline asks the model for a whole schema as an indexed event list
plus ``i->j[label='temporal']`` edge lines, taught with one in-context
example.  Parsing is tolerant: LLM output drifts from the grammar, so
malformed lines are dropped with warnings instead of failing the run.
A separate exporter emits standard renderer-compatible DOT for any schema.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .finalize import finalize_schema
from .graph import ChapterSpec, Event, SchemaGraph, EdgeType, Edge, new_schema


class DotParseError(Exception):
    pass


@dataclass
class DotDocument:
    scenario: str
    events: list[tuple[int, str]] = field(default_factory=list)  # (index, description)
    edges: list[tuple[int, int, str]] = field(default_factory=list)  # (src, dst, label)
    warnings: list[str] = field(default_factory=list)

    def serialize(self) -> str:
        lines = [f'List relevant events and edges in "{self.scenario}":', "events:"]
        for idx, desc in self.events:
            lines.append(f"{idx}: {desc}")
        lines.append("edges: ")
        for src, dst, label in self.edges:
            lines.append(f"{src}->{dst}[label='{label}']")
        return "\n".join(lines) + "\n"


_HEADER_RE = re.compile(r'^List relevant events and edges in "(?P<scenario>[^"]*)":\s*$')
_EVENT_RE = re.compile(r"^\s*(?P<idx>\d+)\s*:\s*(?P<desc>.+?)\s*$")
_EDGE_RE = re.compile(
    r"^\s*(?P<src>\d+)\s*->\s*(?P<dst>\d+)\s*"
    r"(?:\[\s*label\s*=\s*['\"](?P<label>[^'\"]*)['\"]\s*\])?\s*;?\s*$"
)
_LABELS = ("temporal", "hierarchical")


def parse_dot(text: str, scenario: str = "") -> DotDocument:
    """Parse the baseline dialect, dropping malformed lines with warnings."""
    doc = DotDocument(scenario=scenario)
    declared: set[int] = set()
    raw_edges: list[tuple[int, int, str]] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped in {"events:", "edges:", "..."}:
            continue
        header = _HEADER_RE.match(stripped)
        if header:
            doc.scenario = header.group("scenario")
            continue
        edge = _EDGE_RE.match(stripped)
        if edge:
            label = edge.group("label") or "temporal"
            if label not in _LABELS:
                doc.warnings.append(f"unknown edge label {label!r}: {stripped!r}")
                continue
            raw_edges.append((int(edge.group("src")), int(edge.group("dst")), label))
            continue
        event = _EVENT_RE.match(stripped)
        if event:
            idx = int(event.group("idx"))
            if idx in declared:
                doc.warnings.append(f"duplicate event index {idx}")
                continue
            declared.add(idx)
            doc.events.append((idx, event.group("desc")))
            continue
        doc.warnings.append(f"unparseable line: {stripped!r}")
    if not doc.events:
        raise DotParseError("no parseable event lines")
    for src, dst, label in raw_edges:
        if src == dst:
            doc.warnings.append(f"dropped self-loop {src}->{dst}")
            continue
        if src not in declared or dst not in declared:
            doc.warnings.append(f"edge {src}->{dst} references an undeclared index")
            continue
        if (src, dst, label) not in doc.edges:
            doc.edges.append((src, dst, label))
    return doc


def bundled_example() -> DotDocument:
    """The shipped in-context example (chemical-spill schema fragment)."""
    text = (
        resources.files("schemakit").joinpath("data", "dot_example.txt").read_text("utf-8")
    )
    return parse_dot(text)


def render_dot_prompt(
    scenario: str,
    chapters: Optional[ChapterSpec] = None,
    example: Optional[DotDocument] = None,
) -> str:
    """One-shot prompt: serialized example, then the query header.

    Chapter names, when provided, are appended as seed event lines for the
    target scenario.
    """
    example = example or bundled_example()
    parts = [example.serialize(), f'List relevant events and edges in "{scenario}":']
    if chapters is not None and chapters.chapters:
        parts.append("events:")
        for i, (name, _) in enumerate(chapters.chapters):
            parts.append(f"{i}: {name}.")
    return "\n".join(parts) + "\n"


def _short_name(description: str, max_words: int = 6) -> str:
    words = description.rstrip(".").split()
    return " ".join(words[:max_words]) if words else "event"


def dot_to_schema(doc: DotDocument, scenario: str) -> SchemaGraph:
    """Lift a parsed document into a finalized schema.

    Events without a hierarchical parent hang off the default chapter;
    hierarchical labels become parent->child edges.  The result goes
    through the same repair pass as the pipeline output so the two are
    comparable.
    """
    g = new_schema(scenario)
    chapter_id = g.chapter_events()[0].id
    id_of: dict[int, str] = {}
    for idx, desc in sorted(doc.events):
        eid = g.fresh_id(_short_name(desc))
        g.add_event(
            Event(
                id=eid,
                name=_short_name(desc),
                description=desc,
                chapter=chapter_id,
                provenance="dot-parse",
            )
        )
        id_of[idx] = eid
    for src, dst, label in doc.edges:
        kind = EdgeType.TEMPORAL if label == "temporal" else EdgeType.HIERARCHICAL
        if kind == EdgeType.HIERARCHICAL:
            # a parsed parent supersedes the default chapter attachment
            g.remove_edge(chapter_id, id_of[dst], EdgeType.HIERARCHICAL)
        g.upsert_edge(Edge(id_of[src], id_of[dst], kind, 1.0))
    return finalize_schema(g)


# -- renderer-compatible export --------------------------------------


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graphviz(g: SchemaGraph) -> str:
    """Standard DOT for visualization: hierarchy styled apart from time."""
    lines = ["digraph schema {", "  rankdir=TB;"]
    for e in sorted(g.events.values(), key=lambda e: e.id):
        shape = "box" if e.is_chapter else "ellipse"
        lines.append(
            f"  {_quote(e.id)} [label={_quote(e.name)} shape={shape}];"
        )
    for e in sorted(g.edges.values(), key=lambda e: (e.kind.value, e.src, e.dst)):
        style = "color=blue" if e.kind == EdgeType.HIERARCHICAL else "color=black"
        lines.append(
            f"  {_quote(e.src)} -> {_quote(e.dst)} [{style} label={_quote(e.kind.value)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
