"""Core schema data model: events, chapters, and typed event-event edges.

A schema is a graph of generalized events.  Temporal edges encode precedence
(src happens before dst) and hierarchical edges encode containment (src is the
parent of dst).  Chapters are top-level events grouping events that share a
theme; every non-chapter event hangs off a chapter through hierarchical edges.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional


class SchemaError(Exception):
    """Invalid mutation or malformed schema input."""


class EdgeType(str, Enum):
    TEMPORAL = "temporal"
    HIERARCHICAL = "hierarchical"


PROVENANCES = ("given-chapter", "skeleton", "expansion", "dot-parse")


@dataclass(frozen=True)
class Event:
    id: str
    name: str
    description: str
    is_chapter: bool = False
    chapter: Optional[str] = None
    provenance: str = "skeleton"

    def __post_init__(self):
        if not self.name:
            raise SchemaError("event name must be non-empty")
        if not self.description:
            raise SchemaError("event description must be non-empty")
        if self.provenance not in PROVENANCES:
            raise SchemaError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: EdgeType
    weight: float = 1.0

    def __post_init__(self):
        if self.src == self.dst:
            raise SchemaError(f"self-loop on {self.src!r}")
        if not 0.0 <= self.weight <= 1.0:
            raise SchemaError(f"edge weight {self.weight} outside [0,1]")


@dataclass(frozen=True)
class Violation:
    code: str  # temporal-cycle | orphan | multi-parent | dual-edge | no-chapter | hier-cycle
    message: str


@dataclass
class ChapterSpec:
    """Human-provided top-level chapter structure.

    ``chapters`` is a list of (name, description) pairs; ``edges`` lists
    (i, j) index pairs meaning chapter i temporally precedes chapter j.
    """

    chapters: list[tuple[str, str]]
    edges: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ChapterSpec":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        chapters = [
            (c["name"], c.get("description") or c["name"]) for c in raw["chapters"]
        ]
        edges = [tuple(e) for e in raw.get("edges", [])]
        return cls(chapters=chapters, edges=edges)


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    slug = _SLUG_RE.sub("-", name.lower()).strip("-")
    return slug or "event"


class SchemaGraph:
    """Mutable schema graph.  Single-writer; snapshots via :meth:`copy`."""

    def __init__(self, scenario: str):
        if not scenario:
            raise SchemaError("scenario must be non-empty")
        self.scenario = scenario
        self.events: dict[str, Event] = {}
        self.edges: dict[tuple[str, str, EdgeType], Edge] = {}

    # -- construction -------------------------------------------------

    def fresh_id(self, name: str) -> str:
        base = slugify(name)
        if base not in self.events:
            return base
        n = 2
        while f"{base}-{n}" in self.events:
            n += 1
        return f"{base}-{n}"

    def add_event(self, e: Event) -> str:
        if e.id in self.events:
            raise SchemaError(f"duplicate event id {e.id!r}")
        if not e.is_chapter:
            if e.chapter is None:
                raise SchemaError(f"non-chapter event {e.id!r} needs a chapter")
            owner = self.events.get(e.chapter)
            if owner is None or not owner.is_chapter:
                raise SchemaError(f"event {e.id!r} references missing chapter {e.chapter!r}")
        self.events[e.id] = e
        if not e.is_chapter:
            self.upsert_edge(Edge(e.chapter, e.id, EdgeType.HIERARCHICAL, 1.0))
        return e.id

    def upsert_edge(self, edge: Edge) -> None:
        for endpoint in (edge.src, edge.dst):
            if endpoint not in self.events:
                raise SchemaError(f"edge endpoint {endpoint!r} not in schema")
        self.edges[(edge.src, edge.dst, edge.kind)] = edge

    def remove_edge(self, src: str, dst: str, kind: EdgeType) -> None:
        self.edges.pop((src, dst, kind), None)

    def copy(self) -> "SchemaGraph":
        g = SchemaGraph(self.scenario)
        g.events = dict(self.events)
        g.edges = dict(self.edges)
        return g

    # -- views --------------------------------------------------------

    def chapter_events(self) -> list[Event]:
        return [e for e in self.events.values() if e.is_chapter]

    def members(self, chapter_id: str) -> list[Event]:
        """Non-chapter events directly assigned to a chapter, sorted by id."""
        out = [
            e
            for e in self.events.values()
            if not e.is_chapter and e.chapter == chapter_id
        ]
        return sorted(out, key=lambda e: e.id)

    def edges_of_kind(self, kind: EdgeType) -> list[Edge]:
        return [e for e in self.edges.values() if e.kind == kind]

    def edge(self, src: str, dst: str, kind: EdgeType) -> Optional[Edge]:
        return self.edges.get((src, dst, kind))

    def edges_between(self, a: str, b: str) -> list[Edge]:
        """All edges between a and b in either direction, any kind."""
        out = []
        for kind in EdgeType:
            for src, dst in ((a, b), (b, a)):
                e = self.edges.get((src, dst, kind))
                if e is not None:
                    out.append(e)
        return out

    # -- integrity ----------------------------------------------------

    def check_integrity(self) -> list[Violation]:
        violations: list[Violation] = []
        chapters = {e.id for e in self.events.values() if e.is_chapter}
        if not chapters:
            violations.append(Violation("no-chapter", "schema has no chapter event"))

        # per-group temporal acyclicity (chapter events form their own group)
        groups: dict[Optional[str], set[str]] = {}
        for e in self.events.values():
            key = None if e.is_chapter else e.chapter
            groups.setdefault(key, set()).add(e.id)
        for key, nodes in sorted(groups.items(), key=lambda kv: str(kv[0])):
            cyc = _find_cycle(
                nodes,
                [
                    (e.src, e.dst)
                    for e in self.edges_of_kind(EdgeType.TEMPORAL)
                    if e.src in nodes and e.dst in nodes
                ],
            )
            if cyc:
                where = "chapter-level" if key is None else f"chapter {key!r}"
                violations.append(
                    Violation("temporal-cycle", f"temporal cycle {' -> '.join(cyc)} in {where}")
                )

        # hierarchical forest rooted at chapters
        hier = self.edges_of_kind(EdgeType.HIERARCHICAL)
        parents: dict[str, list[str]] = {}
        for e in hier:
            parents.setdefault(e.dst, []).append(e.src)
        hcyc = _find_cycle(set(self.events), [(e.src, e.dst) for e in hier])
        if hcyc:
            violations.append(
                Violation("hier-cycle", f"hierarchical cycle {' -> '.join(hcyc)}")
            )
        for e in sorted(self.events.values(), key=lambda e: e.id):
            if e.is_chapter:
                continue
            ps = parents.get(e.id, [])
            if len(ps) > 1:
                violations.append(
                    Violation(
                        "multi-parent",
                        f"event {e.id!r} has {len(ps)} hierarchical parents: {sorted(ps)}",
                    )
                )
            if not hcyc and not _descends_from_chapter(e.id, parents, chapters):
                violations.append(
                    Violation("orphan", f"event {e.id!r} has no chapter ancestor")
                )

        # a pair may not carry both edge kinds
        seen_pairs = set()
        for (src, dst, kind) in sorted(self.edges, key=lambda k: (k[0], k[1], k[2].value)):
            other = EdgeType.HIERARCHICAL if kind == EdgeType.TEMPORAL else EdgeType.TEMPORAL
            if (src, dst, other) in self.edges and (src, dst) not in seen_pairs:
                seen_pairs.add((src, dst))
                violations.append(
                    Violation("dual-edge", f"pair ({src!r}, {dst!r}) carries both edge kinds")
                )
        return violations

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        events = []
        for e in sorted(self.events.values(), key=lambda e: e.id):
            rec = {
                "id": e.id,
                "name": e.name,
                "description": e.description,
                "is_chapter": e.is_chapter,
            }
            if e.chapter is not None:
                rec["chapter"] = e.chapter
            rec["provenance"] = e.provenance
            events.append(rec)
        edges = [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value, "weight": e.weight}
            for e in sorted(
                self.edges.values(), key=lambda e: (e.kind.value, e.src, e.dst)
            )
        ]
        return {"scenario": self.scenario, "events": events, "edges": edges}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_dict(cls, raw: dict) -> "SchemaGraph":
        g = cls(raw["scenario"])
        for rec in raw["events"]:
            g.events[rec["id"]] = Event(
                id=rec["id"],
                name=rec["name"],
                description=rec["description"],
                is_chapter=rec.get("is_chapter", False),
                chapter=rec.get("chapter"),
                provenance=rec.get("provenance", "skeleton"),
            )
        for rec in raw["edges"]:
            g.upsert_edge(
                Edge(rec["src"], rec["dst"], EdgeType(rec["kind"]), rec.get("weight", 1.0))
            )
        return g

    @classmethod
    def load(cls, path: str | Path) -> "SchemaGraph":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def new_schema(scenario: str, chapters: Optional[ChapterSpec] = None) -> SchemaGraph:
    """Create a schema seeded with the given chapter structure.

    With no chapters, a single chapter is created from the scenario name.
    """
    g = SchemaGraph(scenario)
    if chapters is None:
        cid = g.fresh_id(scenario)
        g.add_event(
            Event(cid, scenario, scenario, is_chapter=True, provenance="given-chapter")
        )
        return g

    seen_names = set()
    ids = []
    for name, description in chapters.chapters:
        key = name.strip().lower()
        if key in seen_names:
            raise SchemaError(f"duplicate chapter name {name!r}")
        seen_names.add(key)
        cid = g.fresh_id(name)
        g.add_event(
            Event(cid, name, description, is_chapter=True, provenance="given-chapter")
        )
        ids.append(cid)
    for i, j in chapters.edges:
        if not (0 <= i < len(ids) and 0 <= j < len(ids)):
            raise SchemaError(f"chapter edge ({i}, {j}) out of range")
        g.upsert_edge(Edge(ids[i], ids[j], EdgeType.TEMPORAL, 1.0))
    return g


# -- helpers ---------------------------------------------------------


def _find_cycle(nodes: set[str], arcs: Iterable[tuple[str, str]]) -> Optional[list[str]]:
    """Return one directed cycle as a vertex list, or None if acyclic."""
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in arcs:
        succ[u].append(v)
    color = {n: 0 for n in nodes}  # 0 white, 1 on stack, 2 done
    stack: list[str] = []

    def dfs(u: str) -> Optional[list[str]]:
        color[u] = 1
        stack.append(u)
        for v in sorted(succ[u]):
            if color[v] == 1:
                return stack[stack.index(v):] + [v]
            if color[v] == 0:
                found = dfs(v)
                if found:
                    return found
        stack.pop()
        color[u] = 2
        return None

    for n in sorted(nodes):
        if color[n] == 0:
            found = dfs(n)
            if found:
                return found
    return None


def _descends_from_chapter(
    eid: str, parents: dict[str, list[str]], chapters: set[str]
) -> bool:
    seen = set()
    frontier = [eid]
    while frontier:
        cur = frontier.pop()
        if cur in seen:
            continue
        seen.add(cur)
        for p in parents.get(cur, []):
            if p in chapters:
                return True
            frontier.append(p)
    return False
