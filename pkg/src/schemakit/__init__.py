"""Event schema induction through incremental prompting and verification."""

__version__ = "0.1.0"

from .graph import (
    ChapterSpec,
    Edge,
    EdgeType,
    Event,
    SchemaGraph,
    SchemaError,
    Violation,
    new_schema,
)
from .gateway import (
    CompletionRequest,
    CompletionResponse,
    FixtureProvider,
    HttpProvider,
    RecordingProvider,
)
from .offline import ScriptedProvider
from .pipeline import PipelineConfig, StageTrace, induce
from .prompts import TemplateLibrary, parse_event_list, parse_yes_no
from .relations import PairRelation, RelationScores, edge_weight, resolve, score_pair
from .finalize import (
    complete_connectivity,
    finalize_schema,
    greedy_fas_ordering,
    remove_feedback_edges,
    transitive_reduce,
)
from .metrics import MetricReport, evaluate, event_f1, match_events, relation_f1
from .retrieval import PassageIndex, augment_prompt, ingest
from .similarity import (
    DuplicateThresholds,
    TrigramEmbedder,
    cosine,
    duplicate_verdict,
    jaro_winkler,
    levenshtein,
)
from .dotio import DotDocument, dot_to_schema, export_graphviz, parse_dot, render_dot_prompt

__all__ = [
    "ChapterSpec",
    "CompletionRequest",
    "CompletionResponse",
    "DotDocument",
    "DuplicateThresholds",
    "Edge",
    "EdgeType",
    "Event",
    "FixtureProvider",
    "HttpProvider",
    "MetricReport",
    "PairRelation",
    "PassageIndex",
    "PipelineConfig",
    "RecordingProvider",
    "RelationScores",
    "SchemaError",
    "SchemaGraph",
    "ScriptedProvider",
    "StageTrace",
    "TemplateLibrary",
    "TrigramEmbedder",
    "Violation",
    "augment_prompt",
    "complete_connectivity",
    "cosine",
    "dot_to_schema",
    "duplicate_verdict",
    "edge_weight",
    "evaluate",
    "event_f1",
    "export_graphviz",
    "finalize_schema",
    "greedy_fas_ordering",
    "induce",
    "ingest",
    "jaro_winkler",
    "levenshtein",
    "match_events",
    "new_schema",
    "parse_dot",
    "parse_event_list",
    "parse_yes_no",
    "relation_f1",
    "remove_feedback_edges",
    "render_dot_prompt",
    "resolve",
    "score_pair",
    "transitive_reduce",
]
