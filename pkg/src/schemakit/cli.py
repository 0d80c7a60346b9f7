"""Command-line entry point.

Subcommands: induce, baseline-dot, eval, export-dot, ingest-corpus.
Settings resolve as CLI flag > config file (TOML or JSON) > built-in
defaults.  Exactly one completion provider mode must be active: an HTTP
endpoint, fixture replay, or the offline scripted model.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import click

from . import __version__
from .dotio import bundled_example, dot_to_schema, export_graphviz, parse_dot, render_dot_prompt, DotParseError
from .gateway import CompletionRequest, FixtureProvider, HttpProvider, RecordingProvider
from .graph import ChapterSpec, SchemaGraph
from .metrics import evaluate, write_pairs_csv
from .offline import ScriptedProvider
from .pipeline import PipelineConfig, StageError, induce
from .prompts import TemplateLibrary
from .retrieval import ingest
from .similarity import DuplicateThresholds


class ConfigError(click.ClickException):
    pass


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".toml":
        return tomllib.loads(p.read_text(encoding="utf-8"))
    return json.loads(p.read_text(encoding="utf-8"))


def _setting(cli_value, config: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    cur = config
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def _build_provider(config, http_base, model, fixtures, offline, record):
    modes = [m for m, active in (
        ("http", bool(http_base)),
        ("fixtures", bool(fixtures)),
        ("offline", offline),
    ) if active]
    if len(modes) != 1:
        raise ConfigError(
            "exactly one provider mode required: --http-base, --fixtures, or --offline"
        )
    mode = modes[0]
    if mode == "http":
        provider = HttpProvider(
            base_url=http_base,
            model=_setting(model, config, "provider.model", "text-davinci-003"),
            rpm=_setting(None, config, "provider.rpm", None),
        )
    elif mode == "fixtures":
        if not Path(fixtures).exists():
            raise ConfigError(f"fixture store not found: {fixtures}")
        provider = FixtureProvider(fixtures)
    else:
        provider = ScriptedProvider()
    if record:
        provider = RecordingProvider(provider, record)
    return provider


def _pipeline_config(config: dict, jobs, retrieval_mode) -> PipelineConfig:
    dup = DuplicateThresholds(
        jaro_winkler=_setting(None, config, "duplicate.jaro_winkler", 0.9),
        cosine=_setting(None, config, "duplicate.cosine", 0.85),
        name_edit_distance=_setting(None, config, "duplicate.name_edit_distance", 3),
    )
    retrieval_on = retrieval_mode != "off"
    return PipelineConfig(
        min_events_per_chapter=_setting(None, config, "pipeline.min_events_per_chapter", 3),
        max_events_per_chapter=_setting(None, config, "pipeline.max_events_per_chapter", 10),
        max_resamples=_setting(None, config, "pipeline.max_resamples", 5),
        retrieval_skeleton=retrieval_on
        and _setting(None, config, "retrieval.skeleton", True),
        retrieval_expansion=retrieval_on
        and _setting(None, config, "retrieval.expansion", True),
        retrieval_k=_setting(None, config, "retrieval.k", 3),
        duplicate=dup,
        start_end_threshold=_setting(None, config, "relation.start_end_threshold", 0.2),
        duration_threshold=_setting(None, config, "relation.duration_threshold", 0.7),
        jobs=jobs or _setting(None, config, "pipeline.jobs", 1),
    )


provider_options = [
    click.option("--http-base", help="HTTP completion endpoint base URL (API key from SCHEMAKIT_API_KEY)."),
    click.option("--model", help="Model name for the HTTP provider [default: text-davinci-003]."),
    click.option("--fixtures", type=click.Path(), help="Replay responses from this JSONL fixture store."),
    click.option("--offline", is_flag=True, help="Use the bundled deterministic scripted model."),
    click.option("--record", type=click.Path(), help="Append live responses to this JSONL store."),
]


def with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
@click.version_option(__version__)
def main():
    """Induce, evaluate, and export event schemas."""


@main.command()
@click.argument("scenario")
@click.option("--chapter-spec", type=click.Path(), help="Chapter structure JSON ({chapters:[{name,description}], edges:[[i,j]]}).")
@click.option("--corpus", type=click.Path(), help="Passage corpus JSONL ({doc_id, text} per line).")
@click.option("--retrieval", type=click.Choice(["off", "lexical", "dense"]), default="lexical",
              show_default=True, help="Retrieval-augmentation mode for prompts.")
@click.option("--k", type=int, default=3, show_default=True, help="Passages per retrieval query.")
@click.option("--templates", "templates_dir", type=click.Path(), help="Directory of template overrides.")
@click.option("--jobs", type=int, default=None, help="Concurrent relation-scoring calls [default: 1].")
@click.option("--config", "config_path", type=click.Path(), help="TOML/JSON config file.")
@click.option("--out", type=click.Path(), default=".", show_default=True, help="Output directory.")
@with_options(provider_options)
def induce_cmd(scenario, chapter_spec, corpus, retrieval, k, templates_dir, jobs,
               config_path, out, http_base, model, fixtures, offline, record):
    """Induce a schema for SCENARIO (writes schema.json, trace.jsonl, schema.dot)."""
    config = _load_config_file(config_path)
    provider = _build_provider(config, http_base, model, fixtures, offline, record)
    cfg = _pipeline_config(config, jobs, retrieval)
    cfg.retrieval_k = k

    chapters = None
    if chapter_spec:
        if not Path(chapter_spec).exists():
            raise ConfigError(f"chapter spec not found: {chapter_spec}")
        chapters = ChapterSpec.from_json_file(chapter_spec)
    retriever = None
    if corpus and retrieval != "off":
        retriever = ingest(corpus)
    templates = TemplateLibrary(templates_dir)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        schema, trace = induce(
            scenario, chapters, provider, retriever=retriever, templates=templates, cfg=cfg
        )
    except StageError as exc:
        click.echo(f"induction failed at stage {exc.stage}: {exc}", err=True)
        sys.exit(1)
    schema.save(out_dir / "schema.json")
    trace.dump_jsonl(out_dir / "trace.jsonl")
    (out_dir / "schema.dot").write_text(export_graphviz(schema), encoding="utf-8")
    click.echo(f"wrote {out_dir / 'schema.json'} ({len(schema.events)} events, {len(schema.edges)} edges)")


main.add_command(induce_cmd, name="induce")


@main.command("baseline-dot")
@click.argument("scenario")
@click.option("--chapter-spec", type=click.Path(), help="Chapter structure JSON; names become seed events.")
@click.option("--config", "config_path", type=click.Path(), help="TOML/JSON config file.")
@click.option("--out", type=click.Path(), default=".", show_default=True, help="Output directory.")
@with_options(provider_options)
def baseline_dot(scenario, chapter_spec, config_path, out, http_base, model, fixtures, offline, record):
    """Single-pass baseline: one prompt generates the whole schema as DOT."""
    config = _load_config_file(config_path)
    provider = _build_provider(config, http_base, model, fixtures, offline, record)
    chapters = ChapterSpec.from_json_file(chapter_spec) if chapter_spec else None
    prompt = render_dot_prompt(scenario, chapters, bundled_example())
    resp = provider.complete(CompletionRequest(prompt=prompt, max_tokens=1024))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "baseline_raw.txt").write_text(resp.text, encoding="utf-8")
    try:
        doc = parse_dot(resp.text, scenario)
    except DotParseError as exc:
        click.echo(f"baseline completion unparseable: {exc} (raw text saved)", err=True)
        sys.exit(1)
    schema = dot_to_schema(doc, scenario)
    schema.save(out_dir / "baseline_schema.json")
    for warning in doc.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"wrote {out_dir / 'baseline_schema.json'} ({len(schema.events)} events)")


@main.command("eval")
@click.argument("pred", type=click.Path())
@click.argument("gold", type=click.Path())
@click.option("--match-threshold", type=float, default=0.0, show_default=True,
              help="Zero out matched pairs below this similarity.")
@click.option("--out", type=click.Path(), default=".", show_default=True, help="Output directory.")
def eval_cmd(pred, gold, match_threshold, out):
    """Event F1 and Relation F1 of a predicted schema against a gold schema."""
    for path in (pred, gold):
        if not Path(path).exists():
            raise ConfigError(f"schema file not found: {path}")
    pred_schema = SchemaGraph.load(pred)
    gold_schema = SchemaGraph.load(gold)
    report, matching = evaluate(pred_schema, gold_schema, match_threshold=match_threshold)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(report.to_json(), encoding="utf-8")
    write_pairs_csv(matching, out_dir / "matched_pairs.csv")
    click.echo(report.to_json(), nl=False)


@main.command("export-dot")
@click.argument("schema", type=click.Path())
@click.option("--out", type=click.Path(), help="Output file [default: stdout].")
def export_dot(schema, out):
    """Export a schema JSON file as renderer-compatible DOT."""
    if not Path(schema).exists():
        raise ConfigError(f"schema file not found: {schema}")
    text = export_graphviz(SchemaGraph.load(schema))
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command("ingest-corpus")
@click.argument("corpus", type=click.Path())
def ingest_corpus(corpus):
    """Check a corpus file and report its passage count."""
    if not Path(corpus).exists():
        raise ConfigError(f"corpus file not found: {corpus}")
    index = ingest(corpus)
    docs = len({p.doc_id for p in index.passages})
    click.echo(f"{docs} documents -> {len(index)} passages")


if __name__ == "__main__":
    main()
