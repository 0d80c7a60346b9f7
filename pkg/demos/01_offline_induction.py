"""Induce a schema end to end without any network access.

The bundled ScriptedProvider is a deterministic stand-in for a live model:
it answers every prompt shape the pipeline emits from hashes of the prompt
text, so repeated runs produce the same schema.
"""

from schemakit import PipelineConfig, ScriptedProvider, induce

schema, trace = induce(
    "volcano eruption",
    None,  # no chapter spec: a single default chapter named after the scenario
    ScriptedProvider(),
    cfg=PipelineConfig(max_events_per_chapter=6),
)

print(f"scenario: {schema.scenario}")
print(f"{len(schema.events)} events, {len(schema.edges)} edges")
print()

for event in sorted(schema.events.values(), key=lambda e: e.id):
    marker = "[chapter]" if event.is_chapter else "         "
    print(f"{marker} {event.id}: {event.description}")

print()
print("stage activity:")
for stage in ("skeleton", "expansion", "validation", "verification"):
    print(f"  {stage}: {len(trace.for_stage(stage))} trace entries")

violations = schema.check_integrity()
print()
print("integrity violations:", violations or "none")
