"""The single-pass DOT baseline, and exporting schemas for rendering.

Instead of the incremental pipeline, the baseline asks for the entire
schema in one completion, formatted as an indexed event list plus
``i->j[label='temporal']`` edge lines taught by one in-context example.
Parsing is tolerant: malformed lines become warnings, not failures.
"""

from schemakit import (
    CompletionRequest,
    ScriptedProvider,
    dot_to_schema,
    export_graphviz,
    parse_dot,
    render_dot_prompt,
)

prompt = render_dot_prompt("train derailment")
print("--- prompt tail ---")
print("\n".join(prompt.splitlines()[-3:]))
print()

resp = ScriptedProvider().complete(CompletionRequest(prompt=prompt, max_tokens=1024))
print("--- raw completion ---")
print(resp.text)
print()

doc = parse_dot(resp.text, "train derailment")
for warning in doc.warnings:
    print("warning:", warning)

schema = dot_to_schema(doc, "train derailment")
print(f"--- parsed schema: {len(schema.events)} events ---")
print(export_graphviz(schema))
