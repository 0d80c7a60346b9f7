"""Repairing a raw scored graph into a clean schema.

Pairwise scoring can produce cycles and redundant shortcuts.  The repair
pass orders the vertices with a greedy weighted feedback-arc-set
heuristic, deletes ordering-violating edges, and transitively reduces what
remains.
"""

from schemakit import greedy_fas_ordering, remove_feedback_edges, transitive_reduce

# A 3-cycle with one weak link: preparation -> drill -> review, but the
# model also weakly claimed review precedes preparation.
arcs = {
    ("preparation", "drill"): 0.9,
    ("drill", "review"): 0.8,
    ("review", "preparation"): 0.3,
}
nodes = ["preparation", "drill", "review"]

ordering = greedy_fas_ordering(nodes, arcs)
kept, removed = remove_feedback_edges(arcs, ordering)
print("ordering:", " -> ".join(ordering))
print("removed :", removed)  # the lightest edge of the cycle, weight 0.3
print()

# Transitive reduction strips shortcuts the chain already implies.
chain = {
    ("preparation", "drill"): 0.9,
    ("drill", "review"): 0.8,
    ("preparation", "review"): 0.7,  # implied by the other two
}
reduced = transitive_reduce(nodes, chain)
print("before reduction:", sorted(chain))
print("after reduction :", sorted(reduced))
