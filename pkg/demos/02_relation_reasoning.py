"""How a pair of events gets its edge.

Each pair is decomposed into three questions: does A start before B, does A
end before B, and is A's duration longer?  Each question is asked in
several phrasings and orderings; the averaged supporting mass is pushed
through interval-algebra predicates to pick a single relation.
"""

from schemakit import PairRelation, RelationScores, edge_weight, resolve

# Crisp evidence first.  "A starts before B and ends before B" is plain
# temporal precedence:
s = RelationScores(start_before=1.0, end_before=1.0, duration_longer=0.0)
print("starts before + ends before        ->", resolve(s).value)

# "A starts after B but ends before it, and is shorter": A happens inside B.
s = RelationScores(start_before=0.0, end_before=1.0, duration_longer=0.0)
print("starts after, ends before, shorter ->", resolve(s).value)

# Partial overlap gets no edge at all: the schema only keeps clean
# precedence and containment.
s = RelationScores(start_before=1.0, end_before=0.0, duration_longer=0.0)
print("staggered overlap                  ->", resolve(s).value)

print()

# Soft evidence.  Supporting masses are probabilities, thresholded at 0.2
# for start/end and 0.7 for duration; the surviving row with the largest
# product of masses wins.
s = RelationScores(start_before=0.85, end_before=0.9, duration_longer=0.4)
relation = resolve(s)
print(f"soft scores {s.start_before}/{s.end_before}/{s.duration_longer}:")
print(f"  relation    = {relation.value}")
print(f"  edge weight = {edge_weight(s, relation):.3f}")

# Swapping the pair mirrors the decision exactly: if A is before B, then
# B is after A, never anything else.
print(f"  swapped     = {resolve(s.swapped()).value}")
assert resolve(s.swapped()) == PairRelation.AFTER
