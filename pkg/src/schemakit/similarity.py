"""String and embedding similarity primitives.

Backs the duplicate-event filter in the induction pipeline and the soft
event matching used by the evaluation metrics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np


class EmbeddingError(Exception):
    """The embedding provider failed."""


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


def jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(len(a), len(b)) // 2 - 1
    window = max(window, 0)
    match_a = [False] * len(a)
    match_b = [False] * len(b)
    matches = 0
    for i, ca in enumerate(a):
        lo = max(0, i - window)
        hi = min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not match_b[j] and b[j] == ca:
                match_a[i] = True
                match_b[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    # transpositions: compare matched characters in order
    bs = [c for c, m in zip(b, match_b) if m]
    transpositions = sum(
        1 for ca, cb in zip((c for c, m in zip(a, match_a) if m), bs) if ca != cb
    )
    t = transpositions / 2
    m = matches
    return (m / len(a) + m / len(b) + (m - t) / m) / 3


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    """Jaro similarity boosted for common prefixes (standard Winkler variant)."""
    j = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a, b):
        if ca != cb or prefix == max_prefix:
            break
        prefix += 1
    return j + prefix * prefix_scale * (1 - j)


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character insertions, deletions, substitutions."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


class TrigramEmbedder:
    """Deterministic fallback embedder: hashed character trigrams, unit norm.

    Stands in for a sentence-embedding model so the full pipeline and the
    test suite run with no external service.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        padded = f"  {text.lower().strip()}  "
        vec = np.zeros(self.dim)
        for i in range(len(padded) - 2):
            tri = padded[i : i + 3]
            h = hashlib.md5(tri.encode("utf-8")).digest()
            idx = int.from_bytes(h[:4], "big") % self.dim
            sign = 1.0 if h[4] % 2 == 0 else -1.0
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm == 0:
            vec[0] = 1.0
            norm = 1.0
        return vec / norm


class HttpEmbedder:
    """Remote embedder: POST {"texts": [...]} -> {"vectors": [[...]]}."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        import requests

        try:
            resp = requests.post(
                self.endpoint, json={"texts": [text]}, timeout=self.timeout
            )
            resp.raise_for_status()
            vec = np.asarray(resp.json()["vectors"][0], dtype=float)
        except Exception as exc:  # surface as a distinct error type
            raise EmbeddingError(str(exc)) from exc
        norm = np.linalg.norm(vec)
        return vec / norm if norm else vec


@dataclass(frozen=True)
class DuplicateThresholds:
    jaro_winkler: float = 0.9
    cosine: float = 0.85
    name_edit_distance: int = 3  # names closer than this are duplicates


@dataclass(frozen=True)
class SimilarityVerdict:
    jaro_winkler: float
    cosine: float
    edit_distance: int
    is_duplicate: bool


def duplicate_verdict(
    candidate_name: str,
    candidate_description: str,
    existing_name: str,
    existing_description: str,
    provider: EmbeddingProvider,
    thresholds: DuplicateThresholds = DuplicateThresholds(),
) -> SimilarityVerdict:
    """Decide whether two events describe the same thing.

    Comparison is case-insensitive.  A pair is a duplicate when either the
    descriptions or names are close by Jaro-Winkler, the description
    embeddings are close by cosine, or the names are within the edit
    distance cutoff.
    """
    cn, cd = candidate_name.lower(), candidate_description.lower()
    en, ed = existing_name.lower(), existing_description.lower()
    jw = max(jaro_winkler(cd, ed), jaro_winkler(cn, en))
    try:
        cos = cosine(provider.embed(cd), provider.embed(ed))
    except EmbeddingError:
        raise
    except Exception as exc:
        raise EmbeddingError(str(exc)) from exc
    dist = levenshtein(cn, en)
    dup = (
        jw >= thresholds.jaro_winkler
        or cos >= thresholds.cosine
        or dist < thresholds.name_edit_distance
    )
    return SimilarityVerdict(jaro_winkler=jw, cosine=cos, edit_distance=dist, is_duplicate=dup)
