"""Passage corpus ingestion and retrieval-augmented prompt assembly.

Documents are split into 5-sentence windows with a 1-sentence overlap and
indexed for lexical BM25 search.  A dense scorer can be plugged in through
any embedding provider; the neural retriever itself is out of scope.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .similarity import EmbeddingProvider, cosine

WINDOW = 5
STRIDE = WINDOW - 1  # 1-sentence overlap
MIN_DOC_SENTENCES = 4


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class Passage:
    id: str
    doc_id: str
    text: str
    sentence_span: tuple[int, int]  # [start, end) sentence indices in the doc


_SENT_RE = re.compile(r"(?<=[.!?])\s+")
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENT_RE.split(text.strip()) if s.strip()]


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def window_spans(n_sentences: int) -> list[tuple[int, int]]:
    """Start/end sentence indices of overlapping windows over a document."""
    if n_sentences < MIN_DOC_SENTENCES:
        return []
    spans = []
    start = 0
    while True:
        end = min(start + WINDOW, n_sentences)
        spans.append((start, end))
        if end >= n_sentences:
            break
        start += STRIDE
    return spans


class PassageIndex:
    """Immutable BM25 index over 5-sentence passages."""

    def __init__(self, passages: list[Passage], k1: float = 1.2, b: float = 0.75):
        self.passages = list(passages)
        self.k1 = k1
        self.b = b
        self._tf: list[Counter] = [Counter(_tokenize(p.text)) for p in self.passages]
        self._lengths = [sum(tf.values()) for tf in self._tf]
        self._avg_len = (sum(self._lengths) / len(self._lengths)) if self.passages else 0.0
        self._df: Counter = Counter()
        for tf in self._tf:
            self._df.update(tf.keys())

    def __len__(self) -> int:
        return len(self.passages)

    def _idf(self, term: str) -> float:
        n = len(self.passages)
        df = self._df.get(term, 0)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def _bm25(self, query_terms: list[str], i: int) -> float:
        score = 0.0
        tf = self._tf[i]
        length = self._lengths[i]
        for term in query_terms:
            f = tf.get(term, 0)
            if not f:
                continue
            denom = f + self.k1 * (1 - self.b + self.b * length / self._avg_len)
            score += self._idf(term) * f * (self.k1 + 1) / denom
        return score

    def search(
        self,
        query: str,
        k: int = 3,
        embedder: Optional[EmbeddingProvider] = None,
    ) -> list[tuple[Passage, float]]:
        """Top-k passages by descending score; ties broken by passage id.

        With an embedder, scores are cosine similarities of passage and
        query embeddings instead of BM25.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.passages:
            return []
        if embedder is not None:
            qv = embedder.embed(query)
            scored = [
                (p, cosine(qv, embedder.embed(p.text))) for p in self.passages
            ]
        else:
            terms = _tokenize(query)
            scored = [
                (p, self._bm25(terms, i)) for i, p in enumerate(self.passages)
            ]
            scored = [(p, s) for p, s in scored if s > 0]
        scored.sort(key=lambda ps: (-ps[1], ps[0].id))
        return scored[:k]


def ingest(corpus: str | Path) -> PassageIndex:
    """Build a passage index from a JSONL corpus of {doc_id, text} records.

    Documents with fewer than 4 sentences are skipped.
    """
    passages: list[Passage] = []
    with Path(corpus).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id = rec["doc_id"]
                text = rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"malformed corpus line {lineno}: {exc}") from exc
            sentences = split_sentences(text)
            for start, end in window_spans(len(sentences)):
                passages.append(
                    Passage(
                        id=f"{doc_id}:{start}-{end}",
                        doc_id=doc_id,
                        text=" ".join(sentences[start:end]),
                        sentence_span=(start, end),
                    )
                )
    return PassageIndex(passages)


def augment_prompt(passages: list[Passage], prompt: str) -> str:
    """Prefix a prompt with retrieved passages; no passages leaves it unchanged."""
    if not passages:
        return prompt
    joined = "\n\n".join(p.text for p in passages)
    return f"Based on the following passages {joined},\n{prompt}"
