"""BM25 retrieval over review text.

Two unsupervised term-based rankers share one inverted index structure:
the item-centric ranker scores one pseudo-document per item (all of the
item's reviews concatenated), the review-centric ranker scores reviews
individually and sums the scores of each item's reviews.
"""

from __future__ import annotations

import math
import pickle
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ReviewStore, SoftAttribute

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_CACHE_MAGIC = "softattr-index-cache"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters (no stemming)."""
    return _TOKEN_RE.findall(text.lower())


class IndexMode(Enum):
    ITEM_DOCS = "item_docs"
    REVIEW_DOCS = "review_docs"


@dataclass(frozen=True)
class ScoredList:
    """Items sorted by descending score, lexicographic id tie-break."""

    attribute_id: str
    entries: tuple[tuple[str, float], ...]
    method: str = ""

    @classmethod
    def from_scores(cls, attribute_id: str, scores: Mapping[str, float],
                    method: str = "") -> "ScoredList":
        ordered = sorted(scores.items(), key=lambda e: (-e[1], e[0]))
        return cls(attribute_id=attribute_id, entries=tuple(ordered), method=method)

    def __len__(self) -> int:
        return len(self.entries)

    def score_of(self, item_id: str, default: float = 0.0) -> float:
        return self.as_dict().get(item_id, default)

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    def item_ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]

    def top(self, k: int) -> tuple[tuple[str, float], ...]:
        return self.entries[:k]


@dataclass
class InvertedIndex:
    mode: IndexMode
    postings: dict[str, list[tuple[str, int]]]   # term -> [(doc_id, tf)], sorted by doc_id
    doc_lengths: dict[str, int]
    doc_items: dict[str, str]                    # doc_id -> item_id
    avg_doc_length: float
    doc_count: int

    def item_ids(self) -> list[str]:
        return sorted(set(self.doc_items.values()))


def build_index(reviews: ReviewStore, mode: IndexMode) -> InvertedIndex:
    """Index reviews either as one pseudo-document per item or per review."""
    docs: dict[str, list[str]] = {}
    doc_items: dict[str, str] = {}
    if mode is IndexMode.ITEM_DOCS:
        merged: dict[str, list[str]] = defaultdict(list)
        for review in reviews:
            merged[review.item_id].extend(tokenize(review.text))
        for item_id, tokens in merged.items():
            docs[item_id] = tokens
            doc_items[item_id] = item_id
    else:
        for review in reviews:
            docs[review.id] = tokenize(review.text)
            doc_items[review.id] = review.item_id

    postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
    doc_lengths: dict[str, int] = {}
    for doc_id in sorted(docs):
        tokens = docs[doc_id]
        doc_lengths[doc_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings[term].append((doc_id, tf))

    doc_count = len(docs)
    avg = (sum(doc_lengths.values()) / doc_count) if doc_count else 0.0
    return InvertedIndex(mode=mode, postings=dict(postings), doc_lengths=doc_lengths,
                         doc_items=doc_items, avg_doc_length=avg, doc_count=doc_count)


def _idf(index: InvertedIndex, term: str) -> float:
    # Non-negative IDF variant so very common terms cannot go below zero.
    n_t = len(index.postings.get(term, ()))
    return math.log((index.doc_count - n_t + 0.5) / (n_t + 0.5) + 1.0)


def bm25_doc_scores(index: InvertedIndex, query_terms: Sequence[str],
                    k1: float = BM25_K1, b: float = BM25_B) -> dict[str, float]:
    """BM25 score of every document that matches at least one query term."""
    scores: dict[str, float] = defaultdict(float)
    for term in query_terms:
        postings = index.postings.get(term)
        if not postings:
            continue
        idf = _idf(index, term)
        for doc_id, tf in postings:
            norm = k1 * (1.0 - b + b * index.doc_lengths[doc_id] / index.avg_doc_length)
            scores[doc_id] += idf * tf * (k1 + 1.0) / (tf + norm)
    return dict(scores)


def _attribute_id(attribute: SoftAttribute | str) -> tuple[str, str]:
    if isinstance(attribute, SoftAttribute):
        return attribute.id, attribute.phrase
    return attribute, attribute


def score_item_centric(attribute: SoftAttribute | str, index: InvertedIndex,
                       item_ids: Iterable[str] | None = None) -> ScoredList:
    """Score items by BM25 of their concatenated-review pseudo-document
    against the attribute phrase.  Items without reviews score 0."""
    if index.mode is not IndexMode.ITEM_DOCS:
        raise ValueError("item-centric scoring requires an ITEM_DOCS index")
    attr_id, phrase = _attribute_id(attribute)
    doc_scores = bm25_doc_scores(index, tokenize(phrase))
    universe = list(item_ids) if item_ids is not None else index.item_ids()
    scores = {item_id: doc_scores.get(item_id, 0.0) for item_id in universe}
    return ScoredList.from_scores(attr_id, scores, method="tb-ic")


def score_review_centric(attribute: SoftAttribute | str, index: InvertedIndex,
                         item_ids: Iterable[str] | None = None) -> ScoredList:
    """Score items by the sum of their individual reviews' BM25 scores."""
    if index.mode is not IndexMode.REVIEW_DOCS:
        raise ValueError("review-centric scoring requires a REVIEW_DOCS index")
    attr_id, phrase = _attribute_id(attribute)
    doc_scores = bm25_doc_scores(index, tokenize(phrase))
    per_item: dict[str, float] = defaultdict(float)
    for doc_id, score in doc_scores.items():
        per_item[index.doc_items[doc_id]] += score
    universe = list(item_ids) if item_ids is not None else index.item_ids()
    scores = {item_id: per_item.get(item_id, 0.0) for item_id in universe}
    return ScoredList.from_scores(attr_id, scores, method="tb-rc")


# ---------------------------------------------------------------------------
# Optional on-disk cache (unversioned format: regenerate on any mismatch)
# ---------------------------------------------------------------------------

def save_index(index: InvertedIndex, path: str | Path) -> None:
    with open(path, "wb") as f:
        pickle.dump({"magic": _CACHE_MAGIC, "index": index}, f)


def load_index(path: str | Path, mode: IndexMode) -> InvertedIndex | None:
    """Load a cached index; returns None when missing, stale, or unreadable."""
    try:
        with open(path, "rb") as f:
            payload = pickle.load(f)
        if payload.get("magic") != _CACHE_MAGIC:
            return None
        index = payload["index"]
        if not isinstance(index, InvertedIndex) or index.mode is not mode:
            return None
        return index
    except Exception:
        return None
