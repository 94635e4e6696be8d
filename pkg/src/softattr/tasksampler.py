"""Debiased generation of three-bucket annotation tasks.

A rater's seen items are sorted by each term-based baseline and split
into score bins.  Anchors come only from items interior to both binnings
(extreme items would starve one side of the comparison) and are drawn
with probability proportional to how many raters have seen them.
Candidates are a stratified sample: one popularity-weighted draw from
every bin of every baseline, without replacement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .textrank import ScoredList

BASELINE_ITEM_CENTRIC = "tb-ic"
BASELINE_REVIEW_CENTRIC = "tb-rc"
DEFAULT_BINS = 5
TARGET_CANDIDATES = 10
MIN_CANDIDATES = 2


class SamplerError(ValueError):
    """No task can be generated for this (rater, attribute)."""


@dataclass(frozen=True)
class SeenSet:
    rater_id: str
    items: frozenset[str]


@dataclass(frozen=True)
class BinAssignment:
    attribute_id: str
    baseline: str
    bins: tuple[tuple[str, ...], ...]   # bins[0] holds the highest scores

    def bin_of(self, item_id: str) -> int:
        for i, b in enumerate(self.bins):
            if item_id in b:
                return i
        raise KeyError(item_id)

    def interior(self) -> frozenset[str]:
        return frozenset(i for b in self.bins[1:-1] for i in b)

    def all_items(self) -> frozenset[str]:
        return frozenset(i for b in self.bins for i in b)


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    rater_id: str
    attribute_id: str
    anchor_id: str
    candidate_ids: tuple[str, ...]
    created_at: float = field(default=0.0, compare=False)


def assign_bins(seen: SeenSet, ranking: ScoredList, m: int = DEFAULT_BINS,
                ) -> BinAssignment:
    """Sort the seen items by baseline score and cut into m contiguous bins.

    Bin sizes differ by at most one, with the remainder going to the
    highest-score bins.  Seen items absent from the ranking score 0.
    """
    if m < 3:
        raise SamplerError(f"need at least 3 bins, got {m}")
    if len(seen.items) < m:
        raise SamplerError(
            f"rater {seen.rater_id!r} has seen {len(seen.items)} items; "
            f"need at least {m}")
    score = ranking.as_dict()
    ordered = sorted(seen.items, key=lambda i: (-score.get(i, 0.0), i))
    q, r = divmod(len(ordered), m)
    bins: list[tuple[str, ...]] = []
    cursor = 0
    for i in range(m):
        size = q + (1 if i < r else 0)
        bins.append(tuple(ordered[cursor:cursor + size]))
        cursor += size
    return BinAssignment(attribute_id=ranking.attribute_id, baseline=ranking.method,
                         bins=tuple(bins))


def eligible_anchors(bins_ic: BinAssignment, bins_rc: BinAssignment) -> frozenset[str]:
    """Items outside the first and last bin under both baselines."""
    if bins_ic.all_items() != bins_rc.all_items():
        raise SamplerError("bin assignments cover different seen sets")
    eligible = bins_ic.interior() & bins_rc.interior()
    if not eligible:
        raise SamplerError(
            "no eligible anchor: every seen item is extreme under some baseline")
    return eligible


def _weighted_draw(pool: Sequence[str], seen_counts: Mapping[str, int],
                   rng: np.random.Generator) -> str:
    # Items nobody has marked seen yet keep weight 1 so early raters get tasks.
    weights = np.array([max(seen_counts.get(i, 0), 1) for i in pool], dtype=np.float64)
    probs = weights / weights.sum()
    return pool[int(rng.choice(len(pool), p=probs))]


def sample_anchor(eligible: Iterable[str], seen_counts: Mapping[str, int],
                  rng: np.random.Generator) -> str:
    """Draw the anchor with probability proportional to its seen count."""
    pool = sorted(eligible)
    if not pool:
        raise SamplerError("empty eligible anchor set")
    return _weighted_draw(pool, seen_counts, rng)


def sample_candidates(anchor_id: str, bins_ic: BinAssignment, bins_rc: BinAssignment,
                      seen_counts: Mapping[str, int], rng: np.random.Generator,
                      ) -> list[str]:
    """One popularity-weighted draw per (baseline, bin), without replacement.

    A bin whose remaining items are all excluded (anchor or earlier draws)
    contributes nothing; the task proceeds with fewer candidates, down to
    a floor of two.  The result order is shuffled.
    """
    chosen: list[str] = []
    excluded = {anchor_id}
    for assignment in (bins_ic, bins_rc):
        for bucket in assignment.bins:
            pool = sorted(set(bucket) - excluded)
            if not pool:
                continue
            pick = _weighted_draw(pool, seen_counts, rng)
            chosen.append(pick)
            excluded.add(pick)
    if len(chosen) < MIN_CANDIDATES:
        raise SamplerError(
            f"only {len(chosen)} candidate(s) available; task would be too small")
    order = rng.permutation(len(chosen))
    return [chosen[i] for i in order]


def generate_task(seen: SeenSet, ranking_ic: ScoredList, ranking_rc: ScoredList,
                  seen_counts: Mapping[str, int], rng: np.random.Generator,
                  task_id: str, m: int = DEFAULT_BINS,
                  created_at: float | None = None) -> AnnotationTask:
    """Full task generation for one (rater, attribute)."""
    bins_ic = assign_bins(seen, ranking_ic, m)
    bins_rc = assign_bins(seen, ranking_rc, m)
    anchor = sample_anchor(eligible_anchors(bins_ic, bins_rc), seen_counts, rng)
    candidates = sample_candidates(anchor, bins_ic, bins_rc, seen_counts, rng)
    return AnnotationTask(
        task_id=task_id, rater_id=seen.rater_id, attribute_id=ranking_ic.attribute_id,
        anchor_id=anchor, candidate_ids=tuple(candidates),
        created_at=time.time() if created_at is None else created_at)


class TaskGenerator:
    """Generates tasks against a fixed set of per-attribute baselines.

    ``rankings`` maps attribute id to its two baseline scored lists.
    Attribute scheduling round-robins toward the attributes with the
    fewest collected judgments so coverage stays even.
    """

    def __init__(self, rankings: Mapping[str, Mapping[str, ScoredList]],
                 m: int = DEFAULT_BINS):
        for attr, pair in rankings.items():
            if BASELINE_ITEM_CENTRIC not in pair or BASELINE_REVIEW_CENTRIC not in pair:
                raise ValueError(f"attribute {attr!r} needs both baseline rankings")
        self.rankings = rankings
        self.m = m

    def attribute_order(self, judged_counts: Mapping[str, int]) -> list[str]:
        return sorted(self.rankings, key=lambda a: (judged_counts.get(a, 0), a))

    def generate(self, seen: SeenSet, attribute_id: str,
                 seen_counts: Mapping[str, int], rng: np.random.Generator,
                 task_id: str, created_at: float | None = None) -> AnnotationTask:
        pair = self.rankings[attribute_id]
        return generate_task(seen, pair[BASELINE_ITEM_CENTRIC],
                             pair[BASELINE_REVIEW_CENTRIC], seen_counts, rng,
                             task_id=task_id, m=self.m, created_at=created_at)

    def generate_next(self, seen: SeenSet, judged_counts: Mapping[str, int],
                      seen_counts: Mapping[str, int], rng: np.random.Generator,
                      task_id: str, created_at: float | None = None) -> AnnotationTask:
        """Try attributes in scheduling order until one yields a task."""
        last: SamplerError | None = None
        for attribute_id in self.attribute_order(judged_counts):
            try:
                return self.generate(seen, attribute_id, seen_counts, rng,
                                     task_id=task_id, created_at=created_at)
            except SamplerError as exc:
                last = exc
        raise SamplerError(
            f"no attribute admits a task for rater {seen.rater_id!r}: {last}")
