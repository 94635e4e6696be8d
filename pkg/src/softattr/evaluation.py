"""Rank-correlation evaluation, agreement analysis, and cross-validation.

``gamma`` is the classic concordant/discordant pair ratio against binary
positive/negative ground truth.  ``weighted_gamma`` extends it to
three-bucket judgments: pairs from adjacent buckets count once, pairs
from the two outer buckets count twice, and the anchor item lives in the
middle bucket.  Score-tied pairs count toward neither side.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Judgment, Relation, infer_preferences
from .embeddings import FactorModel
from .attrmodels import (AttributeModelError, RankSVMConfig, score_swd, train_swd)


class MetricUndefinedError(ValueError):
    """The metric has no defined value on these inputs."""


class _Skipped:
    """Sentinel for judgments left out of the evaluation."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "SKIPPED"


SKIPPED = _Skipped()


@dataclass(frozen=True)
class PairCounts:
    ns: int = 0
    nd: int = 0
    nss: int = 0
    ndd: int = 0


# ---------------------------------------------------------------------------
# G and G'
# ---------------------------------------------------------------------------

def gamma(scores: Mapping[str, float], positives: Iterable[str],
          negatives: Iterable[str]) -> float:
    """Goodman-Kruskal gamma over all positive-vs-negative item pairs."""
    pos = list(positives)
    neg = list(negatives)
    if not pos or not neg:
        raise MetricUndefinedError("gamma needs non-empty positive and negative sets")
    if set(pos) & set(neg):
        raise MetricUndefinedError("positive and negative sets must be disjoint")
    ns = nd = 0
    for p in pos:
        sp = _score(scores, p)
        for n in neg:
            sn = _score(scores, n)
            if sp > sn:
                ns += 1
            elif sp < sn:
                nd += 1
    if ns + nd == 0:
        raise MetricUndefinedError("all pairs are score-tied; gamma is undefined")
    return (ns - nd) / (ns + nd)


def weighted_pair_counts(scores: Mapping[str, float], j: Judgment) -> PairCounts:
    """Concordant/discordant counts for one judgment.

    ns/nd come from adjacent buckets (less vs middle, middle vs more) with
    the anchor folded into the middle; nss/ndd from less vs more.
    Concordant means the "more" side scores strictly higher.
    """
    middle = (j.anchor_id,) + j.same
    ns = nd = nss = ndd = 0
    for hi_bucket, lo_bucket, outer in (
            (middle, j.less, False), (j.more, middle, False), (j.more, j.less, True)):
        for hi in hi_bucket:
            s_hi = _score(scores, hi)
            for lo in lo_bucket:
                s_lo = _score(scores, lo)
                if s_hi > s_lo:
                    if outer:
                        nss += 1
                    else:
                        ns += 1
                elif s_hi < s_lo:
                    if outer:
                        ndd += 1
                    else:
                        nd += 1
    return PairCounts(ns=ns, nd=nd, nss=nss, ndd=ndd)


def weighted_gamma(scores: Mapping[str, float], j: Judgment) -> float | _Skipped:
    """Weighted gamma of one judgment, or SKIPPED when undefined.

    A judgment whose items all landed in a single bucket is skipped, as is
    one where every counted pair is score-tied.
    """
    occupied = sum(1 for bucket in (j.less, j.same, j.more) if bucket)
    if occupied <= 1:
        return SKIPPED
    c = weighted_pair_counts(scores, j)
    denom = (c.ns + c.nd) + 2 * (c.nss + c.ndd)
    if denom == 0:
        return SKIPPED
    return ((c.ns - c.nd) + 2 * (c.nss - c.ndd)) / denom


def mean_weighted_gamma(scores: Mapping[str, float], judgments: Sequence[Judgment],
                        per_rater: bool = True) -> float:
    """Mean G' over judgments, skipped ones dropped.

    With ``per_rater`` (the default) each rater's judgments are averaged
    first and raters weigh equally; otherwise a flat mean over judgments.
    """
    by_rater: dict[str, list[float]] = defaultdict(list)
    flat: list[float] = []
    for j in judgments:
        g = weighted_gamma(scores, j)
        if g is SKIPPED:
            continue
        by_rater[j.rater_id].append(g)
        flat.append(g)
    if not flat:
        raise MetricUndefinedError("every judgment was skipped; mean G' is undefined")
    if not per_rater:
        return sum(flat) / len(flat)
    rater_means = [sum(v) / len(v) for _, v in sorted(by_rater.items())]
    return sum(rater_means) / len(rater_means)


def _score(scores: Mapping[str, float], item_id: str) -> float:
    try:
        return scores[item_id]
    except KeyError:
        raise MetricUndefinedError(f"no score for judged item {item_id!r}") from None


# ---------------------------------------------------------------------------
# Agreement (subjectivity)
# ---------------------------------------------------------------------------

GROUP_HIGH = "HIGH"
GROUP_MEDIUM = "MEDIUM"
GROUP_LOW = "LOW"


@dataclass(frozen=True)
class AgreementStats:
    attribute_id: str
    agree: float | None          # None when no pair was voted twice
    distinct_pairs: int          # unordered pairs with >= 2 votes
    total_comparisons: int       # votes on those pairs
    tie_count: int               # "about equal" votes on those pairs
    judged_pairs: int            # all distinct pairs, single-voted included
    group: str | None = None


def agreement(judgments: Sequence[Judgment], attribute_id: str) -> AgreementStats:
    """Directional inter-rater agreement for one attribute.

    Every judgment votes on each item pair it relates (more/strong-more
    as a direction, tie as "about equal").  Only pairs voted by at least
    two judgments enter the agreement mean; a tie vote counts as agreeing
    with either direction.
    """
    votes: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0, 0])  # lt, eq, gt
    for j in judgments:
        if j.attribute_id != attribute_id:
            continue
        for p in infer_preferences(j):
            u, v = sorted((p.high, p.low))
            if p.relation is Relation.TIE:
                votes[(u, v)][1] += 1
            elif p.high == v:
                votes[(u, v)][0] += 1   # u has less than v
            else:
                votes[(u, v)][2] += 1
    distinct = total = ties = 0
    agree_values: list[float] = []
    for pair in sorted(votes):
        n_lt, n_eq, n_gt = votes[pair]
        n = n_lt + n_eq + n_gt
        if n < 2:
            continue
        distinct += 1
        total += n
        ties += n_eq
        p_lt, p_eq, p_gt = n_lt / n, n_eq / n, n_gt / n
        agree_values.append(p_lt * (p_lt + p_eq) + p_gt * (p_gt + p_eq) + p_eq)
    agree = sum(agree_values) / len(agree_values) if agree_values else None
    return AgreementStats(attribute_id=attribute_id, agree=agree,
                          distinct_pairs=distinct, total_comparisons=total,
                          tie_count=ties, judged_pairs=len(votes))


def assign_agreement_groups(stats: Sequence[AgreementStats]) -> list[AgreementStats]:
    """Split attributes into HIGH/MEDIUM/LOW terciles by agreement rate.

    Tercile sizes differ by at most one; boundary ties break by attribute
    id.  Attributes with undefined agreement keep group None.
    """
    defined = sorted((s for s in stats if s.agree is not None),
                     key=lambda s: (-s.agree, s.attribute_id))
    n = len(defined)
    q, r = divmod(n, 3)
    sizes = [q + (1 if i < r else 0) for i in range(3)]
    out: list[AgreementStats] = []
    cursor = 0
    for size, group in zip(sizes, (GROUP_HIGH, GROUP_MEDIUM, GROUP_LOW)):
        for s in defined[cursor:cursor + size]:
            out.append(replace(s, group=group))
        cursor += size
    out.extend(s for s in stats if s.agree is None)
    return out


def agreement_table(judgments: Sequence[Judgment]) -> list[AgreementStats]:
    """Agreement stats for every attribute present, grouped into terciles."""
    attributes = sorted({j.attribute_id for j in judgments})
    stats = [agreement(judgments, a) for a in attributes]
    grouped = assign_agreement_groups(stats)
    return sorted(grouped, key=lambda s: (-(s.agree if s.agree is not None else -2.0),
                                          s.attribute_id))


# ---------------------------------------------------------------------------
# Bucket-size distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BucketMeans:
    less: float
    same: float
    more: float
    n_judgments: int


@dataclass(frozen=True)
class BucketDistribution:
    per_attribute: Mapping[str, BucketMeans]
    overall: BucketMeans


def bucket_distribution(judgments: Sequence[Judgment]) -> BucketDistribution:
    """Mean bucket sizes per attribute and overall."""
    sums: dict[str, list[float]] = defaultdict(lambda: [0.0, 0.0, 0.0, 0])
    for j in judgments:
        for key in (j.attribute_id, ""):
            acc = sums[key]
            acc[0] += len(j.less)
            acc[1] += len(j.same)
            acc[2] += len(j.more)
            acc[3] += 1

    def means(acc: list[float]) -> BucketMeans:
        n = int(acc[3])
        if n == 0:
            return BucketMeans(0.0, 0.0, 0.0, 0)
        return BucketMeans(acc[0] / n, acc[1] / n, acc[2] / n, n)

    overall = means(sums.pop("", [0.0, 0.0, 0.0, 0]))
    per_attribute = {a: means(acc) for a, acc in sorted(sums.items())}
    return BucketDistribution(per_attribute=per_attribute, overall=overall)


# ---------------------------------------------------------------------------
# Cross-validation and learning curve for SWD
# ---------------------------------------------------------------------------

def make_folds(rater_ids: Iterable[str], folds: int, seed: int = 0) -> dict[str, int]:
    """Partition raters into folds of near-equal size (seeded shuffle)."""
    raters = sorted(set(rater_ids))
    if folds < 2:
        raise ValueError("folds must be >= 2 (a single fold leaves no training data)")
    if len(raters) < folds:
        raise ValueError(f"need at least {folds} raters, got {len(raters)}")
    rng = np.random.default_rng(seed)
    order = [raters[i] for i in rng.permutation(len(raters))]
    return {rater: i % folds for i, rater in enumerate(order)}


@dataclass(frozen=True)
class CrossvalResult:
    per_attribute: Mapping[str, float]
    overall: float
    skipped: tuple[tuple[int, str, str], ...]   # (fold, attribute, reason)
    n_folds: int


def _train_and_score(train: Sequence[Judgment], test: Sequence[Judgment],
                     model: FactorModel, cfg: RankSVMConfig) -> float:
    """Train SWD on the training judgments' preferences, return mean G'
    on the test judgments.  Raises when training or the metric is unusable."""
    prefs = [p for j in train for p in infer_preferences(j)]
    swd = train_swd(prefs, model, cfg)
    needed = sorted({i for j in test for i in j.all_items()})
    scores = {i: score_swd(i, swd, model) for i in needed}
    return mean_weighted_gamma(scores, test)


def crossval_swd(judgments: Sequence[Judgment], model: FactorModel,
                 cfg: RankSVMConfig | None = None, folds: int = 10,
                 seed: int = 0) -> CrossvalResult:
    """Rater-level k-fold cross-validation of the ranking SVM.

    Per fold and attribute the model trains on out-of-fold preferences and
    is scored by mean G' on the in-fold judgments; fold results average
    into per-attribute and overall means.  (fold, attribute) cells without
    usable training data or with every test judgment skipped are reported.
    """
    cfg = cfg or RankSVMConfig()
    fold_of = make_folds((j.rater_id for j in judgments), folds, seed)
    by_attr: dict[str, list[Judgment]] = defaultdict(list)
    for j in judgments:
        by_attr[j.attribute_id].append(j)

    per_attr_values: dict[str, list[float]] = defaultdict(list)
    skipped: list[tuple[int, str, str]] = []
    for fold in range(folds):
        for attr in sorted(by_attr):
            test = [j for j in by_attr[attr] if fold_of[j.rater_id] == fold]
            train = [j for j in by_attr[attr] if fold_of[j.rater_id] != fold]
            if not test:
                continue
            try:
                per_attr_values[attr].append(
                    _train_and_score(train, test, model, cfg))
            except (AttributeModelError, MetricUndefinedError) as exc:
                skipped.append((fold, attr, str(exc)))
    per_attribute = {a: sum(v) / len(v) for a, v in sorted(per_attr_values.items())}
    if not per_attribute:
        raise MetricUndefinedError("no (fold, attribute) cell produced a defined G'")
    overall = sum(per_attribute.values()) / len(per_attribute)
    return CrossvalResult(per_attribute=per_attribute, overall=overall,
                          skipped=tuple(skipped), n_folds=folds)


def learning_curve(judgments: Sequence[Judgment], model: FactorModel,
                   sizes: Sequence[int], cfg: RankSVMConfig | None = None,
                   reps: int = 25, folds: int = 10, seed: int = 0,
                   ) -> dict[int, float]:
    """Mean G' as a function of the number of training raters.

    Each repetition rotates the held-out fold, subsamples the requested
    number of raters from the remaining folds, trains per attribute, and
    evaluates on the held-out judgments; the curve reports the mean over
    repetitions at each size.
    """
    cfg = cfg or RankSVMConfig()
    fold_of = make_folds((j.rater_id for j in judgments), folds, seed)
    by_attr: dict[str, list[Judgment]] = defaultdict(list)
    for j in judgments:
        by_attr[j.attribute_id].append(j)

    curve: dict[int, float] = {}
    for size in sizes:
        values: list[float] = []
        for rep in range(reps):
            fold = rep % folds
            rng = np.random.default_rng((seed, size, rep))
            train_raters = sorted({r for r, f in fold_of.items() if f != fold})
            take = min(size, len(train_raters))
            chosen = set(rng.choice(train_raters, size=take, replace=False))
            attr_values: list[float] = []
            for attr in sorted(by_attr):
                test = [j for j in by_attr[attr] if fold_of[j.rater_id] == fold]
                train = [j for j in by_attr[attr] if j.rater_id in chosen]
                if not test or not train:
                    continue
                try:
                    attr_values.append(_train_and_score(train, test, model, cfg))
                except (AttributeModelError, MetricUndefinedError):
                    continue
            if attr_values:
                values.append(sum(attr_values) / len(attr_values))
        if values:
            curve[size] = sum(values) / len(values)
    return curve


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("attribute", "method", "metric", "value", "n_pairs", "n_skipped")


def write_report(rows: Sequence[Mapping], csv_path: str | Path,
                 json_path: str | Path, meta: Mapping | None = None) -> None:
    """Emit one result set as a CSV table plus a JSON summary."""
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in REPORT_COLUMNS})
    payload = {"meta": dict(meta or {}), "rows": [dict(r) for r in rows]}
    Path(json_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")


def report_value(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.6f}"
