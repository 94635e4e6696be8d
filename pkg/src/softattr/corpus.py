"""Corpus data model, file ingestion, tag-based test collection, and
preference inference.

The corpus consists of four flat files (items.csv, reviews.jsonl,
ratings.csv, tags.csv) plus judgment records (judgments.jsonl).  All
structures are immutable after loading and safe for concurrent reads.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, TextIO


class CorpusError(ValueError):
    """Malformed input file or broken cross-reference."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Item:
    id: str
    title: str
    seen_count: int = 0
    rating_count: int = 0

    def __post_init__(self) -> None:
        if self.seen_count < 0 or self.rating_count < 0:
            raise CorpusError(f"item {self.id!r}: counts must be >= 0")


@dataclass(frozen=True)
class Review:
    id: str
    item_id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise CorpusError(f"review {self.id!r}: empty text")


@dataclass(frozen=True)
class RatingTriple:
    user_id: str
    item_id: str
    value: float


@dataclass(frozen=True)
class SoftAttribute:
    id: str
    phrase: str

    def __post_init__(self) -> None:
        if not self.phrase:
            raise CorpusError(f"attribute {self.id!r}: empty phrase")


@dataclass(frozen=True)
class TagAssignment:
    user_id: str
    item_id: str
    tag: str


class ItemCatalog:
    """Immutable id -> Item map preserving file order."""

    def __init__(self, items: Iterable[Item]):
        self._items: dict[str, Item] = {}
        for item in items:
            if item.id in self._items:
                raise CorpusError(f"duplicate item id {item.id!r}")
            self._items[item.id] = item

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._items

    def __getitem__(self, item_id: str) -> Item:
        return self._items[item_id]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self._items.values())

    def ids(self) -> list[str]:
        return list(self._items)

    def get(self, item_id: str) -> Item | None:
        return self._items.get(item_id)


class ReviewStore:
    """Reviews grouped by item, in file order."""

    def __init__(self, reviews: Iterable[Review]):
        self._reviews: list[Review] = []
        self._by_item: dict[str, list[Review]] = defaultdict(list)
        seen_ids: set[str] = set()
        for review in reviews:
            if review.id in seen_ids:
                raise CorpusError(f"duplicate review id {review.id!r}")
            seen_ids.add(review.id)
            self._reviews.append(review)
            self._by_item[review.item_id].append(review)

    def __len__(self) -> int:
        return len(self._reviews)

    def __iter__(self) -> Iterator[Review]:
        return iter(self._reviews)

    def by_item(self, item_id: str) -> list[Review]:
        return list(self._by_item.get(item_id, ()))

    def item_ids(self) -> list[str]:
        return list(self._by_item)


class RatingSet:
    """User-item rating triples, at most one per (user, item)."""

    def __init__(self, triples: Iterable[RatingTriple]):
        self._triples: list[RatingTriple] = []
        keys: set[tuple[str, str]] = set()
        for t in triples:
            key = (t.user_id, t.item_id)
            if key in keys:
                raise CorpusError(
                    f"duplicate rating for user {t.user_id!r}, item {t.item_id!r}")
            keys.add(key)
            self._triples.append(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[RatingTriple]:
        return iter(self._triples)

    def user_ids(self) -> list[str]:
        return sorted({t.user_id for t in self._triples})

    def item_ids(self) -> list[str]:
        return sorted({t.item_id for t in self._triples})


@dataclass(frozen=True)
class Judgment:
    """One rater's three-bucket partition of candidates around an anchor.

    ``less``/``same``/``more`` keep submission order so that files
    round-trip byte for byte.  ``seq`` is a record sequence number that
    distinguishes repeated (rater, attribute, anchor) tuples; it does not
    take part in equality.
    """

    rater_id: str
    attribute_id: str
    anchor_id: str
    less: tuple[str, ...]
    same: tuple[str, ...]
    more: tuple[str, ...]
    seq: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        buckets = list(self.less) + list(self.same) + list(self.more)
        if len(set(buckets)) != len(buckets):
            raise CorpusError(
                f"judgment (rater {self.rater_id!r}): buckets overlap or repeat an item")
        if self.anchor_id in buckets:
            raise CorpusError(
                f"judgment (rater {self.rater_id!r}): anchor {self.anchor_id!r} "
                "may not appear in a bucket")

    def bucket_items(self) -> tuple[str, ...]:
        return self.less + self.same + self.more

    def all_items(self) -> tuple[str, ...]:
        return (self.anchor_id,) + self.bucket_items()


class Relation(Enum):
    STRONG_MORE = "strong_more"
    MORE = "more"
    TIE = "tie"


@dataclass(frozen=True)
class PreferencePair:
    """Inferred relation between two items for one attribute.

    For TIE pairs ``high``/``low`` hold the lexicographically smaller and
    larger item id, so identical ties compare equal regardless of origin.
    """

    attribute_id: str
    high: str
    low: str
    relation: Relation
    source: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if self.high == self.low:
            raise CorpusError(f"preference relates item {self.high!r} to itself")


@dataclass(frozen=True)
class TagCollection:
    """Per-attribute positive/negative example sets built from tag data."""

    alpha: float
    min_taggers: int
    items: frozenset[str]
    positives: Mapping[str, frozenset[str]]
    negatives: Mapping[str, frozenset[str]]

    def attributes(self) -> list[str]:
        return sorted(self.positives)


@dataclass(frozen=True)
class Corpus:
    items: ItemCatalog
    reviews: ReviewStore
    ratings: RatingSet
    tags: tuple[TagAssignment, ...]


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def _parse_int(value: str, path: str, lineno: int, column: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise CorpusError(
            f"{path}:{lineno}: column {column!r}: not an integer: {value!r}") from None


def _check_header(header: list[str] | None, expected: list[str], path: str) -> None:
    if header != expected:
        raise CorpusError(
            f"{path}:1: expected header {','.join(expected)!r}, got "
            f"{','.join(header) if header else '<empty file>'!r}")


def load_items(path: str | Path) -> ItemCatalog:
    path = str(path)
    items: list[Item] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), ["id", "title", "seen_count", "rating_count"], path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CorpusError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            item_id, title, seen, rated = row
            items.append(Item(
                id=item_id,
                title=title,
                seen_count=_parse_int(seen, path, lineno, "seen_count"),
                rating_count=_parse_int(rated, path, lineno, "rating_count"),
            ))
    return ItemCatalog(items)


def load_reviews(path: str | Path, catalog: ItemCatalog | None = None) -> ReviewStore:
    path = str(path)
    reviews: list[Review] = []
    dangling: list[str] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            try:
                review = Review(id=str(obj["id"]), item_id=str(obj["item_id"]),
                                text=str(obj["text"]))
            except KeyError as exc:
                raise CorpusError(f"{path}:{lineno}: missing key {exc.args[0]!r}") from None
            if catalog is not None and review.item_id not in catalog:
                dangling.append(f"{path}:{lineno}: item {review.item_id!r}")
            reviews.append(review)
    if dangling:
        raise CorpusError("reviews reference unknown items: " + "; ".join(dangling))
    return ReviewStore(reviews)


def load_ratings(path: str | Path, catalog: ItemCatalog | None = None) -> RatingSet:
    path = str(path)
    triples: list[RatingTriple] = []
    dangling: list[str] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), ["user_id", "item_id", "rating"], path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            user_id, item_id, raw = row
            try:
                value = float(raw)
            except ValueError:
                raise CorpusError(
                    f"{path}:{lineno}: column 'rating': not a number: {raw!r}") from None
            if catalog is not None and item_id not in catalog:
                dangling.append(f"{path}:{lineno}: item {item_id!r}")
            triples.append(RatingTriple(user_id=user_id, item_id=item_id, value=value))
    if dangling:
        raise CorpusError("ratings reference unknown items: " + "; ".join(dangling))
    return RatingSet(triples)


def load_tags(path: str | Path, catalog: ItemCatalog | None = None) -> tuple[TagAssignment, ...]:
    path = str(path)
    rows: list[TagAssignment] = []
    dangling: list[str] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        _check_header(next(reader, None), ["user_id", "item_id", "tag"], path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            user_id, item_id, tag = row
            if not tag:
                raise CorpusError(f"{path}:{lineno}: empty tag")
            if catalog is not None and item_id not in catalog:
                dangling.append(f"{path}:{lineno}: item {item_id!r}")
            rows.append(TagAssignment(user_id=user_id, item_id=item_id, tag=tag))
    if dangling:
        raise CorpusError("tags reference unknown items: " + "; ".join(dangling))
    return tuple(rows)


def load_corpus(items_path: str | Path, reviews_path: str | Path,
                ratings_path: str | Path, tags_path: str | Path) -> Corpus:
    """Load the four corpus files; every cross-reference must resolve."""
    catalog = load_items(items_path)
    reviews = load_reviews(reviews_path, catalog)
    ratings = load_ratings(ratings_path, catalog)
    tags = load_tags(tags_path, catalog)
    return Corpus(items=catalog, reviews=reviews, ratings=ratings, tags=tags)


def load_attributes(path: str | Path) -> list[SoftAttribute]:
    """Read soft attributes from a text file, one phrase per line."""
    attributes: list[SoftAttribute] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            phrase = line.strip()
            if not phrase or phrase in seen:
                continue
            seen.add(phrase)
            attributes.append(SoftAttribute(id=phrase, phrase=phrase))
    return attributes


# ---------------------------------------------------------------------------
# Judgment files
# ---------------------------------------------------------------------------

_JUDGMENT_KEYS = ("rater_id", "attribute", "anchor_id", "less", "same", "more")


def judgment_from_obj(obj: Mapping, seq: int = 0) -> Judgment:
    missing = [k for k in _JUDGMENT_KEYS if k not in obj]
    if missing:
        raise CorpusError(f"judgment record missing keys: {', '.join(missing)}")
    return Judgment(
        rater_id=str(obj["rater_id"]),
        attribute_id=str(obj["attribute"]),
        anchor_id=str(obj["anchor_id"]),
        less=tuple(str(i) for i in obj["less"]),
        same=tuple(str(i) for i in obj["same"]),
        more=tuple(str(i) for i in obj["more"]),
        seq=seq,
    )


def judgment_to_obj(j: Judgment) -> dict:
    return {
        "rater_id": j.rater_id,
        "attribute": j.attribute_id,
        "anchor_id": j.anchor_id,
        "less": list(j.less),
        "same": list(j.same),
        "more": list(j.more),
    }


def judgment_to_json(j: Judgment) -> str:
    """Canonical single-line serialization (fixed key order, compact)."""
    return json.dumps(judgment_to_obj(j), ensure_ascii=False, separators=(",", ":"))


def load_judgments(path: str | Path, catalog: ItemCatalog | None = None) -> list[Judgment]:
    path = str(path)
    judgments: list[Judgment] = []
    dangling: list[str] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            try:
                j = judgment_from_obj(obj, seq=lineno)
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            if catalog is not None:
                unknown = [i for i in j.all_items() if i not in catalog]
                if unknown:
                    dangling.append(f"{path}:{lineno}: items {unknown}")
            judgments.append(j)
    if dangling:
        raise CorpusError("judgments reference unknown items: " + "; ".join(dangling))
    return judgments


def dump_judgments(judgments: Iterable[Judgment], out: TextIO | str | Path) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as f:
            dump_judgments(judgments, f)
        return
    for j in judgments:
        out.write(judgment_to_json(j))
        out.write("\n")


# ---------------------------------------------------------------------------
# Tag-based test collection
# ---------------------------------------------------------------------------

def build_tag_collection(tags: Sequence[TagAssignment], alpha: float,
                         min_taggers: int) -> TagCollection:
    """Derive per-attribute positive/negative item sets from tag assignments.

    Items tagged by fewer than ``min_taggers`` distinct users are dropped.
    An item is a positive example for a tag when at least a fraction
    ``alpha`` of the distinct users who tagged it (with anything) assigned
    that tag; it is a negative example when nobody assigned that tag.
    Attributes with no positive example are removed.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if min_taggers < 1:
        raise ValueError(f"min_taggers must be >= 1, got {min_taggers}")

    taggers_by_item: dict[str, set[str]] = defaultdict(set)
    taggers_by_item_tag: dict[tuple[str, str], set[str]] = defaultdict(set)
    all_tags: set[str] = set()
    for row in tags:
        taggers_by_item[row.item_id].add(row.user_id)
        taggers_by_item_tag[(row.item_id, row.tag)].add(row.user_id)
        all_tags.add(row.tag)

    surviving = frozenset(
        item for item, users in taggers_by_item.items() if len(users) >= min_taggers)

    positives: dict[str, frozenset[str]] = {}
    negatives: dict[str, frozenset[str]] = {}
    for tag in sorted(all_tags):
        pos: set[str] = set()
        neg: set[str] = set()
        for item in surviving:
            n_tag = len(taggers_by_item_tag.get((item, tag), ()))
            if n_tag == 0:
                neg.add(item)
            elif n_tag / len(taggers_by_item[item]) >= alpha:
                pos.add(item)
        if pos:
            positives[tag] = frozenset(pos)
            negatives[tag] = frozenset(neg)

    return TagCollection(alpha=alpha, min_taggers=min_taggers, items=surviving,
                         positives=positives, negatives=negatives)


# ---------------------------------------------------------------------------
# Preference inference
# ---------------------------------------------------------------------------

def infer_preferences(j: Judgment) -> list[PreferencePair]:
    """Expand a three-bucket judgment into all pairwise preferences.

    With the anchor folded into the middle bucket this yields: every
    more-vs-less pair as STRONG_MORE, every more-vs-middle and
    middle-vs-less pair as MORE, and every within-middle pair as TIE.
    Pairs inside the outer buckets carry no relation.
    """
    middle = (j.anchor_id,) + j.same
    attr, seq = j.attribute_id, j.seq
    pairs: list[PreferencePair] = []
    for i in j.more:
        for k in j.less:
            pairs.append(PreferencePair(attr, i, k, Relation.STRONG_MORE, seq))
    for i in j.more:
        for k in middle:
            pairs.append(PreferencePair(attr, i, k, Relation.MORE, seq))
    for i in middle:
        for k in j.less:
            pairs.append(PreferencePair(attr, i, k, Relation.MORE, seq))
    for i, k in combinations(middle, 2):
        lo, hi = sorted((i, k))
        pairs.append(PreferencePair(attr, lo, hi, Relation.TIE, seq))
    return pairs


def infer_all_preferences(judgments: Iterable[Judgment]) -> list[PreferencePair]:
    pairs: list[PreferencePair] = []
    for j in judgments:
        pairs.extend(infer_preferences(j))
    return pairs
