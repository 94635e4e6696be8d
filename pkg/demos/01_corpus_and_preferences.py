"""Corpus ingestion, the tag-based test collection, and preference inference.

Builds a toy corpus on disk, loads it back through the file formats, and
shows how one three-bucket judgment expands into pairwise preferences.
"""

import json
import tempfile
from pathlib import Path

from softattr.corpus import (Judgment, build_tag_collection, infer_preferences,
                             load_corpus)

root = Path(tempfile.mkdtemp(prefix="softattr-demo-"))
print(f"writing a toy corpus under {root}\n")

(root / "items.csv").write_text(
    "id,title,seen_count,rating_count\n"
    "m1,Harbor Lights,40,120\n"
    "m2,Static Noon,35,100\n"
    "m3,Glass Orchard,30,90\n"
    "m4,Night Ferry,25,80\n",
    encoding="utf-8")

reviews = [
    {"id": "r1", "item_id": "m1", "text": "a scary, moody thriller"},
    {"id": "r2", "item_id": "m2", "text": "light and funny throughout"},
    {"id": "r3", "item_id": "m3", "text": "scary in places, warm in others"},
    {"id": "r4", "item_id": "m4", "text": "a violent ferry chase at night"},
]
(root / "reviews.jsonl").write_text(
    "\n".join(json.dumps(r) for r in reviews) + "\n", encoding="utf-8")

(root / "ratings.csv").write_text(
    "user_id,item_id,rating\nu1,m1,4\nu1,m2,3\nu2,m1,5\nu2,m4,2\n",
    encoding="utf-8")

# 20 users tag m1; exactly 3 of them use "scary" (the 0.15 boundary)
tag_rows = ["user_id,item_id,tag"]
for u in range(20):
    tag_rows.append(f"t{u},m1,{'scary' if u < 3 else 'thriller'}")
    tag_rows.append(f"t{u},m2,funny")
(root / "tags.csv").write_text("\n".join(tag_rows) + "\n", encoding="utf-8")

corpus = load_corpus(root / "items.csv", root / "reviews.jsonl",
                     root / "ratings.csv", root / "tags.csv")
print(f"loaded {len(corpus.items)} items, {len(corpus.reviews)} reviews, "
      f"{len(corpus.ratings)} ratings, {len(corpus.tags)} tag assignments")

# --- tag-based collection: the 0.15 threshold is inclusive -----------------
collection = build_tag_collection(corpus.tags, alpha=0.15, min_taggers=10)
print("\ntag collection at alpha=0.15, min_taggers=10:")
for attr in collection.attributes():
    print(f"  {attr:10s} positives={sorted(collection.positives[attr])} "
          f"negatives={sorted(collection.negatives[attr])}")

# --- one judgment -> all pairwise preferences ------------------------------
judgment = Judgment(rater_id="w1", attribute_id="scary", anchor_id="m1",
                    less=("m2",), same=("m3",), more=("m4",))
print("\njudgment: anchor=m1, less=[m2], same=[m3], more=[m4]")
print("inferred preferences (strong '>>' / plain '>' / tie '~'):")
symbol = {"strong_more": ">>", "more": ">", "tie": "~"}
for p in infer_preferences(judgment):
    print(f"  {p.high} {symbol[p.relation.value]} {p.low}")
