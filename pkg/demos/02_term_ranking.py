"""BM25 term-based ranking over review text, item-centric and review-centric.

The item-centric ranker scores one concatenated pseudo-document per item;
the review-centric ranker scores reviews one by one and sums each item's
review scores, which rewards items with several on-topic reviews.
"""

from softattr.corpus import Review, ReviewStore
from softattr.textrank import (IndexMode, build_index, score_item_centric,
                               score_review_centric)

reviews = ReviewStore([
    Review("r1", "harbor", "scary, scary, scary: a relentless thriller"),
    Review("r2", "harbor", "moody harbor scenes, quietly tense"),
    Review("r3", "noon", "light and funny, never scary"),
    Review("r4", "noon", "the funniest film of the year"),
    Review("r5", "orchard", "scary moments in a warm family story"),
    Review("r6", "orchard", "a scary orchard at dusk"),
    Review("r7", "orchard", "one scary scene, mostly gentle"),
    Review("r8", "ferry", "romance on the night ferry"),
])

index_items = build_index(reviews, IndexMode.ITEM_DOCS)
index_reviews = build_index(reviews, IndexMode.REVIEW_DOCS)
print(f"item index: {index_items.doc_count} documents, "
      f"{len(index_items.postings)} terms")
print(f"review index: {index_reviews.doc_count} documents\n")

for label, ranking in (
        ("item-centric", score_item_centric("scary", index_items)),
        ("review-centric", score_review_centric("scary", index_reviews))):
    print(f"'scary' ranked {label}:")
    for item_id, score in ranking.entries:
        bar = "#" * int(score * 8)
        print(f"  {item_id:8s} {score:7.4f} {bar}")
    print()

print("note how 'orchard' (three short on-topic reviews) overtakes 'harbor'")
print("under the review-centric sum, while single-document BM25 saturates.")
