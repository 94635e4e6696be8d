import json

import numpy as np
import pytest

import synth
from softattr.corpus import (CorpusError, Judgment, Relation,
                             build_tag_collection, dump_judgments, infer_preferences,
                             judgment_to_json, load_corpus, load_judgments,
                             load_items, load_ratings, load_reviews, load_tags,
                             TagAssignment)


class TestIngestion:
    def test_load_corpus_counts(self, tiny_corpus):
        corpus = load_corpus(tiny_corpus["items"], tiny_corpus["reviews"],
                             tiny_corpus["ratings"], tiny_corpus["tags"])
        assert len(corpus.items) == 12
        assert len(corpus.reviews) == 14
        assert corpus.items["m1"].title == "Harbor Lights"
        assert corpus.items["m1"].seen_count == 40
        assert len(corpus.reviews.by_item("m1")) == 2

    def test_empty_reviews_file(self, tmp_path, tiny_corpus):
        empty = tmp_path / "none.jsonl"
        empty.write_text("", encoding="utf-8")
        store = load_reviews(empty, load_items(tiny_corpus["items"]))
        assert len(store) == 0

    def test_dangling_rating_item(self, tmp_path, tiny_corpus):
        bad = tmp_path / "bad_ratings.csv"
        bad.write_text("user_id,item_id,rating\nu1,m1,4\nu1,nope,3\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="nope"):
            load_ratings(bad, load_items(tiny_corpus["items"]))

    def test_malformed_row_names_file_and_line(self, tmp_path):
        bad = tmp_path / "items.csv"
        bad.write_text("id,title,seen_count,rating_count\nm1,T,notanum,3\n",
                       encoding="utf-8")
        with pytest.raises(CorpusError, match=r"items\.csv:2"):
            load_items(bad)

    def test_bad_header_rejected(self, tmp_path):
        bad = tmp_path / "items.csv"
        bad.write_text("id,name\nm1,T\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="header"):
            load_items(bad)

    def test_duplicate_rating_rejected(self, tmp_path):
        bad = tmp_path / "ratings.csv"
        bad.write_text("user_id,item_id,rating\nu1,m1,4\nu1,m1,5\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="duplicate"):
            load_ratings(bad)

    def test_rfc4180_quoting(self, tmp_path):
        path = tmp_path / "items.csv"
        path.write_text('id,title,seen_count,rating_count\n'
                        'm1,"Comma, The",3,4\n', encoding="utf-8")
        assert load_items(path)["m1"].title == "Comma, The"


class TestTagCollection:
    def test_threshold_boundary_inclusive(self):
        # 3 of 20 taggers used the tag: exactly alpha=0.15, belongs to X+.
        rows = [TagAssignment(f"u{i}", "m1", "scary") for i in range(3)]
        rows += [TagAssignment(f"u{i}", "m1", "other") for i in range(3, 20)]
        coll = build_tag_collection(rows, alpha=0.15, min_taggers=1)
        assert "m1" in coll.positives["scary"]

    def test_below_threshold_not_positive_nor_negative(self):
        rows = [TagAssignment("u0", "m1", "scary")]
        rows += [TagAssignment(f"u{i}", "m1", "other") for i in range(1, 20)]
        coll = build_tag_collection(rows, alpha=0.15, min_taggers=1)
        # 1/20 < 0.15 and the tag was assigned, so m1 is in neither set.
        assert "scary" not in coll.positives or "m1" not in coll.positives["scary"]
        if "scary" in coll.negatives:
            assert "m1" not in coll.negatives["scary"]

    def test_attribute_with_no_positives_removed(self):
        rows = [TagAssignment(f"u{i}", "m1", "rare") for i in range(1)]
        rows += [TagAssignment(f"u{i}", "m1", "common") for i in range(1, 30)]
        coll = build_tag_collection(rows, alpha=0.5, min_taggers=1)
        assert "rare" not in coll.positives
        assert "common" in coll.positives

    def test_min_taggers_drops_items_entirely(self):
        rows = [TagAssignment(f"u{i}", "m1", "scary") for i in range(10)]
        rows += [TagAssignment(f"u{i}", "m2", "scary") for i in range(2)]
        coll = build_tag_collection(rows, alpha=0.1, min_taggers=5)
        assert coll.items == frozenset({"m1"})
        assert "m2" not in coll.positives["scary"]
        assert "m2" not in coll.negatives["scary"]

    def test_zero_assignments_means_negative(self):
        rows = [TagAssignment(f"u{i}", "m1", "scary") for i in range(5)]
        rows += [TagAssignment(f"u{i}", "m2", "funny") for i in range(5)]
        coll = build_tag_collection(rows, alpha=0.15, min_taggers=1)
        assert "m2" in coll.negatives["scary"]
        assert "m1" in coll.negatives["funny"]

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(8)
        rows = [TagAssignment(f"u{int(rng.integers(0, 30))}",
                              f"m{int(rng.integers(0, 10))}",
                              f"t{int(rng.integers(0, 5))}")
                for _ in range(600)]
        previous = None
        for alpha in (0.05, 0.1, 0.2, 0.4, 0.6):
            coll = build_tag_collection(rows, alpha=alpha, min_taggers=1)
            flat = {(t, i) for t, items in coll.positives.items() for i in items}
            if previous is not None:
                assert flat <= previous, "raising alpha added a positive"
            previous = flat

    def test_distinct_users_in_denominator(self):
        # One user tagging the same item many times still counts once.
        rows = [TagAssignment("u0", "m1", "scary")] * 5
        rows += [TagAssignment(f"u{i}", "m1", "other") for i in range(1, 4)]
        coll = build_tag_collection(rows, alpha=0.25, min_taggers=1)
        assert "m1" in coll.positives["scary"]   # 1 of 4 users = 0.25


class TestInferPreferences:
    def test_hand_enumerated_example(self):
        # X+={a,b}, X0={c}, X-={d}, anchor=r: rules give exactly 9 pairs.
        j = Judgment(rater_id="r1", attribute_id="t", anchor_id="r",
                     less=("d",), same=("c",), more=("a", "b"))
        got = {(p.high, p.low, p.relation) for p in infer_preferences(j)}
        expected = {
            ("a", "d", Relation.STRONG_MORE),
            ("b", "d", Relation.STRONG_MORE),
            ("a", "c", Relation.MORE), ("a", "r", Relation.MORE),
            ("b", "c", Relation.MORE), ("b", "r", Relation.MORE),
            ("c", "d", Relation.MORE), ("r", "d", Relation.MORE),
            ("c", "r", Relation.TIE),
        }
        assert got == expected
        assert len(infer_preferences(j)) == 9

    def test_empty_buckets_yield_nothing(self):
        j = Judgment(rater_id="r1", attribute_id="t", anchor_id="x",
                     less=(), same=(), more=())
        assert infer_preferences(j) == []

    def test_count_law_random(self):
        rng = np.random.default_rng(17)
        for _ in range(2000):
            j = synth.random_judgment(rng)
            p, s, n = len(j.more), len(j.same), len(j.less)
            expected = p * n + p * (s + 1) + (s + 1) * n + (s + 1) * s // 2
            pairs = infer_preferences(j)
            assert len(pairs) == expected
            # no duplicates, no self-relations
            assert len({(q.high, q.low, q.relation) for q in pairs}) == len(pairs)
            assert all(q.high != q.low for q in pairs)

    def test_tie_pairs_canonicalized(self):
        j = Judgment(rater_id="r1", attribute_id="t", anchor_id="z",
                     less=(), same=("b", "a"), more=())
        ties = [p for p in infer_preferences(j) if p.relation is Relation.TIE]
        for p in ties:
            assert p.high < p.low

    def test_judgment_invariants_enforced(self):
        with pytest.raises(CorpusError):
            Judgment(rater_id="r", attribute_id="t", anchor_id="x",
                     less=("a",), same=("a",), more=())
        with pytest.raises(CorpusError):
            Judgment(rater_id="r", attribute_id="t", anchor_id="x",
                     less=("x",), same=(), more=())


class TestJudgmentRoundTrip:
    def test_byte_identical_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        judgments = [synth.random_judgment(rng) for _ in range(50)]
        path = tmp_path / "judgments.jsonl"
        dump_judgments(judgments, path)
        first = path.read_bytes()
        reloaded = load_judgments(path)
        path2 = tmp_path / "again.jsonl"
        dump_judgments(reloaded, path2)
        assert path2.read_bytes() == first
        assert reloaded == judgments

    def test_repeated_tuples_kept_with_sequence_numbers(self, tmp_path):
        j = {"rater_id": "r1", "attribute": "t", "anchor_id": "x",
             "less": ["a"], "same": [], "more": ["b"]}
        path = tmp_path / "judgments.jsonl"
        path.write_text(json.dumps(j) + "\n" + json.dumps(j) + "\n", encoding="utf-8")
        loaded = load_judgments(path)
        assert len(loaded) == 2
        assert loaded[0].seq != loaded[1].seq

    def test_unknown_item_rejected_when_catalog_given(self, tmp_path, tiny_corpus):
        j = {"rater_id": "r1", "attribute": "t", "anchor_id": "m1",
             "less": ["ghost"], "same": [], "more": ["m2"]}
        path = tmp_path / "judgments.jsonl"
        path.write_text(json.dumps(j) + "\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="ghost"):
            load_judgments(path, load_items(tiny_corpus["items"]))

    def test_canonical_line_shape(self):
        j = Judgment(rater_id="r1", attribute_id="scary", anchor_id="m1",
                     less=("m2",), same=(), more=("m3",))
        assert judgment_to_json(j) == (
            '{"rater_id":"r1","attribute":"scary","anchor_id":"m1",'
            '"less":["m2"],"same":[],"more":["m3"]}')
