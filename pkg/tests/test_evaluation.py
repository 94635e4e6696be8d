import numpy as np
import pytest

import synth
from softattr.attrmodels import RankSVMConfig
from softattr.corpus import Judgment
from softattr.embeddings import FactorModel
from softattr.evaluation import (SKIPPED, AgreementStats, MetricUndefinedError,
                                 agreement, agreement_table, assign_agreement_groups,
                                 bucket_distribution, crossval_swd, gamma,
                                 learning_curve, make_folds, mean_weighted_gamma,
                                 weighted_gamma, weighted_pair_counts)


def brute_force_gprime(scores, j):
    """Independent enumerator: list every weighted pair explicitly."""
    middle = [j.anchor_id] + list(j.same)
    pairs = []
    for hi in middle:
        for lo in j.less:
            pairs.append((hi, lo, 1))
    for hi in j.more:
        for lo in middle:
            pairs.append((hi, lo, 1))
    for hi in j.more:
        for lo in j.less:
            pairs.append((hi, lo, 2))
    num = den = 0
    for hi, lo, weight in pairs:
        if scores[hi] > scores[lo]:
            num += weight
            den += weight
        elif scores[hi] < scores[lo]:
            num -= weight
            den += weight
    occupied = sum(1 for b in (j.less, j.same, j.more) if b)
    if occupied <= 1 or den == 0:
        return SKIPPED
    return num / den


def judgment(anchor, less=(), same=(), more=(), rater="r1", attr="t", seq=0):
    return Judgment(rater_id=rater, attribute_id=attr, anchor_id=anchor,
                    less=tuple(less), same=tuple(same), more=tuple(more), seq=seq)


class TestGamma:
    def test_perfect_agreement(self):
        scores = {"p1": 3.0, "p2": 2.5, "n1": 1.0, "n2": 0.5}
        assert gamma(scores, ["p1", "p2"], ["n1", "n2"]) == 1.0

    def test_perfect_inversion(self):
        scores = {"p1": 0.1, "n1": 5.0}
        assert gamma(scores, ["p1"], ["n1"]) == -1.0

    def test_mixed_hand_case(self):
        # positives={a}, negatives={b,c}, scores a=2, b=3, c=1 -> (1-1)/2 = 0
        assert gamma({"a": 2.0, "b": 3.0, "c": 1.0}, ["a"], ["b", "c"]) == 0.0

    def test_all_tied_undefined(self):
        with pytest.raises(MetricUndefinedError, match="tied"):
            gamma({"a": 1.0, "b": 1.0}, ["a"], ["b"])

    def test_empty_or_overlapping_sets_rejected(self):
        with pytest.raises(MetricUndefinedError):
            gamma({"a": 1.0}, [], ["a"])
        with pytest.raises(MetricUndefinedError):
            gamma({"a": 1.0, "b": 2.0}, ["a"], ["a", "b"])

    def test_missing_score_reported(self):
        with pytest.raises(MetricUndefinedError, match="ghost"):
            gamma({"a": 1.0}, ["a"], ["ghost"])


class TestWeightedGamma:
    def test_fully_concordant(self):
        j = judgment("x", less=("p",), same=("q",), more=("r",))
        scores = {"p": 1.0, "q": 2.0, "x": 2.5, "r": 4.0}
        assert weighted_gamma(scores, j) == 1.0

    def test_hand_enumerated_third(self):
        j = judgment("x", less=("p",), same=("q",), more=("r",))
        scores = {"p": 3.0, "q": 2.0, "x": 2.5, "r": 4.0}
        assert weighted_gamma(scores, j) == pytest.approx(1.0 / 3.0)
        counts = weighted_pair_counts(scores, j)
        assert (counts.ns, counts.nd, counts.nss, counts.ndd) == (2, 2, 1, 0)

    def test_single_bucket_skipped(self):
        j = judgment("x", same=tuple(f"i{k}" for k in range(10)))
        scores = {i: float(k) for k, i in enumerate(j.all_items())}
        assert weighted_gamma(scores, j) is SKIPPED

    def test_all_scores_tied_skipped(self):
        j = judgment("x", less=("a",), more=("b",))
        assert weighted_gamma({"x": 1.0, "a": 1.0, "b": 1.0}, j) is SKIPPED

    def test_missing_score_is_error(self):
        j = judgment("x", less=("a",), more=("b",))
        with pytest.raises(MetricUndefinedError, match="'b'"):
            weighted_gamma({"x": 1.0, "a": 0.5}, j)

    def test_matches_brute_force_on_random(self):
        rng = np.random.default_rng(55)
        for _ in range(500):
            j = synth.random_judgment(rng)
            scores = {i: float(rng.integers(0, 6)) for i in j.all_items()}
            expected = brute_force_gprime(scores, j)
            got = weighted_gamma(scores, j)
            if expected is SKIPPED:
                assert got is SKIPPED
            else:
                assert got == expected

    def test_increasing_transform_invariance(self):
        rng = np.random.default_rng(56)
        for _ in range(100):
            j = synth.random_judgment(rng)
            scores = {i: float(rng.normal()) for i in j.all_items()}
            g1 = weighted_gamma(scores, j)
            warped = {i: np.exp(0.5 * s) + 3.0 for i, s in scores.items()}
            g2 = weighted_gamma(warped, j)
            if g1 is SKIPPED:
                assert g2 is SKIPPED
            else:
                assert g2 == pytest.approx(g1, abs=1e-12)

    def test_reversal_negates(self):
        rng = np.random.default_rng(57)
        for _ in range(100):
            j = synth.random_judgment(rng)
            scores = {i: float(rng.normal()) for i in j.all_items()}   # ties: prob 0
            g1 = weighted_gamma(scores, j)
            g2 = weighted_gamma({i: -s for i, s in scores.items()}, j)
            if g1 is SKIPPED:
                assert g2 is SKIPPED
            else:
                assert g2 == pytest.approx(-g1, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(58)
        for _ in range(300):
            j = synth.random_judgment(rng)
            scores = {i: float(rng.integers(0, 4)) for i in j.all_items()}
            g = weighted_gamma(scores, j)
            if g is not SKIPPED:
                assert -1.0 <= g <= 1.0


class TestMeanWeightedGamma:
    def test_single_judgment(self):
        j = judgment("x", less=("a",), more=("b",))
        scores = {"a": 0.0, "x": 1.0, "b": 2.0}
        assert mean_weighted_gamma(scores, [j]) == weighted_gamma(scores, j) == 1.0

    def test_two_raters_mean(self):
        j1 = judgment("x", less=("a",), more=("b",), rater="r1")
        j2 = judgment("x", less=("b",), more=("a",), rater="r2")
        scores = {"a": 0.0, "x": 1.0, "b": 2.0}
        # r1 sees G'=1, r2 sees G'=-1: mean 0
        assert mean_weighted_gamma(scores, [j1, j2]) == 0.0

    def test_per_rater_weighting_differs_from_flat(self):
        scores = {"a": 0.0, "x": 1.0, "b": 2.0}
        perfect = judgment("x", less=("a",), more=("b",), rater="busy")
        inverted = judgment("x", less=("b",), more=("a",), rater="lone")
        judgments = [perfect, perfect, perfect, inverted]
        assert mean_weighted_gamma(scores, judgments, per_rater=True) == 0.0
        assert mean_weighted_gamma(scores, judgments, per_rater=False) == 0.5

    def test_skipped_dropped_from_mean(self):
        scores = {"a": 0.0, "x": 1.0, "b": 2.0, "c": 3.0, "d": 4.0}
        valid = judgment("x", less=("a",), more=("b",), rater="r1")
        degenerate = judgment("x", same=("c", "d"), rater="r1")
        assert mean_weighted_gamma(scores, [valid, degenerate]) == 1.0

    def test_everything_skipped_is_error(self):
        scores = {"x": 1.0, "c": 1.0}
        degenerate = judgment("x", same=("c",))
        with pytest.raises(MetricUndefinedError):
            mean_weighted_gamma(scores, [degenerate])


class TestAgreement:
    def test_unanimous_direction(self):
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        j2 = judgment("z2", less=("a",), more=("b",), rater="r2")
        stats = agreement([j1, j2], "t")
        pair_value = 1.0   # both vote a < b
        assert stats.agree == pytest.approx(pair_value)

    def test_direction_plus_tie_is_full_agreement(self):
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        j2 = judgment("z2", same=("a", "b"), rater="r2")
        stats = agreement([j1, j2], "t")
        # votes on (a, b): one directional, one tie -> 0.5*(0.5+0.5) + 0 + 0.5 = 1.0
        assert stats.agree == pytest.approx(1.0)
        assert stats.tie_count == 1

    def test_opposite_directions_half(self):
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        j2 = judgment("z2", less=("b",), more=("a",), rater="r2")
        stats = agreement([j1, j2], "t")
        # 0.5*0.5 + 0.5*0.5 + 0 = 0.5
        assert stats.agree == pytest.approx(0.5)

    def test_single_voted_pairs_excluded(self):
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        stats = agreement([j1], "t")
        assert stats.agree is None
        assert stats.distinct_pairs == 0
        assert stats.judged_pairs > 0

    def test_strong_and_plain_count_as_same_direction(self):
        # a in less and b in more gives a strong pair; a in less, b in same
        # gives a plain pair: both are directional votes b > a.
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        j2 = judgment("z2", less=("a",), same=("b",), rater="r2")
        stats = agreement([j1, j2], "t")
        assert stats.agree == pytest.approx(1.0)

    def test_agree_in_unit_interval_random(self):
        rng = np.random.default_rng(60)
        judgments = [synth.random_judgment(rng, n_items_pool=15, rater=f"r{i % 6}")
                     for i in range(120)]
        stats = agreement(judgments, "attr")
        if stats.agree is not None:
            assert 0.0 <= stats.agree <= 1.0

    def test_counts_match_votes(self):
        j1 = judgment("z1", less=("a",), more=("b",), rater="r1")
        j2 = judgment("z2", less=("a",), more=("b",), rater="r2")
        j3 = judgment("z3", same=("a", "b"), rater="r3")
        stats = agreement([j1, j2, j3], "t")
        assert stats.distinct_pairs >= 1
        pair_votes = 3   # (a, b) voted three times
        assert stats.total_comparisons >= pair_votes


class TestAgreementGroups:
    def test_tercile_sizes_differ_by_at_most_one(self):
        for n in (3, 4, 5, 6, 7, 82):
            stats = [AgreementStats(attribute_id=f"a{k:03d}", agree=k / n,
                                    distinct_pairs=1, total_comparisons=2,
                                    tie_count=0, judged_pairs=1)
                     for k in range(n)]
            grouped = assign_agreement_groups(stats)
            sizes = {g: sum(1 for s in grouped if s.group == g)
                     for g in ("HIGH", "MEDIUM", "LOW")}
            assert max(sizes.values()) - min(sizes.values()) <= 1
            assert sum(sizes.values()) == n

    def test_high_group_has_highest_agreement(self):
        stats = [AgreementStats(attribute_id=a, agree=v, distinct_pairs=1,
                                total_comparisons=2, tie_count=0, judged_pairs=1)
                 for a, v in (("x", 0.9), ("y", 0.5), ("z", 0.1))]
        grouped = {s.attribute_id: s.group for s in assign_agreement_groups(stats)}
        assert grouped == {"x": "HIGH", "y": "MEDIUM", "z": "LOW"}

    def test_table_covers_all_attributes(self):
        rng = np.random.default_rng(61)
        judgments = []
        for attr in ("one", "two", "three"):
            judgments += [synth.random_judgment(rng, attribute=attr,
                                                rater=f"r{i % 4}") for i in range(20)]
        table = agreement_table(judgments)
        assert {s.attribute_id for s in table} == {"one", "two", "three"}


class TestBucketDistribution:
    def test_single_judgment(self):
        j = judgment("x", less=("a", "b", "c"), same=("d", "e", "f"),
                     more=("g", "h", "i", "k"))
        dist = bucket_distribution([j])
        assert (dist.overall.less, dist.overall.same, dist.overall.more) == (3, 3, 4)

    def test_per_attribute_and_overall(self):
        j1 = judgment("x", less=("a",), same=(), more=("b",), attr="p")
        j2 = judgment("y", less=("c", "d"), same=("e",), more=(), attr="q")
        dist = bucket_distribution([j1, j2])
        assert dist.per_attribute["p"].less == 1.0
        assert dist.per_attribute["q"].less == 2.0
        assert dist.overall.less == 1.5
        assert dist.overall.n_judgments == 2

    def test_empty_input(self):
        dist = bucket_distribution([])
        assert dist.overall.n_judgments == 0


class TestFolds:
    def test_partition_and_balance(self):
        raters = [f"r{i}" for i in range(23)]
        fold_of = make_folds(raters, folds=10, seed=1)
        assert set(fold_of) == set(raters)
        sizes = [sum(1 for f in fold_of.values() if f == k) for k in range(10)]
        assert max(sizes) - min(sizes) <= 1

    def test_single_fold_rejected(self):
        with pytest.raises(ValueError, match="folds"):
            make_folds([f"r{i}" for i in range(5)], folds=1)

    def test_too_few_raters_rejected(self):
        with pytest.raises(ValueError):
            make_folds(["a", "b"], folds=10)

    def test_deterministic(self):
        raters = [f"r{i}" for i in range(30)]
        assert make_folds(raters, 10, seed=4) == make_folds(raters, 10, seed=4)


def small_oracle_setup(seed=70, n_items=30, dim=4, n_raters=12, per_rater=2):
    rng = np.random.default_rng(seed)
    vectors = {f"i{k:02d}": rng.normal(size=dim) for k in range(n_items)}
    model = FactorModel(dim=dim, user_vectors={}, item_vectors=vectors,
                        lambda1=0.0, lambda2=0.0)
    w_star = rng.normal(size=dim)
    scores = {i: float(w_star @ v) for i, v in vectors.items()}
    items = sorted(vectors)
    judgments = []
    for r in range(n_raters):
        for t in range(per_rater):
            chosen = [items[k] for k in rng.choice(n_items, size=7, replace=False)]
            ordered = sorted(chosen, key=lambda i: scores[i])
            anchor = ordered[3]
            rest = ordered[:3] + ordered[4:]
            judgments.append(Judgment(
                rater_id=f"r{r:02d}", attribute_id="syn", anchor_id=anchor,
                less=tuple(rest[:2]), same=tuple(rest[2:4]), more=tuple(rest[4:]),
                seq=r * per_rater + t))
    return model, judgments


class TestCrossval:
    def test_recovers_hidden_direction(self):
        model, judgments = small_oracle_setup()
        result = crossval_swd(judgments, model, RankSVMConfig(), folds=4, seed=2)
        assert result.overall >= 0.9
        assert "syn" in result.per_attribute

    def test_deterministic(self):
        model, judgments = small_oracle_setup()
        r1 = crossval_swd(judgments, model, RankSVMConfig(), folds=4, seed=2)
        r2 = crossval_swd(judgments, model, RankSVMConfig(), folds=4, seed=2)
        assert r1.per_attribute == r2.per_attribute
        assert r1.overall == r2.overall

    def test_single_fold_rejected(self):
        model, judgments = small_oracle_setup()
        with pytest.raises(ValueError):
            crossval_swd(judgments, model, RankSVMConfig(), folds=1)


class TestLearningCurve:
    def test_curve_rises_toward_plateau(self):
        model, judgments = small_oracle_setup(n_raters=16, per_rater=2)
        curve = learning_curve(judgments, model, sizes=[2, 12], reps=6, folds=4,
                               seed=3)
        assert set(curve) == {2, 12}
        assert curve[12] >= curve[2] - 0.05
        assert curve[12] >= 0.85
