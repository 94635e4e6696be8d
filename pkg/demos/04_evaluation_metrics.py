"""The evaluation toolkit: gamma, weighted gamma, inter-rater agreement,
bucket-size analysis, and rater-level cross-validation of the ranking SVM.
"""

import numpy as np

from softattr.corpus import Judgment
from softattr.embeddings import FactorModel
from softattr.attrmodels import RankSVMConfig
from softattr.evaluation import (agreement_table, bucket_distribution,
                                 crossval_swd, gamma, mean_weighted_gamma,
                                 weighted_gamma)

# --- gamma against binary ground truth --------------------------------------
scores = {"a": 4.0, "b": 3.0, "c": 2.0, "d": 1.0}
print("gamma, positives={a,b} vs negatives={c,d}:",
      gamma(scores, ["a", "b"], ["c", "d"]))
print("gamma after swapping b and d's scores:",
      gamma({"a": 4.0, "b": 1.0, "c": 2.0, "d": 3.0}, ["a", "b"], ["c", "d"]))

# --- weighted gamma on one judgment ------------------------------------------
judgment = Judgment(rater_id="w1", attribute_id="scary", anchor_id="x",
                    less=("p",), same=("q",), more=("r",))
perfect = {"p": 1.0, "q": 2.0, "x": 2.5, "r": 4.0}
flawed = {"p": 3.0, "q": 2.0, "x": 2.5, "r": 4.0}
print("\nweighted gamma, concordant scores:   ", weighted_gamma(perfect, judgment))
print("weighted gamma, one outer inversion:", round(weighted_gamma(flawed, judgment), 4))

# --- agreement and buckets over simulated raters ----------------------------
rng = np.random.default_rng(3)
items = [f"x{k:02d}" for k in range(30)]
truth = {i: float(rng.normal()) for i in items}
judgments = []
for r in range(14):
    # two archetypes of rater: faithful and contrarian-on-close-calls
    for t in range(3):
        chosen = list(rng.choice(items, size=9, replace=False))
        noise = 0.0 if r % 2 == 0 else 0.8
        noisy = {i: truth[i] + rng.normal(0, noise) for i in chosen}
        ordered = sorted(chosen, key=lambda i: noisy[i])
        judgments.append(Judgment(
            rater_id=f"w{r}", attribute_id="scary", anchor_id=ordered[4],
            less=tuple(ordered[:3]), same=tuple(ordered[3:4] + ordered[5:6]),
            more=tuple(ordered[6:])))

for stats in agreement_table(judgments):
    print(f"\nagreement({stats.attribute_id}) = {stats.agree:.3f} "
          f"[{stats.group}] over {stats.distinct_pairs} multiply-voted pairs "
          f"({stats.total_comparisons} comparisons, {stats.tie_count} ties)")

dist = bucket_distribution(judgments)
print(f"mean bucket sizes: less={dist.overall.less:.2f} "
      f"same={dist.overall.same:.2f} more={dist.overall.more:.2f}")

# --- the judgments score a fixed ranking via mean G' ------------------------
flat_scores = {i: truth[i] for i in items}
print(f"mean G' of the true ranking: "
      f"{mean_weighted_gamma(flat_scores, judgments):.3f}")

# --- rater-level cross-validation of SWD ------------------------------------
model = FactorModel(dim=6, user_vectors={},
                    item_vectors={i: rng.normal(size=6) for i in items},
                    lambda1=0.0, lambda2=0.0)
w_star = rng.normal(size=6)
linear_truth = {i: float(w_star @ model.item_vectors[i]) for i in items}
linear_judgments = []
for r in range(12):
    for t in range(2):
        chosen = list(rng.choice(items, size=9, replace=False))
        ordered = sorted(chosen, key=lambda i: linear_truth[i])
        linear_judgments.append(Judgment(
            rater_id=f"v{r}", attribute_id="grit", anchor_id=ordered[4],
            less=tuple(ordered[:3]), same=tuple(ordered[3:4] + ordered[5:6]),
            more=tuple(ordered[6:])))
result = crossval_swd(linear_judgments, model, RankSVMConfig(), folds=4, seed=1)
print(f"\n4-fold CV mean G' on linearly realizable judgments: "
      f"{result.overall:.3f} (skipped cells: {len(result.skipped)})")
