"""Attribute representations in embedding space and their scorers.

Three model families, ordered by supervision strength:

* CB   -- centroid of the top-k term-ranked items' embeddings, scored by
          cosine similarity.
* WWD  -- logistic regression on pseudo-labels taken from the top/bottom
          of a term-based ranking; scores are class-1 probabilities.
* SWD  -- linear ranking SVM trained on pairwise preferences inferred
          from judgments; scores are raw dot products.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import PreferencePair, Relation, SoftAttribute
from .embeddings import FactorModel
from .textrank import ScoredList

logger = logging.getLogger(__name__)


class AttributeModelError(ValueError):
    """Unusable inputs for building or training an attribute model."""


# ---------------------------------------------------------------------------
# Centroid-based (CB)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CentroidModel:
    attribute_id: str
    v: np.ndarray
    k: int
    base: str   # term-based ranking that seeded it ("tb-ic" or "tb-rc")


def build_centroid(attribute: SoftAttribute | str, base_ranking: ScoredList,
                   k: int, model: FactorModel) -> CentroidModel:
    """Average the embeddings of the top-k positively scored items.

    Fewer than k items are used when the ranking has fewer items with a
    strictly positive score; none at all is an error.
    """
    if k < 1:
        raise AttributeModelError("k must be >= 1")
    attr_id = attribute.id if isinstance(attribute, SoftAttribute) else attribute
    top = [item_id for item_id, score in base_ranking.entries if score > 0.0][:k]
    if not top:
        raise AttributeModelError(
            f"attribute {attr_id!r} has no textual evidence (no positive base score)")
    vectors = _embeddings_for(top, model)
    return CentroidModel(attribute_id=attr_id, v=vectors.mean(axis=0), k=k,
                         base=base_ranking.method)


def score_cb(item_id: str, m: CentroidModel, model: FactorModel) -> float:
    """Cosine similarity between the item embedding and the centroid."""
    x = model.item_vectors[item_id]
    nx = float(np.linalg.norm(x))
    nv = float(np.linalg.norm(m.v))
    if nx == 0.0 or nv == 0.0:
        return 0.0
    return float(x @ m.v) / (nx * nv)


# ---------------------------------------------------------------------------
# Weakly supervised weighted dimensions (WWD)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PseudoLabelSet:
    attribute_id: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    z: float


@dataclass(frozen=True)
class LinearAttributeModel:
    attribute_id: str
    w: np.ndarray
    bias: float
    kind: str   # "wwd" or "swd"

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.w)) or not math.isfinite(self.bias):
            raise AttributeModelError("model weights must be finite")


def make_pseudo_labels(base_ranking: ScoredList, z: float) -> PseudoLabelSet:
    """Top z-fraction of the ranking as positives (only while scores stay
    strictly positive), the same number from the bottom as negatives."""
    if not 0.0 < z <= 0.5:
        raise AttributeModelError(f"z must be in (0, 0.5], got {z}")
    n = len(base_ranking.entries)
    n_positive_scores = sum(1 for _, score in base_ranking.entries if score > 0.0)
    n_pos = min(int(math.floor(z * n)), n_positive_scores)
    if n_pos == 0:
        raise AttributeModelError(
            f"attribute {base_ranking.attribute_id!r}: insufficient positive evidence")
    positives = tuple(item_id for item_id, _ in base_ranking.entries[:n_pos])
    negatives = tuple(item_id for item_id, _ in base_ranking.entries[n - n_pos:])
    return PseudoLabelSet(attribute_id=base_ranking.attribute_id,
                          positives=positives, negatives=negatives, z=z)


@dataclass
class LogRegConfig:
    l2: float = 1.0
    learning_rate: float | None = None   # None: 1 / (0.25 * max||x||^2 + l2)
    max_iters: int = 10000
    tolerance: float = 1e-8
    seed: int = 0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_loss_and_grad(w: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray,
                           l2: float) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus (l2/2)*||w||^2; bias is unregularized."""
    z = X @ w + bias
    # log(1 + e^z) - y*z, computed without overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    p = _sigmoid(z)
    grad_w = X.T @ (p - y) / len(y) + l2 * w
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def train_wwd(labels: PseudoLabelSet, model: FactorModel,
              cfg: LogRegConfig | None = None) -> LinearAttributeModel:
    """Fit L2-regularized logistic regression on the pseudo-labeled items
    by full-batch gradient descent to gradient-norm tolerance."""
    cfg = cfg or LogRegConfig()
    if not labels.positives or not labels.negatives:
        raise AttributeModelError("both label sets must be non-empty")
    items = list(labels.positives) + list(labels.negatives)
    X = _embeddings_for(items, model)
    y = np.array([1.0] * len(labels.positives) + [0.0] * len(labels.negatives))

    lr = cfg.learning_rate
    if lr is None:
        lr = 1.0 / (0.25 * float(np.max(np.sum(X * X, axis=1))) + cfg.l2)

    w = np.zeros(model.dim)
    bias = 0.0
    for _ in range(cfg.max_iters):
        loss, grad_w, grad_b = logistic_loss_and_grad(w, bias, X, y, cfg.l2)
        if not math.isfinite(loss):
            raise AttributeModelError("logistic training diverged (non-finite loss)")
        if math.sqrt(float(grad_w @ grad_w) + grad_b * grad_b) <= cfg.tolerance:
            break
        w = w - lr * grad_w
        bias = bias - lr * grad_b
    return LinearAttributeModel(attribute_id=labels.attribute_id, w=w, bias=bias,
                                kind="wwd")


def score_wwd(item_id: str, m: LinearAttributeModel, model: FactorModel) -> float:
    """Class-1 probability of the item under the logistic model."""
    z = float(m.w @ model.item_vectors[item_id]) + m.bias
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


# ---------------------------------------------------------------------------
# Supervised weighted dimensions (SWD): linear ranking SVM
# ---------------------------------------------------------------------------

@dataclass
class RankSVMConfig:
    C: float = 1.0
    max_iters: int = 1000
    tolerance: float = 0.05   # relative duality-gap target
    seed: int = 0
    include_ties: bool = False

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


MARGINS = {Relation.MORE: 1.0, Relation.STRONG_MORE: 2.0}


def swd_objective(w: np.ndarray, prefs: Sequence[PreferencePair], model: FactorModel,
                  cfg: RankSVMConfig | None = None) -> float:
    """0.5*||w||^2 + C * sum of hinge slacks over the usable constraints."""
    cfg = cfg or RankSVMConfig()
    D, m, bound = _constraint_system(prefs, model, cfg)
    return _primal(w, D, m, bound)


def train_swd(prefs: Sequence[PreferencePair], model: FactorModel,
              cfg: RankSVMConfig | None = None,
              on_epoch: Callable[[int, float, float], None] | None = None,
              ) -> LinearAttributeModel:
    """Minimize 0.5*||w||^2 + C*sum_p max(0, margin_p - w.(x_hi - x_lo)).

    Margins are 1 for MORE and 2 for STRONG_MORE constraints; TIE pairs
    are dropped unless ``include_ties``, in which case each tie adds two
    zero-margin hinges penalizing either direction.  The equivalent
    box-constrained dual QP is solved with L-BFGS-B (deterministic; no
    randomness is consumed) for at most ``max_iters`` iterations; the
    final relative duality gap is checked against ``tolerance`` and
    logged when unmet.  ``on_epoch(iteration, best_objective, gap)``
    observes solver progress; the reported best objective never
    increases.
    """
    from scipy import optimize

    cfg = cfg or RankSVMConfig()
    attr_ids = {p.attribute_id for p in prefs}
    attr_id = attr_ids.pop() if len(attr_ids) == 1 else "+".join(sorted(attr_ids))
    D, m, bound = _constraint_system(prefs, model, cfg)
    if D.shape[0] == 0:
        raise AttributeModelError("no usable (non-tie) preferences to train on")

    def neg_dual(alpha: np.ndarray) -> tuple[float, np.ndarray]:
        w = D.T @ alpha
        return 0.5 * float(w @ w) - float(m @ alpha), D @ w - m

    progress = {"iteration": 0, "best": _primal(np.zeros(model.dim), D, m, bound)}

    def observe(alpha: np.ndarray) -> None:
        progress["iteration"] += 1
        w = D.T @ alpha
        primal = _primal(w, D, m, bound)
        progress["best"] = min(progress["best"], primal)
        gap = primal - _dual(alpha, w, m)
        on_epoch(progress["iteration"], progress["best"], gap)

    result = optimize.minimize(
        neg_dual, np.zeros(len(m)), jac=True, method="L-BFGS-B",
        bounds=[(0.0, b) for b in bound],
        callback=observe if on_epoch is not None else None,
        options={"maxiter": cfg.max_iters, "ftol": 1e-14, "gtol": 1e-12})

    w = D.T @ result.x
    primal = _primal(w, D, m, bound)
    gap = primal - _dual(result.x, w, m)
    if gap > cfg.tolerance * max(1.0, abs(primal)):
        logger.debug("ranking SVM stopped at max_iters=%d with relative duality "
                     "gap %.3g (target %.3g)", cfg.max_iters,
                     gap / max(1.0, abs(primal)), cfg.tolerance)
    return LinearAttributeModel(attribute_id=attr_id, w=w, bias=0.0, kind="swd")


def score_swd(item_id: str, m: LinearAttributeModel, model: FactorModel) -> float:
    return float(m.w @ model.item_vectors[item_id])


def _constraint_system(prefs: Sequence[PreferencePair], model: FactorModel,
                       cfg: RankSVMConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Aggregate preferences into (difference matrix, margins, dual bounds).

    Repeated identical constraints collapse into one with a dual bound of
    ``count * C`` -- the same optimization problem, fewer coordinates.
    """
    counts: dict[tuple[str, str, float], int] = {}
    for p in prefs:
        if p.relation is Relation.TIE:
            if not cfg.include_ties:
                continue
            for hi, lo in ((p.high, p.low), (p.low, p.high)):
                key = (hi, lo, 0.0)
                counts[key] = counts.get(key, 0) + 1
        else:
            key = (p.high, p.low, MARGINS[p.relation])
            counts[key] = counts.get(key, 0) + 1
    keys = sorted(counts)
    if not keys:
        return np.zeros((0, model.dim)), np.zeros(0), np.zeros(0)
    item_ids = sorted({i for hi, lo, _ in keys for i in (hi, lo)})
    vectors = dict(zip(item_ids, _embeddings_for(item_ids, model)))
    D = np.stack([vectors[hi] - vectors[lo] for hi, lo, _ in keys])
    m = np.array([margin for _, _, margin in keys])
    bound = np.array([cfg.C * counts[k] for k in keys])
    return D, m, bound


def _primal(w: np.ndarray, D: np.ndarray, m: np.ndarray, bound: np.ndarray) -> float:
    hinge = np.maximum(0.0, m - D @ w)
    return 0.5 * float(w @ w) + float(bound @ hinge)


def _dual(alpha: np.ndarray, w: np.ndarray, m: np.ndarray) -> float:
    return float(alpha @ m) - 0.5 * float(w @ w)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _embeddings_for(item_ids: Sequence[str], model: FactorModel) -> np.ndarray:
    missing = [i for i in item_ids if i not in model.item_vectors]
    if missing:
        raise AttributeModelError(f"items without embeddings: {missing}")
    return model.item_matrix(item_ids)


def scored_list(attr_model: CentroidModel | LinearAttributeModel, model: FactorModel,
                item_ids: Iterable[str], method: str = "") -> ScoredList:
    """Score every item under the attribute model, ranked descending."""
    if isinstance(attr_model, CentroidModel):
        scorer = lambda i: score_cb(i, attr_model, model)
        method = method or f"cb+{attr_model.base}"
    elif attr_model.kind == "wwd":
        scorer = lambda i: score_wwd(i, attr_model, model)
        method = method or "wwd"
    else:
        scorer = lambda i: score_swd(i, attr_model, model)
        method = method or "swd"
    scores = {item_id: scorer(item_id) for item_id in item_ids}
    return ScoredList.from_scores(attr_model.attribute_id, scores, method=method)


# ---------------------------------------------------------------------------
# Export (exact float round-trip via JSON repr)
# ---------------------------------------------------------------------------

def attr_model_to_json(m: CentroidModel | LinearAttributeModel) -> str:
    if isinstance(m, CentroidModel):
        payload = {"attribute_id": m.attribute_id, "kind": "cb", "dim": len(m.v),
                   "w": m.v.tolist(), "bias": 0.0, "k": m.k, "base": m.base}
    else:
        payload = {"attribute_id": m.attribute_id, "kind": m.kind, "dim": len(m.w),
                   "w": m.w.tolist(), "bias": m.bias}
    return json.dumps(payload)


def attr_model_from_json(text: str) -> CentroidModel | LinearAttributeModel:
    payload = json.loads(text)
    w = np.array(payload["w"], dtype=np.float64)
    if payload["kind"] == "cb":
        return CentroidModel(attribute_id=payload["attribute_id"], v=w,
                             k=int(payload["k"]), base=payload["base"])
    return LinearAttributeModel(attribute_id=payload["attribute_id"], w=w,
                                bias=float(payload["bias"]), kind=payload["kind"])
