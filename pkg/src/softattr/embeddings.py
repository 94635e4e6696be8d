"""Matrix-factorization item/user embeddings trained by SGD.

Minimizes, per observed rating, the squared reconstruction error plus L2
penalties on the two vectors involved:

    (r_ij - <u_i, x_j>)^2 + lambda1 * ||u_i||^2 + lambda2 * ||x_j||^2

Vectors are initialized from a seeded Gaussian and updated one observed
triple at a time; training is fully deterministic given the config seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import RatingSet


class TrainingError(RuntimeError):
    """Training diverged or received unusable inputs."""


@dataclass
class TrainConfig:
    dim: int = 25
    learning_rate: float = 0.02
    epochs: int = 100
    lambda1: float = 0.05
    lambda2: float = 0.05
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.init_scale <= 0:
            raise ValueError("learning_rate and init_scale must be positive")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization strengths must be >= 0")


@dataclass
class FactorModel:
    dim: int
    user_vectors: dict[str, np.ndarray]
    item_vectors: dict[str, np.ndarray]
    lambda1: float
    lambda2: float
    epoch_loss: list[float] = field(default_factory=list, compare=False)

    def predict(self, user_id: str, item_id: str) -> float:
        return float(self.user_vectors[user_id] @ self.item_vectors[item_id])

    def item_matrix(self, item_ids: Iterable[str]) -> np.ndarray:
        return np.stack([self.item_vectors[i] for i in item_ids])


def per_example_objective(u: np.ndarray, x: np.ndarray, r: float,
                          lambda1: float, lambda2: float) -> float:
    err = r - float(u @ x)
    return err * err + lambda1 * float(u @ u) + lambda2 * float(x @ x)


def per_example_gradient(u: np.ndarray, x: np.ndarray, r: float,
                         lambda1: float, lambda2: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of the per-example objective w.r.t. (u, x)."""
    err = r - float(u @ x)
    grad_u = -2.0 * err * x + 2.0 * lambda1 * u
    grad_x = -2.0 * err * u + 2.0 * lambda2 * x
    return grad_u, grad_x


def train_mf(ratings: RatingSet, cfg: TrainConfig,
             user_ids: Iterable[str] | None = None,
             item_ids: Iterable[str] | None = None) -> FactorModel:
    """Factorize the rating matrix by per-example SGD.

    ``user_ids``/``item_ids`` may extend the universe beyond rated
    entities; the extras keep their random initialization so downstream
    lookups stay total.
    """
    if len(ratings) == 0:
        raise TrainingError("cannot train on an empty rating set")

    users = sorted(set(ratings.user_ids()) | set(user_ids or ()))
    items = sorted(set(ratings.item_ids()) | set(item_ids or ()))
    u_index = {u: i for i, u in enumerate(users)}
    x_index = {x: i for i, x in enumerate(items)}

    rng = np.random.default_rng(cfg.seed)
    U = rng.normal(0.0, cfg.init_scale, size=(len(users), cfg.dim))
    X = rng.normal(0.0, cfg.init_scale, size=(len(items), cfg.dim))

    ui = np.array([u_index[t.user_id] for t in ratings], dtype=np.intp)
    xi = np.array([x_index[t.item_id] for t in ratings], dtype=np.intp)
    r = np.array([t.value for t in ratings], dtype=np.float64)

    lr, lam1, lam2 = cfg.learning_rate, cfg.lambda1, cfg.lambda2
    epoch_loss: list[float] = []
    # Divergence shows up as overflow; let values run to inf/nan and catch
    # them through the per-epoch loss check instead of warning per update.
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.epochs):
            order = rng.permutation(len(r))
            for t in order:
                a, b = ui[t], xi[t]
                u, x = U[a], X[b]
                err = r[t] - u @ x
                grad_u = -2.0 * err * x + 2.0 * lam1 * u
                grad_x = -2.0 * err * u + 2.0 * lam2 * x
                U[a] = u - lr * grad_u
                X[b] = x - lr * grad_x
            loss = _objective(U, X, ui, xi, r, lam1, lam2)
            if not math.isfinite(loss):
                raise TrainingError(
                    "training loss is not finite (diverged); "
                    "try a smaller learning_rate")
            epoch_loss.append(loss)

    user_vectors = {u: U[i].copy() for u, i in u_index.items()}
    item_vectors = {x: X[i].copy() for x, i in x_index.items()}
    return FactorModel(dim=cfg.dim, user_vectors=user_vectors, item_vectors=item_vectors,
                       lambda1=lam1, lambda2=lam2, epoch_loss=epoch_loss)


def _objective(U: np.ndarray, X: np.ndarray, ui: np.ndarray, xi: np.ndarray,
               r: np.ndarray, lam1: float, lam2: float) -> float:
    # Overflow to inf is fine here: the caller treats non-finite as divergence.
    with np.errstate(over="ignore", invalid="ignore"):
        pred = np.einsum("ij,ij->i", U[ui], X[xi])
        err = r - pred
        reg = lam1 * np.einsum("ij,ij->i", U[ui], U[ui]) + \
            lam2 * np.einsum("ij,ij->i", X[xi], X[xi])
        return float(np.sum(err * err + reg))


def training_objective(model: FactorModel, ratings: RatingSet) -> float:
    """Sum of the per-example objectives over the observed triples."""
    total = 0.0
    for t in ratings:
        total += per_example_objective(model.user_vectors[t.user_id],
                                       model.item_vectors[t.item_id],
                                       t.value, model.lambda1, model.lambda2)
    return total


def reconstruction_rmse(model: FactorModel, ratings: RatingSet) -> float:
    if len(ratings) == 0:
        raise TrainingError("RMSE is undefined on an empty rating set")
    total = 0.0
    for t in ratings:
        if t.user_id not in model.user_vectors:
            raise TrainingError(f"user {t.user_id!r} has no embedding")
        if t.item_id not in model.item_vectors:
            raise TrainingError(f"item {t.item_id!r} has no embedding")
        err = t.value - model.predict(t.user_id, t.item_id)
        total += err * err
    return math.sqrt(total / len(ratings))


# ---------------------------------------------------------------------------
# Serialization (exact float round-trip via JSON repr)
# ---------------------------------------------------------------------------

def model_to_json(model: FactorModel) -> str:
    users = sorted(model.user_vectors)
    items = sorted(model.item_vectors)
    payload = {
        "dim": model.dim,
        "lambda1": model.lambda1,
        "lambda2": model.lambda2,
        "user_ids": users,
        "user_values": [v for u in users for v in model.user_vectors[u].tolist()],
        "item_ids": items,
        "item_values": [v for x in items for v in model.item_vectors[x].tolist()],
    }
    return json.dumps(payload)


def model_from_json(text: str) -> FactorModel:
    payload = json.loads(text)
    dim = int(payload["dim"])

    def unpack(ids: list[str], values: list[float]) -> dict[str, np.ndarray]:
        arr = np.array(values, dtype=np.float64).reshape(len(ids), dim)
        return {name: arr[i].copy() for i, name in enumerate(ids)}

    return FactorModel(
        dim=dim,
        user_vectors=unpack(payload["user_ids"], payload["user_values"]),
        item_vectors=unpack(payload["item_ids"], payload["item_values"]),
        lambda1=float(payload["lambda1"]),
        lambda2=float(payload["lambda2"]),
    )


def save_model(model: FactorModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> FactorModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
