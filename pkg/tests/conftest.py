import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from softattr.embeddings import TrainConfig, train_mf

import synth


@pytest.fixture(scope="session")
def rating_fixture():
    return synth.make_rating_fixture()


@pytest.fixture(scope="session")
def synth_model(rating_fixture):
    """Embeddings trained on the synthetic ratings; item universe complete.

    The config is tuned for the fixture (light regularization, enough
    epochs to reach the noise floor).  Wall time is recorded so the
    acceptance suite can account for it.
    """
    cfg = TrainConfig(dim=25, learning_rate=0.08, epochs=150, lambda1=0.01,
                      lambda2=0.01, seed=5, init_scale=0.1)
    all_items = [synth.item_name(j) for j in range(rating_fixture.n_items)]
    all_users = [synth.user_name(i) for i in range(rating_fixture.n_users)]
    start = time.monotonic()
    model = train_mf(rating_fixture.train, cfg, user_ids=all_users,
                     item_ids=all_items)
    model.train_seconds = time.monotonic() - start
    model.train_config = cfg
    return model


@pytest.fixture(scope="session")
def w_star(synth_model):
    return synth.hidden_direction(synth_model)


@pytest.fixture(scope="session")
def oracle_judgment_set(synth_model, w_star):
    return synth.oracle_judgments(synth_model, w_star)


# ---------------------------------------------------------------------------
# Small file-based corpus for ingestion/CLI/service tests
# ---------------------------------------------------------------------------

TINY_ITEMS = [
    ("m1", "Harbor Lights", 40, 120),
    ("m2", "Static Noon", 35, 100),
    ("m3", "Glass Orchard", 30, 90),
    ("m4", "Night Ferry", 25, 80),
    ("m5", "Paper Canyon", 20, 70),
    ("m6", "Copper Field", 18, 60),
    ("m7", "Silent Motor", 15, 50),
    ("m8", "Violet Machine", 12, 40),
    ("m9", "Last Orchard", 10, 30),
    ("m10", "Iron Lullaby", 8, 20),
    ("m11", "Borrowed Sky", 6, 15),
    ("m12", "Hollow Parade", 5, 10),
]

TINY_REVIEWS = [
    ("r1", "m1", "a scary thriller, truly scary and tense"),
    ("r2", "m1", "moody harbor scenes and a violent finale"),
    ("r3", "m2", "funny and light, never scary"),
    ("r4", "m2", "the funniest film of the year"),
    ("r5", "m3", "scary moments balanced by warm humor"),
    ("r6", "m4", "a violent, gritty ride"),
    ("r7", "m5", "slow, romantic, and quietly funny"),
    ("r8", "m6", "forgettable but pleasant"),
    ("r9", "m7", "violent chase scenes dominate"),
    ("r10", "m8", "an odd machine of a movie, scary in places"),
    ("r11", "m9", "romantic orchard strolls"),
    ("r12", "m10", "a lullaby, nothing scary here"),
    ("r13", "m11", "sky-high stakes and violent storms"),
    ("r14", "m12", "a parade of jokes, very funny"),
]


def write_tiny_corpus(root: Path) -> dict:
    def csv_quote(s):
        return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s

    items = root / "items.csv"
    lines = ["id,title,seen_count,rating_count"]
    lines += [f"{i},{csv_quote(t)},{s},{r}" for i, t, s, r in TINY_ITEMS]
    items.write_text("\n".join(lines) + "\n", encoding="utf-8")

    reviews = root / "reviews.jsonl"
    import json
    reviews.write_text(
        "\n".join(json.dumps({"id": i, "item_id": m, "text": t})
                  for i, m, t in TINY_REVIEWS) + "\n", encoding="utf-8")

    rng = np.random.default_rng(3)
    ratings = root / "ratings.csv"
    rows = ["user_id,item_id,rating"]
    for u in range(8):
        for i, _, _, _ in TINY_ITEMS:
            if rng.random() < 0.7:
                rows.append(f"u{u},{i},{float(rng.integers(1, 6))}")
    ratings.write_text("\n".join(rows) + "\n", encoding="utf-8")

    # tags follow each item's "true" attributes so negatives stay non-empty
    tags = root / "tags.csv"
    true_tags = {"m1": ["scary", "violent"], "m2": ["funny"], "m3": ["scary"],
                 "m4": ["violent"], "m5": ["romantic", "funny"], "m6": ["romantic"],
                 "m7": ["violent"], "m8": ["scary"], "m9": ["romantic"],
                 "m10": ["funny"], "m11": ["violent"], "m12": ["funny"]}
    tag_rows = ["user_id,item_id,tag"]
    for u in range(60):
        for i, _, _, _ in TINY_ITEMS:
            if rng.random() < 0.8:
                options = true_tags[i]
                tag_rows.append(f"t{u},{i},{options[int(rng.integers(0, len(options)))]}")
    tags.write_text("\n".join(tag_rows) + "\n", encoding="utf-8")

    attributes = root / "attributes.txt"
    attributes.write_text("scary\nfunny\nviolent\n", encoding="utf-8")

    return {"items": items, "reviews": reviews, "ratings": ratings, "tags": tags,
            "attributes": attributes}


@pytest.fixture()
def tiny_corpus(tmp_path):
    return write_tiny_corpus(tmp_path)
