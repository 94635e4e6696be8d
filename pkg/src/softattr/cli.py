"""Operator command line: ingest, index, embed, score, evaluate, analyze,
sample tasks offline, and serve the annotation API.

Every flag can also be supplied through an environment variable with the
``SOFTATTR_`` prefix (e.g. ``SOFTATTR_SCORE_K=5``) or through a JSON
config file passed as ``--config`` whose top-level keys are subcommand
names mapping to flag defaults; explicit flags win.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import corpus as corpus_mod
from . import embeddings as emb_mod
from . import evaluation as eval_mod
from . import textrank
from .attrmodels import (AttributeModelError, LogRegConfig, RankSVMConfig,
                         build_centroid, make_pseudo_labels, scored_list, train_swd,
                         train_wwd)
from .corpus import CorpusError
from .embeddings import TrainConfig, TrainingError
from .evaluation import MetricUndefinedError
from .tasksampler import (BASELINE_ITEM_CENTRIC, BASELINE_REVIEW_CENTRIC,
                          SamplerError, SeenSet, TaskGenerator)
from .textrank import IndexMode

METHODS = ("tb-ic", "tb-rc", "cb-ic", "cb-rc", "wwd-ic", "wwd-rc", "swd")

_FAILURE_TYPES = (CorpusError, TrainingError, AttributeModelError,
                  MetricUndefinedError, SamplerError, OSError, ValueError)


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with per-subcommand flag defaults.")
@click.pass_context
def cli(ctx: click.Context, config: str | None) -> None:
    if config:
        with open(config, encoding="utf-8") as f:
            ctx.default_map = json.load(f)


def main() -> None:
    cli(auto_envvar_prefix="SOFTATTR")


def _announce(command: str, params: dict) -> None:
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()}
    click.echo("config: " + json.dumps({"command": command, **resolved}, sort_keys=True))


class _OutputGuard:
    """Deletes declared outputs when the command fails partway."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def declare(self, *paths: str | Path) -> None:
        self.paths.extend(Path(p) for p in paths)

    def discard_all(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _run(command: str, params: dict, body) -> None:
    _announce(command, params)
    guard = _OutputGuard()
    try:
        body(guard)
    except _FAILURE_TYPES as exc:
        guard.discard_all()
        raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------

def _corpus_options(fn):
    fn = click.option("--items", required=True,
                      type=click.Path(exists=True, dir_okay=False))(fn)
    fn = click.option("--reviews", required=True,
                      type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


def _get_index(store, mode: IndexMode, cache_dir: str | None):
    if cache_dir:
        cache = Path(cache_dir) / f"index-{mode.value}.pickle"
        index = textrank.load_index(cache, mode)
        if index is not None:
            return index
    index = textrank.build_index(store, mode)
    if cache_dir:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        textrank.save_index(index, Path(cache_dir) / f"index-{mode.value}.pickle")
    return index


def _base_ranking(method: str, attribute: str, indexes: dict, item_ids) -> textrank.ScoredList:
    if method.endswith("-rc"):
        return textrank.score_review_centric(attribute, indexes["rc"], item_ids)
    return textrank.score_item_centric(attribute, indexes["ic"], item_ids)


def _method_scored_list(method: str, attribute: str, *, indexes: dict, model,
                        item_ids, k: int, z: float, c: float, seed: int,
                        judgments=None) -> textrank.ScoredList:
    if method in ("tb-ic", "tb-rc"):
        return _base_ranking(method, attribute, indexes, item_ids)
    if method == "swd":
        prefs = [p for j in judgments if j.attribute_id == attribute
                 for p in corpus_mod.infer_preferences(j)]
        swd = train_swd(prefs, model, RankSVMConfig(C=c, seed=seed))
        return scored_list(swd, model, item_ids, method="swd")
    base = _base_ranking(method, attribute, indexes, item_ids)
    if method.startswith("cb-"):
        centroid = build_centroid(attribute, base, k, model)
        return scored_list(centroid, model, item_ids, method=method)
    labels = make_pseudo_labels(base, z)
    wwd = train_wwd(labels, model, LogRegConfig(seed=seed))
    return scored_list(wwd, model, item_ids, method=method)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise click.UsageError(message)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

@cli.command()
@_corpus_options
@click.option("--ratings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tags", required=True, type=click.Path(exists=True, dir_okay=False))
def ingest(items, reviews, ratings, tags):
    """Validate the corpus files and print record counts."""
    params = dict(items=items, reviews=reviews, ratings=ratings, tags=tags)

    def body(_guard):
        corpus = corpus_mod.load_corpus(items, reviews, ratings, tags)
        click.echo(json.dumps({
            "items": len(corpus.items), "reviews": len(corpus.reviews),
            "ratings": len(corpus.ratings), "tags": len(corpus.tags)}))

    _run("ingest", params, body)


@cli.command()
@_corpus_options
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
def index(items, reviews, cache_dir):
    """Build the item-centric and review-centric BM25 indexes."""
    params = dict(items=items, reviews=reviews, cache_dir=cache_dir)

    def body(_guard):
        catalog = corpus_mod.load_items(items)
        store = corpus_mod.load_reviews(reviews, catalog)
        stats = {}
        for label, mode in (("ic", IndexMode.ITEM_DOCS), ("rc", IndexMode.REVIEW_DOCS)):
            idx = _get_index(store, mode, cache_dir)
            stats[label] = {"documents": idx.doc_count,
                            "terms": len(idx.postings),
                            "avg_doc_length": idx.avg_doc_length}
        click.echo(json.dumps(stats, sort_keys=True))

    _run("index", params, body)


@cli.command()
@_corpus_options
@click.option("--ratings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--dim", default=25, show_default=True)
@click.option("--epochs", default=100, show_default=True)
@click.option("--learning-rate", default=0.02, show_default=True)
@click.option("--lambda1", default=0.05, show_default=True)
@click.option("--lambda2", default=0.05, show_default=True)
@click.option("--init-scale", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
def embed(items, reviews, ratings, out, dim, epochs, learning_rate, lambda1,
          lambda2, init_scale, seed):
    """Train matrix-factorization embeddings and write the model JSON."""
    params = dict(items=items, ratings=ratings, out=out, dim=dim, epochs=epochs,
                  learning_rate=learning_rate, lambda1=lambda1, lambda2=lambda2,
                  init_scale=init_scale, seed=seed)

    def body(guard):
        guard.declare(out)
        catalog = corpus_mod.load_items(items)
        rating_set = corpus_mod.load_ratings(ratings, catalog)
        cfg = TrainConfig(dim=dim, learning_rate=learning_rate, epochs=epochs,
                          lambda1=lambda1, lambda2=lambda2, seed=seed,
                          init_scale=init_scale)
        model = emb_mod.train_mf(rating_set, cfg, item_ids=catalog.ids())
        emb_mod.save_model(model, out)
        click.echo(json.dumps({
            "users": len(model.user_vectors), "items": len(model.item_vectors),
            "final_rmse": emb_mod.reconstruction_rmse(model, rating_set)}))

    _run("embed", params, body)


@cli.command()
@_corpus_options
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--attribute", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--judgments", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", default=5, show_default=True, help="Centroid size for cb-*.")
@click.option("--z", default=0.4, show_default=True, help="Pseudo-label fraction for wwd-*.")
@click.option("--c", default=1.0, show_default=True, help="Ranking-SVM C for swd.")
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
def score(items, reviews, method, attribute, out, model, judgments, k, z, c,
          cache_dir, seed):
    """Rank all items for one attribute with one method; write a CSV."""
    params = dict(items=items, reviews=reviews, method=method, attribute=attribute,
                  out=out, model=model, judgments=judgments, k=k, z=z, c=c, seed=seed)
    _require(method in ("tb-ic", "tb-rc") or model,
             f"--model is required for method {method}")
    _require(method != "swd" or judgments, "--judgments is required for swd")

    def body(guard):
        guard.declare(out)
        catalog = corpus_mod.load_items(items)
        store = corpus_mod.load_reviews(reviews, catalog)
        indexes = {"ic": _get_index(store, IndexMode.ITEM_DOCS, cache_dir),
                   "rc": _get_index(store, IndexMode.REVIEW_DOCS, cache_dir)}
        factor_model = emb_mod.load_model(model) if model else None
        judgment_list = (corpus_mod.load_judgments(judgments, catalog)
                         if judgments else None)
        ranking = _method_scored_list(
            method, attribute, indexes=indexes, model=factor_model,
            item_ids=catalog.ids(), k=k, z=z, c=c, seed=seed,
            judgments=judgment_list)
        with open(out, "w", encoding="utf-8") as f:
            f.write("rank,item_id,score\n")
            for rank, (item_id, value) in enumerate(ranking.entries, start=1):
                f.write(f"{rank},{item_id},{value!r}\n")
        click.echo(json.dumps({"attribute": attribute, "method": method,
                               "items": len(ranking)}))

    _run("score", params, body)


@cli.command("eval-movielens")
@_corpus_options
@click.option("--tags", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice([m for m in METHODS if m != "swd"]),
              required=True)
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", default=0.15, show_default=True)
@click.option("--min-taggers", default=50, show_default=True)
@click.option("--k", default=5, show_default=True)
@click.option("--z", default=0.4, show_default=True)
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="eval-movielens", show_default=True)
def eval_movielens(items, reviews, tags, method, model, alpha, min_taggers, k, z,
                   cache_dir, seed, out):
    """Gamma against the tag-based collection, per attribute plus mean."""
    params = dict(items=items, reviews=reviews, tags=tags, method=method,
                  model=model, alpha=alpha, min_taggers=min_taggers, k=k, z=z,
                  seed=seed, out=out)
    _require(method in ("tb-ic", "tb-rc") or model,
             f"--model is required for method {method}")

    def body(guard):
        csv_path, json_path = f"{out}.csv", f"{out}.json"
        guard.declare(csv_path, json_path)
        catalog = corpus_mod.load_items(items)
        store = corpus_mod.load_reviews(reviews, catalog)
        tag_rows = corpus_mod.load_tags(tags, catalog)
        collection = corpus_mod.build_tag_collection(tag_rows, alpha, min_taggers)
        indexes = {"ic": _get_index(store, IndexMode.ITEM_DOCS, cache_dir),
                   "rc": _get_index(store, IndexMode.REVIEW_DOCS, cache_dir)}
        factor_model = emb_mod.load_model(model) if model else None
        item_ids = sorted(collection.items)
        rows, values, skipped = [], [], 0
        for attribute in collection.attributes():
            try:
                ranking = _method_scored_list(
                    method, attribute, indexes=indexes, model=factor_model,
                    item_ids=item_ids, k=k, z=z, c=1.0, seed=seed)
                value = eval_mod.gamma(ranking.as_dict(),
                                       collection.positives[attribute],
                                       collection.negatives[attribute])
            except (MetricUndefinedError, AttributeModelError):
                skipped += 1
                rows.append({"attribute": attribute, "method": method, "metric": "G",
                             "value": "", "n_pairs": 0, "n_skipped": 1})
                continue
            n_pairs = (len(collection.positives[attribute])
                       * len(collection.negatives[attribute]))
            values.append(value)
            rows.append({"attribute": attribute, "method": method, "metric": "G",
                         "value": eval_mod.report_value(value), "n_pairs": n_pairs,
                         "n_skipped": 0})
        mean = sum(values) / len(values) if values else None
        rows.append({"attribute": "<mean>", "method": method, "metric": "G",
                     "value": eval_mod.report_value(mean), "n_pairs": len(values),
                     "n_skipped": skipped})
        eval_mod.write_report(rows, csv_path, json_path,
                              meta={"command": "eval-movielens", "method": method,
                                    "alpha": alpha, "min_taggers": min_taggers,
                                    "seed": seed})
        click.echo(json.dumps({"method": method, "mean_G": mean,
                               "attributes": len(values), "skipped": skipped}))

    _run("eval-movielens", params, body)


@cli.command("eval-softattr")
@_corpus_options
@click.option("--judgments", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", default=5, show_default=True)
@click.option("--z", default=0.4, show_default=True)
@click.option("--c", default=1.0, show_default=True)
@click.option("--folds", default=10, show_default=True)
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="eval-softattr", show_default=True)
def eval_softattr(items, reviews, judgments, method, model, k, z, c, folds,
                  cache_dir, seed, out):
    """Mean weighted gamma on judgment data; swd runs rater-level CV."""
    params = dict(items=items, reviews=reviews, judgments=judgments, method=method,
                  model=model, k=k, z=z, c=c, folds=folds, seed=seed, out=out)
    _require(method in ("tb-ic", "tb-rc") or model,
             f"--model is required for method {method}")

    def body(guard):
        csv_path, json_path = f"{out}.csv", f"{out}.json"
        guard.declare(csv_path, json_path)
        catalog = corpus_mod.load_items(items)
        store = corpus_mod.load_reviews(reviews, catalog)
        judgment_list = corpus_mod.load_judgments(judgments, catalog)
        factor_model = emb_mod.load_model(model) if model else None
        rows = []
        if method == "swd":
            result = eval_mod.crossval_swd(judgment_list, factor_model,
                                           RankSVMConfig(C=c, seed=seed),
                                           folds=folds, seed=seed)
            for attribute, value in result.per_attribute.items():
                rows.append({"attribute": attribute, "method": method,
                             "metric": "G'", "value": eval_mod.report_value(value),
                             "n_pairs": "", "n_skipped": 0})
            rows.append({"attribute": "<mean>", "method": method, "metric": "G'",
                         "value": eval_mod.report_value(result.overall),
                         "n_pairs": len(result.per_attribute),
                         "n_skipped": len(result.skipped)})
            overall = result.overall
        else:
            indexes = {"ic": _get_index(store, IndexMode.ITEM_DOCS, cache_dir),
                       "rc": _get_index(store, IndexMode.REVIEW_DOCS, cache_dir)}
            attributes = sorted({j.attribute_id for j in judgment_list})
            values, skipped = [], 0
            for attribute in attributes:
                subset = [j for j in judgment_list if j.attribute_id == attribute]
                try:
                    ranking = _method_scored_list(
                        method, attribute, indexes=indexes, model=factor_model,
                        item_ids=catalog.ids(), k=k, z=z, c=c, seed=seed)
                    value = eval_mod.mean_weighted_gamma(ranking.as_dict(), subset)
                except (MetricUndefinedError, AttributeModelError):
                    skipped += 1
                    rows.append({"attribute": attribute, "method": method,
                                 "metric": "G'", "value": "",
                                 "n_pairs": len(subset), "n_skipped": 1})
                    continue
                values.append(value)
                rows.append({"attribute": attribute, "method": method, "metric": "G'",
                             "value": eval_mod.report_value(value),
                             "n_pairs": len(subset), "n_skipped": 0})
            overall = sum(values) / len(values) if values else None
            rows.append({"attribute": "<mean>", "method": method, "metric": "G'",
                         "value": eval_mod.report_value(overall),
                         "n_pairs": len(values), "n_skipped": skipped})
        eval_mod.write_report(rows, csv_path, json_path,
                              meta={"command": "eval-softattr", "method": method,
                                    "folds": folds if method == "swd" else None,
                                    "seed": seed})
        click.echo(json.dumps({"method": method, "mean_Gprime": overall}))

    _run("eval-softattr", params, body)


@cli.command()
@click.option("--judgments", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="agree", show_default=True)
def agree(judgments, out):
    """Per-attribute inter-rater agreement with HIGH/MEDIUM/LOW terciles."""
    params = dict(judgments=judgments, out=out)

    def body(guard):
        csv_path, json_path = f"{out}.csv", f"{out}.json"
        guard.declare(csv_path, json_path)
        judgment_list = corpus_mod.load_judgments(judgments)
        table = eval_mod.agreement_table(judgment_list)
        rows = [{"attribute": s.attribute_id, "method": s.group or "",
                 "metric": "agree", "value": eval_mod.report_value(s.agree),
                 "n_pairs": s.distinct_pairs, "n_skipped": s.tie_count}
                for s in table]
        eval_mod.write_report(rows, csv_path, json_path,
                              meta={"command": "agree",
                                    "note": "method column holds the agreement group; "
                                            "n_skipped holds tie votes"})
        for s in table:
            click.echo(f"{s.group or '-':6s} {s.attribute_id:30s} "
                       f"agree={eval_mod.report_value(s.agree) or 'n/a':8s} "
                       f"pairs={s.distinct_pairs} comparisons={s.total_comparisons} "
                       f"ties={s.tie_count}")

    _run("agree", params, body)


@cli.command()
@click.option("--judgments", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="buckets", show_default=True)
def buckets(judgments, out):
    """Mean bucket sizes (less / same / more) per attribute and overall."""
    params = dict(judgments=judgments, out=out)

    def body(guard):
        csv_path, json_path = f"{out}.csv", f"{out}.json"
        guard.declare(csv_path, json_path)
        judgment_list = corpus_mod.load_judgments(judgments)
        dist = eval_mod.bucket_distribution(judgment_list)
        rows = []
        for attribute, means in list(dist.per_attribute.items()) + [("<overall>", dist.overall)]:
            for name, value in (("mean_less", means.less), ("mean_same", means.same),
                                ("mean_more", means.more)):
                rows.append({"attribute": attribute, "method": "buckets",
                             "metric": name, "value": eval_mod.report_value(value),
                             "n_pairs": means.n_judgments, "n_skipped": 0})
        eval_mod.write_report(rows, csv_path, json_path, meta={"command": "buckets"})
        o = dist.overall
        click.echo(json.dumps({"mean_less": o.less, "mean_same": o.same,
                               "mean_more": o.more, "judgments": o.n_judgments}))

    _run("buckets", params, body)


@cli.command()
@click.option("--judgments", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--sizes", default="5,10,20,40", show_default=True,
              help="Comma-separated training-rater counts.")
@click.option("--reps", default=25, show_default=True)
@click.option("--folds", default=10, show_default=True)
@click.option("--c", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="curve", show_default=True)
def curve(judgments, model, sizes, reps, folds, c, seed, out):
    """SWD learning curve: mean weighted gamma vs training raters."""
    params = dict(judgments=judgments, model=model, sizes=sizes, reps=reps,
                  folds=folds, c=c, seed=seed, out=out)

    def body(guard):
        csv_path, json_path = f"{out}.csv", f"{out}.json"
        guard.declare(csv_path, json_path)
        judgment_list = corpus_mod.load_judgments(judgments)
        factor_model = emb_mod.load_model(model)
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
        result = eval_mod.learning_curve(judgment_list, factor_model, size_list,
                                         RankSVMConfig(C=c, seed=seed),
                                         reps=reps, folds=folds, seed=seed)
        rows = [{"attribute": "<all>", "method": "swd", "metric": f"G'@{size}",
                 "value": eval_mod.report_value(value), "n_pairs": size,
                 "n_skipped": 0} for size, value in sorted(result.items())]
        eval_mod.write_report(rows, csv_path, json_path,
                              meta={"command": "curve", "reps": reps, "folds": folds,
                                    "seed": seed})
        click.echo(json.dumps({str(k): v for k, v in sorted(result.items())}))

    _run("curve", params, body)


@cli.command("sample-tasks")
@_corpus_options
@click.option("--attributes", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Text file of attribute phrases, one per line.")
@click.option("--seen", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {rater_id, item_ids} stage-1 seen sets.")
@click.option("--rater", required=True)
@click.option("--count", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="-", show_default=True)
def sample_tasks(items, reviews, attributes, seen, rater, count, seed, out):
    """Generate annotation tasks offline for one rater."""
    params = dict(items=items, reviews=reviews, attributes=attributes, seen=seen,
                  rater=rater, count=count, seed=seed, out=out)

    def body(guard):
        catalog = corpus_mod.load_items(items)
        store = corpus_mod.load_reviews(reviews, catalog)
        attribute_list = corpus_mod.load_attributes(attributes)
        seen_sets = _load_seen_sets(seen, catalog)
        if rater not in seen_sets:
            raise SamplerError(f"no seen set for rater {rater!r} in {seen}")
        generator = TaskGenerator(_build_rankings(attribute_list, store, catalog))
        seen_counts = {item.id: item.seen_count for item in catalog}
        for _, item_ids in seen_sets.items():
            for item_id in item_ids:
                seen_counts[item_id] = seen_counts.get(item_id, 0) + 1
        judged: dict[str, int] = {}
        lines = []
        for i in range(count):
            rng = np.random.default_rng((seed, i))
            task = generator.generate_next(
                SeenSet(rater_id=rater, items=frozenset(seen_sets[rater])),
                judged, seen_counts, rng, task_id=f"offline-{i + 1}")
            judged[task.attribute_id] = judged.get(task.attribute_id, 0) + 1
            lines.append(json.dumps({
                "task_id": task.task_id, "rater_id": task.rater_id,
                "attribute": task.attribute_id,
                "anchor": {"id": task.anchor_id,
                           "title": catalog[task.anchor_id].title},
                "candidates": [{"id": c, "title": catalog[c].title}
                               for c in task.candidate_ids]}))
        if out == "-":
            for line in lines:
                click.echo(line)
        else:
            guard.declare(out)
            Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")

    _run("sample-tasks", params, body)


@cli.command()
@_corpus_options
@click.option("--attributes", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8040, show_default=True)
@click.option("--min-seen", default=11, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Optional directory of static UI files to serve at /ui.")
def serve(items, reviews, attributes, data_dir, host, port, min_seen, seed, ui_dir):
    """Run the annotation HTTP service."""
    params = dict(items=items, reviews=reviews, attributes=attributes,
                  data_dir=data_dir, host=host, port=port, min_seen=min_seen,
                  seed=seed, ui_dir=ui_dir)

    def body(_guard):
        import uvicorn

        app = build_service_app(items, reviews, attributes, data_dir,
                                min_seen=min_seen, seed=seed, ui_dir=ui_dir)
        uvicorn.run(app, host=host, port=port, log_level="info")

    _run("serve", params, body)


def build_service_app(items, reviews, attributes, data_dir, *,
                      min_seen: int = 11, seed: int = 0, ui_dir: str | None = None):
    """Assemble the FastAPI app from corpus files (shared by serve and tests)."""
    from .service import ServiceState, build_app

    catalog = corpus_mod.load_items(items)
    store = corpus_mod.load_reviews(reviews, catalog)
    attribute_list = corpus_mod.load_attributes(attributes)
    rankings = _build_rankings(attribute_list, store, catalog)
    data_path = Path(data_dir)
    data_path.mkdir(parents=True, exist_ok=True)
    state = ServiceState(catalog, attribute_list, rankings,
                         log_path=data_path / "events.jsonl",
                         min_seen=min_seen, seed=seed)
    app = build_app(state)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def _build_rankings(attribute_list, store, catalog):
    idx_ic = textrank.build_index(store, IndexMode.ITEM_DOCS)
    idx_rc = textrank.build_index(store, IndexMode.REVIEW_DOCS)
    item_ids = catalog.ids()
    return {a.id: {BASELINE_ITEM_CENTRIC: textrank.score_item_centric(a, idx_ic, item_ids),
                   BASELINE_REVIEW_CENTRIC: textrank.score_review_centric(a, idx_rc, item_ids)}
            for a in attribute_list}


def _load_seen_sets(path, catalog) -> dict[str, list[str]]:
    seen: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            unknown = [i for i in obj["item_ids"] if i not in catalog]
            if unknown:
                raise CorpusError(f"{path}:{lineno}: unknown items {unknown}")
            seen.setdefault(obj["rater_id"], []).extend(obj["item_ids"])
    return seen


if __name__ == "__main__":
    main()
