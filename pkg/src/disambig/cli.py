"""Command-line entry points.

Stages are exposed individually (synth, embed, graph, train, ensemble,
postmatch, eval, sweep) plus a one-shot pipeline. Every command that
writes results writes a manifest first and rewrites it with per-stage
timings at the end. Usage errors exit with status 2 (click's default);
runtime failures print a one-line JSON error to stderr and exit with
status 1.

The corpus directory can be given once via the DISAMBIG_DATA
environment variable instead of repeating --data.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cluster import ClusterConfig, finalize_labels
from .corpus import (
    SYNTH_PRESETS,
    CandidateSet,
    load_corpus,
    save_corpus,
    split_by_name,
    synth_corpus,
)
from .embed import (
    EmbedConfig,
    embed_papers,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .enhance import (
    EnsembleMember,
    EnsembleSpec,
    PostMatchConfig,
    post_match,
    run_ensemble,
)
from .graphbuild import RELATIONS, EdgeThresholds, build_graph, edge_list
from .manifest import RunManifest
from .metrics import macro_average, pairwise_prf, truth_labels
from .model import save_checkpoint
from .trainer import TrainConfig, train_all
from .util import atomic_write_json, atomic_write_text, derive_seed

log = logging.getLogger(__name__)


def runtime_guard(fn):
    """Convert unexpected failures into a machine-readable stderr line."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:
            click.echo(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                err=True,
            )
            sys.exit(1)

    return wrapper


_data_option = click.option(
    "--data",
    "data_dir",
    envvar="DISAMBIG_DATA",
    required=True,
    type=click.Path(exists=True, file_okay=False),
    help="Corpus directory (or set DISAMBIG_DATA).",
)


class _Timed:
    """Manifest wrapper: write up front, accumulate stage timings, and
    rewrite with the timings filled in when the command finishes."""

    def __init__(self, manifest: RunManifest, path: Path):
        self.manifest = manifest
        self.path = Path(path)
        manifest.write(self.path)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        yield
        self.manifest.record_timing(name, time.perf_counter() - t0)

    def finish(self) -> None:
        self.manifest.write(self.path)


def _parse_relations(text: str) -> tuple[str, ...]:
    rels = tuple(r.strip() for r in text.split(",") if r.strip())
    bad = set(rels) - set(RELATIONS)
    if bad:
        raise click.BadParameter("unknown relations: %s" % sorted(bad))
    return rels


def _parse_hidden(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter("expected two comma-separated integers")
    return a, b


def _parse_grid(text: str, cast) -> list:
    return [cast(v) for v in text.split(",") if v.strip()]


def _load_labels(path: str) -> dict[str, dict[str, int]]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("labels file must map name -> {paper_id: label}")
    return data


def _labels_json(label_map) -> dict:
    return {
        name: {pid: int(lbl) for pid, lbl in sorted(pairs.items())}
        for name, pairs in sorted(label_map.items())
    }


def _pid_labels(candidate_set: CandidateSet, labels) -> dict[str, int]:
    return dict(zip((p.id for p in candidate_set.papers), np.asarray(labels).tolist()))


def _write_label_files(out: Path, final_map: dict, raw_map: dict) -> None:
    """labels.json always holds total partitions; when any run kept -1
    outliers the raw labels are preserved alongside for postmatching."""
    atomic_write_json(out / "labels.json", _labels_json(final_map))
    if any(-1 in pairs.values() for pairs in raw_map.values()):
        atomic_write_json(out / "labels_outliers.json", _labels_json(raw_map))


def _metrics_report(per_name: dict) -> dict:
    macro = macro_average(list(per_name.values()))
    mean_p, mean_r = macro.precision, macro.recall
    harmonic = 2 * mean_p * mean_r / (mean_p + mean_r) if mean_p + mean_r else 0.0
    return {
        "per_name": {k: m.as_dict() for k, m in sorted(per_name.items())},
        "macro": {**macro.as_dict(), "f1_from_mean_pr": harmonic},
    }


@click.group()
@click.version_option(version=__version__, prog_name="disambig")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Author-name disambiguation over paper graphs."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--preset", default="default", type=click.Choice(sorted(SYNTH_PRESETS)))
@click.option("--names", type=int, default=None)
@click.option("--authors-per-name", type=int, default=None)
@click.option("--papers-per-author", type=int, default=None)
@click.option("--coauthor-pool", type=int, default=None)
@click.option("--coauthor-circles", type=int, default=None)
@click.option("--org-noise", type=float, default=None)
@click.option("--venue-noise", type=float, default=None)
@click.option("--coauthor-noise", type=float, default=None)
@click.option("--title-noise", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@runtime_guard
def synth(out, preset, seed, **overrides) -> None:
    """Generate a synthetic labeled corpus."""
    spec = SYNTH_PRESETS[preset]
    changes = {k: v for k, v in overrides.items() if v is not None}
    changes["seed"] = seed
    spec = dataclasses.replace(spec, **changes)
    timed = _Timed(
        RunManifest.collect("synth", dataclasses.asdict(spec), seed, {}),
        Path(out) / "manifest.json",
    )
    with timed.stage("synth"):
        sets = synth_corpus(spec)
        save_corpus(sets, out)
    timed.finish()
    papers = sum(len(cs.papers) for cs in sets)
    click.echo("wrote %d candidate sets (%d papers) to %s" % (len(sets), papers, out))


@main.command()
@_data_option
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--dim", type=int, default=100, show_default=True)
@click.option("--window", type=int, default=5, show_default=True)
@click.option("--negatives", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--min-count", type=int, default=2, show_default=True)
@click.option("--abstracts/--no-abstracts", "include_abstracts", default=True, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@runtime_guard
def embed(data_dir, out, **kwargs) -> None:
    """Train word embeddings over the corpus token streams."""
    config = EmbedConfig(**kwargs)
    timed = _Timed(
        RunManifest.collect(
            "embed", dataclasses.asdict(config), config.seed, {"data": data_dir}
        ),
        Path(out + ".manifest.json"),
    )
    with timed.stage("load"):
        corpus = load_corpus(data_dir)
    with timed.stage("embed"):
        emb = train_embeddings(corpus, config)
    save_embeddings(emb, out)
    timed.finish()
    click.echo(
        "trained %d word vectors (dim %d), final epoch loss %.4f"
        % (len(emb.table), emb.dim, emb.losses[-1] if emb.losses else float("nan"))
    )


def _threshold_options(fn):
    fn = click.option("--coa-min", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--coo-min", type=float, default=0.6, show_default=True)(fn)
    fn = click.option("--cov-min", type=float, default=2.0, show_default=True)(fn)
    fn = click.option("--cov-keep-prob", type=float, default=0.1, show_default=True)(fn)
    fn = click.option(
        "--relations", default=",".join(RELATIONS), show_default=True,
        help="Comma-separated subset of coa,coo,cov.",
    )(fn)
    return fn


def _train_options(fn):
    fn = click.option("--lam", type=float, default=0.5, show_default=True)(fn)
    fn = click.option("--lr", type=float, default=1e-3, show_default=True)(fn)
    fn = click.option("--weight-decay", type=float, default=1e-4, show_default=True)(fn)
    fn = click.option("--epochs", type=int, default=50, show_default=True)(fn)
    fn = click.option("--hidden-dims", default="128,128", show_default=True)(fn)
    fn = click.option("--heads", type=int, default=4, show_default=True)(fn)
    fn = click.option("--compression-ratio", type=float, default=1.0, show_default=True)(fn)
    fn = click.option("--eps", type=float, default=0.1, show_default=True)(fn)
    fn = click.option("--min-samples", type=int, default=4, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    return fn


def _make_train_config(lam, lr, weight_decay, epochs, hidden_dims, heads,
                       compression_ratio, eps, min_samples, seed) -> TrainConfig:
    return TrainConfig(
        lam=lam,
        lr=lr,
        weight_decay=weight_decay,
        epochs=epochs,
        hidden_dims=_parse_hidden(hidden_dims),
        heads=heads,
        compression_ratio=compression_ratio,
        cluster=ClusterConfig(eps=eps, min_samples=min_samples),
        seed=seed,
    )


@main.command()
@_data_option
@click.option("--embeddings", "table_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--name", "only_name", default=None, help="Restrict to one candidate set.")
@_threshold_options
@click.option("--seed", type=int, default=0, show_default=True)
@runtime_guard
def graph(data_dir, table_path, out, only_name, relations, seed, **thresh) -> None:
    """Build paper graphs and dump their weighted edge lists as JSON."""
    thresholds = EdgeThresholds(**thresh)
    rels = _parse_relations(relations)
    timed = _Timed(
        RunManifest.collect(
            "graph",
            {"thresholds": dataclasses.asdict(thresholds), "relations": rels},
            seed,
            {"data": data_dir, "embeddings": table_path},
        ),
        Path(out + ".manifest.json"),
    )
    with timed.stage("load"):
        corpus = load_corpus(data_dir)
        if only_name is not None:
            corpus = [cs for cs in corpus if cs.name == only_name]
            if not corpus:
                raise ValueError("no candidate set named %r" % only_name)
        emb = load_embeddings(table_path)
    payload = {}
    with timed.stage("graph"):
        for cs in corpus:
            g = build_graph(
                cs, emb, thresholds,
                seed=derive_seed(seed, "cov", cs.name), relations=rels,
            )
            payload[cs.name] = {
                "n": g.n,
                "paper_ids": list(g.paper_ids),
                "edges": [[i, j, rel, w] for i, j, rel, w in edge_list(g)],
            }
    atomic_write_json(out, payload)
    timed.finish()
    total = sum(len(v["edges"]) for v in payload.values())
    click.echo("wrote %d graphs (%d edges) to %s" % (len(payload), total, out))


@main.command()
@_data_option
@click.option("--embeddings", "table_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_threshold_options
@_train_options
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--checkpoints/--no-checkpoints", default=False, show_default=True)
@runtime_guard
def train(data_dir, table_path, out_dir, relations, jobs, checkpoints, **opts) -> None:
    """Train one model per name on a single graph configuration."""
    thresh_keys = ("coa_min", "coo_min", "cov_min", "cov_keep_prob")
    thresholds = EdgeThresholds(**{k: opts.pop(k) for k in thresh_keys})
    config = _make_train_config(**opts)
    rels = _parse_relations(relations)
    out = Path(out_dir)
    timed = _Timed(
        RunManifest.collect(
            "train",
            {
                "train": dataclasses.asdict(config),
                "thresholds": dataclasses.asdict(thresholds),
                "relations": rels,
            },
            config.seed,
            {"data": data_dir, "embeddings": table_path},
        ),
        out / "manifest.json",
    )
    with timed.stage("load"):
        corpus = load_corpus(data_dir)
        emb = load_embeddings(table_path)
    with timed.stage("train"):
        results, failures = train_all(
            corpus, emb, thresholds, config, relations=rels, jobs=jobs
        )

    by_name = {cs.name: cs for cs in corpus}
    raw_map = {
        name: _pid_labels(by_name[name], res.labels) for name, res in results.items()
    }
    final_map = {
        name: _pid_labels(by_name[name], finalize_labels(res.labels))
        for name, res in results.items()
    }
    _write_label_files(out, final_map, raw_map)
    trace_lines = [
        json.dumps({"name": name, **row}, sort_keys=True)
        for name in sorted(results)
        for row in results[name].loss_trace
    ]
    atomic_write_text(out / "trace.jsonl", "\n".join(trace_lines) + "\n")
    if failures:
        atomic_write_json(out / "failures.json", failures)
    if checkpoints:
        (out / "checkpoints").mkdir(exist_ok=True)
        for name, res in results.items():
            save_checkpoint(res.params, out / "checkpoints" / ("%s.bin" % name))
    timed.finish()
    for name in sorted(results):
        labels = results[name].labels
        n_clusters = int(labels.max()) + 1 if labels.size else 0
        click.echo(
            "%s: %d clusters, %d outliers"
            % (name, n_clusters, int((labels == -1).sum()))
        )
    if failures:
        click.echo("%d names failed; see failures.json" % len(failures), err=True)


def _load_members(path: str, base: TrainConfig) -> tuple[EnsembleMember, ...]:
    """Member-spec file: a JSON list of records, each holding optional
    relations, edge-threshold overrides, and a train override object."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError("member spec must be a non-empty JSON list")
    members = []
    thresh_keys = {"coa_min", "coo_min", "cov_min", "cov_keep_prob"}
    for rec in raw:
        rels = _parse_relations(",".join(rec.get("relations", RELATIONS)))
        thresholds = EdgeThresholds(
            **{k: v for k, v in rec.items() if k in thresh_keys}
        )
        train_over = rec.get("train", {})
        member_cfg = dataclasses.replace(base, **train_over) if train_over else None
        members.append(EnsembleMember(rels, thresholds, member_cfg))
    return tuple(members)


@main.command()
@_data_option
@click.option("--embeddings", "table_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_train_options
@click.option("--members", "members_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="JSON member-spec file; default is the built-in six-member ensemble.")
@click.option("--vote-threshold", type=float, default=0.5, show_default=True)
@click.option("--postmatch/--no-postmatch", "do_postmatch", default=True, show_default=True)
@click.option("--score-threshold", type=float, default=1.5, show_default=True)
@runtime_guard
def ensemble(data_dir, table_path, out_dir, members_path, vote_threshold,
             do_postmatch, score_threshold, **opts) -> None:
    """Vote several differently thresholded runs into one clustering."""
    config = _make_train_config(**opts)
    if members_path is not None:
        spec = EnsembleSpec(_load_members(members_path, config), vote_threshold)
    else:
        spec = EnsembleSpec(vote_threshold=vote_threshold)
    out = Path(out_dir)
    inputs = {"data": data_dir, "embeddings": table_path}
    if members_path is not None:
        inputs["members"] = members_path
    timed = _Timed(
        RunManifest.collect(
            "ensemble",
            {
                "train": dataclasses.asdict(config),
                "vote_threshold": vote_threshold,
                "members": len(spec.members),
                "postmatch": do_postmatch,
                "score_threshold": score_threshold,
            },
            config.seed,
            inputs,
        ),
        out / "manifest.json",
    )
    with timed.stage("load"):
        corpus = load_corpus(data_dir)
        emb = load_embeddings(table_path)
    raw_map = {}
    final_map = {}
    with timed.stage("ensemble"):
        for cs in corpus:
            features = embed_papers(cs, emb)
            labels, _ = run_ensemble(cs, features, spec, config, tag=cs.name)
            raw_map[cs.name] = _pid_labels(cs, labels)
            if do_postmatch:
                labels = post_match(labels, cs, PostMatchConfig(score_threshold))
            else:
                labels = finalize_labels(labels)
            final_map[cs.name] = _pid_labels(cs, labels)
            n_clusters = int(labels.max()) + 1 if labels.size else 0
            click.echo("%s: %d clusters" % (cs.name, n_clusters))
    _write_label_files(out, final_map, raw_map)
    timed.finish()


@main.command()
@_data_option
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--score-threshold", type=float, default=1.5, show_default=True)
@runtime_guard
def postmatch(data_dir, labels_path, out, score_threshold) -> None:
    """Re-match outliers in a labels file to existing clusters."""
    timed = _Timed(
        RunManifest.collect(
            "postmatch", {"score_threshold": score_threshold}, 0,
            {"data": data_dir, "labels": labels_path},
        ),
        Path(out + ".manifest.json"),
    )
    with timed.stage("postmatch"):
        corpus = {cs.name: cs for cs in load_corpus(data_dir)}
        label_map = _load_labels(labels_path)
        result = {}
        for name, by_pid in label_map.items():
            if name not in corpus:
                raise ValueError("labels reference unknown candidate set %r" % name)
            cs = corpus[name]
            labels = np.array([by_pid[p.id] for p in cs.papers], dtype=np.int64)
            matched = post_match(labels, cs, PostMatchConfig(score_threshold))
            result[name] = _pid_labels(cs, matched)
    atomic_write_json(out, _labels_json(result))
    timed.finish()
    click.echo("post-matched %d candidate sets to %s" % (len(result), out))


@main.command(name="eval")
@_data_option
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "--out", "out", default=None, type=click.Path(dir_okay=False))
@runtime_guard
def eval_cmd(data_dir, labels_path, out) -> None:
    """Score predicted labels against corpus ground truth."""
    corpus = {cs.name: cs for cs in load_corpus(data_dir)}
    label_map = _load_labels(labels_path)
    per_name = {}
    for name in sorted(label_map):
        if name not in corpus:
            raise ValueError("labels reference unknown candidate set %r" % name)
        cs = corpus[name]
        if cs.truth is None:
            raise ValueError("candidate set %r has no ground truth" % name)
        per_name[name] = pairwise_prf(label_map[name], cs.truth)
    report = _metrics_report(per_name)
    for name, m in sorted(per_name.items()):
        click.echo("%s: P %.4f R %.4f F1 %.4f" % (name, m.precision, m.recall, m.f1))
    macro = report["macro"]
    click.echo(
        "macro (%d names): P %.4f R %.4f F1 %.4f"
        % (len(per_name), macro["precision"], macro["recall"], macro["f1"])
    )
    if out:
        atomic_write_json(out, report)


@main.command()
@_data_option
@click.option("--embeddings", "table_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--lam-values", default="0.5", show_default=True)
@click.option("--eps-values", default="0.1", show_default=True)
@click.option("--min-samples-values", default="4", show_default=True)
@click.option("--ratio-values", default="1.0", show_default=True)
@click.option("--coa-min-values", default="0.0", show_default=True)
@click.option("--coo-min-values", default="0.6", show_default=True)
@click.option("--cov-min-values", default="2.0", show_default=True)
@click.option("--seeds", default="0", show_default=True)
@click.option("--split/--no-split", "use_split", default=False, show_default=True,
              help="Evaluate on the validation third of a 2:1:1 name split.")
@_train_options
@runtime_guard
def sweep(data_dir, table_path, out, lam_values, eps_values, min_samples_values,
          ratio_values, coa_min_values, coo_min_values, cov_min_values, seeds,
          use_split, **opts) -> None:
    """Cross-product hyper-parameter grid; reports mean macro F1 per cell."""
    grids = {
        "lam": _parse_grid(lam_values, float),
        "eps": _parse_grid(eps_values, float),
        "min_samples": _parse_grid(min_samples_values, int),
        "ratio": _parse_grid(ratio_values, float),
        "coa_min": _parse_grid(coa_min_values, float),
        "coo_min": _parse_grid(coo_min_values, float),
        "cov_min": _parse_grid(cov_min_values, float),
    }
    seed_list = _parse_grid(seeds, int)
    if not seed_list or any(not v for v in grids.values()):
        raise click.UsageError("sweep grid is empty")
    base = _make_train_config(**opts)
    timed = _Timed(
        RunManifest.collect(
            "sweep",
            {"train": dataclasses.asdict(base), "grids": grids, "seeds": seed_list},
            base.seed,
            {"data": data_dir, "embeddings": table_path},
        ),
        Path(out + ".manifest.json"),
    )
    with timed.stage("load"):
        corpus = load_corpus(data_dir)
        if use_split:
            _, corpus, _ = split_by_name(corpus, seed=base.seed)
        emb = load_embeddings(table_path)

    cells = []
    keys = sorted(grids)
    with timed.stage("sweep"):
        for combo in itertools.product(*(grids[k] for k in keys)):
            cell = dict(zip(keys, combo))
            config = dataclasses.replace(
                base,
                lam=cell["lam"],
                compression_ratio=cell["ratio"],
                cluster=ClusterConfig(eps=cell["eps"], min_samples=cell["min_samples"]),
            )
            thresholds = EdgeThresholds(
                coa_min=cell["coa_min"], coo_min=cell["coo_min"], cov_min=cell["cov_min"]
            )
            scores = []
            for seed in seed_list:
                cfg = dataclasses.replace(config, seed=seed)
                results, _ = train_all(corpus, emb, thresholds, cfg)
                per = [
                    pairwise_prf(results[cs.name].labels, truth_labels(cs))
                    for cs in corpus
                    if cs.name in results
                ]
                scores.append(macro_average(per).f1)
            cell["mean_f1"] = float(np.mean(scores))
            cell["per_seed_f1"] = [round(v, 6) for v in scores]
            cells.append(cell)
            click.echo(
                "lam %.2f eps %.2f min_samples %d ratio %.2f: mean macro F1 %.4f"
                % (cell["lam"], cell["eps"], cell["min_samples"], cell["ratio"],
                   cell["mean_f1"])
            )
    best = max(cells, key=lambda c: c["mean_f1"])
    atomic_write_json(out, {"cells": cells, "best": best})
    timed.finish()
    click.echo("best: lam %.2f (mean macro F1 %.4f)" % (best["lam"], best["mean_f1"]))


@main.command()
@click.option("--data", "data_dir", envvar="DISAMBIG_DATA", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="Corpus directory (or set DISAMBIG_DATA).")
@click.option("--synth", "synth_preset", default=None,
              type=click.Choice(sorted(SYNTH_PRESETS)),
              help="Generate this synthetic preset instead of reading --data.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_train_options
@click.option("--dim", type=int, default=100, show_default=True)
@click.option("--enhance/--no-enhance", "do_enhance", default=True, show_default=True,
              help="Ensemble voting plus outlier post-match; off = one model.")
@click.option("--vote-threshold", type=float, default=0.5, show_default=True)
@click.option("--score-threshold", type=float, default=1.5, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@runtime_guard
def pipeline(data_dir, synth_preset, out_dir, dim, do_enhance, vote_threshold,
             score_threshold, jobs, **opts) -> None:
    """End to end: embed, build graphs, train, enhance, evaluate."""
    if (data_dir is None) == (synth_preset is None):
        raise click.UsageError("give exactly one of --data or --synth")
    config = _make_train_config(**opts)
    out = Path(out_dir)
    timed = _Timed(
        RunManifest.collect(
            "pipeline",
            {
                "train": dataclasses.asdict(config),
                "dim": dim,
                "enhance": do_enhance,
                "vote_threshold": vote_threshold,
                "score_threshold": score_threshold,
                "synth": synth_preset,
            },
            config.seed,
            {"data": data_dir} if data_dir else {},
        ),
        out / "manifest.json",
    )
    with timed.stage("load"):
        if synth_preset is not None:
            spec = dataclasses.replace(SYNTH_PRESETS[synth_preset], seed=config.seed)
            corpus = synth_corpus(spec)
            save_corpus(corpus, out / "corpus")
        else:
            corpus = load_corpus(data_dir)
    with timed.stage("embed"):
        emb = train_embeddings(
            corpus, EmbedConfig(dim=dim, seed=derive_seed(config.seed, "embed"))
        )
        save_embeddings(emb, out / "embeddings.tsv")

    raw_map = {}
    final_map = {}
    per_name = {}
    if do_enhance:
        spec = EnsembleSpec(vote_threshold=vote_threshold)
        with timed.stage("ensemble"):
            for cs in corpus:
                features = embed_papers(cs, emb)
                labels, _ = run_ensemble(cs, features, spec, config, tag=cs.name)
                raw_map[cs.name] = _pid_labels(cs, labels)
                labels = post_match(labels, cs, PostMatchConfig(score_threshold))
                final_map[cs.name] = _pid_labels(cs, labels)
                if cs.truth is not None:
                    per_name[cs.name] = pairwise_prf(final_map[cs.name], cs.truth)
    else:
        with timed.stage("train"):
            results, failures = train_all(corpus, emb, config=config, jobs=jobs)
            for cs in corpus:
                if cs.name not in results:
                    continue
                raw_map[cs.name] = _pid_labels(cs, results[cs.name].labels)
                final = finalize_labels(results[cs.name].labels)
                final_map[cs.name] = _pid_labels(cs, final)
                if cs.truth is not None:
                    per_name[cs.name] = pairwise_prf(final_map[cs.name], cs.truth)
            if failures:
                atomic_write_json(out / "failures.json", failures)

    _write_label_files(out, final_map, raw_map)
    if per_name:
        report = _metrics_report(per_name)
        atomic_write_json(out / "metrics.json", report)
        macro = report["macro"]
        click.echo(
            "macro (%d names): P %.4f R %.4f F1 %.4f"
            % (len(per_name), macro["precision"], macro["recall"], macro["f1"])
        )
    else:
        click.echo("no ground truth in corpus; wrote labels only")
    timed.finish()


if __name__ == "__main__":
    main()
