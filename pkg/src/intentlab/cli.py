"""Pipeline driver: one subcommand per stage plus the experiment runner."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import balance as balance_mod
from . import metrics as metrics_mod
from . import seed_select
from .cluster_engine import TrainParams, run_dac
from .config import ConfigError, load_experiment_config, load_serve_config
from .corpus import (
    gold_classes,
    labeled_pool,
    load_corpus,
    mask_classes,
    read_embeddings,
    write_corpus,
    write_embeddings,
)
from .experiment import run_experiment
from .project2d import load_external_coords, pca2d, write_coords
from .seed_select import SeedPlan


@click.group()
def main() -> None:
    """Semi-supervised intent clustering and bulk-labeling workbench."""


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--out-corpus", type=click.Path(), help="Rewrite as canonical JSON-lines.")
@click.option("--out-embeddings", type=click.Path(), help="Rewrite the EMB1 file.")
def ingest(corpus_path, emb_path, out_corpus, out_embeddings) -> None:
    """Validate a corpus and its embedding matrix; print a summary."""
    records, emb = load_corpus(corpus_path, emb_path)
    splits = {s: 0 for s in ("train", "valid", "test")}
    for r in records:
        splits[r.split] += 1
    click.echo(f"records: {len(records)}")
    click.echo(f"splits: train={splits['train']} valid={splits['valid']} test={splits['test']}")
    click.echo(f"classes: {len(gold_classes(records))}")
    click.echo(f"embedding dim: {emb.dim}")
    click.echo(f"checksum: {emb.checksum}")
    if out_corpus:
        write_corpus(records, out_corpus)
        click.echo(f"wrote {out_corpus}")
    if out_embeddings:
        write_embeddings(emb.data, out_embeddings)
        click.echo(f"wrote {out_embeddings}")


@main.command("select-seeds")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--strategy", required=True, type=click.Choice(seed_select.STRATEGIES))
@click.option("--labeled-ratio", type=float, required=True, help="Seed fraction of the pool.")
@click.option("--known-class-ratio", type=float, default=0.75, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed.")
@click.option("--k-prime", type=int, help="Initial cluster count for pcs (default 2x classes).")
@click.option("--alt-embeddings", type=click.Path(exists=True), help="Alternate matrix for cse.")
@click.option("--out", "out_path", required=True, type=click.Path())
def select_seeds(corpus_path, emb_path, strategy, labeled_ratio, known_class_ratio,
                 seed, k_prime, alt_embeddings, out_path) -> None:
    """Choose the seed subset and write the plan as JSON."""
    records, emb = load_corpus(corpus_path, emb_path)
    mask = mask_classes(records, known_class_ratio, seed)
    pool = labeled_pool(records, mask)
    n = seed_select.seed_count(labeled_ratio, len(pool))
    if strategy == "random":
        plan = seed_select.select_random(pool, n, seed)
    elif strategy == "cb":
        plan = seed_select.select_cluster_based(pool, emb, n, seed)
    elif strategy == "cse":
        if not alt_embeddings:
            raise click.UsageError("--alt-embeddings is required for strategy cse")
        alt = read_embeddings(alt_embeddings)
        plan = seed_select.select_cluster_based_sentence_emb(pool, alt, n, seed)
    elif strategy == "kcb":
        plan = seed_select.select_known_cluster_based(pool, emb, labeled_ratio, mask, seed)
    else:
        kp = k_prime or 2 * len(gold_classes(records))
        plan = seed_select.select_predicted_cluster_sampling(pool, emb, n, kp, seed)
    plan.save(out_path)
    click.echo(f"selected {plan.n} seeds with {strategy}; wrote {out_path}")


@main.command("balance")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--seed-plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--mode", required=True,
              type=click.Choice(("paraphrasing", "paramote", "aug")))
@click.option("--provider", default="echo", show_default=True,
              type=click.Choice(("echo", "synonym", "http")))
@click.option("--provider-url", help="Base URL for the http provider.")
@click.option("--provider-timeout", type=float, default=10.0, show_default=True)
@click.option("--provider-retries", type=int, default=2, show_default=True)
@click.option("--m", "m_neighbors", type=int, default=5, show_default=True,
              help="Neighborhood size for borderline detection.")
@click.option("--factor", type=int, default=3, show_default=True,
              help="Augmentation factor for --mode aug.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def balance_cmd(corpus_path, emb_path, plan_path, mode, provider, provider_url,
                provider_timeout, provider_retries, m_neighbors, factor, seed,
                out_dir) -> None:
    """Oversample minority seeds (or augment all) via paraphrasing."""
    records, emb = load_corpus(corpus_path, emb_path)
    plan = SeedPlan.load(plan_path)
    by_id = {r.id: r for r in records}
    labeled = [by_id[i] for i in plan.selected_ids]
    if provider == "echo":
        prov = balance_mod.EchoProvider()
    elif provider == "synonym":
        prov = balance_mod.SynonymProvider()
    else:
        if not provider_url:
            raise click.UsageError("--provider-url is required for provider http")
        prov = balance_mod.HttpParaphraseProvider(
            provider_url, timeout=provider_timeout, retries=provider_retries
        )
    checker = balance_mod.NearestNeighborChecker(labeled, emb)
    if mode == "aug":
        result = balance_mod.augment(
            labeled, factor, prov, checker, rng_seed=seed, next_id=len(records)
        )
        rows = emb.data
        if result.records:
            src = [result.provenance[r.id] for r in result.records]
            rows = np.vstack([emb.data, emb.data[src]])
    else:
        checker_arg = checker if mode == "paramote" else None
        result, rows = balance_mod.balance_dataset(
            labeled, emb.data, m_neighbors, prov, mode,
            checker=checker_arg, rng_seed=seed, next_id=len(records),
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext_records = list(records) + list(result.records)
    extras = {rid: {"provenance_source": src} for rid, src in result.provenance.items()}
    write_corpus(ext_records, out / "balanced.jsonl", extras)
    write_embeddings(rows, out / "balanced.emb")
    ext_plan = SeedPlan(
        strategy=plan.strategy,
        selected_ids=plan.selected_ids + tuple(r.id for r in result.records),
        n=plan.n + len(result.records),
        rng_seed=plan.rng_seed,
    )
    ext_plan.save(out / "balanced_plan.json")
    accepted = sum(1 for c in result.candidates if c.accepted)
    click.echo(
        f"{mode}: {len(result.candidates)} candidates, {accepted} accepted, "
        f"{len(result.records)} records added; wrote {out}"
    )


def _hyper_options(fn):
    for name, default in (
        ("--hidden-dim", 64), ("--feature-dim", 64), ("--pretrain-epochs", 100),
        ("--inner-epochs", 10), ("--dac-epochs", 30), ("--batch-size", 32),
    ):
        fn = click.option(name, type=int, default=default, show_default=True)(fn)
    fn = click.option("--learning-rate", type=float, default=0.05, show_default=True)(fn)
    fn = click.option("--delta-stop", type=float, default=0.005, show_default=True)(fn)
    return fn


@main.command("cluster")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--seed-plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--k", default="estimate", show_default=True,
              help="Cluster count, or 'estimate'.")
@click.option("--k-prime", type=int, help="Initial count for estimation (default 2x classes).")
@_hyper_options
@click.option("--checkpoint-dir", type=click.Path(), help="Write per-epoch checkpoints here.")
@click.option("--out-dir", required=True, type=click.Path())
def cluster_cmd(corpus_path, emb_path, plan_path, k, k_prime, hidden_dim, feature_dim,
                pretrain_epochs, inner_epochs, dac_epochs, batch_size, learning_rate,
                delta_stop, checkpoint_dir, out_dir) -> None:
    """Pretrain on seeds and run the align-and-retrain clustering loop."""
    records, emb = load_corpus(corpus_path, emb_path)
    plan = SeedPlan.load(plan_path)
    if k != "estimate":
        k = int(k)
    kp = k_prime or 2 * len(gold_classes(records))
    hyper = TrainParams(
        hidden_dim=hidden_dim, feature_dim=feature_dim,
        pretrain_epochs=pretrain_epochs, inner_epochs=inner_epochs,
        dac_epochs=dac_epochs, batch_size=batch_size,
        learning_rate=learning_rate, delta_stop=delta_stop, k_prime=kp,
    )
    _, state, features = run_dac(
        records, emb, plan, k, hyper, checkpoint_dir=checkpoint_dir
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_embeddings(features, out / "features.emb")
    train_ids = [r.id for r in records if r.split == "train"]
    state_obj = {
        "epoch": state.epoch,
        "K": int(state.centroids.shape[0]),
        "rng_seed": plan.rng_seed,
        "ids": train_ids,
        "assignments": state.assignments.tolist(),
        "alignment": state.alignment.tolist(),
    }
    (out / "state.json").write_text(
        json.dumps(state_obj, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(
        f"clustered {len(train_ids)} train rows into K={state_obj['K']}; wrote {out}"
    )


@main.command("project")
@click.option("--features", "features_path", type=click.Path(exists=True),
              help="Feature matrix (EMB1) to project with PCA.")
@click.option("--external", "external_path", type=click.Path(exists=True),
              help="Externally computed 2D coords (EMB1, dim 2).")
@click.option("--rows", type=int, help="Expected row count for --external.")
@click.option("--out", "out_path", required=True, type=click.Path())
def project_cmd(features_path, external_path, rows, out_path) -> None:
    """Produce 2D coordinates from features (PCA) or ingest external ones."""
    if bool(features_path) == bool(external_path):
        raise click.UsageError("provide exactly one of --features / --external")
    if features_path:
        emb = read_embeddings(features_path)
        coords = pca2d(emb.data)
    else:
        coords = load_external_coords(external_path, expected_rows=rows)
    write_coords(coords, out_path)
    click.echo(f"wrote {coords.rows}x2 coords ({coords.method}) to {out_path}")


@main.command("evaluate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--state", "state_path", required=True, type=click.Path(exists=True))
def evaluate_cmd(corpus_path, state_path) -> None:
    """Score a clustering state against the corpus gold labels."""
    from .corpus import read_corpus_file

    records = read_corpus_file(corpus_path)
    state = json.loads(Path(state_path).read_text(encoding="utf-8"))
    assignment_by_id = dict(zip(state["ids"], state["assignments"]))
    by_id = {r.id: r for r in records}
    pairs = [
        (by_id[i].gold_label, assignment_by_id[i])
        for i in state["ids"]
        if i in by_id and by_id[i].gold_label is not None
    ]
    if not pairs:
        raise click.ClickException("no gold labels available for evaluation")
    true_labels = [p[0] for p in pairs]
    pred = [p[1] for p in pairs]
    click.echo(f"NMI: {100 * metrics_mod.nmi(true_labels, pred):.2f}")
    click.echo(f"ARI: {100 * metrics_mod.ari(true_labels, pred):.2f}")
    click.echo(f"ACC: {100 * metrics_mod.aligned_acc(true_labels, pred):.2f}")


@main.command("run-experiment")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--jobs", type=int, help="Parallel runs (overrides the config).")
def run_experiment_cmd(config_path, jobs) -> None:
    """Run the full strategy x balance x seed grid from a config file."""
    try:
        cfg = load_experiment_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(
            "invalid config:\n  " + "\n  ".join(exc.errors)
        ) from exc
    if jobs:
        from dataclasses import replace

        cfg = replace(cfg, jobs=jobs)
    out = run_experiment(cfg)
    click.echo(Path(out["txt"]).read_text(encoding="utf-8").rstrip())
    click.echo(f"results: {out['csv']} {out['txt']}")


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve_cmd(config_path) -> None:
    """Start the bulk-labeling HTTP service for one session."""
    import uvicorn

    from .label_service.api import create_app

    try:
        cfg = load_serve_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(
            "invalid config:\n  " + "\n  ".join(exc.errors)
        ) from exc
    session = build_session(cfg)
    app = create_app({cfg.session_id: session})
    click.echo(
        f"serving session {cfg.session_id!r} at "
        f"http://{cfg.host}:{cfg.port}/session/{cfg.session_id}/points"
    )
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


def build_session(cfg):
    """Assemble a LabelSession from a serve config (recovers any log)."""
    from .corpus import read_corpus_file
    from .label_service.session import LabelSession, SessionStore

    records = read_corpus_file(cfg.corpus_path)
    coords = load_external_coords(cfg.coords_path, expected_rows=len(records))
    clusters = None
    if cfg.state_path is not None:
        state = json.loads(Path(cfg.state_path).read_text(encoding="utf-8"))
        clusters = dict(zip(state["ids"], state["assignments"]))
    store = SessionStore(cfg.session_root, cfg.session_id)
    return LabelSession(
        session_id=cfg.session_id,
        records=records,
        coords=coords,
        clusters=clusters,
        store=store,
    )


if __name__ == "__main__":
    main()
