"""End-to-end experiment runner.

For every (strategy, balance mode, run seed) cell: mask classes, select
seeds, balance, run the clustering loop, and score against gold labels.
Emits a mean±std table as CSV and aligned text, with per-run artifacts
under content-addressed directories. Output bytes depend only on the
config and the corpus files.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import balance as balance_mod
from . import metrics as metrics_mod
from . import seed_select
from .cluster_engine import run_dac
from .config import ExperimentConfig
from .corpus import (
    EmbeddingMatrix,
    labeled_pool,
    load_corpus,
    mask_classes,
    matrix_checksum,
    read_embeddings,
)

STRATEGY_LABELS = {
    "random": "RandomSampling",
    "cb": "ClusterBased",
    "kcb": "KnownClusterBased",
    "cse": "ClusterBasedSentenceEmb",
    "pcs": "PredictedClusterSampling",
}
BALANCE_LABELS = {
    "none": "None",
    "paraphrasing": "Paraphrasing",
    "paramote": "ParaMote",
    "aug": "Aug (3x)",
}


def _make_provider(cfg: ExperimentConfig):
    if cfg.provider == "echo":
        return balance_mod.EchoProvider()
    if cfg.provider == "synonym":
        return balance_mod.SynonymProvider()
    return balance_mod.HttpParaphraseProvider(cfg.provider_url or "")


def _config_digest(cfg: ExperimentConfig, strategy: str, mode: str, seed: int) -> str:
    blob = json.dumps(
        {
            "dataset": cfg.dataset_name,
            "embedding": cfg.embedding_name,
            "labeled_ratio": cfg.labeled_ratio,
            "known_class_ratio": cfg.known_class_ratio,
            "k": cfg.k,
            "k_prime": cfg.k_prime,
            "strategy": strategy,
            "balance": mode,
            "seed": seed,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def select_plan(
    strategy: str,
    pool,
    emb: EmbeddingMatrix,
    alt_emb: Optional[EmbeddingMatrix],
    cfg: ExperimentConfig,
    mask,
    n: int,
    seed: int,
) -> seed_select.SeedPlan:
    if strategy == "random":
        return seed_select.select_random(pool, n, seed)
    if strategy == "cb":
        return seed_select.select_cluster_based(pool, emb, n, seed)
    if strategy == "cse":
        if alt_emb is None:
            raise ValueError("strategy cse requires the alternate embedding matrix")
        return seed_select.select_cluster_based_sentence_emb(pool, alt_emb, n, seed)
    if strategy == "kcb":
        return seed_select.select_known_cluster_based(
            pool, emb, cfg.labeled_ratio, mask, seed
        )
    if strategy == "pcs":
        k_prime = cfg.k_prime or 2 * len(mask.known_classes | mask.unseen_classes)
        return seed_select.select_predicted_cluster_sampling(
            pool, emb, n, k_prime, seed
        )
    raise ValueError(f"unknown strategy {strategy!r}")


def run_single(
    cfg: ExperimentConfig,
    records,
    emb: EmbeddingMatrix,
    alt_emb: Optional[EmbeddingMatrix],
    strategy: str,
    mode: str,
    run_idx: int,
) -> dict:
    """One pipeline cell; returns the metric dict for aggregation."""
    seed = cfg.base_seed + run_idx
    mask = mask_classes(records, cfg.known_class_ratio, seed)
    pool = labeled_pool(records, mask)
    n = seed_select.seed_count(cfg.labeled_ratio, len(pool))
    plan = select_plan(strategy, pool, emb, alt_emb, cfg, mask, n, seed)

    by_id = {r.id: r for r in records}
    labeled = [by_id[i] for i in plan.selected_ids]
    rows = emb.data
    additions = ()
    if mode in ("paraphrasing", "paramote"):
        provider = _make_provider(cfg)
        checker = (
            balance_mod.NearestNeighborChecker(labeled, emb)
            if mode == "paramote"
            else None
        )
        result, rows = balance_mod.balance_dataset(
            labeled, emb.data, cfg.m_neighbors, provider, mode,
            checker=checker, rng_seed=seed, next_id=len(records),
        )
        additions = result.records
    elif mode == "aug":
        provider = _make_provider(cfg)
        checker = balance_mod.NearestNeighborChecker(labeled, emb)
        result = balance_mod.augment(
            labeled, cfg.augment_factor, provider, checker,
            rng_seed=seed, next_id=len(records),
        )
        additions = result.records
        if additions:
            src_rows = [result.provenance[r.id] for r in additions]
            rows = np.vstack([emb.data, emb.data[src_rows]])

    ext_records = list(records) + list(additions)
    ext_emb = EmbeddingMatrix(data=rows, checksum=matrix_checksum(rows))
    ext_plan = seed_select.SeedPlan(
        strategy=plan.strategy,
        selected_ids=plan.selected_ids + tuple(r.id for r in additions),
        n=plan.n + len(additions),
        rng_seed=plan.rng_seed,
    )

    hyper = cfg.hyper
    if cfg.k == "estimate" and hyper.k_prime is None:
        raise ValueError("k = estimate requires k_prime")
    _, state, _ = run_dac(ext_records, ext_emb, ext_plan, cfg.k, hyper)

    train_ids = [r.id for r in ext_records if r.split == "train"]
    assignment_by_id = dict(zip(train_ids, state.assignments.tolist()))
    eval_records = [
        r for r in records if r.split == "train" and r.gold_label is not None
    ]
    true_labels = [r.gold_label for r in eval_records]
    pred = [assignment_by_id[r.id] for r in eval_records]
    return {
        "strategy": strategy,
        "balance": mode,
        "run": run_idx,
        "seed": seed,
        "n_seeds": plan.n,
        "n_additions": len(additions),
        "K": int(state.centroids.shape[0]),
        "nmi": 100.0 * metrics_mod.nmi(true_labels, pred),
        "ari": 100.0 * metrics_mod.ari(true_labels, pred),
        "acc": 100.0 * metrics_mod.aligned_acc(true_labels, pred),
        "plan_json": plan.to_json(),
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the full grid and write results; returns output paths."""
    records, emb = load_corpus(cfg.corpus_path, cfg.embedding_path)
    alt_emb = (
        read_embeddings(cfg.alt_embedding_path) if cfg.alt_embedding_path else None
    )
    cells = [
        (strategy, mode, run_idx)
        for strategy in cfg.strategies
        for mode in cfg.balance_modes
        for run_idx in range(cfg.runs)
    ]

    def work(cell):
        strategy, mode, run_idx = cell
        return run_single(cfg, records, emb, alt_emb, strategy, mode, run_idx)

    results: dict[tuple, dict] = {}
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            for cell, outcome in zip(cells, pool.map(work, cells)):
                results[cell] = outcome
    else:
        for cell in cells:
            results[cell] = work(cell)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    runs_dir = cfg.out_dir / "runs"
    rows = []
    for strategy in cfg.strategies:
        for mode in cfg.balance_modes:
            cell_results = [
                results[(strategy, mode, run_idx)] for run_idx in range(cfg.runs)
            ]
            for outcome in cell_results:
                digest = _config_digest(cfg, strategy, mode, outcome["seed"])
                run_dir = runs_dir / digest
                run_dir.mkdir(parents=True, exist_ok=True)
                (run_dir / "seedplan.json").write_text(
                    outcome["plan_json"] + "\n", encoding="utf-8"
                )
                payload = {
                    k: v for k, v in outcome.items() if k != "plan_json"
                }
                (run_dir / "metrics.json").write_text(
                    json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
                )
            rows.append(
                (
                    cfg.dataset_name,
                    cfg.embedding_name,
                    BALANCE_LABELS[mode],
                    STRATEGY_LABELS[strategy],
                    metrics_mod.aggregate(
                        "nmi", [c["nmi"] for c in cell_results]
                    ).formatted,
                    metrics_mod.aggregate(
                        "ari", [c["ari"] for c in cell_results]
                    ).formatted,
                    metrics_mod.aggregate(
                        "acc", [c["acc"] for c in cell_results]
                    ).formatted,
                )
            )

    csv_path = cfg.out_dir / "results.csv"
    txt_path = cfg.out_dir / "results.txt"
    csv_path.write_text(metrics_mod.render_results_csv(rows), encoding="utf-8")
    txt_path.write_text(metrics_mod.render_results_text(rows), encoding="utf-8")
    return {"csv": csv_path, "txt": txt_path, "runs_dir": runs_dir, "rows": rows}
