"""Synthetic blob corpora for tests, demos, and the experiment fixtures."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .corpus import EmbeddingMatrix, UtteranceRecord, matrix_checksum, write_corpus, write_embeddings


def make_blob_corpus(
    n_points: int,
    dim: int,
    n_classes: int,
    rng_seed: int,
    center_scale: float = 6.0,
    blob_std: float = 0.5,
    class_names: Optional[Sequence[str]] = None,
    split_fractions: tuple[float, float, float] = (1.0, 0.0, 0.0),
) -> tuple[list[UtteranceRecord], EmbeddingMatrix]:
    """Gaussian-blob corpus: one blob per intent class.

    Points are interleaved across classes and shuffled so ids carry no
    class information. Split fractions apportion train/valid/test.
    """
    if class_names is None:
        class_names = [f"intent_{chr(ord('a') + i)}" for i in range(n_classes)]
    rng = np.random.default_rng(rng_seed)
    centers = rng.normal(0.0, center_scale, (n_classes, dim))
    labels = np.array([i % n_classes for i in range(n_points)])
    rng.shuffle(labels)
    data = centers[labels] + rng.normal(0.0, blob_std, (n_points, dim))
    n_train = int(round(split_fractions[0] * n_points))
    n_valid = int(round(split_fractions[1] * n_points))
    splits = ["train"] * n_train + ["valid"] * n_valid
    splits += ["test"] * (n_points - len(splits))
    records = [
        UtteranceRecord(
            id=i,
            text=f"utterance {i} about {class_names[labels[i]]}",
            gold_label=class_names[labels[i]],
            split=splits[i],
        )
        for i in range(n_points)
    ]
    emb = EmbeddingMatrix(data=data, checksum=matrix_checksum(data))
    return records, emb


def make_dense_mixture(
    n_clusters: int,
    points_per_cluster: int,
    dim: int,
    rng_seed: int,
    center_scale: float = 20.0,
    blob_std: float = 0.5,
    satellite_size: int = 10,
    satellite_std: float = 2.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense, well-separated blobs plus equally many sparse satellites.

    Returns (points, labels) with satellite points labeled -1. The
    satellites keep the dense-cluster assumption honest: extra centroids
    latch onto the sparse mini-clusters, which fall below the mean-size
    threshold, instead of splitting a dense blob.
    """
    rng = np.random.default_rng(rng_seed)
    centers = rng.normal(0.0, center_scale, (2 * n_clusters, dim))
    chunks = []
    labels = []
    for c in range(n_clusters):
        chunks.append(
            centers[c] + rng.normal(0.0, blob_std, (points_per_cluster, dim))
        )
        labels.extend([c] * points_per_cluster)
    for c in range(n_clusters, 2 * n_clusters):
        chunks.append(
            centers[c] + rng.normal(0.0, satellite_std, (satellite_size, dim))
        )
        labels.extend([-1] * satellite_size)
    points = np.vstack(chunks)
    labels = np.asarray(labels)
    order = rng.permutation(len(points))
    return points[order], labels[order]


def write_blob_fixture(
    out_dir: Union[str, Path],
    n_points: int = 600,
    dim: int = 16,
    n_classes: int = 3,
    rng_seed: int = 7,
    **kwargs,
) -> tuple[Path, Path]:
    """Write a blob corpus and its EMB1 matrix; returns the two paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, emb = make_blob_corpus(n_points, dim, n_classes, rng_seed, **kwargs)
    corpus_path = out / "corpus.jsonl"
    emb_path = out / "embeddings.emb"
    write_corpus(records, corpus_path)
    write_embeddings(emb.data, emb_path)
    return corpus_path, emb_path
