"""Seed-selection strategies for the initial labeled subset.

Five strategies over the labeled pool of size N: uniform random, two
cluster-based variants (standard embeddings and an alternate sentence
embedding matrix), known-class clustering, and predicted-cluster
stratified sampling. All are deterministic functions of their inputs
and the rng seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .corpus import ClassMask, EmbeddingMatrix, UtteranceRecord, round_half_up
from .cluster_engine import estimate_k, kmeans

STRATEGIES = ("random", "cb", "kcb", "cse", "pcs")


@dataclass(frozen=True)
class SeedPlan:
    """Audit record of one seed selection."""

    strategy: str
    selected_ids: tuple[int, ...]
    n: int
    rng_seed: int

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if len(self.selected_ids) != self.n:
            raise ValueError(
                f"plan size {len(self.selected_ids)} does not match n={self.n}"
            )
        if len(set(self.selected_ids)) != len(self.selected_ids):
            raise ValueError("selected ids must be unique")

    def to_json(self) -> str:
        return json.dumps(
            {
                "strategy": self.strategy,
                "n": self.n,
                "rng_seed": self.rng_seed,
                "selected_ids": list(self.selected_ids),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SeedPlan":
        obj = json.loads(text)
        return cls(
            strategy=obj["strategy"],
            selected_ids=tuple(obj["selected_ids"]),
            n=obj["n"],
            rng_seed=obj["rng_seed"],
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SeedPlan":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def seed_count(labeled_ratio: float, pool_size: int) -> int:
    """Seed set size n from the labeled ratio, halves rounding up."""
    return round_half_up(labeled_ratio * pool_size)


def _pool_rows(pool: Sequence[UtteranceRecord], emb: EmbeddingMatrix) -> np.ndarray:
    ids = [r.id for r in pool]
    if max(ids) >= emb.rows:
        raise ValueError("embedding matrix does not cover the pool ids")
    return emb.data[ids]


def select_random(
    pool: Sequence[UtteranceRecord], n: int, rng_seed: int
) -> SeedPlan:
    """Uniform sample of n pool members without replacement."""
    if not 1 <= n <= len(pool):
        raise ValueError(f"n={n} out of range for pool of {len(pool)}")
    rng = np.random.default_rng(rng_seed)
    ids = np.asarray(sorted(r.id for r in pool))
    picked = rng.choice(ids, size=n, replace=False)
    return SeedPlan(
        strategy="random",
        selected_ids=tuple(int(i) for i in sorted(picked)),
        n=n,
        rng_seed=rng_seed,
    )


def _nearest_per_centroid(
    ids: np.ndarray, rows: np.ndarray, centroids: np.ndarray
) -> list[int]:
    """Per centroid, the nearest unselected pool member, ties to low id.

    A collision (two centroids sharing a nearest member) falls through
    to the next-nearest unselected point, keeping the count exact.
    """
    selected: list[int] = []
    taken: set[int] = set()
    for c in centroids:
        d2 = ((rows - c) ** 2).sum(axis=1)
        order = np.lexsort((ids, d2))
        pick = next(int(ids[i]) for i in order if int(ids[i]) not in taken)
        taken.add(pick)
        selected.append(pick)
    return selected


def select_cluster_based(
    pool: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    n: int,
    rng_seed: int,
) -> SeedPlan:
    """K-means with k = n; each centroid contributes its nearest member."""
    return _cluster_based(pool, emb, n, rng_seed, strategy="cb")


def select_cluster_based_sentence_emb(
    pool: Sequence[UtteranceRecord],
    alt_emb: EmbeddingMatrix,
    n: int,
    rng_seed: int,
) -> SeedPlan:
    """Cluster-based selection over the alternate embedding matrix."""
    return _cluster_based(pool, alt_emb, n, rng_seed, strategy="cse")


def _cluster_based(
    pool: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    n: int,
    rng_seed: int,
    strategy: str,
) -> SeedPlan:
    if not 1 <= n <= len(pool):
        raise ValueError(f"n={n} out of range for pool of {len(pool)}")
    ids = np.asarray(sorted(r.id for r in pool))
    rows = _pool_rows(sorted(pool, key=lambda r: r.id), emb)
    _, centroids, _ = kmeans(rows, n, rng_seed)
    selected = _nearest_per_centroid(ids, rows, centroids)
    return SeedPlan(
        strategy=strategy,
        selected_ids=tuple(sorted(selected)),
        n=n,
        rng_seed=rng_seed,
    )


def select_known_cluster_based(
    pool: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    labeled_ratio: float,
    mask: ClassMask,
    rng_seed: int,
) -> SeedPlan:
    """K-means into |known classes| clusters, ratio-share from each.

    Per-cluster sample sizes round halves up; a plan where every cluster
    rounds to zero is degenerate and raises.
    """
    k = len(mask.known_classes)
    if k < 1:
        raise ValueError("mask has no known classes")
    ordered = sorted(pool, key=lambda r: r.id)
    ids = np.asarray([r.id for r in ordered])
    rows = _pool_rows(ordered, emb)
    labels, _, _ = kmeans(rows, k, rng_seed)
    rng = np.random.default_rng(rng_seed)
    selected: list[int] = []
    for c in range(k):
        members = ids[labels == c]
        take = round_half_up(labeled_ratio * len(members))
        if take == 0:
            continue
        picked = rng.choice(np.sort(members), size=take, replace=False)
        selected.extend(int(i) for i in picked)
    if not selected:
        raise ValueError(
            "degenerate seed plan: every cluster's sample size rounds to 0"
        )
    return SeedPlan(
        strategy="kcb",
        selected_ids=tuple(sorted(selected)),
        n=len(selected),
        rng_seed=rng_seed,
    )


def largest_remainder(sizes: Sequence[int], n: int) -> np.ndarray:
    """Apportion n draws across strata proportionally to their sizes.

    Floor of each quota first, then leftovers by largest fractional
    remainder (ties to the lower stratum index), never exceeding a
    stratum's capacity.
    """
    sizes_arr = np.asarray(sizes, dtype=np.int64)
    total = int(sizes_arr.sum())
    if n > total:
        raise ValueError(f"cannot apportion {n} draws over {total} items")
    quotas = n * sizes_arr / total
    counts = np.floor(quotas).astype(np.int64)
    remainders = quotas - counts
    leftover = n - int(counts.sum())
    order = sorted(range(len(sizes_arr)), key=lambda i: (-remainders[i], i))
    while leftover > 0:
        progressed = False
        for i in order:
            if leftover == 0:
                break
            if counts[i] < sizes_arr[i]:
                counts[i] += 1
                leftover -= 1
                progressed = True
        if not progressed:
            raise ValueError("apportionment stuck below target")
    return counts


def select_predicted_cluster_sampling(
    pool: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    n: int,
    k_prime: int,
    rng_seed: int,
) -> SeedPlan:
    """Estimate the cluster count, then sample n stratified by cluster."""
    if not 1 <= n <= len(pool):
        raise ValueError(f"n={n} out of range for pool of {len(pool)}")
    if k_prime < 2:
        raise ValueError("k_prime must be >= 2")
    ordered = sorted(pool, key=lambda r: r.id)
    ids = np.asarray([r.id for r in ordered])
    rows = _pool_rows(ordered, emb)
    k = estimate_k(rows, k_prime, rng_seed)
    if k == 0:
        raise ValueError("cluster-count estimate is 0")
    labels, _, _ = kmeans(rows, k, rng_seed)
    sizes = np.bincount(labels, minlength=k)
    counts = largest_remainder(sizes, n)
    rng = np.random.default_rng(rng_seed)
    selected: list[int] = []
    for c in range(k):
        if counts[c] == 0:
            continue
        members = np.sort(ids[labels == c])
        picked = rng.choice(members, size=int(counts[c]), replace=False)
        selected.extend(int(i) for i in picked)
    return SeedPlan(
        strategy="pcs",
        selected_ids=tuple(sorted(selected)),
        n=n,
        rng_seed=rng_seed,
    )
