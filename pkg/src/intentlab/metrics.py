"""Clustering evaluation: NMI, ARI, aligned accuracy, run aggregation.

All three metrics are invariant to permutations of the predicted
cluster ids. Aggregation follows the reporting convention of the
experiment tables: population standard deviation, "mean±std" with two
decimals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import hungarian


@dataclass(frozen=True)
class ContingencyTable:
    """Class-by-cluster count matrix with marginals."""

    counts: np.ndarray
    classes: tuple
    clusters: tuple
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    total: int


@dataclass(frozen=True)
class RunAggregate:
    """Per-metric summary over repeated runs."""

    name: str
    values: tuple[float, ...]
    mean: float
    std: float

    @property
    def formatted(self) -> str:
        return format_mean_std(self.mean, self.std)


def contingency(true_labels: Sequence, pred_clusters: Sequence) -> ContingencyTable:
    """Build the class-by-cluster count table."""
    if len(true_labels) != len(pred_clusters):
        raise ValueError("label sequences must have equal length")
    if len(true_labels) == 0:
        raise ValueError("label sequences must be non-empty")
    classes = sorted(set(true_labels), key=lambda c: (str(type(c)), c))
    clusters = sorted(set(pred_clusters), key=lambda c: (str(type(c)), c))
    class_idx = {c: i for i, c in enumerate(classes)}
    cluster_idx = {c: i for i, c in enumerate(clusters)}
    counts = np.zeros((len(classes), len(clusters)), dtype=np.int64)
    for t, p in zip(true_labels, pred_clusters):
        counts[class_idx[t], cluster_idx[p]] += 1
    return ContingencyTable(
        counts=counts,
        classes=tuple(classes),
        clusters=tuple(clusters),
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        total=int(counts.sum()),
    )


def _entropy(marginals: np.ndarray, n: int) -> float:
    p = marginals[marginals > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(true_labels: Sequence, pred_clusters: Sequence) -> float:
    """Mutual information normalized by the mean of the two entropies."""
    table = contingency(true_labels, pred_clusters)
    n = table.total
    h_true = _entropy(table.row_marginals, n)
    h_pred = _entropy(table.col_marginals, n)
    if h_true == 0.0 and h_pred == 0.0:
        # Two identical trivial partitions.
        return 1.0
    mi = 0.0
    rows, cols = np.nonzero(table.counts)
    for i, j in zip(rows, cols):
        nij = table.counts[i, j]
        mi += (nij / n) * math.log(
            n * nij / (table.row_marginals[i] * table.col_marginals[j])
        )
    value = mi / ((h_true + h_pred) / 2.0)
    return float(min(1.0, max(0.0, value)))


def _pairs(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) // 2


def ari(true_labels: Sequence, pred_clusters: Sequence) -> float:
    """Adjusted Rand index with the expected-index correction."""
    table = contingency(true_labels, pred_clusters)
    n = table.total
    if n < 2:
        raise ValueError("ari requires at least 2 items")
    index = float(_pairs(table.counts).sum())
    sum_a = float(_pairs(table.row_marginals).sum())
    sum_b = float(_pairs(table.col_marginals).sum())
    total_pairs = float(_pairs(np.asarray([n])).sum())
    expected = sum_a * sum_b / total_pairs
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        # Both partitions trivial (all-singletons or single cluster).
        return 1.0
    return float((index - expected) / (max_index - expected))


def aligned_acc(true_labels: Sequence, pred_clusters: Sequence) -> float:
    """Accuracy after the optimal cluster-to-class assignment."""
    table = contingency(true_labels, pred_clusters)
    counts = table.counts.T  # clusters x classes
    k = max(counts.shape)
    padded = np.zeros((k, k), dtype=np.float64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    # Maximize matched count == minimize (max - count).
    assignment, _ = hungarian.solve(padded.max() - padded)
    matched = padded[np.arange(k), assignment].sum()
    return float(matched / table.total)


def aggregate(name: str, values: Sequence[float]) -> RunAggregate:
    """Mean and population standard deviation over run values."""
    if len(values) == 0:
        raise ValueError("aggregate requires at least one run value")
    arr = np.asarray(values, dtype=np.float64)
    return RunAggregate(
        name=name,
        values=tuple(float(v) for v in arr),
        mean=float(arr.mean()),
        std=float(arr.std()),
    )


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.2f}±{std:.2f}"


RESULT_COLUMNS = ("dataset", "embedding", "balance", "strategy", "NMI", "ARI", "ACC")


def render_results_csv(rows: Sequence[Sequence[str]]) -> str:
    """Results table as CSV with the standard column layout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def render_results_text(rows: Sequence[Sequence[str]]) -> str:
    """Results table as aligned fixed-width text."""
    table = [list(RESULT_COLUMNS)] + [list(r) for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(RESULT_COLUMNS))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
