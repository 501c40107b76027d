"""Deep-aligned clustering core.

K-means with k-means++ seeding, cluster-count estimation by the mean-size
threshold rule, a small projection head trained on seed labels, optimal
centroid alignment between successive epochs, and the self-supervised
align-and-retrain loop that produces the final representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np

from . import hungarian
from ._kernels import assign_points
from .corpus import EMB_MAGIC, EmbeddingMatrix, UtteranceRecord, write_embeddings

if TYPE_CHECKING:
    from .seed_select import SeedPlan

KMEANS_MAX_ITER = 100
KMEANS_REL_TOL = 1e-4


@dataclass(frozen=True)
class TrainParams:
    """Hyperparameters for head training and the self-supervised loop.

    The loop epoch count and pseudo-label training schedule are not
    pinned by any reported protocol; these defaults are what the fixture
    suite validates.
    """

    hidden_dim: int = 64
    feature_dim: int = 64
    pretrain_epochs: int = 100
    inner_epochs: int = 10
    dac_epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.05
    delta_stop: float = 0.005
    k_prime: Optional[int] = None


@dataclass(frozen=True)
class ProjectionHead:
    """Two-affine-layer head with a rectifier, plus a linear classifier."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    wc: np.ndarray
    bc: np.ndarray

    @classmethod
    def init(
        cls, input_dim: int, hidden_dim: int, feature_dim: int,
        n_classes: int, rng: np.random.Generator,
    ) -> "ProjectionHead":
        if feature_dim < 2:
            raise ValueError("feature dimension must be >= 2")
        w1 = rng.normal(0.0, np.sqrt(2.0 / input_dim), (input_dim, hidden_dim))
        w2 = rng.normal(0.0, np.sqrt(2.0 / hidden_dim), (hidden_dim, feature_dim))
        wc = rng.normal(0.0, np.sqrt(2.0 / feature_dim), (feature_dim, n_classes))
        return cls(
            w1=w1, b1=np.zeros(hidden_dim),
            w2=w2, b2=np.zeros(feature_dim),
            wc=wc, bc=np.zeros(n_classes),
        )

    @property
    def n_classes(self) -> int:
        return self.wc.shape[1]

    def features(self, x: np.ndarray) -> np.ndarray:
        hidden = np.maximum(x @ self.w1 + self.b1, 0.0)
        return hidden @ self.w2 + self.b2

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.features(x) @ self.wc + self.bc

    def with_classifier(self, n_classes: int, rng: np.random.Generator) -> "ProjectionHead":
        """Fresh classifier layer; feature layers carried over."""
        feature_dim = self.w2.shape[1]
        wc = rng.normal(0.0, np.sqrt(2.0 / feature_dim), (feature_dim, n_classes))
        return replace(self, wc=wc, bc=np.zeros(n_classes))


@dataclass(frozen=True)
class ClusterState:
    """One epoch's clustering, aligned to the previous epoch's ids."""

    epoch: int
    assignments: np.ndarray
    centroids: np.ndarray
    alignment: np.ndarray


@dataclass(frozen=True)
class EstimationParams:
    """Initial cluster count and the derived mean-size threshold."""

    k_prime: int
    threshold: float

    def __post_init__(self) -> None:
        if self.k_prime < 1:
            raise ValueError("k_prime must be >= 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")


def _kmeans_pp_init(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray, k: int, rng_seed,
    max_iter: int = KMEANS_MAX_ITER, rel_tol: float = KMEANS_REL_TOL,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd's algorithm with k-means++ seeding.

    rng_seed is anything numpy's default_rng accepts (int or tuple).
    Returns (assignments, centroids, inertia). Inertia is checked to be
    non-increasing across iterations. An empty cluster is reseeded at
    the point farthest from its assigned centroid.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2D matrix")
    n = points.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} points")
    if not np.isfinite(points).all():
        raise ValueError("points must be finite")
    rng = np.random.default_rng(rng_seed)
    centroids = _kmeans_pp_init(points, k, rng)
    prev_inertia = np.inf
    for _ in range(max_iter):
        labels, sqd = assign_points(points, centroids)
        inertia = float(sqd.sum())
        if inertia > prev_inertia * (1.0 + 1e-12) + 1e-12:
            raise AssertionError("k-means inertia increased between iterations")
        prev_inertia = inertia
        sizes = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(sizes == 0)
        if empties.size and sqd.max() > 0.0:
            taken: set[int] = set()
            for c in empties:
                order = np.argsort(-sqd, kind="stable")
                pick = next(int(i) for i in order if int(i) not in taken)
                taken.add(pick)
                centroids[c] = points[pick]
            continue
        new_centroids = centroids.copy()
        for c in range(k):
            if sizes[c] > 0:
                new_centroids[c] = points[labels == c].mean(axis=0)
        shift = float(np.linalg.norm(new_centroids - centroids))
        scale = float(np.linalg.norm(centroids)) + 1e-12
        centroids = new_centroids
        if shift / scale < rel_tol:
            break
    labels, sqd = assign_points(points, centroids)
    inertia = float(sqd.sum())
    if inertia > prev_inertia * (1.0 + 1e-12) + 1e-12:
        raise AssertionError("k-means inertia increased between iterations")
    return labels, centroids, inertia


def estimate_k(points: np.ndarray, k_prime: int, rng_seed: int) -> int:
    """Count clusters whose size reaches the mean-size threshold.

    Runs k-means with k_prime clusters, sets the threshold to
    rows / k_prime, and returns how many produced clusters have at
    least that many members.
    """
    points = np.asarray(points, dtype=np.float64)
    if k_prime > points.shape[0]:
        raise ValueError(f"k_prime={k_prime} exceeds {points.shape[0]} points")
    params = EstimationParams(k_prime=k_prime, threshold=points.shape[0] / k_prime)
    labels, _, _ = kmeans(points, k_prime, rng_seed)
    sizes = np.bincount(labels, minlength=k_prime)
    return int((sizes >= params.threshold).sum())


def loss_and_grads(
    head: ProjectionHead, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy of the classifier plus analytic gradients.

    Log-softmax keeps the loss finite for any finite logits; it only
    goes non-finite (divergence) when the parameters themselves blow up.
    """
    n = x.shape[0]
    # Overflow surfaces as a non-finite loss, not a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        a = x @ head.w1 + head.b1
        hidden = np.maximum(a, 0.0)
        z = hidden @ head.w2 + head.b2
        logits = z @ head.wc + head.bc
        shifted = logits - logits.max(axis=1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=1))
        loss = float(-(shifted[np.arange(n), y] - logsumexp).mean())
        probs = np.exp(shifted - logsumexp[:, None])
        dlogits = probs.copy()
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n
        grads = {
            "wc": z.T @ dlogits,
            "bc": dlogits.sum(axis=0),
        }
        dz = dlogits @ head.wc.T
        grads["w2"] = hidden.T @ dz
        grads["b2"] = dz.sum(axis=0)
        da = (dz @ head.w2.T) * (a > 0.0)
        grads["w1"] = x.T @ da
        grads["b1"] = da.sum(axis=0)
    return loss, grads


def _sgd_step(head: ProjectionHead, grads: dict[str, np.ndarray], lr: float) -> ProjectionHead:
    return ProjectionHead(
        w1=head.w1 - lr * grads["w1"],
        b1=head.b1 - lr * grads["b1"],
        w2=head.w2 - lr * grads["w2"],
        b2=head.b2 - lr * grads["b2"],
        wc=head.wc - lr * grads["wc"],
        bc=head.bc - lr * grads["bc"],
    )


def train_head(
    head: ProjectionHead, x: np.ndarray, y: np.ndarray,
    epochs: int, batch_size: int, lr: float, rng: np.random.Generator,
) -> tuple[ProjectionHead, float]:
    """Mini-batch gradient descent on cross-entropy; returns final loss."""
    n = x.shape[0]
    loss = loss_and_grads(head, x, y)[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, grads = loss_and_grads(head, x[batch], y[batch])
            if not np.isfinite(loss):
                raise ValueError("divergence: non-finite training loss")
            head = _sgd_step(head, grads, lr)
    final = loss_and_grads(head, x, y)[0]
    if not np.isfinite(final):
        raise ValueError("divergence: non-finite training loss")
    return head, final


def pretrain(
    head: ProjectionHead,
    seed_plan: "SeedPlan",
    records: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    hyper: TrainParams,
) -> ProjectionHead:
    """Fit the classifier on the seed labels by mini-batch descent."""
    by_id = {r.id: r for r in records}
    seeds = [by_id[i] for i in seed_plan.selected_ids]
    labels = sorted({r.gold_label for r in seeds if r.gold_label is not None})
    if len(labels) != len({r.gold_label for r in seeds}):
        raise ValueError("seed records must all carry gold labels")
    if head.n_classes != len(labels):
        raise ValueError(
            f"head classifier has {head.n_classes} outputs for {len(labels)} seed classes"
        )
    if hyper.pretrain_epochs == 0:
        return head
    label_idx = {c: i for i, c in enumerate(labels)}
    x = emb.data[[r.id for r in seeds]]
    y = np.asarray([label_idx[r.gold_label] for r in seeds], dtype=np.int64)
    rng = np.random.default_rng(seed_plan.rng_seed)
    head, _ = train_head(
        head, x, y, hyper.pretrain_epochs, hyper.batch_size, hyper.learning_rate, rng
    )
    return head


def align_centroids(prev: np.ndarray, curr: np.ndarray) -> np.ndarray:
    """Bijection from current cluster ids to previous-epoch ids.

    Minimizes the total Euclidean distance between matched centroid
    pairs; exact-cost ties resolve to the lexicographically smallest
    permutation.
    """
    prev = np.asarray(prev, dtype=np.float64)
    curr = np.asarray(curr, dtype=np.float64)
    if prev.shape != curr.shape:
        raise ValueError(f"centroid shape mismatch: {prev.shape} vs {curr.shape}")
    diff = curr[:, None, :] - prev[None, :, :]
    cost = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return hungarian.lexicographic_min_assignment(cost)


def write_checkpoint(
    path: Union[str, Path], epoch: int, k: int, rng_seed: int,
    loss: float, features: np.ndarray,
) -> None:
    """One epoch checkpoint: JSON header line, then the EMB1 block."""
    header = json.dumps(
        {"epoch": epoch, "K": k, "rng_seed": rng_seed, "loss": loss}
    )
    tmp = Path(str(path) + ".emb1")
    write_embeddings(features, tmp)
    blob = tmp.read_bytes()
    tmp.unlink()
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob)


def read_checkpoint(path: Union[str, Path]) -> tuple[dict, np.ndarray]:
    """Read back a checkpoint written by write_checkpoint."""
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    blob = raw[nl + 1 :]
    if blob[:4] != EMB_MAGIC:
        raise ValueError(f"{path}: checkpoint missing EMB1 block")
    tmp = Path(str(path) + ".emb1")
    tmp.write_bytes(blob)
    try:
        from .corpus import read_embeddings

        emb = read_embeddings(tmp)
    finally:
        tmp.unlink()
    return header, emb.data


def run_dac(
    records: Sequence[UtteranceRecord],
    emb: EmbeddingMatrix,
    seed_plan: "SeedPlan",
    k: Union[int, str],
    hyper: TrainParams,
    checkpoint_dir: Optional[Union[str, Path]] = None,
) -> tuple[ProjectionHead, ClusterState, np.ndarray]:
    """Pretrain, then alternate clustering, alignment, and retraining.

    Clusters the train-split rows; features are returned for every
    corpus row. Stops early once the aligned assignment-change fraction
    drops below hyper.delta_stop.
    """
    by_id = {r.id: r for r in records}
    seeds = [by_id[i] for i in seed_plan.selected_ids]
    seed_classes = sorted({r.gold_label for r in seeds if r.gold_label is not None})
    if not seed_classes:
        raise ValueError("seed plan selects no gold-labeled records")
    rng = np.random.default_rng(seed_plan.rng_seed)
    head = ProjectionHead.init(
        emb.dim, hyper.hidden_dim, hyper.feature_dim, len(seed_classes), rng
    )

    train_ids = np.asarray(
        [r.id for r in records if r.split == "train"], dtype=np.int64
    )
    # Standardize on the train rows: keeps fixed-step descent stable
    # regardless of the incoming embedding scale.
    mu = emb.data[train_ids].mean(axis=0)
    sd = emb.data[train_ids].std(axis=0)
    sd[sd < 1e-8] = 1.0
    scaled = EmbeddingMatrix(
        data=(emb.data - mu) / sd, checksum=emb.checksum
    )
    emb = scaled
    head = pretrain(head, seed_plan, records, emb, hyper)
    x_train = emb.data[train_ids]

    if k == "estimate":
        if hyper.k_prime is None:
            raise ValueError("k='estimate' requires hyper.k_prime")
        n_clusters = estimate_k(
            head.features(x_train), hyper.k_prime, seed_plan.rng_seed
        )
        if n_clusters == 0:
            raise ValueError("cluster-count estimate is 0")
    else:
        n_clusters = int(k)

    head = head.with_classifier(n_clusters, rng)
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt_dir is not None:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    def cluster_pass(epoch: int, prev: Optional[ClusterState]) -> ClusterState:
        feats = head.features(x_train)
        labels, centroids, _ = kmeans(feats, n_clusters, (seed_plan.rng_seed, epoch))
        if prev is None:
            perm = np.arange(n_clusters, dtype=np.int64)
        else:
            perm = align_centroids(prev.centroids, centroids)
        aligned_labels = perm[labels]
        aligned_centroids = np.empty_like(centroids)
        aligned_centroids[perm] = centroids
        return ClusterState(
            epoch=epoch,
            assignments=aligned_labels,
            centroids=aligned_centroids,
            alignment=perm,
        )

    state: Optional[ClusterState] = None
    loss = float("nan")
    for epoch in range(hyper.dac_epochs):
        new_state = cluster_pass(epoch, state)
        if state is not None:
            change = float((new_state.assignments != state.assignments).mean())
        else:
            change = 1.0
        state = new_state
        if ckpt_dir is not None:
            write_checkpoint(
                ckpt_dir / f"epoch{epoch:04d}.ckpt",
                epoch, n_clusters, seed_plan.rng_seed, loss,
                head.features(emb.data),
            )
        if epoch > 0 and change < hyper.delta_stop:
            break
        head, loss = train_head(
            head, x_train, state.assignments,
            hyper.inner_epochs, hyper.batch_size, hyper.learning_rate, rng,
        )
    else:
        # Loop exhausted (or never ran): cluster once more so the state
        # reflects the returned head's feature space.
        state = cluster_pass(hyper.dac_epochs, state)

    features = head.features(emb.data)
    return head, state, features
