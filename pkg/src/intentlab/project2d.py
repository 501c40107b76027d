"""2D projection of feature matrices for the labeling view.

Native projection is PCA via power iteration with deflation; externally
computed 2D coordinates (from any manifold projector) drop in through
the same EMB1 file format with dim fixed to 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .corpus import matrix_checksum, read_embeddings, write_embeddings

POWER_TOL = 1e-9
POWER_MAX_ITER = 1000
_START_SEED = 0x2D


@dataclass(frozen=True)
class ProjectionCoords:
    """Rows-by-2 coordinates plus the source checksum they came from."""

    points: np.ndarray
    method: str
    source_checksum: int

    @property
    def rows(self) -> int:
        return self.points.shape[0]


def _top_eigenvector(
    cov: np.ndarray, rng: np.random.Generator, ortho: Optional[np.ndarray] = None
) -> tuple[np.ndarray, float]:
    """Dominant eigenvector of a PSD matrix by power iteration."""
    dim = cov.shape[0]
    v = rng.normal(size=dim)
    if ortho is not None:
        v -= (v @ ortho) * ortho
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(POWER_MAX_ITER):
        w = cov @ v
        if ortho is not None:
            w -= (w @ ortho) * ortho
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            # Deflated matrix is (numerically) zero: any orthogonal
            # direction is an eigenvector with eigenvalue 0.
            basis = np.eye(dim)
            if ortho is not None:
                basis = basis - np.outer(ortho, ortho)
            idx = int(np.argmax(np.linalg.norm(basis, axis=0)))
            v = basis[:, idx] / np.linalg.norm(basis[:, idx])
            return v, 0.0
        w /= norm
        if np.linalg.norm(w - v) < POWER_TOL:
            v = w
            value = norm
            break
        v = w
        value = norm
    return v, float(value)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nonzero = np.flatnonzero(np.abs(v) > 1e-10 * max(1.0, np.abs(v).max()))
    if len(nonzero) and v[nonzero[0]] < 0:
        return -v
    return v


def pca2d(features: np.ndarray) -> ProjectionCoords:
    """Mean-centered projection onto the top-2 principal directions.

    Axes ordered by descending eigenvalue; each axis is signed so its
    first nonzero loading is positive.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError("pca2d needs a matrix with >= 2 rows and >= 2 columns")
    if not np.isfinite(x).all():
        raise ValueError("pca2d input must be finite")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    if float(np.trace(cov)) < 1e-12:
        raise ValueError("zero-variance input")
    rng = np.random.default_rng(_START_SEED)
    v1, e1 = _top_eigenvector(cov, rng)
    deflated = cov - e1 * np.outer(v1, v1)
    v2, _ = _top_eigenvector(deflated, rng, ortho=v1)
    axes = np.stack([_fix_sign(v1), _fix_sign(v2)], axis=1)
    return ProjectionCoords(
        points=centered @ axes,
        method="pca",
        source_checksum=matrix_checksum(features),
    )


def write_coords(coords: ProjectionCoords, path: Union[str, Path]) -> int:
    """Persist coordinates as an EMB1 file with dim 2."""
    return write_embeddings(coords.points, path)


def load_external_coords(
    path: Union[str, Path], expected_rows: Optional[int] = None
) -> ProjectionCoords:
    """Ingest externally computed 2D coordinates from an EMB1 file."""
    emb = read_embeddings(path)
    if emb.dim != 2:
        raise ValueError(f"{path}: coordinate file must have dim 2, got {emb.dim}")
    if expected_rows is not None and emb.rows != expected_rows:
        raise ValueError(
            f"row mismatch: coordinate file has {emb.rows} rows, "
            f"corpus has {expected_rows}"
        )
    return ProjectionCoords(
        points=emb.data, method="external", source_checksum=emb.checksum
    )
