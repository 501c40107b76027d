import numpy as np
import pytest

from intentlab.corpus import EmbeddingMatrix, UtteranceRecord, matrix_checksum
from intentlab.synth import make_blob_corpus


@pytest.fixture
def blob_corpus():
    """600-point, 16-dim, 3-class blob corpus (all train)."""
    return make_blob_corpus(n_points=600, dim=16, n_classes=3, rng_seed=7)


@pytest.fixture
def small_corpus():
    """Tiny 2-class corpus with all three splits present."""
    records, emb = make_blob_corpus(
        n_points=40, dim=4, n_classes=2, rng_seed=3,
        split_fractions=(0.6, 0.2, 0.2),
    )
    return records, emb


def borderline_fixture():
    """12 points, minority ids 0-4, hand-checkable neighbor structure.

    With m=3: ids 0-2 sit in a tight minority cluster (safe), id 3 sits
    between the minority cluster and a majority pair (danger), id 4 is
    surrounded by majority (noise).
    """
    coords = np.array(
        [
            [0.0, 0.0],   # 0 min safe
            [0.4, 0.0],   # 1 min safe
            [0.0, 0.4],   # 2 min safe
            [2.0, 0.0],   # 3 min danger
            [10.0, 10.0], # 4 min noise
            [3.0, 0.0],   # 5 maj
            [3.0, 0.5],   # 6 maj
            [9.0, 10.0],  # 7 maj
            [11.0, 10.0], # 8 maj
            [10.0, 9.0],  # 9 maj
            [10.0, 11.0], # 10 maj
            [0.0, 3.0],   # 11 maj
        ]
    )
    labels = ["min"] * 5 + ["maj"] * 7
    records = [
        UtteranceRecord(id=i, text=f"point {i}", gold_label=labels[i], split="train")
        for i in range(12)
    ]
    emb = EmbeddingMatrix(data=coords, checksum=matrix_checksum(coords))
    return records, emb


@pytest.fixture
def borderline_points():
    return borderline_fixture()
