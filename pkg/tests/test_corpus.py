import json
import zlib

import numpy as np
import pytest

from intentlab import corpus
from intentlab.synth import make_blob_corpus, write_blob_fixture


def write_files(tmp_path, records, data):
    cpath = tmp_path / "c.jsonl"
    epath = tmp_path / "e.emb"
    corpus.write_corpus(records, cpath)
    corpus.write_embeddings(data, epath)
    return cpath, epath


def test_load_corpus_counts(tmp_path):
    records = [
        corpus.UtteranceRecord(0, "hello there", "greet", "train"),
        corpus.UtteranceRecord(1, "goodbye", None, "train"),
        corpus.UtteranceRecord(2, "thanks", "thank", "test"),
    ]
    data = np.arange(12, dtype=np.float64).reshape(3, 4)
    cpath, epath = write_files(tmp_path, records, data)
    loaded, emb = corpus.load_corpus(cpath, epath)
    assert len(loaded) == 3
    assert emb.rows == 3 and emb.dim == 4
    assert loaded == records


def test_row_count_mismatch(tmp_path):
    records = [
        corpus.UtteranceRecord(i, f"u{i}", None, "train") for i in range(5)
    ]
    data = np.zeros((4, 3))
    cpath, epath = write_files(tmp_path, records, data)
    with pytest.raises(ValueError, match="row-count mismatch"):
        corpus.load_corpus(cpath, epath)


def test_uneven_three_way_split_counts(tmp_path):
    # 1,289 / 445 / 419 train/valid/test rows across 19 classes.
    total = 1289 + 445 + 419
    records, emb = make_blob_corpus(
        n_points=total, dim=4, n_classes=19, rng_seed=0,
        split_fractions=(1289 / total, 445 / total, 419 / total),
    )
    cpath, epath = write_files(tmp_path, records, emb.data)
    loaded, _ = corpus.load_corpus(cpath, epath)
    splits = {"train": 0, "valid": 0, "test": 0}
    for r in loaded:
        splits[r.split] += 1
    assert splits == {"train": 1289, "valid": 445, "test": 419}


def test_corpus_round_trip_bytes(tmp_path):
    records, emb = make_blob_corpus(30, 4, 3, rng_seed=1)
    cpath, _ = write_files(tmp_path, records, emb.data)
    first = cpath.read_bytes()
    reloaded = corpus.read_corpus_file(cpath)
    second_path = tmp_path / "again.jsonl"
    corpus.write_corpus(reloaded, second_path)
    assert second_path.read_bytes() == first


def test_malformed_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": 0, "text": "x", "split": "train"}\nnot json\n')
    with pytest.raises(ValueError, match="line 2"):
        corpus.read_corpus_file(path)
    path.write_text('{"id": 0, "text": "", "split": "train"}\n')
    with pytest.raises(ValueError, match="text"):
        corpus.read_corpus_file(path)
    path.write_text('{"id": 0, "text": "x", "split": "nope"}\n')
    with pytest.raises(ValueError, match="split"):
        corpus.read_corpus_file(path)
    path.write_text(
        '{"id": 0, "text": "x", "split": "train"}\n'
        '{"id": 0, "text": "y", "split": "train"}\n'
    )
    with pytest.raises(ValueError, match="duplicate id"):
        corpus.read_corpus_file(path)


def test_emb1_crc_and_finite(tmp_path):
    path = tmp_path / "m.emb"
    data = np.array([[1.0, 2.0], [3.0, 4.0]])
    crc = corpus.write_embeddings(data, path)
    emb = corpus.read_embeddings(path)
    assert emb.checksum == crc
    assert np.allclose(emb.data, data)

    # Corrupt one payload byte: CRC must catch it.
    raw = bytearray(path.read_bytes())
    raw[13] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        corpus.read_embeddings(path)

    # Non-finite values are rejected with the row named.
    bad = np.array([[1.0, 2.0], [np.nan, 4.0]])
    arr = np.ascontiguousarray(bad, dtype="<f4")
    payload = arr.tobytes()
    with open(path, "wb") as fh:
        fh.write(b"EMB1")
        fh.write(np.uint32(2).tobytes() + np.uint32(2).tobytes())
        fh.write(payload)
        fh.write(np.uint32(zlib.crc32(payload)).tobytes())
    with pytest.raises(ValueError, match="row 1"):
        corpus.read_embeddings(path)


def test_mask_classes_counts_and_determinism():
    records, _ = make_blob_corpus(190, 4, 19, rng_seed=5)
    mask = corpus.mask_classes(records, 0.75, rng_seed=11)
    # 19 classes at ratio 0.75 -> round(14.25) = 14 known, 5 unseen.
    assert len(mask.known_classes) == 14
    assert len(mask.unseen_classes) == 5
    assert mask.known_classes.isdisjoint(mask.unseen_classes)
    again = corpus.mask_classes(records, 0.75, rng_seed=11)
    assert again == mask
    other = corpus.mask_classes(records, 0.75, rng_seed=12)
    assert other != mask  # re-drawn per seed


def test_mask_classes_identity_and_zero():
    records, _ = make_blob_corpus(40, 4, 4, rng_seed=5)
    mask = corpus.mask_classes(records, 1.0, rng_seed=0)
    assert len(mask.known_classes) == 4
    assert len(mask.unseen_classes) == 0
    with pytest.raises(ValueError, match="0 of"):
        corpus.mask_classes(records, 0.1, rng_seed=0)


def test_labeled_pool_filter():
    records = [
        corpus.UtteranceRecord(0, "a", "x", "train"),
        corpus.UtteranceRecord(1, "b", "x", "train"),
        corpus.UtteranceRecord(2, "c", "y", "train"),
        corpus.UtteranceRecord(3, "d", "y", "test"),
        corpus.UtteranceRecord(4, "e", "z", "train"),
    ]
    mask = corpus.ClassMask(frozenset({"x", "y"}), frozenset({"z"}))
    pool = corpus.labeled_pool(records, mask)
    assert [r.id for r in pool] == [0, 1, 2]
    assert all(r.split == "train" for r in pool)

    empty_mask = corpus.ClassMask(frozenset({"w"}), frozenset({"x", "y", "z"}))
    with pytest.raises(ValueError, match="empty labeled pool"):
        corpus.labeled_pool(records, empty_mask)


def test_labeled_pool_derived_count():
    # 10 records, 2 of 4 classes known, 5 records in those classes.
    labels = ["a", "a", "b", "b", "b", "c", "c", "d", "d", "d"]
    records = [
        corpus.UtteranceRecord(i, f"u{i}", labels[i], "train") for i in range(10)
    ]
    mask = corpus.ClassMask(frozenset({"a", "b"}), frozenset({"c", "d"}))
    assert len(corpus.labeled_pool(records, mask)) == 5


def test_corpus_config_validation():
    corpus.CorpusConfig(labeled_ratio=0.1, known_class_ratio=0.75, rng_seed=0)
    with pytest.raises(ValueError):
        corpus.CorpusConfig(labeled_ratio=0.0, known_class_ratio=0.75, rng_seed=0)
    with pytest.raises(ValueError):
        corpus.CorpusConfig(labeled_ratio=0.1, known_class_ratio=1.5, rng_seed=0)


def test_round_half_up():
    assert corpus.round_half_up(2.5) == 3
    assert corpus.round_half_up(2.25) == 2
    assert corpus.round_half_up(14.25) == 14
    assert corpus.round_half_up(0.5) == 1


def test_write_blob_fixture(tmp_path):
    cpath, epath = write_blob_fixture(tmp_path, n_points=30, dim=4, n_classes=3)
    records, emb = corpus.load_corpus(cpath, epath)
    assert len(records) == 30 and emb.dim == 4
